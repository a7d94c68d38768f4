"""Flat ``section.key = value`` run configuration.

Blank lines and ``#`` comments are ignored; every key must be known and every
key has a default, so an empty file is a valid configuration.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from importlib import resources

from .attacks import BehaviorParams
from .models import DEFAULT_PARAMS, MODEL_KINDS
from .network import Behavior, DeploymentConfig, EnergyParams

SEED_ENV = "FOGSHIELD_SEED"
FEATURE_MODES = ("all", "pca10", "svd10", "multi20")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetParams:
    sample_every: int = 1
    train_ratio: float = 0.8
    split_seed: int = 0
    stratify: bool = True


@dataclass(frozen=True)
class EvalParams:
    K: int = 5
    cv_seed: int = 0
    phi: float = 1.0
    feature_mode: str = "all"
    k_each: int = 10
    # model:feature_mode pairs trained by the pipeline command
    runs: tuple = ("tree:all", "logistic:all", "gbt:all", "svm:all", "gbt:multi20")


@dataclass(frozen=True)
class RunConfig:
    deployment: DeploymentConfig = field(default_factory=DeploymentConfig)
    energy: EnergyParams = field(default_factory=EnergyParams)
    behavior: BehaviorParams = field(default_factory=BehaviorParams)
    attack_mix: dict = field(default_factory=dict)
    dataset: DatasetParams = field(default_factory=DatasetParams)
    evaluation: EvalParams = field(default_factory=EvalParams)
    models: dict = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULT_PARAMS.items()})

    def with_seed(self, seed: int) -> "RunConfig":
        """Copy with every seed set to ``seed``."""
        models = {k: dict(v) for k, v in self.models.items()}
        for k in ("logistic", "svm"):
            models[k]["seed"] = seed
        return replace(self, deployment=replace(self.deployment, seed=seed),
                       dataset=replace(self.dataset, split_seed=seed),
                       evaluation=replace(self.evaluation, cv_seed=seed), models=models)


SECTIONS = {"deployment": DeploymentConfig, "energy": EnergyParams, "behavior": BehaviorParams,
            "dataset": DatasetParams, "evaluation": EvalParams}


def _convert(raw: str, like, key: str):
    try:
        if isinstance(like, bool):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return raw.lower() in ("true", "1", "yes")
        if isinstance(like, int):
            return int(raw)
        if isinstance(like, float):
            return float(raw)
        if isinstance(like, tuple):
            return tuple(p.strip() for p in raw.split(",") if p.strip())
        if like is None:
            return None if raw == "none" else int(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as {type(like).__name__}") from None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values: dict[str, dict] = {s: {} for s in (*SECTIONS, "attack_mix", *MODEL_KINDS)}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        section, dot, name = key.partition(".")
        if not eq or not dot:
            raise ConfigError(f"{source}:{lineno}: expected section.key = value")
        if section not in values:
            raise ConfigError(f"{source}:{lineno}: unknown section {section!r}")
        if section == "attack_mix":
            try:
                b = Behavior(name)
            except ValueError:
                raise ConfigError(f"{source}:{lineno}: unknown attacker type {name!r}") from None
            if not b.is_attacker:
                raise ConfigError(f"{source}:{lineno}: attack_mix lists attacker types only")
            values[section][b.value] = _convert(raw, 0.0, key)
            continue
        if section in MODEL_KINDS:
            defaults = DEFAULT_PARAMS[section]
            if name not in defaults:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
            # max_depth also accepts "none" for an unbounded tree
            like = None if name == "max_depth" else defaults[name]
            values[section][name] = _convert(raw, like, key)
            continue
        known = {f.name: f for f in fields(SECTIONS[section])}
        if name not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[section][name] = _convert(raw, getattr(SECTIONS[section](), name), key)
    try:
        built = {s: cls(**values[s]) for s, cls in SECTIONS.items()}
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    ev = built["evaluation"]
    if ev.feature_mode not in FEATURE_MODES:
        raise ConfigError(f"{source}: unknown feature mode {ev.feature_mode!r}")
    for run in ev.runs:
        kind, _, mode = run.partition(":")
        if kind not in MODEL_KINDS or mode not in FEATURE_MODES:
            raise ConfigError(f"{source}: bad pipeline run {run!r}; expected model:feature_mode")
    models = {k: {**DEFAULT_PARAMS[k], **values[k]} for k in MODEL_KINDS}
    return RunConfig(built["deployment"], built["energy"], built["behavior"], values["attack_mix"],
                     built["dataset"], ev, models)


def load_config(path=None, env=None) -> RunConfig:
    """Read a config file (the shipped reference when ``path`` is None).

    ``FOGSHIELD_SEED`` in the environment overrides every seed.
    """
    if path is None:
        text, source = reference_config_text(), "reference.cfg"
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        source = str(path)
    cfg = parse_config(text, source)
    env = os.environ if env is None else env
    if env.get(SEED_ENV, "").strip():
        try:
            seed = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}") from None
        cfg = cfg.with_seed(seed)
    return cfg


def reference_config_text() -> str:
    return resources.files("fogshield").joinpath("reference.cfg").read_text(encoding="utf-8")


def dump_config(cfg: RunConfig) -> str:
    """Every key with its value; parsing the result gives back ``cfg``."""
    def fmt(v):
        if isinstance(v, tuple):
            return ",".join(v)
        if v is None:
            return "none"
        return repr(v) if isinstance(v, float) else str(v)

    lines = []
    for section in SECTIONS:
        obj = getattr(cfg, section)
        lines.append(f"# {section}")
        lines += [f"{section}.{f.name} = {fmt(getattr(obj, f.name))}" for f in fields(obj)]
    lines.append("# attack_mix")
    lines += [f"attack_mix.{k} = {fmt(float(v))}" for k, v in sorted(cfg.attack_mix.items())]
    for kind in MODEL_KINDS:
        lines.append(f"# {kind}")
        lines += [f"{kind}.{k} = {fmt(v)}" for k, v in cfg.models[kind].items()]
    return "\n".join(lines) + "\n"
