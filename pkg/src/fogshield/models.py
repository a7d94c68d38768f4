"""Fitted-model wrapper (feature names, optional scaling) and its text serialization.

File layout, one item per line::

    fogshield-model 1
    kind gbt
    classes Normal|Selective Forwarding|...
    features E|E_Tx|...
    scale <mean...> / <std...>      (or "scale none")
    param learning_rate 0.3
    ...model body...

Trees are written node per line in pre-order, ``node <feature> <threshold>
<n_samples> <values...>`` with feature -1 for leaves. Floats use ``repr`` so a
round trip is exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifiers import (DecisionTreeModel, GbtModel, LogisticModel, SvmModel, train_decision_tree,
                          train_gbt, train_logistic, train_svm)
from .classifiers._grow import FlatTree
from .dataset import Standardizer

MODEL_KINDS = ("tree", "logistic", "gbt", "svm")
FORMAT_VERSION = 1
# linear models need z-scored inputs; trees are scale-free
SCALED = {"logistic", "svm"}

DEFAULT_PARAMS = {
    "tree": {"max_depth": 12, "min_samples_split": 2, "min_gain": 1e-7},
    "gbt": {"n_rounds": 100, "learning_rate": 0.3, "psi": 1.0, "eta": 0.0, "max_depth": 6},
    "logistic": {"lr": 0.1, "epochs": 200, "l2": 0.0, "batch_size": 64, "seed": 0},
    "svm": {"C": 1.0, "lr": 0.01, "epochs": 200, "batch_size": 64, "seed": 0},
}


class ModelFormatError(ValueError):
    pass


def fit_estimator(kind: str, X, y, n_classes: int, params: dict | None = None):
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model {kind!r}; expected one of {', '.join(MODEL_KINDS)}")
    p = dict(DEFAULT_PARAMS[kind])
    unknown = set(params or {}) - set(p)
    if unknown:
        raise ValueError(f"unknown {kind} parameter {sorted(unknown)[0]!r}")
    p.update(params or {})
    trainer = {"tree": train_decision_tree, "gbt": train_gbt,
               "logistic": train_logistic, "svm": train_svm}[kind]
    return trainer(X, y, n_classes, **p)


@dataclass
class TrainedModel:
    kind: str
    estimator: object
    feature_names: tuple
    class_names: tuple
    scaler: Standardizer | None = None

    def _prep(self, X):
        X = np.asarray(X, dtype=float)
        return self.scaler.transform(X) if self.scaler is not None else X

    def scores(self, X) -> np.ndarray:
        """Per-class scores; larger means more likely."""
        X = self._prep(X)
        est = self.estimator
        if self.kind == "tree":
            return est.predict_proba(X)
        if self.kind == "logistic":
            return est.predict_proba(X)
        return est.decision_function(X)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.scores(X), axis=1)


def fit_model(kind: str, X, y, feature_names, class_names, params: dict | None = None) -> TrainedModel:
    X = np.asarray(X, dtype=float)
    scaler = Standardizer.fit(X) if kind in SCALED else None
    Xs = scaler.transform(X) if scaler is not None else X
    est = fit_estimator(kind, Xs, y, len(class_names), params)
    return TrainedModel(kind, est, tuple(feature_names), tuple(class_names), scaler)


def _floats(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def _tree_lines(t: FlatTree) -> list[str]:
    out = [f"tree {len(t)}"]
    for i in range(len(t)):
        v = np.atleast_1d(np.asarray(t.value[i], dtype=float))
        out.append(f"node {t.feature[i]} {float(t.threshold[i])!r} {t.n_samples[i]} {_floats(v)}")
    return out


def _param_lines(obj, names) -> list[str]:
    return [f"param {n} {getattr(obj, n)!r}" for n in names]


def dumps(model: TrainedModel) -> str:
    lines = [f"fogshield-model {FORMAT_VERSION}", f"kind {model.kind}",
             "classes " + "|".join(model.class_names),
             "features " + "|".join(model.feature_names)]
    if model.scaler is None:
        lines.append("scale none")
    else:
        lines.append(f"scale {_floats(model.scaler.mean)} / {_floats(model.scaler.scale)}")
    est = model.estimator
    if model.kind == "tree":
        lines += _param_lines(est, ("n_classes", "n_features", "max_depth", "min_samples_split", "min_gain"))
        lines += _tree_lines(est.tree)
    elif model.kind == "gbt":
        lines += _param_lines(est, ("learning_rate", "psi", "eta", "n_rounds", "max_depth", "n_features"))
        lines.append(f"base {_floats(est.base)}")
        for k, trees in enumerate(est.trees):
            lines.append(f"class {k} {len(trees)}")
            for t in trees:
                lines += _tree_lines(t)
    else:
        names = ("n_classes", "lr", "epochs", "l2") if model.kind == "logistic" else \
            ("n_classes", "C", "lr", "epochs")
        lines += _param_lines(est, names)
        W = est.weights
        lines.append(f"weights {W.shape[0]} {W.shape[1]}")
        lines += [f"w {_floats(row)}" for row in W]
    return "\n".join(lines) + "\n"


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))


def _literal(s: str):
    if s == "None":
        return None
    try:
        return int(s)
    except ValueError:
        return float(s)


class _Lines:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.i = 0

    def take(self, key):
        if self.i >= len(self.lines):
            raise ModelFormatError(f"unexpected end of file, wanted {key!r}")
        head, _, rest = self.lines[self.i].partition(" ")
        if head != key:
            raise ModelFormatError(f"line {self.i + 1}: expected {key!r}, found {head!r}")
        self.i += 1
        return rest

    def peek(self):
        return self.lines[self.i].partition(" ")[0] if self.i < len(self.lines) else None


def _read_tree(r: _Lines, scalar: bool) -> FlatTree:
    t = FlatTree()
    n = int(r.take("tree"))
    for _ in range(n):
        parts = r.take("node").split()
        vals = np.array([float(v) for v in parts[3:]])
        t.add(float(vals[0]) if scalar else vals, int(parts[2]))
        t.feature[-1] = int(parts[0])
        t.threshold[-1] = float(parts[1])
    # rebuild child links from pre-order
    stack = []
    for i in range(n):
        while stack and stack[-1][1] == 2:
            stack.pop()
        if stack:
            parent, seen = stack[-1]
            (t.left if seen == 0 else t.right)[parent] = i
            stack[-1] = (parent, seen + 1)
        if t.feature[i] >= 0:
            stack.append((i, 0))
    return t.compile()


def loads(text: str) -> TrainedModel:
    r = _Lines(text)
    version = r.take("fogshield-model")
    if version != str(FORMAT_VERSION):
        raise ModelFormatError(f"unsupported model format version {version}")
    kind = r.take("kind")
    if kind not in MODEL_KINDS:
        raise ModelFormatError(f"unknown model kind {kind!r}")
    classes = tuple(r.take("classes").split("|"))
    features = tuple(r.take("features").split("|"))
    scale = r.take("scale")
    scaler = None
    if scale != "none":
        mean, _, std = scale.partition(" / ")
        scaler = Standardizer(np.array([float(v) for v in mean.split()]),
                              np.array([float(v) for v in std.split()]))
    params = {}
    while r.peek() == "param":
        name, _, value = r.take("param").partition(" ")
        params[name] = _literal(value)
    if kind == "tree":
        est = DecisionTreeModel(_read_tree(r, scalar=False), **params)
    elif kind == "gbt":
        base = np.array([float(v) for v in r.take("base").split()])
        trees = []
        for _ in range(len(base)):
            _, count = r.take("class").split()
            trees.append([_read_tree(r, scalar=True) for _ in range(int(count))])
        est = GbtModel(base, trees, **params)
    else:
        rows, cols = map(int, r.take("weights").split())
        W = np.array([[float(v) for v in r.take("w").split()] for _ in range(rows)]).reshape(rows, cols)
        est = (LogisticModel if kind == "logistic" else SvmModel)(W, **params)
    return TrainedModel(kind, est, features, classes, scaler)


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
