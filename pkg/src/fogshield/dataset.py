"""Labeled traffic records extracted from simulation traces, plus split and fold machinery."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .attacks import CLASS_NAMES, behavior_label

COLUMNS = ("ID", "F_ID", "t", "N_n", "C_n", "R_n", "R_n_u", "E", "E_Tx", "R_no", "D_Tr",
           "I_fn", "D_Tx", "D_Rx", "R_k", "S_c", "IS_Rn", "E_Rem", "A_y", "E_init")
FLOAT_COLUMNS = ("t", "R_n_u", "E_Tx", "E_Rem", "E_init")
LABEL = "A_y"
# columns that restate the label; never handed to a classifier unless asked for
LEAKY = ("N_n", "C_n", "I_fn")
FEATURES = tuple(c for c in COLUMNS if c != LABEL and c not in LEAKY)


class SchemaError(ValueError):
    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class TrafficRecord:
    ID: int
    F_ID: int
    t: float
    N_n: int
    C_n: int
    R_n: int
    R_n_u: float
    E: int
    E_Tx: float
    R_no: int
    D_Tr: int
    I_fn: int
    D_Tx: int
    D_Rx: int
    R_k: int
    S_c: int
    IS_Rn: int
    E_Rem: float
    A_y: str
    E_init: float


@dataclass
class Dataset:
    """Column store of traffic records; every column has the same length."""
    columns: dict
    class_names: tuple = CLASS_NAMES

    def __post_init__(self):
        missing = [c for c in COLUMNS if c not in self.columns]
        if missing:
            raise SchemaError(f"missing column {missing[0]}")
        lengths = {len(self.columns[c]) for c in COLUMNS}
        if len(lengths) > 1:
            raise SchemaError("columns differ in length")
        unknown = set(np.unique(self.columns[LABEL])) - set(self.class_names)
        if unknown:
            raise SchemaError(f"unknown attack class {sorted(unknown)[0]!r}")

    def __len__(self):
        return len(self.columns[LABEL])

    def __eq__(self, other):
        if not isinstance(other, Dataset) or self.class_names != other.class_names:
            return NotImplemented
        return all(np.array_equal(self.columns[c], other.columns[c]) for c in COLUMNS)

    @property
    def feature_names(self) -> tuple:
        return FEATURES

    @property
    def labels(self) -> np.ndarray:
        return self.columns[LABEL]

    @property
    def y(self) -> np.ndarray:
        """Integer class index of each record."""
        lookup = {name: k for k, name in enumerate(self.class_names)}
        return np.array([lookup[v] for v in self.labels], dtype=int)

    def record(self, i: int) -> TrafficRecord:
        return TrafficRecord(**{c: self.columns[c][i].item() for c in COLUMNS})

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset({c: self.columns[c][idx] for c in COLUMNS}, self.class_names)

    def feature_matrix(self, names=None, allow_leaky=False) -> tuple[np.ndarray, tuple]:
        names = tuple(names or FEATURES)
        if LABEL in names:
            raise ValueError("the label column cannot be a feature")
        leaking = [n for n in names if n in LEAKY]
        if leaking and not allow_leaky:
            raise ValueError(f"feature set includes label-restating columns {leaking}")
        X = np.column_stack([self.columns[n].astype(float) for n in names])
        return X, names

    def class_counts(self) -> dict:
        y = self.y
        return {name: int((y == k).sum()) for k, name in enumerate(self.class_names)}


def _round_sig(a: np.ndarray, digits: int = 12) -> np.ndarray:
    return np.array([float(f"{v:.{digits}g}") for v in a], dtype=float)


def extract_records(trace, sample_every: int = 1) -> Dataset:
    """One record per (alive node, round), keeping every ``sample_every``-th round.

    Floating columns are rounded to 12 significant digits so that the CSV form
    is an exact image of the in-memory dataset.
    """
    if not trace.ledgers:
        raise ValueError("trace has no rounds")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    g = trace.graph
    fog_idx, _ = g.nearest_fog()
    fog_ids = np.array([g.fogs[k].fog_id for k in fog_idx])
    degree = g.degrees()
    labels = np.array([behavior_label(n.behavior) for n in g.nodes], dtype=object)
    honest = np.array([not n.behavior.is_attacker for n in g.nodes], dtype=int)
    ms = trace.config.ms_per_round

    parts = {c: [] for c in COLUMNS}
    for lg in trace.ledgers:
        if (lg.round_index - 1) % sample_every:
            continue
        i = np.flatnonzero(lg.alive)
        k = len(i)
        parts["ID"].append(i)
        parts["F_ID"].append(fog_ids[i])
        parts["t"].append(np.full(k, lg.round_index * ms))
        parts["N_n"].append(honest[i])
        parts["C_n"].append(1 - honest[i])
        parts["R_n"].append(lg.relay_contact[i].astype(int))
        parts["R_n_u"].append(np.full(k, lg.relay_fraction))
        parts["E"].append(degree[i])
        parts["E_Tx"].append(lg.tx_energy[i])
        parts["R_no"].append(np.full(k, lg.round_index))
        parts["D_Tr"].append(lg.pkt_tx[i])
        parts["I_fn"].append(lg.flagged_prev[i].astype(int))
        parts["D_Tx"].append(lg.data_tx[i])
        parts["D_Rx"].append(lg.fog_rx[i])
        parts["R_k"].append(lg.rank[i])
        parts["S_c"].append(lg.next_hop[i])
        parts["IS_Rn"].append(lg.is_relay[i].astype(int))
        parts["E_Rem"].append(lg.e_rem[i])
        parts["A_y"].append(labels[i])
        parts["E_init"].append(trace.e_init[i])
    cols = {}
    for c in COLUMNS:
        a = np.concatenate(parts[c]) if parts[c] else np.array([])
        if c in FLOAT_COLUMNS:
            a = _round_sig(a.astype(float))
        elif c != LABEL:
            a = a.astype(np.int64)
        else:
            a = a.astype(object)
        cols[c] = a
    return Dataset(cols)


def _test_allocation(counts: np.ndarray, n_test: int, min_class: int) -> np.ndarray:
    """Split ``n_test`` across classes by largest remainder."""
    n = counts.sum()
    quota = counts * n_test / n
    alloc = np.floor(quota).astype(int)
    short = n_test - alloc.sum()
    for k in sorted(range(len(counts)), key=lambda k: (-(quota[k] - alloc[k]), k))[:short]:
        alloc[k] += 1
    for k in np.flatnonzero((alloc == 0) & (counts >= min_class)):
        donor = int(np.argmax(alloc))
        if alloc[donor] > 1:
            alloc[donor] -= 1
            alloc[k] += 1
    return alloc


def train_test_split(ds: Dataset, train_ratio: float = 0.8, seed: int = 0,
                     stratify: bool = True, min_class_for_test: int = 5):
    """Seeded, class-stratified partition; the test side gets floor((1-ratio)·n) records."""
    if not 0 < train_ratio < 1:
        raise ValueError("train_ratio must lie in (0, 1)")
    n = len(ds)
    if n < 2:
        raise ValueError("need at least 2 records to split")
    n_test = math.floor(round((1 - train_ratio) * n, 9))
    rng = np.random.default_rng(seed)
    if stratify:
        y = ds.y
        counts = np.bincount(y, minlength=len(ds.class_names))
        alloc = _test_allocation(counts, n_test, min_class_for_test)
        test = [rng.permutation(np.flatnonzero(y == k))[:alloc[k]] for k in range(len(counts))]
        test = np.concatenate(test)
    else:
        test = rng.permutation(n)[:n_test]
    mask = np.zeros(n, dtype=bool)
    mask[test] = True
    return ds.subset(np.flatnonzero(~mask)), ds.subset(np.flatnonzero(mask))


@dataclass(frozen=True)
class FoldPlan:
    K: int
    assignment: np.ndarray

    def fold(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """(training indices, validation indices) for fold ``k``."""
        return np.flatnonzero(self.assignment != k), np.flatnonzero(self.assignment == k)

    def sizes(self) -> list[int]:
        return np.bincount(self.assignment, minlength=self.K).tolist()


def kfold_plan(n_or_dataset, K: int = 5, seed: int = 0) -> FoldPlan:
    n = n_or_dataset if isinstance(n_or_dataset, (int, np.integer)) else len(n_or_dataset)
    if K < 2:
        raise ValueError("K must be >= 2")
    if K > n:
        raise ValueError(f"K={K} exceeds the {n} available records")
    perm = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=int)
    start = 0
    for k in range(K):
        size = n // K + (1 if k < n % K else 0)
        assignment[perm[start:start + size]] = k
        start += size
    return FoldPlan(K, assignment)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        constant = std == 0
        return cls(np.where(constant, 0.0, mean), np.where(constant, 1.0, std))

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale


def standardize(train, test):
    """Z-score both matrices with the training statistics; constant columns pass through."""
    st = Standardizer.fit(train)
    return st.transform(train), st.transform(test), st


def _format(col: str, v) -> str:
    if col in FLOAT_COLUMNS:
        return f"{v:.12g}"
    return str(v)


def write_records(ds: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        cols = [ds.columns[c] for c in COLUMNS]
        for i in range(len(ds)):
            w.writerow([_format(c, a[i]) for c, a in zip(COLUMNS, cols)])


def read_records(path, class_names=CLASS_NAMES) -> Dataset:
    known = set(class_names)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError("missing header row")
        missing = [c for c in COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"header is missing column {missing[0]}")
        if tuple(header) != COLUMNS:
            raise SchemaError("header columns are not in the expected order")
        raw = {c: [] for c in COLUMNS}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(COLUMNS):
                raise SchemaError(f"expected {len(COLUMNS)} fields, got {len(row)}", row=lineno)
            for c, v in zip(COLUMNS, row):
                if v == "":
                    raise SchemaError(f"missing value for {c}", row=lineno)
                if c == LABEL:
                    if v not in known:
                        raise SchemaError(f"unknown attack class {v!r}", row=lineno)
                    raw[c].append(v)
                else:
                    try:
                        raw[c].append(float(v) if c in FLOAT_COLUMNS else int(v))
                    except ValueError:
                        raise SchemaError(f"bad value {v!r} for {c}", row=lineno) from None
    cols = {}
    for c in COLUMNS:
        if c == LABEL:
            cols[c] = np.array(raw[c], dtype=object)
        else:
            cols[c] = np.array(raw[c], dtype=float if c in FLOAT_COLUMNS else np.int64)
    return Dataset(cols, tuple(class_names))
