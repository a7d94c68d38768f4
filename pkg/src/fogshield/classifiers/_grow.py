"""Exact greedy tree growing shared by the classification tree and boosting.

Each feature is encoded once as indices into its sorted unique values. A node
then aggregates its targets per distinct value with ``bincount``; consecutive
occupied values give exactly the midpoint candidates of a sorted scan, but no
node ever sorts or gathers an (m, n) block.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

QUANTILE_ROWS = 10_000
QUANTILE_CANDIDATES = 64


@dataclass
class FlatTree:
    """Pre-order node arrays; ``feature == -1`` marks a leaf."""
    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)
    n_samples: list = field(default_factory=list)

    def add(self, value, n) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        self.n_samples.append(n)
        return len(self.feature) - 1

    def __len__(self):
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return sum(1 for f in self.feature if f < 0)

    def depth(self) -> int:
        best, stack = 0, [(0, 0)]
        while stack:
            i, d = stack.pop()
            best = max(best, d)
            if self.feature[i] >= 0:
                stack += [(self.left[i], d + 1), (self.right[i], d + 1)]
        return best

    def compile(self):
        self._arrays = (np.array(self.feature), np.array(self.threshold, dtype=float),
                        np.array(self.left), np.array(self.right))
        return self

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row of ``X``; values equal to a threshold go right."""
        if not hasattr(self, "_arrays"):
            self.compile()
        feat, thr, left, right = self._arrays
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=int)
        rows = np.arange(len(X))
        while True:
            f = feat[node]
            internal = f >= 0
            if not internal.any():
                return node
            go_left = X[rows, np.maximum(f, 0)] < thr[node]
            node = np.where(internal, np.where(go_left, left[node], right[node]), node)


@dataclass(frozen=True)
class Binned:
    codes: np.ndarray      # (m, n): rank of each value among its feature's unique values
    values: tuple          # sorted unique values of each feature
    offsets: np.ndarray    # start of each feature's block in the shared bin space

    @property
    def n_bins(self) -> int:
        return int(self.offsets[-1] + len(self.values[-1]))


def bin_features(X) -> Binned:
    """Shared bin space: feature f's unique values occupy bins offsets[f] onwards."""
    X = np.asarray(X, dtype=float)
    codes = np.empty((X.shape[1], X.shape[0]), dtype=np.int32)
    values = []
    offsets = np.zeros(X.shape[1], dtype=np.int32)
    for f in range(X.shape[1]):
        u, inv = np.unique(X[:, f], return_inverse=True)
        offsets[f] = offsets[f - 1] + len(values[-1]) if f else 0
        codes[f] = inv.ravel() + offsets[f]
        values.append(u)
    return Binned(codes, tuple(values), offsets)


def midpoint(a: float, b: float) -> float:
    t = a + (b - a) / 2
    return t if a < t <= b else b


def _occupied(c: np.ndarray, B: int):
    """Occupied bins of a node (ascending) and each entry's position among them."""
    if 4 * len(c) < B:
        return np.unique(c, return_inverse=True)
    present = np.zeros(B, dtype=bool)
    present[c] = True
    bins = np.flatnonzero(present)
    slot = np.cumsum(present) - 1
    return bins, slot[c]


def quantile_positions(cum_counts: np.ndarray, n: int) -> np.ndarray:
    """Boundary indices kept when a node exceeds ``QUANTILE_ROWS`` samples.

    ``cum_counts[j]`` is the number of samples left of boundary j; the boundary
    nearest above each of 64 evenly spaced ranks is kept.
    """
    ranks = cum_counts - 1
    if len(ranks) <= QUANTILE_CANDIDATES:
        return np.arange(len(ranks))
    targets = (np.arange(1, QUANTILE_CANDIDATES + 1) * n) // (QUANTILE_CANDIDATES + 1) - 1
    pick = np.minimum(np.searchsorted(ranks, targets), len(ranks) - 1)
    return np.unique(pick)


def _candidates(binned: Binned, idx: np.ndarray, Z: np.ndarray):
    """Every candidate boundary of a node across all features at once.

    Returns the feature, lower and upper bin of each boundary plus the count
    and stat sums to its left, ordered by feature then value.
    """
    m = binned.codes.shape[0]
    n = len(idx)
    bins, slot = _occupied(binned.codes[:, idx].ravel(), binned.n_bins)
    k = len(bins)
    counts = np.bincount(slot, minlength=k)
    sums = np.empty((k, Z.shape[1]))
    for j in range(Z.shape[1]):
        sums[:, j] = np.bincount(slot, weights=np.tile(Z[:, j], m), minlength=k)
    feat = np.searchsorted(binned.offsets, bins, side="right") - 1
    cum_n = np.cumsum(counts)
    cum_s = np.cumsum(sums, axis=0)
    # subtract everything before the feature's first occupied bin (f * n samples)
    first = np.r_[True, feat[1:] != feat[:-1]]
    base = np.flatnonzero(first)[np.cumsum(first) - 1]
    before_n = cum_n[base] - counts[base]
    before_s = cum_s[base] - sums[base]
    inner = np.flatnonzero(feat[:-1] == feat[1:])
    n_left = cum_n[inner] - before_n[inner]
    left = cum_s[inner] - before_s[inner]
    lo, hi, f = bins[inner], bins[inner + 1], feat[inner]
    if n > QUANTILE_ROWS:
        keep = []
        for g in np.unique(f):
            sel = np.flatnonzero(f == g)
            keep.append(sel[quantile_positions(n_left[sel], n)])
        keep = np.concatenate(keep) if keep else np.array([], dtype=int)
        n_left, left, lo, hi, f = n_left[keep], left[keep], lo[keep], hi[keep], f[keep]
    return f, lo, hi, n_left, left


def grow(binned: Binned, stats, split_gain, leaf_value, max_depth=None, min_samples_split=2,
         min_gain=0.0, inclusive=False, is_final=None) -> FlatTree:
    """Grow a tree depth-first.

    ``stats`` is an (n, d) matrix of per-sample target statistics.
    ``split_gain(left, n_left, total, n)`` receives the stat sums left of every
    candidate boundary and returns their gains. A split is made only when its
    gain exceeds ``min_gain`` (or reaches it, with ``inclusive``);
    ``is_final(idx)`` can veto splitting outright. Ties go to the lowest
    feature, then the lowest threshold.
    """
    codes, values, offsets = binned.codes, binned.values, binned.offsets
    n_all = codes.shape[1]
    stats = np.asarray(stats, dtype=float).reshape(n_all, -1)
    tree = FlatTree()
    stack = [(np.arange(n_all), 0, -1, 0)]
    while stack:
        idx, depth, parent, side = stack.pop()
        n = len(idx)
        node = tree.add(leaf_value(idx), n)
        if parent >= 0:
            (tree.left if side == 0 else tree.right)[parent] = node
        if (max_depth is not None and depth >= max_depth) or n < max(2, min_samples_split):
            continue
        if is_final is not None and is_final(idx):
            continue
        Z = stats[idx]
        f, lo, hi, n_left, left = _candidates(binned, idx, Z)
        if len(f) == 0:
            continue
        gain = split_gain(left, n_left.astype(float), Z.sum(axis=0), n)
        j = int(np.argmax(gain))
        if not (gain[j] >= min_gain if inclusive else gain[j] > min_gain):
            continue
        f, lo, hi = int(f[j]), int(lo[j]), int(hi[j])
        go_left = codes[f, idx] <= lo
        tree.feature[node] = f
        tree.threshold[node] = midpoint(values[f][lo - offsets[f]], values[f][hi - offsets[f]])
        stack.append((idx[~go_left], depth + 1, node, 1))
        stack.append((idx[go_left], depth + 1, node, 0))
    return tree.compile()
