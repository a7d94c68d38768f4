"""Entropy-driven classification tree."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._grow import FlatTree, bin_features, grow


def entropy(class_counts) -> float:
    """Shannon entropy in bits of a class-count vector (0 log 0 = 0)."""
    c = np.asarray(class_counts, dtype=float)
    if np.any(c < 0):
        raise ValueError("class counts must be nonnegative")
    total = c.sum()
    if total <= 0:
        raise ValueError("entropy of an empty node")
    p = c[c > 0] / total
    return float(-(p * np.log2(p)).sum()) + 0.0


def _xlog2x(a):
    out = np.zeros_like(a, dtype=float)
    pos = a > 0
    out[pos] = a[pos] * np.log2(a[pos])
    return out


def information_gains(left, n_left, parent, n):
    """Entropy reduction of every candidate split of a node.

    ``left`` holds the class counts left of each boundary; uses
    n*H(c) = n log2 n - sum_k c_k log2 c_k so no per-boundary division is needed.
    """
    right = parent - left
    n_right = n - n_left
    children = (_xlog2x(n_left) - _xlog2x(left).sum(axis=1)
                + _xlog2x(n_right) - _xlog2x(right).sum(axis=1))
    parent_h = _xlog2x(np.array(float(n))) - _xlog2x(parent).sum()
    return (parent_h - children) / n


@dataclass
class TreeNode:
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    label: int | None = None
    distribution: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return self.label is not None


@dataclass
class DecisionTreeModel:
    tree: FlatTree
    n_classes: int
    n_features: int
    max_depth: int | None = 12
    min_samples_split: int = 2
    min_gain: float = 1e-7

    @property
    def root(self) -> TreeNode:
        def build(i):
            if self.tree.feature[i] < 0:
                dist = np.asarray(self.tree.value[i])
                return TreeNode(label=int(np.argmax(dist)), distribution=dist)
            return TreeNode(self.tree.feature[i], self.tree.threshold[i],
                            build(self.tree.left[i]), build(self.tree.right[i]))
        return build(0)

    def predict_proba(self, X) -> np.ndarray:
        X = _check_arity(X, self.n_features)
        leaves = self.tree.apply(X)
        values = np.array(self.tree.value)
        return values[leaves]

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def depth(self) -> int:
        return self.tree.depth()


def _check_arity(X, m):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != m:
        raise ValueError(f"expected {m} features, got {X.shape[1]}")
    return X


def train_decision_tree(X, y, n_classes=None, max_depth=12, min_samples_split=2,
                        min_gain=1e-7) -> DecisionTreeModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or len(X) == 0 or X.shape[1] == 0:
        raise ValueError("training data must be a nonempty 2-D matrix")
    if len(y) != len(X):
        raise ValueError("X and y lengths differ")
    K = int(n_classes if n_classes is not None else y.max() + 1)
    onehot = np.eye(K)[y]

    def leaf(idx):
        counts = np.bincount(y[idx], minlength=K).astype(float)
        return counts / counts.sum()

    def pure(idx):
        return bool(np.all(y[idx] == y[idx[0]]))

    # splitting stops once the best gain falls below min_gain
    tree = grow(bin_features(X), onehot, information_gains, leaf, max_depth=max_depth,
                min_samples_split=min_samples_split, min_gain=min_gain, inclusive=True, is_final=pure)
    return DecisionTreeModel(tree, K, X.shape[1], max_depth, min_samples_split, min_gain)


def tree_predict(model: DecisionTreeModel, x) -> int:
    return int(model.predict(_check_arity(x, model.n_features))[0])
