"""One-vs-rest squared-error gradient boosting on regression trees."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._grow import FlatTree, bin_features, grow
from .tree import _check_arity


def leaf_weight(residuals, psi: float) -> float:
    """Shrunk leaf weight: sum of residuals over (count + psi)."""
    r = np.asarray(residuals, dtype=float)
    if len(r) == 0 and psi == 0:
        raise ValueError("empty leaf with psi=0")
    return float(r.sum() / (len(r) + psi))


def _delta_coef(n, lr, psi):
    # with w = G/(n+psi): -2 lr w G + n (lr w)^2 + psi w^2 / 2 = G^2 * coef(n)
    return (n * lr * lr + 0.5 * psi - 2 * lr * (n + psi)) / (n + psi) ** 2


def _leaf_delta(G, n, lr, psi):
    """Objective change from adding one leaf (residual sum G, n samples)."""
    return G * G * _delta_coef(n, lr, psi)


@dataclass
class GbtModel:
    base: np.ndarray
    trees: list            # trees[k] is the list of FlatTree fitted for class k
    learning_rate: float = 0.3
    psi: float = 1.0
    eta: float = 0.0
    n_rounds: int = 100
    max_depth: int | None = 6
    n_features: int = 0
    history: list = field(default_factory=list)

    @property
    def n_classes(self) -> int:
        return len(self.base)

    def raw_tree_sums(self, X) -> np.ndarray:
        X = _check_arity(X, self.n_features)
        out = np.zeros((len(X), self.n_classes))
        for k, trees in enumerate(self.trees):
            for t in trees:
                out[:, k] += np.asarray(t.value, dtype=float)[t.apply(X)]
        return out

    def decision_function(self, X) -> np.ndarray:
        return self.base + self.learning_rate * self.raw_tree_sums(X)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.decision_function(X), axis=1)

    def n_leaves(self) -> int:
        return sum(t.n_leaves for trees in self.trees for t in trees)


def _fit_tree(binned, r, lr, psi, eta, max_depth):
    def split_gain(left, n_left, total, n):
        G = total[0]
        gl = left[:, 0]
        gr = G - gl
        return (_leaf_delta(G, n, lr, psi) - gl * gl * _delta_coef(n_left, lr, psi)
                - gr * gr * _delta_coef(n - n_left, lr, psi) - eta)

    def leaf(idx):
        return leaf_weight(r[idx], psi)

    return grow(binned, r, split_gain, leaf, max_depth=max_depth, min_gain=0.0)


def _tree_delta(tree: FlatTree, r, leaves, lr, psi, eta) -> float:
    """Exact objective change of appending ``tree`` for one class."""
    w = np.asarray(tree.value, dtype=float)
    step = lr * w[leaves]
    fit = float(((r - step) ** 2).sum() - (r ** 2).sum())
    penalty = sum(0.5 * psi * tree.value[i] ** 2 + eta
                  for i in range(len(tree)) if tree.feature[i] < 0)
    return fit + penalty


def train_gbt(X, y, n_classes=None, n_rounds=100, learning_rate=0.3, psi=1.0, eta=0.0,
              max_depth=6) -> GbtModel:
    """Boost one regression tree per class per round on one-hot residuals.

    The base score is the class prior. A tree is kept only if it lowers the
    training objective; boosting ends early once no class accepts a tree.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or len(X) == 0 or X.shape[1] == 0:
        raise ValueError("training data must be a nonempty 2-D matrix")
    if len(y) != len(X):
        raise ValueError("X and y lengths differ")
    if learning_rate <= 0 or psi < 0 or eta < 0 or n_rounds < 0:
        raise ValueError("learning_rate must be positive; psi, eta, n_rounds nonnegative")
    K = int(n_classes if n_classes is not None else y.max() + 1)
    Y = np.eye(K)[y]
    base = Y.mean(axis=0)
    pred = np.tile(base, (len(X), 1))
    binned = bin_features(X)
    model = GbtModel(base, [[] for _ in range(K)], learning_rate, psi, eta, n_rounds,
                     max_depth, X.shape[1])
    model.history.append(gbt_objective(model, X, y))
    for _ in range(n_rounds):
        added = False
        for k in range(K):
            r = Y[:, k] - pred[:, k]
            if not np.all(np.isfinite(r)):
                raise FloatingPointError("non-finite residuals")
            tree = _fit_tree(binned, r, learning_rate, psi, eta, max_depth)
            leaves = tree.apply(X)
            if _tree_delta(tree, r, leaves, learning_rate, psi, eta) >= 0:
                continue
            model.trees[k].append(tree)
            pred[:, k] += learning_rate * np.asarray(tree.value, dtype=float)[leaves]
            added = True
        if not added:
            break
        model.history.append(float(((Y - pred) ** 2).sum()) + _penalty(model))
    return model


def _penalty(model: GbtModel) -> float:
    total = 0.0
    for trees in model.trees:
        for t in trees:
            for f, v in zip(t.feature, t.value):
                if f < 0:
                    total += 0.5 * model.psi * v ** 2 + model.eta
    return total


def gbt_objective(model: GbtModel, X, y, psi=None, eta=None) -> float:
    """Squared error of the one-hot targets plus leaf-weight and leaf-count penalties."""
    y = np.asarray(y, dtype=int)
    psi = model.psi if psi is None else psi
    eta = model.eta if eta is None else eta
    Y = np.eye(model.n_classes)[y]
    err = float(((Y - model.decision_function(X)) ** 2).sum())
    leaves = [v for trees in model.trees for t in trees
              for f, v in zip(t.feature, t.value) if f < 0]
    return err + 0.5 * psi * sum(v * v for v in leaves) + eta * len(leaves)


def gbt_predict(model: GbtModel, x):
    """Class and per-class scores of a single sample."""
    scores = model.decision_function(_check_arity(x, model.n_features))[0]
    return int(np.argmax(scores)), scores
