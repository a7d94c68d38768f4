"""One-vs-rest logistic regression and linear soft-margin SVM trained by minibatch SGD."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tree import _check_arity


class DivergenceError(FloatingPointError):
    def __init__(self, epoch: int, what: str = "loss"):
        super().__init__(f"{what} became non-finite at epoch {epoch}")
        self.epoch = epoch


def sigmoid(z):
    """Logistic function, computed without overflow for any finite or infinite z."""
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1 / (1 + e), e / (1 + e))
    return float(out) if out.ndim == 0 else out


def _log1pexp(z):
    return np.logaddexp(0.0, z)


def logistic_loss_and_grad(w, X, t, l2=0.0):
    """Mean binary cross-entropy plus ``l2/2 * |w[1:]|^2`` and its gradient.

    ``w[0]`` is the intercept; ``t`` holds 0/1 targets.
    """
    w = np.asarray(w, dtype=float)
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float)
    z = w[0] + X @ w[1:]
    # -[t log g(z) + (1-t) log g(-z)] = log(1+e^z) - t z
    loss = float(np.mean(_log1pexp(z) - t * z)) + 0.5 * l2 * float(w[1:] @ w[1:])
    d = (sigmoid(z) - t) / len(t)
    grad = np.concatenate(([d.sum()], X.T @ d + l2 * w[1:]))
    return loss, grad


def _targets(y, K):
    """One-vs-rest 0/1 target columns; binary problems use a single column for class 1."""
    if K == 2:
        return (y == 1).astype(float)[:, None]
    return np.eye(K)[y]


def _batches(n, batch_size, rng):
    order = rng.permutation(n)
    for s in range(0, n, batch_size):
        yield order[s:s + batch_size]


def _prepare(X, y, n_classes):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or len(X) == 0 or X.shape[1] == 0:
        raise ValueError("training data must be a nonempty 2-D matrix")
    if len(y) != len(X):
        raise ValueError("X and y lengths differ")
    K = int(n_classes if n_classes is not None else y.max() + 1)
    return X, y, max(K, 2)


def _scores(W, X, binary):
    z = W[0] + X @ W[1:]
    if binary:
        return np.hstack([-z, z])
    return z


@dataclass
class LogisticModel:
    weights: np.ndarray        # (m + 1, columns); row 0 is the intercept
    n_classes: int
    lr: float = 0.1
    epochs: int = 200
    l2: float = 0.0
    history: list = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.weights.shape[0] - 1

    def predict_proba(self, X) -> np.ndarray:
        """Per-class sigmoid scores; the binary form is ``[1 - p, p]``."""
        X = _check_arity(X, self.n_features)
        p = sigmoid(self.weights[0] + X @ self.weights[1:])
        if self.n_classes == 2:
            return np.hstack([1 - p, p])
        return p

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def train_logistic(X, y, n_classes=None, lr=0.1, epochs=200, l2=0.0, batch_size=64,
                   seed=0) -> LogisticModel:
    X, y, K = _prepare(X, y, n_classes)
    T = _targets(y, K)
    W = np.zeros((X.shape[1] + 1, T.shape[1]))
    rng = np.random.default_rng(seed)

    def full_loss():
        return sum(logistic_loss_and_grad(W[:, c], X, T[:, c], l2)[0] for c in range(T.shape[1]))

    history = [full_loss()]
    for epoch in range(1, epochs + 1):
        for b in _batches(len(X), batch_size, rng):
            Xb, Tb = X[b], T[b]
            d = (sigmoid(W[0] + Xb @ W[1:]) - Tb) / len(b)
            W[0] -= lr * d.sum(axis=0)
            W[1:] -= lr * (Xb.T @ d + l2 * W[1:])
        history.append(full_loss())
        if not np.isfinite(history[-1]) or not np.all(np.isfinite(W)):
            raise DivergenceError(epoch)
    return LogisticModel(W, K, lr, epochs, l2, history)


def logistic_predict(model: LogisticModel, x):
    scores = model.predict_proba(x)[0]
    return int(np.argmax(scores)), scores


@dataclass
class SvmModel:
    weights: np.ndarray        # (m + 1, columns); row 0 is the bias
    n_classes: int
    C: float = 1.0
    lr: float = 0.01
    epochs: int = 200
    history: list = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.weights.shape[0] - 1

    @property
    def w(self) -> np.ndarray:
        return self.weights[1:]

    @property
    def b(self) -> np.ndarray:
        return self.weights[0]

    def decision_function(self, X) -> np.ndarray:
        X = _check_arity(X, self.n_features)
        return _scores(self.weights, X, self.n_classes == 2)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.decision_function(X), axis=1)


def svm_objective(W, X, S, C) -> float:
    """(1/2 |w|^2 + C * sum of hinge losses) / n, summed over the one-vs-rest columns."""
    margins = S * (W[0] + X @ W[1:])
    return float((0.5 * (W[1:] ** 2).sum() + C * np.maximum(0, 1 - margins).sum()) / len(X))


def train_svm(X, y, n_classes=None, C=1.0, epochs=200, lr=0.01, batch_size=64,
              seed=0) -> SvmModel:
    X, y, K = _prepare(X, y, n_classes)
    S = 2 * _targets(y, K) - 1
    n = len(X)
    W = np.zeros((X.shape[1] + 1, S.shape[1]))
    rng = np.random.default_rng(seed)
    history = [svm_objective(W, X, S, C)]
    for epoch in range(1, epochs + 1):
        for b in _batches(n, batch_size, rng):
            Xb, Sb = X[b], S[b]
            viol = (Sb * (W[0] + Xb @ W[1:]) < 1) * Sb
            # minibatch estimate of the gradient of the n-normalized objective
            W[0] += lr * C * viol.sum(axis=0) / len(b)
            W[1:] -= lr * (W[1:] / n - C * Xb.T @ viol / len(b))
        history.append(svm_objective(W, X, S, C))
        if not np.isfinite(history[-1]) or not np.all(np.isfinite(W)):
            raise DivergenceError(epoch, "objective")
    return SvmModel(W, K, C, lr, epochs, history)


def svm_predict(model: SvmModel, x):
    scores = model.decision_function(x)[0]
    return int(np.argmax(scores)), scores
