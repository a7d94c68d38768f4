"""PCA and SVD factorizations and the feature rankings built on them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is nonnegative."""
    if V.size == 0:
        return np.ones(V.shape[1])
    lead = V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])]
    return np.where(lead < 0, -1.0, 1.0)


def _check(X, min_rows=1):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if len(X) < min_rows:
        raise ValueError(f"need at least {min_rows} rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix has non-finite entries")
    return X


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray     # (m, m), column c is component c
    eigenvalues: np.ndarray    # descending
    n_samples: int

    @property
    def covariance(self) -> np.ndarray:
        Q = self.components
        return (Q * self.eigenvalues) @ Q.T


def covariance(X) -> np.ndarray:
    """Population covariance (divides by n)."""
    X = _check(X, 1)
    C = X - X.mean(axis=0)
    return C.T @ C / len(X)


def pca_fit(X) -> PcaModel:
    X = _check(X, 2)
    vals, vecs = np.linalg.eigh(covariance(X))
    order = np.argsort(-vals, kind="stable")
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order]
    vecs = vecs * _fix_signs(vecs)
    return PcaModel(X.mean(axis=0), vecs, vals, len(X))


def variance_contribution(model: PcaModel, Y: int) -> float:
    m = len(model.eigenvalues)
    if not 1 <= Y <= m:
        raise ValueError(f"Y must lie in [1, {m}]")
    total = model.eigenvalues.sum()
    if total == 0:
        return 1.0
    return float(model.eigenvalues[:Y].sum() / total)


def pca_project(model: PcaModel, X, Y: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    m = len(model.mean)
    if X.shape[1] != m:
        raise ValueError(f"expected {m} columns, got {X.shape[1]}")
    if not 1 <= Y <= m:
        raise ValueError(f"Y must lie in [1, {m}]")
    return (X - model.mean) @ model.components[:, :Y]


def pca_reconstruct(model: PcaModel, N) -> np.ndarray:
    N = np.asarray(N, dtype=float)
    return N @ model.components[:, :N.shape[1]].T + model.mean


@dataclass(frozen=True)
class SvdFactors:
    left: np.ndarray       # (n, r)
    singular: np.ndarray   # (r,) descending
    right: np.ndarray      # (m, r)

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular) @ self.right.T


def svd_factorize(B) -> SvdFactors:
    B = _check(B, 1)
    U, d, Vt = np.linalg.svd(B, full_matrices=False)
    V = Vt.T
    s = _fix_signs(V)
    return SvdFactors(U * s, d, V * s)


@dataclass(frozen=True)
class FeatureRanking:
    method: str
    order: np.ndarray      # feature indices, best first
    scores: np.ndarray     # score of order[i]

    def top(self, k: int) -> np.ndarray:
        return self.order[:k]


def feature_scores(loadings: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Sum over components of |loading| times the component's share of the total weight."""
    total = weights.sum()
    if total <= 0:
        return np.zeros(loadings.shape[0])
    return np.abs(loadings) @ (weights / total)


def _round_rel(a, digits=12):
    # so that mathematically equal scores (e.g. duplicated columns) tie exactly
    return np.array([float(f"{v:.{digits}g}") for v in a])


def rank_features(X, method: str = "PCA") -> FeatureRanking:
    """Rank original features by their weighted absolute loadings.

    PCA weights components by eigenvalue on the centered data; SVD weights
    them by singular value on the matrix as given.
    """
    method = method.upper()
    X = _check(X, 2)
    if method == "PCA":
        model = pca_fit(X)
        scores = feature_scores(model.components, model.eigenvalues)
    elif method == "SVD":
        f = svd_factorize(X)
        scores = feature_scores(f.right, f.singular)
    else:
        raise ValueError(f"unknown ranking method {method!r}")
    scores = _round_rel(scores)
    order = np.lexsort((np.arange(len(scores)), -scores))
    return FeatureRanking(method, order, scores[order])


def multi_feature_union(X, names, k_each: int = 10) -> tuple:
    """Union of the top-``k_each`` PCA and SVD features, in original column order."""
    names = tuple(names)
    X = np.asarray(X, dtype=float)
    if X.shape[1] != len(names):
        raise ValueError("names do not match the matrix columns")
    if not 1 <= k_each <= len(names):
        raise ValueError(f"k_each must lie in [1, {len(names)}]")
    picked = set(rank_features(X, "PCA").top(k_each)) | set(rank_features(X, "SVD").top(k_each))
    return tuple(n for i, n in enumerate(names) if i in picked)


def select_features(X, names, mode: str, k: int = 10) -> tuple:
    """Feature names for a selection mode: all, pca10, svd10 or multi20."""
    names = tuple(names)
    if mode == "all":
        return names
    k = min(k, len(names))
    if mode == "pca10":
        idx = sorted(rank_features(X, "PCA").top(k))
    elif mode == "svd10":
        idx = sorted(rank_features(X, "SVD").top(k))
    elif mode == "multi20":
        return multi_feature_union(X, names, k)
    else:
        raise ValueError(f"unknown feature mode {mode!r}")
    return tuple(names[i] for i in idx)


def write_feature_list(names, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(f"{n}\n" for n in names)


def read_feature_list(path) -> tuple:
    with open(path, encoding="utf-8") as fh:
        names = tuple(line.strip() for line in fh if line.strip())
    if len(set(names)) != len(names):
        raise ValueError("feature list has duplicate names")
    return names
