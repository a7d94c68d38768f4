import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fogshield.features import (covariance, feature_scores, multi_feature_union, pca_fit, pca_project,
                                pca_reconstruct, rank_features, read_feature_list, select_features,
                                svd_factorize, variance_contribution, write_feature_list)

rng = np.random.default_rng(0)
RAND = rng.normal(size=(50, 6)) @ rng.normal(size=(6, 6)) + rng.normal(size=6)
matrices = arrays(float, st.tuples(st.integers(3, 12), st.integers(1, 5)),
                  elements=st.floats(-100, 100, allow_nan=False))


def test_line_data_has_one_component():
    t = np.linspace(-2, 2, 9)
    X = np.column_stack([t, t])
    m = pca_fit(X)
    assert variance_contribution(m, 1) == pytest.approx(1.0)
    proj = pca_project(m, X, 1)[:, 0]
    assert np.allclose(np.abs(proj), np.sqrt(2) * np.abs(t))


def test_isotropic_cloud():
    X = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    assert np.allclose(covariance(X), np.diag([0.5, 0.5]))
    assert np.allclose(pca_fit(X).eigenvalues, [0.5, 0.5])


def test_decomposition_identities():
    m = pca_fit(RAND)
    Q = m.components
    assert np.allclose(Q.T @ Q, np.eye(6), atol=1e-8)
    assert np.allclose(m.covariance, covariance(RAND), atol=1e-8)
    assert (np.diff(m.eigenvalues) <= 0).all() and (m.eigenvalues >= 0).all()
    assert m.eigenvalues.sum() == pytest.approx(np.trace(covariance(RAND)), abs=1e-8)


def test_variance_contribution():
    m = pca_fit(RAND)
    r = [variance_contribution(m, y) for y in range(1, 7)]
    assert r[-1] == pytest.approx(1.0)
    assert all(b >= a for a, b in zip(r, r[1:]))
    with pytest.raises(ValueError):
        variance_contribution(m, 0)
    fake = type(m)(m.mean[:2], np.eye(2), np.array([3.0, 1.0]), 5)
    assert variance_contribution(fake, 1) == 0.75


def test_projection_properties():
    m = pca_fit(RAND)
    N = pca_project(m, RAND, 6)
    d = lambda A: np.linalg.norm(A[:, None] - A[None], axis=-1)
    assert np.allclose(d(N), d(RAND), atol=1e-8)
    assert np.allclose(pca_project(m, m.mean, 3), 0)
    assert np.allclose(pca_reconstruct(m, N), RAND, atol=1e-6)
    with pytest.raises(ValueError):
        pca_project(m, RAND[:, :4], 2)


def test_svd_examples():
    assert np.allclose(svd_factorize(np.eye(3)).singular, 1)
    assert np.allclose(svd_factorize(np.diag([3.0, -2.0])).singular, [3, 2])
    B = rng.normal(size=(20, 20))
    f = svd_factorize(B)
    assert np.linalg.norm(f.reconstruct() - B) / np.linalg.norm(B) < 1e-6
    assert np.allclose(f.left.T @ f.left, np.eye(20), atol=1e-8)
    assert np.allclose(f.right.T @ f.right, np.eye(20), atol=1e-8)
    assert np.allclose(svd_factorize(np.zeros((3, 2))).singular, 0)


def test_sign_convention_is_stable():
    for M in (svd_factorize(RAND).right, pca_fit(RAND).components):
        lead = M[np.argmax(np.abs(M), axis=0), np.arange(M.shape[1])]
        assert (lead >= 0).all()


@settings(max_examples=40, deadline=None)
@given(matrices)
def test_pca_agrees_with_svd_of_centered(X):
    C = X - X.mean(axis=0)
    sig = pca_fit(X).eigenvalues
    d = svd_factorize(C).singular
    expect = np.zeros_like(sig)
    expect[:len(d)] = d ** 2 / len(X)
    assert np.allclose(sig, expect, rtol=1e-6, atol=1e-6 * max(1.0, expect.max()))


def test_dominant_variance_ranks_first():
    X = rng.normal(size=(200, 5))
    X[:, 3] *= 10
    assert rank_features(X, "PCA").order[0] == 3


def test_duplicate_columns_tie_by_index():
    base = rng.normal(size=(40, 3))
    X = np.column_stack([base, base[:, 0]])
    for method in ("PCA", "SVD"):
        r = rank_features(X, method)
        assert sorted(r.order.tolist()) == [0, 1, 2, 3]
        pos = {f: i for i, f in enumerate(r.order)}
        s = dict(zip(r.order.tolist(), r.scores))
        assert s[0] == s[3] and pos[0] < pos[3]
        assert (np.diff(r.scores) <= 0).all()


def test_constant_matrix_keeps_index_order():
    assert rank_features(np.ones((5, 4)), "PCA").order.tolist() == [0, 1, 2, 3]


def naive_scores(V, w):
    out = []
    for f in range(V.shape[0]):
        s = 0.0
        for c in range(V.shape[1]):
            s += abs(V[f, c]) * (w[c] / sum(w))
        out.append(s)
    return out


@pytest.mark.parametrize("m", [2, 4, 6])
def test_scores_match_naive_loop(m):
    X = rng.normal(size=(30, m)) * np.arange(1, m + 1)
    model = pca_fit(X)
    assert feature_scores(model.components, model.eigenvalues) == pytest.approx(
        naive_scores(model.components, model.eigenvalues), abs=1e-15)
    f = svd_factorize(X)
    assert feature_scores(f.right, f.singular) == pytest.approx(naive_scores(f.right, f.singular), abs=1e-15)


def test_union_sizes():
    names = [f"f{i}" for i in range(20)]
    X = rng.normal(size=(300, 20))
    X[:, :10] *= 50          # large spread, centered: PCA favours these
    X[:, 10:] += 1e4         # large offset, tiny spread: SVD favours these
    assert len(multi_feature_union(X, names, 10)) == 20
    Y = rng.normal(size=(300, 12)) * np.arange(1, 13)
    picked = multi_feature_union(Y, names[:12], 5)
    assert 5 <= len(picked) <= 10 and set(picked) <= set(names)
    with pytest.raises(ValueError):
        multi_feature_union(Y, names[:12], 13)


def test_identical_rankings_give_k():
    X = rng.normal(size=(100, 8)) * np.array([64, 32, 16, 8, 4, 2, 1, 0.5])
    # zero-mean columns: PCA and SVD see nearly the same spectrum
    X -= X.mean(axis=0)
    assert rank_features(X, "PCA").top(3).tolist() == rank_features(X, "SVD").top(3).tolist()
    assert len(multi_feature_union(X, list("abcdefgh"), 3)) == 3


def test_select_modes_and_file(tmp_path):
    names = tuple("abcdef")
    X = rng.normal(size=(60, 6))
    assert select_features(X, names, "all") == names
    assert len(select_features(X, names, "pca10", 3)) == 3
    with pytest.raises(ValueError):
        select_features(X, names, "lda")
    write_feature_list(names[:3], tmp_path / "f.txt")
    assert read_feature_list(tmp_path / "f.txt") == names[:3]
