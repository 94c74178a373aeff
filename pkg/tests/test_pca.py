import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from restrictml.errors import DimensionMismatchError, InsufficientDataError
from restrictml.pca import PcaModel, jacobi_eigh, pca_fit, pca_transform, write_scatter


def sign_fixed(v):
    return v if v[np.argmax(np.abs(v))] > 0 else -v


@settings(max_examples=30)
@given(st.integers(1, 12), st.integers(0, 2**32))
def test_jacobi_matches_numpy(n, seed):
    A = np.random.default_rng(seed).normal(size=(n, n))
    A = A + A.T
    vals, vecs = jacobi_eigh(A)
    ref = np.linalg.eigvalsh(A)
    assert np.allclose(np.sort(vals), ref, atol=1e-9 * max(1, np.abs(ref).max()))
    assert np.allclose(vecs.T @ vecs, np.eye(n), atol=1e-10)
    assert np.allclose(A @ vecs, vecs * vals, atol=1e-9 * max(1, np.abs(ref).max()))


def test_components_match_oracle(rng):
    X = rng.normal(size=(200, 16)) @ rng.normal(size=(16, 16))
    m = pca_fit(X, 3)
    Z = (X - X.mean(0)) / X.std(0, ddof=1)
    vals, vecs = np.linalg.eigh(np.cov(Z, rowvar=False))
    for i in range(3):
        assert np.allclose(m.components[i], sign_fixed(vecs[:, -1 - i]), atol=1e-8)
        assert m.explained_variance[i] == pytest.approx(vals[-1 - i], abs=1e-8)


def test_rank_one_data():
    x = np.arange(10.0)
    m = pca_fit(np.c_[x, 3 * x], 1)
    assert m.explained_variance_ratio[0] == pytest.approx(1.0, abs=1e-12)


def test_isotropic_deterministic():
    X = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=float)
    a, b = pca_fit(X, 2), pca_fit(X, 2)
    assert a.explained_variance[0] == pytest.approx(a.explained_variance[1])
    assert np.array_equal(a.components, b.components)


@settings(max_examples=30)
@given(st.integers(3, 40), st.integers(2, 8), st.integers(0, 2**32))
def test_invariants(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d)) * rng.uniform(0.1, 10, size=d)
    k = min(d, 3)
    m = pca_fit(X, k)
    C = m.components
    assert np.allclose(C @ C.T, np.eye(k), atol=1e-8)
    assert np.all(np.diff(m.explained_variance) <= 1e-12)
    T = m.transform(X)
    assert np.allclose(T.var(axis=0, ddof=1), m.explained_variance, atol=1e-8)
    for row in C:
        assert row[np.argmax(np.abs(row))] > 0
    P = m.reconstruct(T)
    assert np.allclose(m.transform(m.mean + P * m.scale), T, atol=1e-8)


def test_mean_row_maps_to_zero(rng):
    X = rng.normal(size=(30, 5))
    m = pca_fit(X, 2)
    assert np.allclose(pca_transform(m, X.mean(0, keepdims=True)), 0, atol=1e-12)


def test_reconstruct_rank_k(rng):
    X = rng.normal(size=(50, 2)) @ rng.normal(size=(2, 6))
    m = pca_fit(X, 2)
    Zstd = m.standardize(X)
    assert np.allclose(m.reconstruct(m.transform(X)), Zstd, atol=1e-8)


def test_zero_variance_column(rng):
    X = np.c_[rng.normal(size=20), np.full(20, 4.0)]
    m = pca_fit(X, 2)
    assert m.scale[1] == 1.0
    assert np.all(np.isfinite(m.transform(X)))


def test_errors(rng):
    X = rng.normal(size=(10, 4))
    with pytest.raises(ValueError):
        pca_fit(X, 0)
    with pytest.raises(ValueError):
        pca_fit(X, 5)
    with pytest.raises(InsufficientDataError):
        pca_fit(X[:1], 1)
    with pytest.raises(DimensionMismatchError):
        pca_fit(X, 2).transform(X[:, :3])


def test_json_round_trip(rng):
    m = pca_fit(rng.normal(size=(20, 4)), 2)
    back = PcaModel.from_json(m.to_json())
    X = rng.normal(size=(5, 4))
    assert np.array_equal(back.transform(X), m.transform(X))


def test_scatter_export(tmp_path, desk_dataset):
    data = desk_dataset.take(np.arange(0, len(desk_dataset), 20))
    m = pca_fit(data.X, 2)
    path = tmp_path / "s.csv"
    write_scatter(m, data.X, data.y, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# explained_variance_ratio,")
    assert lines[1] == "pc1,pc2,label"
    assert len(lines) == len(data) + 2
    with pytest.raises(DimensionMismatchError):
        write_scatter(m, data.X, data.y[:-1], path)


def test_constant_column_with_float_mean_noise():
    # 0.1 repeated: np.mean is not exactly 0.1, so a naive std is ~1e-17, not 0
    X = np.c_[np.random.default_rng(0).normal(size=(1000, 2)), np.full(1000, 0.1), np.full(1000, 0.3)]
    m = pca_fit(X, 4)
    assert m.scale[2] == m.scale[3] == 1.0
    assert np.all(m.standardize(X)[:, 2:] == 0)
    assert m.explained_variance[2:].max() < 1e-12
