import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from restrictml.errors import DimensionMismatchError, RestrictMLError
from restrictml.pca import PcaModel, Standardizer
from restrictml.svm import (
    KernelSpec,
    SvmModel,
    kernel_eval,
    kernel_matrix,
    kkt_audit,
    load_model,
    save_model,
    svm_predict,
    svm_train,
)

XOR_X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
XOR_Y = np.array([-1, -1, 1, 1])
TWO_X = np.array([[0, 0], [1, 1]], dtype=float)
TWO_Y = np.array([-1, 1])
KINDS = ["linear", "polynomial", "rbf", "sigmoid"]


def blobs(n=120, seed=0, sep=1.5):
    rng = np.random.default_rng(seed)
    y = np.where(rng.random(n) < 0.5, 1, -1)
    X = rng.normal(size=(n, 3)) + sep * y[:, None] * np.array([1.0, 0.5, 0.0])
    return X, y


def test_kernel_examples():
    assert kernel_eval(KernelSpec("linear"), [1, 0], [1, 0]) == 1.0
    for g in (0.1, 1.0, 7.0):
        assert kernel_eval(KernelSpec("rbf", gamma=g), [3, -2], [3, -2]) == 1.0
    assert kernel_eval(KernelSpec("polynomial", 2, 1.0, 1.0), [1, 1], [1, 0]) == 4.0
    assert kernel_eval(KernelSpec("sigmoid", gamma=1.0), [0, 0], [1, 1]) == 0.0


def test_kernel_spec_validation():
    assert KernelSpec("polymetric").kind == "polynomial"
    with pytest.raises(ValueError):
        KernelSpec("cubic")
    with pytest.raises(ValueError):
        KernelSpec(degree=0)
    with pytest.raises(ValueError):
        KernelSpec(gamma=0)
    with pytest.raises(DimensionMismatchError):
        kernel_eval(KernelSpec("linear"), [1, 2], [1, 2, 3])


vec = st.lists(st.floats(-3, 3), min_size=3, max_size=3)


@given(st.sampled_from(KINDS), vec, vec)
def test_kernel_symmetric_and_matrix_agrees(kind, u, v):
    spec = KernelSpec(kind, 3, 0.5, 0.25)
    k = kernel_eval(spec, u, v)
    assert k == pytest.approx(kernel_eval(spec, v, u), rel=1e-12, abs=1e-12)
    M = kernel_matrix(spec, np.array([u]), np.array([v]))
    assert M[0, 0] == pytest.approx(k, rel=1e-9, abs=1e-9)


def test_two_point_fixture(backend):
    m = svm_train(TWO_X, TWO_Y, KernelSpec("linear"), c_penalty=10.0, backend=backend)
    labels, f = svm_predict(m, TWO_X)
    assert labels.tolist() == [-1, 1]
    assert f == pytest.approx([-1, 1], abs=1e-3)
    assert svm_predict(m, [[0.5, 0.5]])[1][0] == pytest.approx(0, abs=1e-3)
    mirrored = np.array([[0.2, 0.4], [0.8, 0.6], [-1, 0], [2, 1]])
    fm = m.decision_function(mirrored)
    assert fm[0] == pytest.approx(-fm[1], abs=1e-3)
    assert fm[2] == pytest.approx(-fm[3], abs=1e-3)


def test_xor(backend):
    rbf = svm_train(XOR_X, XOR_Y, KernelSpec("rbf", gamma=1.0), c_penalty=10.0, backend=backend)
    assert (svm_predict(rbf, XOR_X)[0] == XOR_Y).all()
    lin = svm_train(XOR_X, XOR_Y, KernelSpec("linear"), c_penalty=1.0, backend=backend)
    assert (svm_predict(lin, XOR_X)[0] == XOR_Y).mean() <= 0.75


def test_no_linear_rule_beats_three_quarters_on_xor():
    best = 0
    for w1 in np.linspace(-2, 2, 21):
        for w2 in np.linspace(-2, 2, 21):
            for b in np.linspace(-3, 3, 31):
                pred = np.where(XOR_X @ [w1, w2] + b >= 0, 1, -1)
                best = max(best, (pred == XOR_Y).mean())
    assert best == 0.75


@pytest.mark.parametrize("kind", KINDS)
def test_kkt_and_dual_feasibility(kind, backend):
    X, y = blobs()
    spec = KernelSpec(kind, degree=2, gamma=0.3, coef0=0.5 if kind != "sigmoid" else 0.0)
    m = svm_train(X, y, spec, c_penalty=1.0, tolerance=1e-3, backend=backend)
    assert m.converged
    assert kkt_audit(m, X, y) == []
    alpha = np.abs(m.dual_coefficients)
    assert np.all(alpha > 0) and np.all(alpha <= m.c_penalty + 1e-12)
    assert abs(m.dual_coefficients.sum()) < 1e-8
    assert np.array_equal(np.sign(m.dual_coefficients), y[m.support_indices])


def test_deterministic(backend):
    X, y = blobs()
    a = svm_train(X, y, KernelSpec("rbf"), seed=4, backend=backend)
    b = svm_train(X, y, KernelSpec("rbf"), seed=4, backend=backend)
    assert a.to_json() == b.to_json()


def test_backends_agree():
    X, y = blobs(seed=3)
    from restrictml import _kernels

    if "native" not in _kernels.BACKENDS:
        pytest.skip("compiled backend not built")
    a = svm_train(X, y, KernelSpec("rbf"), backend="python")
    b = svm_train(X, y, KernelSpec("rbf"), backend="native")
    assert np.array_equal(svm_predict(a, X)[0], svm_predict(b, X)[0])
    assert np.allclose(a.decision_function(X), b.decision_function(X), atol=5e-3)


def test_support_vector_order_irrelevant():
    X, y = blobs()
    m = svm_train(X, y, KernelSpec("rbf"))
    perm = np.random.default_rng(0).permutation(len(m.dual_coefficients))
    shuffled = SvmModel(
        m.support_vectors[perm], m.dual_coefficients[perm], m.bias, m.kernel,
        m.c_penalty, m.tolerance, m.preprocess, m.support_indices[perm],
    )
    assert np.allclose(shuffled.decision_function(X), m.decision_function(X), atol=1e-12)


def test_support_vectors_keep_their_labels():
    m = svm_train(TWO_X, TWO_Y, KernelSpec("linear"), c_penalty=10.0)
    assert svm_predict(m, m.support_vectors)[0].tolist() == TWO_Y[m.support_indices].tolist()


def test_zero_decision_maps_positive():
    m = SvmModel(np.empty((0, 2)), np.empty(0), 0.0, KernelSpec("linear"), 1.0, 1e-3)
    assert svm_predict(m, [[1.0, 2.0]])[0].tolist() == [1]


def test_preprocessing_options():
    X, y = blobs()
    assert isinstance(svm_train(X, y, KernelSpec("linear"), pcs=0).preprocess, Standardizer)
    m = svm_train(X, y, KernelSpec("polynomial", 2), pcs=2)
    assert isinstance(m.pca, PcaModel) and m.support_vectors.shape[1] == 2
    assert kkt_audit(m, X, y) == []
    with pytest.raises(DimensionMismatchError):
        m.decision_function(X[:, :2])


def test_zero_one_labels():
    X, y = blobs()
    a = svm_train(X, (y > 0).astype(int), KernelSpec("linear"))
    b = svm_train(X, y, KernelSpec("linear"))
    assert a.to_json() == b.to_json()


def test_input_errors():
    X, y = blobs(20)
    with pytest.raises(RestrictMLError):
        svm_train(X, np.ones(20))
    with pytest.raises(RestrictMLError):
        svm_train(X, np.full(20, 2))
    with pytest.raises(DimensionMismatchError):
        svm_train(X, y[:-1])
    with pytest.raises(ValueError):
        svm_train(X, y, c_penalty=0)


def test_pass_budget_reported():
    X, y = blobs(200, sep=0.3)
    m = svm_train(X, y, KernelSpec("linear"), max_passes=1, c_penalty=100.0)
    assert m.passes <= 1
    assert not m.converged


def test_json_round_trip(tmp_path):
    X, y = blobs()
    m = svm_train(X, y, KernelSpec("polynomial", 2), pcs=2)
    save_model(m, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    assert np.array_equal(back.decision_function(X), m.decision_function(X))
    assert back.to_json() == m.to_json()
