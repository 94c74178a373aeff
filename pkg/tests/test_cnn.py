import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from restrictml.cnn import (
    PARAM_ORDER,
    NetworkSpec,
    NetworkState,
    TrainConfig,
    forward,
    gradient_check,
    gradients,
    load_model,
    loss,
    loss_components,
    net_build,
    predict,
    save_model,
    train,
    write_epoch_log,
)
from restrictml.errors import DimensionMismatchError

TOY_CONFIGS = [
    NetworkSpec(width=6, filters=2, units=3),
    NetworkSpec(width=4, filters=3, units=4),
    NetworkSpec(width=7, filters=2, units=2, kernel=2, stride=2),
    NetworkSpec(width=9, filters=3, units=5, pool=3),
    NetworkSpec(width=1, filters=2, units=2),
    NetworkSpec(width=12, filters=2, units=3, kernel=4, stride=1),
]


def ceil_div(a, b):
    return -(-a // b)


@pytest.mark.parametrize("w", range(1, 65))
def test_shape_trace(w):
    s = NetworkSpec(width=w)
    c1 = ceil_div(w, 3)
    c2 = ceil_div(c1, 3)
    pl = ceil_div(c2, 2)
    assert s.shape_trace() == [c1, c2, pl, pl * 64, 128, 2]
    state = net_build(w, seed=1)
    x = np.random.default_rng(w).random((3, w))
    probs, cache = forward(state, x, return_cache=True)
    assert cache["z1"].shape == (3, c1, 64)
    assert cache["z2"].shape == (3, c2, 64)
    assert cache["pooled"].shape == (3, pl, 64)
    assert cache["h"].shape == (3, 128)
    assert probs.shape == (3, 2)


def test_default_shape_trace():
    assert NetworkSpec().shape_trace() == [8, 3, 2, 128, 128, 2]
    assert NetworkSpec(width=1).shape_trace()[:3] == [1, 1, 1]


def test_build_deterministic():
    a, b = net_build(24, seed=5), net_build(24, seed=5)
    assert np.array_equal(a.flat(), b.flat())
    assert not np.array_equal(a.flat(), net_build(24, seed=6).flat())
    for k, shp in a.spec.param_shapes().items():
        assert a.params[k].shape == shp
    assert not a.params["conv1_b"].any()


def test_zero_weights_give_even_odds():
    state = net_build(24)
    for k in PARAM_ORDER:
        state.params[k][:] = 0
    probs = forward(state, np.random.default_rng(0).random((5, 24)))
    assert np.array_equal(probs, np.full((5, 2), 0.5))
    assert predict(state, np.zeros((1, 24))).tolist() == [0]


def test_inference_deterministic():
    state = net_build(24, seed=2)
    x = np.random.default_rng(1).random((4, 24))
    assert np.array_equal(forward(state, x), forward(state, x))


@settings(max_examples=30)
@given(st.integers(1, 30), st.integers(0, 2**16), st.floats(0.1, 20))
def test_softmax_rows_sum_to_one(w, seed, scale):
    state = net_build(NetworkSpec(width=w, filters=4, units=8), seed=seed)
    for k in PARAM_ORDER:
        state.params[k] *= scale
    probs = forward(state, np.random.default_rng(seed).random((6, w)) * scale)
    assert np.all(np.abs(probs.sum(axis=1) - 1) < 1e-9)
    assert np.all((probs >= 0) & (probs <= 1))


def test_width_mismatch():
    with pytest.raises(DimensionMismatchError):
        forward(net_build(24), np.zeros((1, 23)))


def reference_forward(spec, params, x):
    """Per-element loop implementation of the network on one row."""

    def same(L, k, s):
        out = ceil_div(L, s)
        total = max((out - 1) * s + k - L, 0)
        return out, total // 2

    def conv(inp, w, b, s):
        L, cin = len(inp), len(inp[0])
        k, _, cout = w.shape
        out, lo = same(L, k, s)
        res = []
        for o in range(out):
            row = []
            for f in range(cout):
                acc = b[f]
                for t in range(k):
                    pos = o * s + t - lo
                    if 0 <= pos < L:
                        for c in range(cin):
                            acc += inp[pos][c] * w[t, c, f]
                row.append(acc)
            res.append(row)
        return res

    a = [[v] for v in x]
    z1 = conv(a, params["conv1_w"], params["conv1_b"], spec.stride)
    a1 = [[math.log1p(math.exp(v)) for v in r] for r in z1]
    z2 = conv(a1, params["conv2_w"], params["conv2_b"], spec.stride)
    out, lo = same(len(z2), spec.pool, spec.pool)
    pooled = []
    for o in range(out):
        pooled.append([
            max(z2[p][f] for p in range(o * spec.pool - lo, o * spec.pool - lo + spec.pool) if 0 <= p < len(z2))
            for f in range(spec.filters)
        ])
    flat = [v for r in pooled for v in r]
    h = [params["dense1_b"][u] + sum(flat[i] * params["dense1_w"][i, u] for i in range(len(flat))) for u in range(spec.units)]
    logits = [params["dense2_b"][c] + sum(h[u] * params["dense2_w"][u, c] for u in range(spec.units)) for c in range(2)]
    m = max(logits)
    e = [math.exp(v - m) for v in logits]
    return [v / sum(e) for v in e]


@pytest.mark.parametrize("spec", TOY_CONFIGS[:4])
def test_forward_matches_loop_reference(spec):
    state = net_build(spec, seed=3)
    rng = np.random.default_rng(4)
    for k in ("conv1_b", "conv2_b", "dense1_b", "dense2_b"):
        state.params[k] = rng.normal(size=state.params[k].shape)
    x = rng.random(spec.width)
    assert forward(state, x)[0] == pytest.approx(reference_forward(spec, state.params, x), abs=1e-12)


def test_four_wide_network_probabilities():
    spec = NetworkSpec(width=4, filters=2, units=2)
    state = net_build(spec, seed=0)
    x = np.array([0.25, 0.5, 0.75, 1.0])
    assert forward(state, x)[0] == pytest.approx(reference_forward(spec, state.params, x), abs=1e-12)


def test_loss_at_even_odds_is_ln2():
    state = net_build(NetworkSpec(width=6, filters=2, units=2))
    for k in PARAM_ORDER:
        state.params[k][:] = 0
    comps = loss_components(state, np.random.default_rng(0).random((3, 6)), [0, 1, 1])
    assert comps["cross_entropy"] == pytest.approx(math.log(2), abs=1e-12)
    assert comps["kernel_l2"] == 0
    # softplus(0) = ln 2 on every conv1 activation
    assert comps["activity_l1"] == pytest.approx(0.01 * math.log(2) * 2 * 2, abs=1e-12)


def test_regularizers_direct_sum():
    spec = NetworkSpec(width=6, filters=2, units=3)
    state = net_build(spec, seed=9)
    x = np.random.default_rng(2).random((4, 6))
    _, cache = forward(state, x, return_cache=True)
    comps = loss_components(state, x, [1, 0, 0, 1])
    assert comps["kernel_l2"] == pytest.approx(0.01 * sum(v * v for v in state.params["conv1_w"].ravel()))
    assert comps["activity_l1"] == pytest.approx(0.01 * sum(abs(v) for v in cache["a1"].ravel()) / 4)
    assert loss(state, x, [1, 0, 0, 1]) == pytest.approx(sum(comps.values()))


@pytest.mark.parametrize("i, spec", list(enumerate(TOY_CONFIGS)))
def test_gradient_check(i, spec):
    state = net_build(spec, seed=i)
    rng = np.random.default_rng(100 + i)
    for k in ("conv1_b", "conv2_b", "dense1_b", "dense2_b"):
        state.params[k] = 0.1 * rng.normal(size=state.params[k].shape)
    x = rng.random((3, spec.width))
    y = rng.integers(0, 2, 3)
    assert gradient_check(state, x, y) < 1e-4


def test_gradient_check_catches_sign_bug():
    state = net_build(TOY_CONFIGS[0], seed=0)
    x = np.random.default_rng(0).random((2, 6))

    def broken(s, xb, yb):
        g = gradients(s, xb, yb)
        g["dense1_w"] = -g["dense1_w"]
        return g

    assert gradient_check(state, x, [0, 1]) < 1e-4
    assert gradient_check(state, x, [0, 1], grad_fn=broken) > 1e-2


def test_gradient_check_subset_and_epsilon():
    state = net_build(24, seed=1)
    x = np.random.default_rng(0).random((2, 24))
    assert gradient_check(state, x, [1, 0], max_params=200) < 1e-4
    with pytest.raises(ValueError):
        gradient_check(state, x, [1, 0], epsilon=0)


def test_dropout_expectation():
    spec = NetworkSpec(width=24, filters=4, units=4)
    state = net_build(spec, seed=0)
    x = np.random.default_rng(3).random(24)
    batch = np.tile(x, (10_000, 1))
    _, train_cache = forward(state, batch, training=True, rng=np.random.default_rng(0), return_cache=True)
    _, infer_cache = forward(state, x, return_cache=True)
    mean_act = train_cache["dropped"].mean(axis=0)
    ref = infer_cache["dropped"][0]
    assert np.linalg.norm(mean_act - ref) / np.linalg.norm(ref) < 0.02
    assert (train_cache["mask"] == 0).mean() == pytest.approx(0.5, abs=0.01)


def learnable(n=400, seed=0, w=12):
    rng = np.random.default_rng(seed)
    X = rng.choice([0.25, 0.5, 0.75, 1.0], size=(n, w))
    y = (X[:, 0] == 1.0).astype(int)
    return X, y


def test_zero_learning_rate_keeps_weights():
    X, y = learnable()
    state = net_build(NetworkSpec(width=12, filters=4, units=4), seed=0)
    for opt in ("adam", "sgd"):
        out, log = train(state, X, y, TrainConfig(optimizer=opt, learning_rate=0.0, epochs=2))
        assert np.array_equal(out.flat(), state.flat())
        assert len(log) == 2


def test_training_deterministic(tmp_path):
    X, y = learnable()
    state = net_build(NetworkSpec(width=12, filters=4, units=4), seed=0)
    cfg = TrainConfig(epochs=3, seed=5)
    a, la = train(state, X, y, cfg)
    b, lb = train(state, X, y, cfg)
    assert la == lb and np.array_equal(a.flat(), b.flat())
    write_epoch_log(la, tmp_path / "a.csv")
    write_epoch_log(lb, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "epoch,loss,train_acc,val_acc"


@pytest.mark.parametrize("opt, lr", [("adam", 1e-2), ("sgd", 0.05)])
def test_toy_task_is_learned(opt, lr):
    X, y = learnable(600)
    Xt, yt = learnable(300, seed=1)
    state = net_build(NetworkSpec(width=12, filters=8, units=8), seed=0)
    out, log = train(state, X, y, TrainConfig(optimizer=opt, learning_rate=lr, epochs=40, patience=10))
    assert np.mean(predict(out, Xt) == yt) >= 0.9


def test_early_stop_restores_best():
    X, y = learnable(200)
    state = net_build(NetworkSpec(width=12, filters=4, units=4), seed=0)
    out, log = train(state, X, y, TrainConfig(learning_rate=0.5, epochs=30, patience=2))
    assert len(log) < 30


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(optimizer="rmsprop")
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-1)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        NetworkSpec(dropout=1.0)


def test_json_round_trip(tmp_path):
    state = net_build(NetworkSpec(width=10, filters=3, units=5), seed=4)
    save_model(state, tmp_path / "c.json")
    back = load_model(tmp_path / "c.json")
    assert back.spec == state.spec
    assert np.array_equal(back.flat(), state.flat())
    d = state.to_json()
    d["params"]["dense2_w"]["shape"] = [2, 5]
    with pytest.raises(DimensionMismatchError):
        NetworkState.from_json(d)
