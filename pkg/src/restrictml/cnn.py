"""Small 1-D convolutional classifier over the encoded SEQ block, in plain numpy.

Layer stack: conv(softplus, L2 kernel + L1 activity penalties) -> conv(linear)
-> dropout -> maxpool -> flatten -> dense(linear) -> dense(softmax).
Convolutions and pooling use "same" padding: output length ``ceil(L / s)``,
zeros split evenly with any odd pad on the right.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InsufficientDataError

PARAM_ORDER = ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "dense1_w", "dense1_b", "dense2_w", "dense2_b")


@dataclass(frozen=True)
class NetworkSpec:
    width: int = 24
    filters: int = 64
    kernel: int = 3
    stride: int = 3
    pool: int = 2
    units: int = 128
    dropout: float = 0.5
    l2: float = 0.01
    l1: float = 0.01

    def __post_init__(self) -> None:
        if self.width < 1 or self.filters < 1 or self.units < 1:
            raise ValueError("width, filters and units must be >= 1")
        if self.kernel < 1 or self.stride < 1 or self.pool < 1:
            raise ValueError("kernel, stride and pool must be >= 1")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout rate must be in [0, 1)")

    @property
    def conv1_len(self) -> int:
        return -(-self.width // self.stride)

    @property
    def conv2_len(self) -> int:
        return -(-self.conv1_len // self.stride)

    @property
    def pool_len(self) -> int:
        return -(-self.conv2_len // self.pool)

    @property
    def flat_len(self) -> int:
        return self.pool_len * self.filters

    def shape_trace(self) -> list[int]:
        return [self.conv1_len, self.conv2_len, self.pool_len, self.flat_len, self.units, 2]

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        k, f = self.kernel, self.filters
        return {
            "conv1_w": (k, 1, f),
            "conv1_b": (f,),
            "conv2_w": (k, f, f),
            "conv2_b": (f,),
            "dense1_w": (self.flat_len, self.units),
            "dense1_b": (self.units,),
            "dense2_w": (self.units, 2),
            "dense2_b": (2,),
        }


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 30
    seed: int = 0
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-7
    patience: int | None = 5
    val_fraction: float = 0.1

    def __post_init__(self) -> None:
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if not 0 <= self.val_fraction < 1:
            raise ValueError("val_fraction must be in [0, 1)")


@dataclass
class NetworkState:
    spec: NetworkSpec
    params: dict[str, np.ndarray]
    seed: int = 0
    manifest: dict = field(default_factory=dict)

    def copy(self) -> "NetworkState":
        return NetworkState(self.spec, {k: v.copy() for k, v in self.params.items()}, self.seed, dict(self.manifest))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in PARAM_ORDER])

    def to_json(self) -> dict:
        return {
            "model_type": "cnn",
            "spec": asdict(self.spec),
            "shape_trace": self.spec.shape_trace(),
            "seed": self.seed,
            "params": {k: {"shape": list(self.params[k].shape), "values": self.params[k].ravel().tolist()} for k in PARAM_ORDER},
            "training_manifest": self.manifest,
        }

    @classmethod
    def from_json(cls, d: dict) -> "NetworkState":
        spec = NetworkSpec(**d["spec"])
        params = {
            k: np.array(v["values"], dtype=np.float64).reshape(v["shape"]) for k, v in d["params"].items()
        }
        expected = spec.param_shapes()
        for k, shp in expected.items():
            if params[k].shape != shp:
                raise DimensionMismatchError(f"{k} has shape {params[k].shape}, expected {shp}")
        return cls(spec, params, int(d.get("seed", 0)), d.get("training_manifest", {}))


def _glorot(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    if len(shape) == 3:
        fan_in, fan_out = shape[0] * shape[1], shape[0] * shape[2]
    else:
        fan_in, fan_out = shape
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def net_build(spec: NetworkSpec | int = NetworkSpec(), seed: int = 0) -> NetworkState:
    """Glorot-uniform kernels, zero biases."""
    if isinstance(spec, int):
        spec = NetworkSpec(width=spec)
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in spec.param_shapes().items():
        params[name] = np.zeros(shape) if name.endswith("_b") else _glorot(rng, shape)
    return NetworkState(spec, params, seed)


# --------------------------------------------------------------------------
# layer primitives


def same_padding(length: int, size: int, stride: int) -> tuple[int, int]:
    out = -(-length // stride)
    total = max((out - 1) * stride + size - length, 0)
    return total // 2, total - total // 2


def _patch_index(length: int, size: int, stride: int) -> np.ndarray:
    out = -(-length // stride)
    return stride * np.arange(out)[:, None] + np.arange(size)[None, :]


def conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int):
    """``x`` (B, L, Cin), ``w`` (k, Cin, Cout) -> (B, ceil(L/s), Cout) and the patch tensor."""
    k = w.shape[0]
    lo, hi = same_padding(x.shape[1], k, stride)
    xp = np.pad(x, ((0, 0), (lo, hi), (0, 0)))
    idx = _patch_index(x.shape[1], k, stride)
    patches = xp[:, idx, :]  # (B, Lout, k, Cin)
    return np.einsum("bltc,tcf->blf", patches, w) + b, patches


def conv_backward(dout: np.ndarray, patches: np.ndarray, w: np.ndarray, in_len: int, stride: int):
    k = w.shape[0]
    dw = np.einsum("bltc,blf->tcf", patches, dout)
    db = dout.sum(axis=(0, 1))
    dpatches = np.einsum("blf,tcf->bltc", dout, w)
    lo, hi = same_padding(in_len, k, stride)
    dxp = np.zeros((dout.shape[0], in_len + lo + hi, w.shape[1]))
    idx = _patch_index(in_len, k, stride)
    np.add.at(dxp, (slice(None), idx), dpatches)
    return dxp[:, lo : lo + in_len, :], dw, db


def softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -z))


def maxpool_forward(x: np.ndarray, pool: int):
    lo, hi = same_padding(x.shape[1], pool, pool)
    xp = np.pad(x, ((0, 0), (lo, hi), (0, 0)), constant_values=-np.inf)
    idx = _patch_index(x.shape[1], pool, pool)
    windows = xp[:, idx, :]  # (B, Lout, pool, C)
    arg = windows.argmax(axis=2)
    return np.take_along_axis(windows, arg[:, :, None, :], axis=2)[:, :, 0, :], (arg, lo, hi)


def maxpool_backward(dout: np.ndarray, cache, in_len: int, pool: int) -> np.ndarray:
    arg, lo, hi = cache
    B, Lout, C = dout.shape
    dxp = np.zeros((B, in_len + lo + hi, C))
    pos = pool * np.arange(Lout)[None, :, None] + arg
    np.add.at(dxp, (np.arange(B)[:, None, None], pos, np.arange(C)[None, None, :]), dout)
    return dxp[:, lo : lo + in_len, :]


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# --------------------------------------------------------------------------
# network


def _check_batch(state: NetworkState, batch) -> np.ndarray:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != state.spec.width:
        raise DimensionMismatchError(f"network expects width {state.spec.width}, got {x.shape[1]}")
    return x


def forward(
    state: NetworkState,
    batch,
    training: bool = False,
    rng: np.random.Generator | None = None,
    return_cache: bool = False,
):
    """Class probabilities ``(B, 2)``; column 1 is the applicable class.

    Dropout is applied only when ``training`` is true, with inverted scaling.
    """
    spec, p = state.spec, state.params
    x = _check_batch(state, batch)[:, :, None]
    z1, patches1 = conv_forward(x, p["conv1_w"], p["conv1_b"], spec.stride)
    a1 = softplus(z1)
    z2, patches2 = conv_forward(a1, p["conv2_w"], p["conv2_b"], spec.stride)
    if training and spec.dropout > 0:
        rng = rng if rng is not None else np.random.default_rng(state.seed)
        mask = (rng.random(z2.shape) >= spec.dropout) / (1.0 - spec.dropout)
    else:
        mask = None
    d = z2 * mask if mask is not None else z2
    pooled, pool_cache = maxpool_forward(d, spec.pool)
    flat = pooled.reshape(len(pooled), -1)
    h = flat @ p["dense1_w"] + p["dense1_b"]
    logits = h @ p["dense2_w"] + p["dense2_b"]
    probs = softmax(logits)
    if not return_cache:
        return probs
    cache = dict(
        x=x, z1=z1, a1=a1, patches1=patches1, z2=z2, patches2=patches2, mask=mask,
        dropped=d, pooled=pooled, pool_cache=pool_cache, flat=flat, h=h, logits=logits, probs=probs,
    )
    return probs, cache


def _one_hot(labels, n: int) -> np.ndarray:
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if len(y) != n:
        raise DimensionMismatchError(f"{n} rows but {len(y)} labels")
    return np.eye(2)[y]


def _loss_terms(state: NetworkState, cache: dict, labels) -> tuple[float, float, float]:
    probs = cache["probs"]
    Y = _one_hot(labels, len(probs))
    B = len(probs)
    # log-softmax from logits keeps tiny probabilities finite
    z = cache["logits"] - cache["logits"].max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    ce = float(-(Y * logp).sum() / B)
    l2 = float(state.spec.l2 * (state.params["conv1_w"] ** 2).sum())
    l1 = float(state.spec.l1 * np.abs(cache["a1"]).sum() / B)
    return ce, l2, l1


def loss(state: NetworkState, batch, labels, training: bool = False, rng=None) -> float:
    """Mean cross-entropy plus the conv1 kernel L2 and activity L1 penalties."""
    _, cache = forward(state, batch, training, rng, return_cache=True)
    return float(sum(_loss_terms(state, cache, labels)))


def loss_components(state: NetworkState, batch, labels) -> dict[str, float]:
    _, cache = forward(state, batch, False, return_cache=True)
    ce, l2, l1 = _loss_terms(state, cache, labels)
    return {"cross_entropy": ce, "kernel_l2": l2, "activity_l1": l1}


def backward(state: NetworkState, cache: dict, labels) -> dict[str, np.ndarray]:
    """Gradients of :func:`loss` with respect to every parameter."""
    spec, p = state.spec, state.params
    probs = cache["probs"]
    B = len(probs)
    Y = _one_hot(labels, B)
    g: dict[str, np.ndarray] = {}
    dlogits = (probs - Y) / B
    g["dense2_w"] = cache["h"].T @ dlogits
    g["dense2_b"] = dlogits.sum(axis=0)
    dh = dlogits @ p["dense2_w"].T
    g["dense1_w"] = cache["flat"].T @ dh
    g["dense1_b"] = dh.sum(axis=0)
    dflat = dh @ p["dense1_w"].T
    dpooled = dflat.reshape(cache["pooled"].shape)
    ddrop = maxpool_backward(dpooled, cache["pool_cache"], cache["z2"].shape[1], spec.pool)
    dz2 = ddrop * cache["mask"] if cache["mask"] is not None else ddrop
    da1, g["conv2_w"], g["conv2_b"] = conv_backward(
        dz2, cache["patches2"], p["conv2_w"], cache["a1"].shape[1], spec.stride
    )
    da1 = da1 + spec.l1 * np.sign(cache["a1"]) / B
    dz1 = da1 * sigmoid(cache["z1"])
    _, g["conv1_w"], g["conv1_b"] = conv_backward(
        dz1, cache["patches1"], p["conv1_w"], spec.width, spec.stride
    )
    g["conv1_w"] = g["conv1_w"] + 2.0 * spec.l2 * p["conv1_w"]
    return g


def gradients(state: NetworkState, batch, labels) -> dict[str, np.ndarray]:
    _, cache = forward(state, batch, False, return_cache=True)
    return backward(state, cache, labels)


def gradient_check(
    state: NetworkState,
    sample,
    label,
    epsilon: float = 1e-5,
    max_params: int | None = None,
    seed: int = 0,
    grad_fn=None,
) -> float:
    """Largest relative error between analytic and central-difference gradients.

    Dropout is off. Where both gradients are below 1e-8 in magnitude the
    absolute error is used instead. ``max_params`` checks a seeded random
    subset of coordinates; ``grad_fn`` substitutes the analytic gradient.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    x = _check_batch(state, sample)
    y = np.asarray(label, dtype=np.int64).reshape(-1)
    work = state.copy()
    analytic = (grad_fn or gradients)(work, x, y)
    coords = [(k, i) for k in PARAM_ORDER for i in range(work.params[k].size)]
    if max_params is not None and max_params < len(coords):
        pick = np.random.default_rng(seed).choice(len(coords), size=max_params, replace=False)
        coords = [coords[i] for i in sorted(pick)]
    worst = 0.0
    for name, i in coords:
        flat = work.params[name].reshape(-1)
        old = flat[i]
        flat[i] = old + epsilon
        up = loss(work, x, y)
        flat[i] = old - epsilon
        down = loss(work, x, y)
        flat[i] = old
        num = (up - down) / (2 * epsilon)
        ana = analytic[name].reshape(-1)[i]
        scale = max(abs(num), abs(ana))
        err = abs(num - ana) if scale < 1e-8 else abs(num - ana) / scale
        worst = max(worst, err)
    return worst


def predict(state: NetworkState, batch) -> np.ndarray:
    """Argmax class; an exact tie goes to class 0."""
    return forward(state, batch).argmax(axis=1).astype(np.int64)


def _accuracy(state: NetworkState, X: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(predict(state, X) == y)) if len(y) else float("nan")


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    train_acc: float
    val_acc: float


def train(
    state: NetworkState,
    X,
    y=None,
    cfg: TrainConfig = TrainConfig(),
) -> tuple[NetworkState, list[EpochRecord]]:
    """Mini-batch training; ``X`` is a SEQ matrix or a :class:`LabeledDataset`.

    A seeded ``val_fraction`` holdout drives early stopping with the given
    patience, after which the best-validation weights are restored.
    Shuffles and dropout masks all come from ``cfg.seed``.
    """
    if y is None:
        X, y = X.seq_block, X.y
    X = _check_batch(state, X)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if len(y) == 0:
        raise InsufficientDataError("cannot train on zero rows")
    if len(y) != len(X):
        raise DimensionMismatchError(f"{len(X)} rows but {len(y)} labels")
    state = state.copy()
    rng = np.random.default_rng([cfg.seed, 1])
    order = rng.permutation(len(y))
    n_val = int(len(y) * cfg.val_fraction)
    if n_val >= len(y):
        n_val = 0
    val_idx, tr_idx = np.sort(order[:n_val]), np.sort(order[n_val:])
    Xtr, ytr, Xva, yva = X[tr_idx], y[tr_idx], X[val_idx], y[val_idx]

    m = {k: np.zeros_like(v) for k, v in state.params.items()}
    v = {k: np.zeros_like(v) for k, v in state.params.items()}
    step = 0
    log: list[EpochRecord] = []
    best_val, best_params, stale = math.inf, None, 0
    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(len(ytr))
        total, seen = 0.0, 0
        for s in range(0, len(perm), cfg.batch_size):
            idx = perm[s : s + cfg.batch_size]
            _, cache = forward(state, Xtr[idx], True, rng, return_cache=True)
            total += sum(_loss_terms(state, cache, ytr[idx])) * len(idx)
            seen += len(idx)
            grads = backward(state, cache, ytr[idx])
            step += 1
            lr = cfg.learning_rate
            for k, gk in grads.items():
                if cfg.optimizer == "adam":
                    m[k] = cfg.beta1 * m[k] + (1 - cfg.beta1) * gk
                    v[k] = cfg.beta2 * v[k] + (1 - cfg.beta2) * gk * gk
                    mhat = m[k] / (1 - cfg.beta1**step)
                    vhat = v[k] / (1 - cfg.beta2**step)
                    state.params[k] -= lr * mhat / (np.sqrt(vhat) + cfg.adam_eps)
                else:
                    m[k] = cfg.momentum * m[k] - lr * gk
                    state.params[k] += m[k]
        rec = EpochRecord(epoch, total / seen, _accuracy(state, Xtr, ytr), _accuracy(state, Xva, yva))
        log.append(rec)
        if n_val and cfg.patience is not None:
            vloss = loss(state, Xva, yva)
            if vloss < best_val:
                best_val, best_params, stale = vloss, {k: p.copy() for k, p in state.params.items()}, 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break
    if best_params is not None:
        state.params = best_params
    return state, log


def write_epoch_log(log: list[EpochRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss", "train_acc", "val_acc"])
        for r in log:
            w.writerow([r.epoch, repr(r.loss), repr(r.train_acc), repr(r.val_acc)])


def save_model(state: NetworkState, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(state.to_json(), fh)
        fh.write("\n")


def load_model(path) -> NetworkState:
    with open(path, encoding="utf-8") as fh:
        return NetworkState.from_json(json.load(fh))
