"""Kernel SVM trained by sequential minimal optimization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import _kernels
from ._kernels._python import LINEAR, POLY, RBF, SIGMOID
from .errors import DimensionMismatchError, RestrictMLError
from .pca import PcaModel, Standardizer, pca_fit

KernelKind = Literal["linear", "polynomial", "rbf", "sigmoid"]
_KIND_CODE = {"linear": LINEAR, "polynomial": POLY, "rbf": RBF, "sigmoid": SIGMOID}
_ALIASES = {"poly": "polynomial", "polymetric": "polynomial"}


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind = "polynomial"
    degree: int = 3
    gamma: float | None = None  # None -> 1 / input dimension at training time
    coef0: float = 0.0

    def __post_init__(self) -> None:
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in _KIND_CODE:
            raise ValueError(f"unknown kernel {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be > 0")

    @property
    def code(self) -> int:
        return _KIND_CODE[self.kind]

    def resolved(self, dim: int) -> "KernelSpec":
        if self.gamma is not None:
            return self
        return KernelSpec(self.kind, self.degree, 1.0 / max(dim, 1), self.coef0)

    def to_json(self) -> dict:
        return {"kind": self.kind, "degree": self.degree, "gamma": self.gamma, "coef0": self.coef0}


def kernel_eval(spec: KernelSpec, u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatchError(f"kernel arguments differ in shape: {u.shape} vs {v.shape}")
    spec = spec.resolved(len(u))
    return _kernels._python.kernel_value(spec.code, u, v, spec.gamma, spec.coef0, spec.degree)


def kernel_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    g, c0, deg = spec.gamma, spec.coef0, spec.degree
    if spec.kind == "rbf":
        d2 = (A**2).sum(1)[:, None] - 2.0 * A @ B.T + (B**2).sum(1)[None, :]
        return np.exp(-g * np.maximum(d2, 0.0))
    dots = A @ B.T
    if spec.kind == "linear":
        return dots
    if spec.kind == "polynomial":
        return (g * dots + c0) ** deg
    return np.tanh(g * dots + c0)


@dataclass
class SvmModel:
    support_vectors: np.ndarray
    dual_coefficients: np.ndarray  # alpha_i * y_i
    bias: float
    kernel: KernelSpec
    c_penalty: float
    tolerance: float
    preprocess: PcaModel | Standardizer | None = None
    support_indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    converged: bool = True
    passes: int = 0
    manifest: dict = field(default_factory=dict)

    @property
    def pca(self) -> PcaModel | None:
        return self.preprocess if isinstance(self.preprocess, PcaModel) else None

    def prepare(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if self.preprocess is not None:
            X = self.preprocess.transform(X)
        if X.shape[1] != self.support_vectors.shape[1]:
            raise DimensionMismatchError(
                f"model expects {self.support_vectors.shape[1]} features, got {X.shape[1]}"
            )
        return X

    def decision_function(self, X, prepared: bool = False) -> np.ndarray:
        Z = np.asarray(X, dtype=np.float64) if prepared else self.prepare(X)
        if len(self.dual_coefficients) == 0:
            return np.full(len(Z), self.bias)
        return kernel_matrix(self.kernel, Z, self.support_vectors) @ self.dual_coefficients + self.bias

    def to_json(self) -> dict:
        pre = self.preprocess
        return {
            "model_type": "svm",
            "kernel": self.kernel.kind,
            "hyperparameters": {
                "degree": self.kernel.degree,
                "gamma": self.kernel.gamma,
                "coef0": self.kernel.coef0,
                "C": self.c_penalty,
                "tolerance": self.tolerance,
            },
            "pca": pre.to_json() if isinstance(pre, PcaModel) else None,
            "scaler": pre.to_json() if isinstance(pre, Standardizer) else None,
            "support_vectors": self.support_vectors.tolist(),
            "dual_coefficients": self.dual_coefficients.tolist(),
            "support_indices": self.support_indices.tolist(),
            "bias": self.bias,
            "converged": self.converged,
            "passes": self.passes,
            "training_manifest": self.manifest,
        }

    @classmethod
    def from_json(cls, d: dict) -> "SvmModel":
        hp = d["hyperparameters"]
        pre = None
        if d.get("pca"):
            pre = PcaModel.from_json(d["pca"])
        elif d.get("scaler"):
            pre = Standardizer.from_json(d["scaler"])
        sv = np.array(d["support_vectors"], dtype=np.float64)
        return cls(
            support_vectors=sv.reshape(len(sv), -1) if sv.size else sv.reshape(0, 0),
            dual_coefficients=np.array(d["dual_coefficients"], dtype=np.float64),
            bias=float(d["bias"]),
            kernel=KernelSpec(d["kernel"], hp["degree"], hp["gamma"], hp["coef0"]),
            c_penalty=float(hp["C"]),
            tolerance=float(hp["tolerance"]),
            preprocess=pre,
            support_indices=np.array(d.get("support_indices", []), dtype=np.int64),
            converged=bool(d.get("converged", True)),
            passes=int(d.get("passes", 0)),
            manifest=d.get("training_manifest", {}),
        )


def _signed(y) -> np.ndarray:
    y = np.asarray(y).reshape(-1)
    vals = set(np.unique(y).tolist())
    if vals <= {0, 1}:
        return np.where(y == 1, 1.0, -1.0)
    if vals <= {-1, 1}:
        return y.astype(np.float64)
    raise RestrictMLError(f"labels must be +/-1 or 0/1, got {sorted(vals)}")


def svm_train(
    X,
    y,
    spec: KernelSpec = KernelSpec(),
    c_penalty: float = 1.0,
    tolerance: float = 1e-3,
    max_passes: int = 10_000,
    seed: int = 0,
    pcs: int | None = None,
    backend: str | None = None,
) -> SvmModel:
    """Fit a soft-margin SVM.

    ``pcs=None`` trains on ``X`` as given; ``pcs=0`` standardizes only;
    ``pcs=k`` standardizes and projects onto the top ``k`` components first.
    Labels may be +/-1 or 0/1.
    """
    X = np.asarray(X, dtype=np.float64)
    ys = _signed(y)
    if len(X) != len(ys):
        raise DimensionMismatchError(f"{len(X)} rows but {len(ys)} labels")
    if not ((ys > 0).any() and (ys < 0).any()):
        raise RestrictMLError("SVM training needs examples of both classes")
    if c_penalty <= 0 or tolerance <= 0:
        raise ValueError("C and tolerance must be > 0")
    pre: PcaModel | Standardizer | None = None
    if pcs == 0:
        pre = Standardizer.fit(X)
    elif pcs:
        pre = pca_fit(X, pcs)
    Z = pre.transform(X) if pre is not None else X
    spec = spec.resolved(Z.shape[1])
    kern = _kernels.get(backend)
    alpha, b, passes, converged = kern.smo(
        Z, ys, spec.code, float(spec.gamma), float(spec.coef0), int(spec.degree),
        float(c_penalty), float(tolerance), 1e-8, int(max_passes), int(seed) & ((1 << 64) - 1),
    )
    alpha = np.asarray(alpha)
    sv = np.flatnonzero(alpha > 0)
    return SvmModel(
        support_vectors=Z[sv].copy(),
        dual_coefficients=alpha[sv] * ys[sv],
        bias=float(b),
        kernel=spec,
        c_penalty=float(c_penalty),
        tolerance=float(tolerance),
        preprocess=pre,
        support_indices=sv,
        converged=bool(converged),
        passes=int(passes),
    )


def svm_predict(model: SvmModel, X) -> tuple[np.ndarray, np.ndarray]:
    """``(labels in {-1, +1}, decision values)``; an exact zero maps to +1."""
    f = model.decision_function(X)
    return np.where(f >= 0, 1, -1), f


def kkt_audit(model: SvmModel, X, y, tol: float | None = None) -> list[int]:
    """Training rows violating the soft-margin KKT conditions.

    ``alpha = 0`` needs ``y f >= 1 - tol``; ``0 < alpha < C`` needs
    ``|y f - 1| <= tol``; ``alpha = C`` needs ``y f <= 1 + tol``.
    """
    tol = model.tolerance if tol is None else tol
    ys = _signed(y)
    Z = model.prepare(X)
    margin = ys * model.decision_function(Z, prepared=True)
    alpha = np.zeros(len(ys))
    alpha[model.support_indices] = np.abs(model.dual_coefficients)
    C = model.c_penalty
    bad = np.zeros(len(ys), dtype=bool)
    at_zero = alpha == 0
    at_c = alpha >= C
    free = ~at_zero & ~at_c
    bad |= at_zero & (margin < 1 - tol)
    bad |= free & (np.abs(margin - 1) > tol)
    bad |= at_c & (margin > 1 + tol)
    return np.flatnonzero(bad).tolist()


def save_model(model: SvmModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_json(), fh, indent=1)
        fh.write("\n")


def load_model(path) -> SvmModel:
    with open(path, encoding="utf-8") as fh:
        return SvmModel.from_json(json.load(fh))
