"""Standardized principal component analysis via cyclic Jacobi rotations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InsufficientDataError


def jacobi_eigh(A: np.ndarray, tol: float = 1e-15, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors as columns,
    unsorted.
    """
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.abs(A).max(), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt((np.triu(A, 1) ** 2).sum())
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * cp - s * cq, s * cp + c * cq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :], A[q, :] = c * rp - s * rq, s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p], V[:, q] = c * vp - s * vq, s * vp + c * vq
    return np.diag(A).copy(), V


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] < 2:
            raise InsufficientDataError("standardizing needs at least 2 rows")
        mean = X.mean(axis=0)
        scale = X.std(axis=0, ddof=1)
        # a float mean of identical values can be off by an ulp, leaving a
        # spurious ~1e-15 std; pin constant columns exactly
        const = X.min(axis=0) == X.max(axis=0)
        mean[const] = X[0, const]
        scale[const | (scale == 0)] = 1.0
        return cls(mean, scale)

    @property
    def input_dim(self) -> int:
        return len(self.mean)

    @property
    def output_dim(self) -> int:
        return len(self.mean)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.mean):
            raise DimensionMismatchError(
                f"expected {len(self.mean)} columns, got {X.shape[-1] if X.ndim else 0}"
            )
        return (X - self.mean) / self.scale

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "Standardizer":
        return cls(np.array(d["mean"]), np.array(d["scale"]))


@dataclass
class PcaModel:
    mean: np.ndarray
    scale: np.ndarray
    components: np.ndarray  # k x d, orthonormal rows
    explained_variance: np.ndarray
    total_variance: float

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def input_dim(self) -> int:
        return self.components.shape[1]

    @property
    def output_dim(self) -> int:
        return self.k

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        return self.explained_variance / self.total_variance if self.total_variance else np.zeros(self.k)

    def standardize(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise DimensionMismatchError(
                f"expected {self.input_dim} columns, got {X.shape[-1] if X.ndim else 0}"
            )
        return (X - self.mean) / self.scale

    def transform(self, X: np.ndarray) -> np.ndarray:
        return self.standardize(X) @ self.components.T

    def reconstruct(self, Z: np.ndarray) -> np.ndarray:
        """Map PC scores back into standardized feature space."""
        return np.asarray(Z) @ self.components

    def to_json(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "total_variance": self.total_variance,
        }

    @classmethod
    def from_json(cls, d: dict) -> "PcaModel":
        return cls(
            np.array(d["mean"]), np.array(d["scale"]), np.array(d["components"]),
            np.array(d["explained_variance"]), float(d["total_variance"]),
        )


def pca_fit(X: np.ndarray, k: int) -> PcaModel:
    """Top-``k`` eigenvectors of the covariance of the standardized columns.

    Zero-variance columns get unit scale. Each component is signed so its
    largest-magnitude entry is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InsufficientDataError("PCA needs a matrix with at least 2 rows")
    d = X.shape[1]
    if not 1 <= k <= d:
        raise ValueError(f"k={k} outside [1, {d}]")
    std = Standardizer.fit(X)
    Z = std.transform(X)
    cov = Z.T @ Z / (X.shape[0] - 1)
    vals, vecs = jacobi_eigh(cov)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    comps = vecs[:, :k].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    ev = np.maximum(vals[:k], 0.0)
    return PcaModel(std.mean, std.scale, comps, ev, float(np.maximum(vals, 0.0).sum()))


def pca_transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    return model.transform(X)


def write_scatter(model: PcaModel, X: np.ndarray, labels, path) -> None:
    """PC scores per row plus each component's explained-variance share."""
    Z = model.transform(X)
    labels = np.asarray(labels).reshape(-1)
    if len(labels) != len(Z):
        raise DimensionMismatchError(f"{len(Z)} rows but {len(labels)} labels")
    shares = model.explained_variance_ratio
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# explained_variance_ratio," + ",".join("%.17g" % s for s in shares) + "\n")
        fh.write(",".join(f"pc{i + 1}" for i in range(model.k)) + ",label\n")
        for row, lab in zip(Z, labels):
            fh.write(",".join("%.17g" % v for v in row) + ",%d\n" % lab)
