"""Labeled feature matrices: stratified splits, correlation screen, CSV I/O."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, InsufficientDataError, SchemaError
from .features import (
    DEFAULT_WIDTH,
    SCALAR_COLUMNS,
    ComplexityConfig,
    FeatureVector,
    feature_columns,
    featurize_entry,
)
from .seqcore import decode_ordinal
from .synthsim import Label, SubsequenceEntry

DEFAULT_THRESHOLD = 0.90


@dataclass
class LabeledDataset:
    """Feature rows ``X`` (SEQ columns first, then the 15 scalars) and 0/1 labels."""

    X: np.ndarray
    y: np.ndarray
    width: int = DEFAULT_WIDTH

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64).reshape(-1, self.width + len(SCALAR_COLUMNS))
        self.y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        if len(self.X) != len(self.y):
            raise SchemaError(f"{len(self.X)} feature rows but {len(self.y)} labels")
        if not np.isin(self.y, (0, 1)).all():
            raise SchemaError("labels must be 0 or 1")

    def __len__(self) -> int:
        return len(self.y)

    @property
    def columns(self) -> list[str]:
        return feature_columns(self.width)

    @property
    def class_counts(self) -> tuple[int, int]:
        """``(true_count, false_count)``."""
        t = int(self.y.sum())
        return t, len(self.y) - t

    @property
    def seq_block(self) -> np.ndarray:
        return self.X[:, : self.width]

    def subsequences(self) -> list[str]:
        lens = self.X[:, self.width].astype(int)
        return [decode_ordinal(row[:n]) for row, n in zip(self.seq_block, lens)]

    def take(self, idx: Sequence[int]) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(self.X[idx], self.y[idx], self.width)

    def vectors(self) -> list[FeatureVector]:
        w = self.width
        out = []
        for row, lab in zip(self.X, self.y):
            s = row[w:]
            out.append(
                FeatureVector(
                    tuple(row[:w]), int(s[0]), tuple(s[1:5]), tuple(s[5:9]),
                    s[9], s[10], s[11], s[12], int(s[13]), int(s[14]), Label(int(lab)),
                )
            )
        return out

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector]) -> "LabeledDataset":
        if not vectors:
            return cls(np.empty((0, DEFAULT_WIDTH + len(SCALAR_COLUMNS))), np.empty(0), DEFAULT_WIDTH)
        width = vectors[0].width
        if any(v.label is None for v in vectors):
            raise SchemaError("every vector needs a label")
        return cls(
            np.array([v.to_row() for v in vectors]),
            np.array([int(v.label) for v in vectors]),
            width,
        )

    def equals(self, other: "LabeledDataset") -> bool:
        return (
            self.width == other.width
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )


def featurize_entries(
    entries: Iterable[SubsequenceEntry],
    cfg: ComplexityConfig = ComplexityConfig(),
    width: int = DEFAULT_WIDTH,
) -> LabeledDataset:
    vectors = [featurize_entry(e, cfg, width) for e in entries]
    if not vectors:
        return LabeledDataset(np.empty((0, width + len(SCALAR_COLUMNS))), np.empty(0), width)
    return LabeledDataset.from_vectors(vectors)


@dataclass(frozen=True)
class SplitSpec:
    train_size: int = 50_000
    train_true_ratio: float | Fraction | str = "0.60"
    test_size: int = 26_622
    test_true_ratio: float | Fraction | str = "0.50"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.train_size < 0 or self.test_size < 0:
            raise ValueError("split sizes must be >= 0")
        for r in (self.train_true_ratio, self.test_true_ratio):
            if not 0 <= _as_fraction(r) <= 1:
                raise ValueError(f"ratio {r} outside [0, 1]")

    def quotas(self) -> tuple[tuple[int, int], tuple[int, int]]:
        """``((train_true, train_false), (test_true, test_false))``."""
        tt = _half_up(self.train_size * _as_fraction(self.train_true_ratio))
        st = _half_up(self.test_size * _as_fraction(self.test_true_ratio))
        return (tt, self.train_size - tt), (st, self.test_size - st)


def _as_fraction(r) -> Fraction:
    # via str so 0.6 means 3/5 rather than its binary approximation
    return r if isinstance(r, Fraction) else Fraction(str(r))


def _half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def unique_rows(data: LabeledDataset) -> np.ndarray:
    """Indices of the first row for each distinct subsequence."""
    seen: set[str] = set()
    keep = []
    for i, key in enumerate(data.subsequences()):
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return np.asarray(keep, dtype=np.int64)


def stratified_sample(pool: LabeledDataset, spec: SplitSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """Disjoint train/test draws at exact per-class quotas.

    Duplicate subsequences in the pool are collapsed first, so neither split
    repeats an entry and no entry lands in both. Rows keep pool order inside
    each split.
    """
    (tr_t, tr_f), (te_t, te_f) = spec.quotas()
    keep = unique_rows(pool) if len(pool) else np.empty(0, dtype=np.int64)
    labels = pool.y[keep]
    true_idx, false_idx = keep[labels == 1], keep[labels == 0]
    for name, have, need in (
        ("true (applicable)", len(true_idx), tr_t + te_t),
        ("false (inapplicable)", len(false_idx), tr_f + te_f),
    ):
        if have < need:
            raise CapacityError(
                f"class {name} has {have} unique entries; the split needs {need}", name
            )
    rng = np.random.default_rng(spec.seed)
    true_idx = rng.permutation(true_idx)
    false_idx = rng.permutation(false_idx)
    train = np.sort(np.concatenate([true_idx[:tr_t], false_idx[:tr_f]]))
    test = np.sort(
        np.concatenate([true_idx[tr_t : tr_t + te_t], false_idx[tr_f : tr_f + te_f]])
    )
    return pool.take(train), pool.take(test)


def correlation_matrix(data: LabeledDataset | np.ndarray) -> np.ndarray:
    """Pairwise Pearson correlations of all feature columns.

    Constant columns correlate 0 with everything else; the diagonal is 1.
    """
    X = data.X if isinstance(data, LabeledDataset) else np.asarray(data, dtype=np.float64)
    if X.shape[0] < 2:
        raise InsufficientDataError("correlation needs at least 2 rows")
    const = X.min(axis=0) == X.max(axis=0)
    centered = np.where(const, 0.0, X - X.mean(axis=0))
    norms = np.sqrt((centered**2).sum(axis=0))
    norms[const] = 1.0
    Z = centered / norms
    R = np.clip(Z.T @ Z, -1.0, 1.0)
    R[const, :] = 0.0
    R[:, const] = 0.0
    np.fill_diagonal(R, 1.0)
    return (R + R.T) / 2


def redundant_pairs(matrix: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> list[tuple[int, int]]:
    """Unordered index pairs whose |correlation| strictly exceeds ``threshold``."""
    M = np.asarray(matrix)
    i, j = np.nonzero(np.triu(np.abs(M) > threshold, k=1))
    return sorted(zip(i.tolist(), j.tolist()))


# --------------------------------------------------------------------------
# CSV persistence


def manifest_path(path) -> Path:
    return Path(str(path) + ".manifest.json")


def persist_dataset(data: LabeledDataset, path, extra_manifest: dict | None = None) -> None:
    cols = data.columns + ["label"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for row, lab in zip(data.X, data.y):
            fh.write(",".join("%.17g" % v for v in row) + ",%d\n" % lab)
    t, f = data.class_counts
    manifest = {
        "rows": len(data),
        "width": data.width,
        "class_counts": {"true": t, "false": f},
        "columns": cols,
    }
    if extra_manifest:
        manifest.update(extra_manifest)
    with open(manifest_path(path), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset(path, check_manifest: bool = True) -> LabeledDataset:
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if not header:
        raise SchemaError(f"{path}: empty file")
    if "label" not in header or header[-1] != "label":
        raise SchemaError(f"{path}: missing trailing 'label' column")
    width = sum(1 for c in header if c.startswith("n") and c[1:].isdigit())
    expected = feature_columns(width) + ["label"]
    if header != expected:
        raise SchemaError(
            f"{path}: header does not match the dataset schema "
            f"({len(header)} columns, expected {len(expected)})"
        )
    if os.path.getsize(path) > len(",".join(header)) + 1:
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, dtype=np.float64)
    else:
        raw = np.empty((0, len(header)))
    if raw.shape[1] != len(header):
        raise SchemaError(f"{path}: rows have {raw.shape[1]} fields, header has {len(header)}")
    data = LabeledDataset(raw[:, :-1], raw[:, -1].astype(np.int64), width)
    mpath = manifest_path(path)
    if check_manifest and mpath.exists():
        with open(mpath, encoding="utf-8") as fh:
            man = json.load(fh)
        counts = man.get("class_counts")
        if counts and (counts["true"], counts["false"]) != data.class_counts:
            raise SchemaError(
                f"{path}: class counts {data.class_counts} disagree with manifest {counts}"
            )
    return data
