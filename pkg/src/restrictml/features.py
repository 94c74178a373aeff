"""The 16-variable subsequence representation.

SEQ (ordinal vector), LEN, base proportions of the subsequence and of the
reference, whole-sequence and segment-weighted complexity ratings of both,
C (genes containing the subsequence) and EZY (enzymes cutting inside it).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import InsufficientLengthError, UndefinedInputError, WidthOverflowError
from .seqcore import BASES, ORDINAL, DnaSequence
from .synthsim import Label, SubsequenceEntry

DEFAULT_WIDTH = 24

FEATURE_GROUPS = (
    "SEQ", "LEN",
    "pA", "pT", "pC", "pG",
    "ref_pA", "ref_pT", "ref_pC", "ref_pG",
    "r1_sub", "r2_sub", "r1_ref", "r2_ref",
    "C", "EZY",
)

SCALAR_COLUMNS = (
    "len", "pa", "pt", "pc", "pg", "rpa", "rpt", "rpc", "rpg",
    "r1s", "r2s", "r1r", "r2r", "c", "ezy",
)


def feature_columns(width: int = DEFAULT_WIDTH) -> list[str]:
    return [f"n{i}" for i in range(1, width + 1)] + list(SCALAR_COLUMNS)


@dataclass(frozen=True)
class ComplexityConfig:
    """Segment-length range for the segment-weighted rating (defaults 4..8)."""

    b: int = 4
    p: int = 8

    def __post_init__(self) -> None:
        if not 1 <= self.b <= self.p:
            raise ValueError(f"need 1 <= b <= p, got b={self.b}, p={self.p}")


def proportion(x: str, seq: str) -> float:
    if not seq:
        raise UndefinedInputError("proportion of an empty sequence is undefined")
    return str(seq).count(x) / len(seq)


def complexity_r1(seq: str, exact: bool = False) -> float | Fraction:
    """``1 - sum over A,T,C,G of (1/4 - p(base))**2``; N counts only in the length."""
    if not seq:
        raise UndefinedInputError("complexity of an empty sequence is undefined")
    seq = str(seq)
    if exact:
        q = Fraction(1, 4)
        return 1 - sum((q - Fraction(seq.count(b), len(seq))) ** 2 for b in BASES)
    return 1.0 - sum((0.25 - seq.count(b) / len(seq)) ** 2 for b in BASES)


def _prefix_counts(seq: str) -> np.ndarray:
    arr = np.frombuffer(seq.encode("ascii"), dtype=np.uint8)
    onehot = np.stack([arr == ord(b) for b in BASES], axis=1).astype(np.int64)
    return np.vstack([np.zeros((1, 4), dtype=np.int64), np.cumsum(onehot, axis=0)])


def window_r1(seq: str, size: int, _pre: np.ndarray | None = None) -> np.ndarray:
    """Whole-sequence rating of every length-``size`` window, in order."""
    pre = _prefix_counts(str(seq)) if _pre is None else _pre
    props = (pre[size:] - pre[:-size]) / size
    return 1.0 - ((0.25 - props) ** 2).sum(axis=1)


def complexity_r2(seq: str, cfg: ComplexityConfig = ComplexityConfig(), literal: bool = False) -> float:
    """Segment-weighted complexity rating.

    For each segment size ``i`` in ``[b, p]`` the ratings of all ``n - i + 1``
    windows are averaged, weighted by ``i / n``, and the total is divided by
    the sum of the weights, which keeps the result in ``(0, 1]``.

    ``literal=True`` sums the window ratings instead of averaging them. That
    variant grows with ``n`` and is kept only for comparison.
    """
    n = len(seq)
    if n < cfg.p:
        raise InsufficientLengthError(f"sequence length {n} < p={cfg.p}")
    pre = _prefix_counts(str(seq))
    total = 0.0
    for i in range(cfg.b, cfg.p + 1):
        vals = window_r1(seq, i, pre)
        total += (vals.sum() if literal else vals.mean()) * (i / n)
    return float(total / sum(k / n for k in range(cfg.b, cfg.p + 1)))


@lru_cache(maxsize=64)
def _reference_summary(ref: str, cfg: ComplexityConfig, literal: bool):
    props = tuple(proportion(b, ref) for b in BASES)
    return props, complexity_r1(ref), complexity_r2(ref, cfg, literal)


@dataclass(frozen=True)
class FeatureVector:
    seq_encoded: tuple[float, ...]
    len: int
    sub_props: tuple[float, float, float, float]
    ref_props: tuple[float, float, float, float]
    sub_r1: float
    sub_r2: float
    ref_r1: float
    ref_r2: float
    c: int
    ezy: int
    label: Label | None = None

    @property
    def width(self) -> int:
        return len(self.seq_encoded)

    def to_row(self) -> list[float]:
        return [
            *self.seq_encoded, float(self.len), *self.sub_props, *self.ref_props,
            self.sub_r1, self.sub_r2, self.ref_r1, self.ref_r2,
            float(self.c), float(self.ezy),
        ]


def featurize_entry(
    entry: SubsequenceEntry,
    cfg: ComplexityConfig = ComplexityConfig(),
    width: int = DEFAULT_WIDTH,
    literal: bool = False,
) -> FeatureVector:
    sub = str(DnaSequence(entry.subsequence))
    ref = str(DnaSequence(entry.reference))
    if len(sub) > width:
        raise WidthOverflowError(f"subsequence length {len(sub)} exceeds SEQ width {width}")
    if len(ref) < cfg.p:
        raise InsufficientLengthError(f"reference length {len(ref)} < p={cfg.p}")
    encoded = tuple(ORDINAL[b] for b in sub) + (0.0,) * (width - len(sub))
    ref_props, ref_r1, ref_r2 = _reference_summary(ref, cfg, literal)
    return FeatureVector(
        seq_encoded=encoded,
        len=len(sub),
        sub_props=tuple(proportion(b, sub) for b in BASES),
        ref_props=ref_props,
        sub_r1=complexity_r1(sub),
        sub_r2=complexity_r2(sub, cfg, literal),
        ref_r1=ref_r1,
        ref_r2=ref_r2,
        c=entry.containing_query_count,
        ezy=entry.cutter_count,
        label=entry.label,
    )
