"""Confusion counts, exact error rates and per-position nucleotide histograms."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError, UndefinedRateError

NUCLEOTIDES = ("A", "T", "C", "G", "N")
CELLS = ("correct_true", "incorrect_true", "correct_false", "incorrect_false")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> Fraction:
        return Fraction(self.tp + self.tn, self.total)


def _labels(x) -> np.ndarray:
    a = np.asarray(x).reshape(-1)
    # accept +/-1 as well as 0/1
    return (a > 0).astype(np.int64)


def confusion(predictions, truth) -> ConfusionMatrix:
    """Counts with label 1 (applicable) as the positive class."""
    p, t = _labels(predictions), _labels(truth)
    if len(p) != len(t):
        raise DimensionMismatchError(f"{len(p)} predictions for {len(t)} truth labels")
    if len(p) == 0:
        raise ValueError("confusion of zero rows")
    return ConfusionMatrix(
        tp=int(np.sum((p == 1) & (t == 1))),
        fp=int(np.sum((p == 1) & (t == 0))),
        tn=int(np.sum((p == 0) & (t == 0))),
        fn=int(np.sum((p == 0) & (t == 1))),
    )


@dataclass(frozen=True)
class Rates:
    sensitivity: Fraction
    specificity: Fraction
    fnr: Fraction
    fpr: Fraction

    def as_dict(self) -> dict[str, Fraction]:
        return {
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "fnr": self.fnr,
            "fpr": self.fpr,
        }

    def formatted(self, digits: int = 3) -> dict[str, str]:
        return {k: f"{float(v):.{digits}f}" for k, v in self.as_dict().items()}


def rates(cm: ConfusionMatrix) -> Rates:
    if cm.tp + cm.fn == 0:
        raise UndefinedRateError("sensitivity undefined: no positive (applicable) rows", "applicable")
    if cm.tn + cm.fp == 0:
        raise UndefinedRateError("specificity undefined: no negative (inapplicable) rows", "inapplicable")
    sens = Fraction(cm.tp, cm.tp + cm.fn)
    spec = Fraction(cm.tn, cm.tn + cm.fp)
    return Rates(sens, spec, 1 - sens, 1 - spec)


def complement_pair(rate) -> tuple[Fraction, Fraction]:
    """``(rate, 1 - rate)`` in exact arithmetic; decimal strings are read exactly."""
    r = rate if isinstance(rate, Fraction) else Fraction(str(rate))
    return r, 1 - r


@dataclass
class PositionHistogram:
    position: int
    counts: dict[str, dict[str, int]]

    def nucleotide_total(self, base: str) -> int:
        return sum(self.counts[base].values())

    @property
    def total(self) -> int:
        return sum(self.nucleotide_total(b) for b in NUCLEOTIDES)


def _cell(truth: int, pred: int) -> str:
    if truth == 1:
        return "correct_true" if pred == 1 else "incorrect_true"
    return "correct_false" if pred == 0 else "incorrect_false"


def position_histograms(
    subsequences: Sequence[str], truth, predictions, width: int | None = None
) -> list[PositionHistogram]:
    """Per SEQ position, counts by nucleotide and (true class x correctness).

    Positions past a subsequence's end count as ``N``, matching the zero
    padding of the encoded SEQ block. ``subsequences`` may also be a list of
    entries carrying ``subsequence`` and ``label`` attributes, in which case
    ``truth`` is ignored.
    """
    seqs, labels = [], []
    for i, s in enumerate(subsequences):
        if hasattr(s, "subsequence"):
            seqs.append(str(s.subsequence))
            labels.append(int(s.label))
        else:
            seqs.append(str(s))
    if not labels:
        labels = _labels(truth).tolist()
    preds = _labels(predictions).tolist()
    if not (len(seqs) == len(labels) == len(preds)):
        raise DimensionMismatchError(
            f"{len(seqs)} entries, {len(labels)} labels, {len(preds)} predictions"
        )
    w = width if width is not None else max((len(s) for s in seqs), default=0)
    hists = [
        PositionHistogram(i + 1, {b: {c: 0 for c in CELLS} for b in NUCLEOTIDES}) for i in range(w)
    ]
    for s, t, p in zip(seqs, labels, preds):
        cell = _cell(t, p)
        for i in range(w):
            base = s[i] if i < len(s) else "N"
            hists[i].counts[base][cell] += 1
    return hists


def write_confusion(cm: ConfusionMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tp", "fp", "tn", "fn"])
        w.writerow([cm.tp, cm.fp, cm.tn, cm.fn])


def write_rates(r: Rates, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rate", "value", "exact"])
        for k, v in r.as_dict().items():
            w.writerow([k, f"{float(v):.3f}", str(v)])


def write_histograms(hists: Sequence[PositionHistogram], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["position", "nucleotide", "cell", "count"])
        for h in hists:
            for b in NUCLEOTIDES:
                for c in CELLS:
                    w.writerow([h.position, b, c, h.counts[b][c]])


def write_report(cm: ConfusionMatrix, out_dir, hists: Sequence[PositionHistogram] | None = None) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "confusion.csv", out / "rates.csv"]
    write_confusion(cm, paths[0])
    write_rates(rates(cm), paths[1])
    if hists is not None:
        paths.append(out / "position_hist.csv")
        write_histograms(hists, paths[2])
    return paths
