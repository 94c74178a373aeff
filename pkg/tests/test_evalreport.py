import csv
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from restrictml.errors import DimensionMismatchError, UndefinedRateError
from restrictml.evalreport import (
    CELLS,
    NUCLEOTIDES,
    ConfusionMatrix,
    complement_pair,
    confusion,
    position_histograms,
    rates,
    write_report,
)

labels = st.lists(st.integers(0, 1), min_size=1, max_size=80)


def test_perfect_and_inverted():
    truth = [1, 0] * 5
    assert confusion(truth, truth) == ConfusionMatrix(tp=5, fp=0, tn=5, fn=0)
    cm = confusion([1 - t for t in truth], truth)
    assert cm.tp == cm.tn == 0


def test_signed_labels():
    assert confusion([1, -1, -1], [1, 1, 0]) == ConfusionMatrix(1, 0, 1, 1)


@given(st.data())
def test_tally_oracle_and_permutation(data):
    truth = data.draw(labels)
    pred = data.draw(st.lists(st.integers(0, 1), min_size=len(truth), max_size=len(truth)))
    cm = confusion(pred, truth)
    tally = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
    for p, t in zip(pred, truth):
        tally[("t" if p == t else "f") + ("p" if p else "n")] += 1
    assert (cm.tp, cm.fp, cm.tn, cm.fn) == (tally["tp"], tally["fp"], tally["tn"], tally["fn"])
    assert cm.total == len(truth)
    perm = data.draw(st.permutations(range(len(truth))))
    assert confusion([pred[i] for i in perm], [truth[i] for i in perm]) == cm


def test_confusion_errors():
    with pytest.raises(DimensionMismatchError):
        confusion([1, 0], [1])
    with pytest.raises(ValueError):
        confusion([], [])
    with pytest.raises(ValueError):
        ConfusionMatrix(-1, 0, 0, 0)


def test_rate_examples():
    r = rates(ConfusionMatrix(tp=90, fp=143, tn=857, fn=10))
    assert r.sensitivity == Fraction(9, 10)
    assert r.specificity == Fraction(857, 1000)
    assert r.fpr == Fraction(143, 1000)
    assert r.formatted() == {"sensitivity": "0.900", "specificity": "0.857", "fnr": "0.100", "fpr": "0.143"}


def test_complements_exact():
    assert complement_pair("0.949") == (Fraction(949, 1000), Fraction(51, 1000))
    assert complement_pair(0.774)[1] == Fraction(226, 1000)
    assert complement_pair(Fraction(1, 3))[1] == Fraction(2, 3)


@given(st.integers(0, 500), st.integers(0, 500), st.integers(0, 500), st.integers(0, 500))
def test_rate_identities(tp, fp, tn, fn):
    cm = ConfusionMatrix(tp, fp, tn, fn)
    if tp + fn == 0 or tn + fp == 0:
        with pytest.raises(UndefinedRateError):
            rates(cm)
        return
    r = rates(cm)
    assert r.sensitivity + r.fnr == 1 and r.specificity + r.fpr == 1
    assert 0 <= r.sensitivity <= 1 and 0 <= r.specificity <= 1


def test_undefined_rate_names_class():
    with pytest.raises(UndefinedRateError) as exc:
        rates(ConfusionMatrix(0, 3, 4, 0))
    assert exc.value.klass == "applicable"
    with pytest.raises(UndefinedRateError) as exc:
        rates(ConfusionMatrix(3, 0, 0, 4))
    assert exc.value.klass == "inapplicable"


def test_histograms_all_correct():
    subs = ["CAT", "CGGA", "CT"]
    truth = [1, 0, 1]
    hists = position_histograms(subs, truth, truth, width=5)
    assert len(hists) == 5 and [h.position for h in hists] == [1, 2, 3, 4, 5]
    for h in hists:
        assert h.total == 3
        assert all(h.counts[b][c] == 0 for b in NUCLEOTIDES for c in CELLS if c.startswith("incorrect"))
    assert hists[0].nucleotide_total("C") == 3
    assert hists[4].nucleotide_total("N") == 3


@given(st.lists(st.text(alphabet="ACGT", min_size=1, max_size=10), min_size=1, max_size=30), st.data())
def test_histogram_partition(subs, data):
    truth = data.draw(st.lists(st.integers(0, 1), min_size=len(subs), max_size=len(subs)))
    pred = data.draw(st.lists(st.integers(0, 1), min_size=len(subs), max_size=len(subs)))
    hists = position_histograms(subs, truth, pred)
    cm = confusion(pred, truth)
    for h in hists:
        assert h.total == len(subs)
        cells = {c: sum(h.counts[b][c] for b in NUCLEOTIDES) for c in CELLS}
        assert cells == {"correct_true": cm.tp, "incorrect_true": cm.fn, "correct_false": cm.tn, "incorrect_false": cm.fp}


def test_histograms_from_entries(desk_entries):
    entries = desk_entries[:200]
    pred = np.ones(200, dtype=int)
    hists = position_histograms(entries, None, pred, width=24)
    assert all(h.total == 200 for h in hists)
    with pytest.raises(DimensionMismatchError):
        position_histograms(entries, None, pred[:10])


def test_write_report(tmp_path):
    cm = ConfusionMatrix(90, 143, 857, 10)
    paths = write_report(cm, tmp_path / "r", position_histograms(["CA"], [1], [1]))
    assert [p.name for p in paths] == ["confusion.csv", "rates.csv", "position_hist.csv"]
    assert (tmp_path / "r" / "confusion.csv").read_text() == "tp,fp,tn,fn\n90,143,857,10\n"
    rows = list(csv.DictReader(open(tmp_path / "r" / "rates.csv")))
    assert rows[1] == {"rate": "specificity", "value": "0.857", "exact": "857/1000"}
    hist = list(csv.DictReader(open(tmp_path / "r" / "position_hist.csv")))
    assert len(hist) == 2 * len(NUCLEOTIDES) * len(CELLS)
