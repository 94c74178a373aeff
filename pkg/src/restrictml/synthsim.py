"""Restriction-synthesis simulation and subsequence labeling.

A query is assembled left to right from reference fragments whose two ends
are both enzyme cuts. A subsequence is *applicable* when it contains such a
fragment, i.e. when at least two distinct cut coordinates fall inside it.
"""

from __future__ import annotations

import bisect
import csv
import json
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

from .enzymedb import EnzymeDb, Fragment, cut_ends
from .seqcore import DnaSequence, FastaRecord
from .sitescan import Scanner, cut_positions

DEFAULT_WINDOWS = (12, 16, 20, 24)
DEFAULT_MIN_FRAGMENT = 4
WINDOW_SCHEME_NOTE = (
    "stride-1 sliding windows of fixed lengths; a stand-in extraction scheme"
)


class Label(IntEnum):
    INAPPLICABLE = 0
    APPLICABLE = 1

    def __str__(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class CandidateFragment:
    span: tuple[int, int]
    left_enzyme: int
    right_enzyme: int
    fragment: Fragment


@dataclass
class SynthesisTrace:
    query: DnaSequence
    steps: list[tuple[tuple[int, int], CandidateFragment]] = field(default_factory=list)
    uncovered: list[tuple[int, int]] = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return not self.uncovered

    def to_json(self, query_id: str, db: EnzymeDb) -> dict:
        return {
            "query_id": query_id,
            "steps": [
                {
                    "q_start": q[0],
                    "q_end": q[1],
                    "r_start": c.span[0],
                    "r_end": c.span[1],
                    "left_enzyme": db[c.left_enzyme].name,
                    "right_enzyme": db[c.right_enzyme].name,
                }
                for q, c in self.steps
            ],
            "uncovered": [list(u) for u in self.uncovered],
            "completed": self.completed,
        }


@dataclass(frozen=True)
class SubsequenceEntry:
    subsequence: DnaSequence
    reference: DnaSequence
    label: Label
    containing_query_count: int
    cutter_count: int
    gene_id: str = ""
    position: int = -1


def _occurrences(text: str, pattern: str) -> list[int]:
    out, start = [], text.find(pattern)
    while start != -1:
        out.append(start)
        start = text.find(pattern, start + 1)
    return out


def _flank(db: EnzymeDb, reference: str, cuts, start: int, end: int) -> CandidateFragment:
    # lowest enzyme index wins when several enzymes cut at the same coordinate
    le, lp = min(cuts[start])
    re_, rp = min(cuts[end])
    frag = Fragment(
        DnaSequence(reference[start:end]),
        cut_ends(db[le], reference, lp)[1],
        cut_ends(db[re_], reference, rp)[0],
        (start, end),
    )
    return CandidateFragment((start, end), le, re_, frag)


def find_flanked_fragments(
    segment: str, reference: str, scanner: Scanner, db: EnzymeDb | None = None
) -> list[CandidateFragment]:
    """Occurrences of ``segment`` in ``reference`` bounded by two cuts.

    The same enzyme may supply both flanks.
    """
    if not segment:
        raise ValueError("segment must be nonempty")
    db = db or scanner.db
    reference = str(reference)
    cuts = cut_positions(scanner, reference)
    out = []
    for s in _occurrences(reference, str(segment)):
        e = s + len(segment)
        if s in cuts and e in cuts:
            out.append(_flank(db, reference, cuts, s, e))
    return out


def _lcp(a: str, ai: int, b: str, bi: int) -> int:
    n = min(len(a) - ai, len(b) - bi)
    k = 0
    while k < n and a[ai + k] == b[bi + k]:
        k += 1
    return k


def synthesize(
    query: str,
    reference: str,
    scanner: Scanner,
    db: EnzymeDb | None = None,
    min_fragment: int = DEFAULT_MIN_FRAGMENT,
) -> SynthesisTrace:
    """Greedy left-to-right assembly of ``query`` from flanked reference fragments.

    At each query position the longest coverable prefix (at least
    ``min_fragment`` bases) is taken, using its leftmost reference
    occurrence. Positions nothing covers are skipped one base at a time and
    reported as uncovered spans.
    """
    if min_fragment < 1:
        raise ValueError("min_fragment must be >= 1")
    db = db or scanner.db
    query, reference = DnaSequence(query), str(reference)
    cuts = cut_positions(scanner, reference)
    cut_list = sorted(cuts)
    by_prefix: dict[str, list[int]] = {}
    for c in cut_list:
        by_prefix.setdefault(reference[c : c + min_fragment], []).append(c)
    trace = SynthesisTrace(query)
    q = 0
    while q < len(query):
        best_len, best_start = 0, -1
        for c1 in by_prefix.get(str(query[q : q + min_fragment]), ()):
            m = _lcp(reference, c1, query, q)
            if m < min_fragment:
                continue
            k = bisect.bisect_right(cut_list, c1 + m) - 1
            c2 = cut_list[k]
            if c2 - c1 >= min_fragment and c2 - c1 > best_len:
                best_len, best_start = c2 - c1, c1
        if best_len == 0:
            if trace.uncovered and trace.uncovered[-1][1] == q:
                trace.uncovered[-1] = (trace.uncovered[-1][0], q + 1)
            else:
                trace.uncovered.append((q, q + 1))
            q += 1
            continue
        cand = _flank(db, reference, cuts, best_start, best_start + best_len)
        trace.steps.append(((q, q + best_len), cand))
        q += best_len
    return trace


def label_subsequence(subseq: str, scanner: Scanner, db: EnzymeDb | None = None) -> Label:
    if not subseq:
        raise ValueError("subsequence must be nonempty")
    cuts = cut_positions(scanner, subseq)
    return Label.APPLICABLE if len(cuts) >= 2 else Label.INAPPLICABLE


def generate_labeled_entries(
    genes: Sequence[FastaRecord],
    reference: str,
    scanner: Scanner,
    db: EnzymeDb | None = None,
    window_lengths: Iterable[int] = DEFAULT_WINDOWS,
) -> list[SubsequenceEntry]:
    """Slide every window length over every gene and label each window.

    Output is ordered by gene (input order), then position, then window
    length; repeated subsequences keep their first occurrence.
    """
    db = db or scanner.db
    lengths = sorted(set(int(w) for w in window_lengths))
    if not lengths or lengths[0] < 1:
        raise ValueError("window lengths must be >= 1")
    reference = DnaSequence(reference)
    cut_top = np.array([e.cut_top for e in db], dtype=np.int64)
    site_len = np.array([len(e.site) for e in db], dtype=np.int64)
    gene_strs = [str(g.sequence) for g in genes]

    containing: dict[str, int] = {}
    entries: list[SubsequenceEntry] = []
    seen: set[str] = set()
    for gene, text in zip(genes, gene_strs):
        pos, pat = scanner.raw_scan(text)
        site_end = pos + site_len[pat]
        cut = pos + cut_top[pat]
        for w in range(len(text)):
            lo = int(np.searchsorted(pos, w))
            for L in lengths:
                if w + L > len(text):
                    break
                window = text[w : w + L]
                if window in seen:
                    continue
                seen.add(window)
                hi = int(np.searchsorted(pos, w + L))
                inside = site_end[lo:hi] <= w + L
                n_cuts = np.unique(cut[lo:hi][inside]).size
                n_enz = np.unique(pat[lo:hi][inside]).size
                if window not in containing:
                    containing[window] = sum(window in g for g in gene_strs)
                entries.append(
                    SubsequenceEntry(
                        DnaSequence(window),
                        reference,
                        Label.APPLICABLE if n_cuts >= 2 else Label.INAPPLICABLE,
                        containing[window],
                        int(n_enz),
                        gene.id,
                        w,
                    )
                )
    return entries


ENTRY_COLUMNS = ["subsequence", "label", "c", "ezy", "gene_id", "position"]


def write_entries(entries: Iterable[SubsequenceEntry], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ENTRY_COLUMNS)
        for e in entries:
            w.writerow(
                [e.subsequence, int(e.label), e.containing_query_count,
                 e.cutter_count, e.gene_id, e.position]
            )


def read_entries(path, reference: str) -> list[SubsequenceEntry]:
    from .errors import SchemaError

    reference = DnaSequence(reference)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ENTRY_COLUMNS:
            raise SchemaError(f"entries file header must be {ENTRY_COLUMNS}, got {header}")
        out = []
        for row in reader:
            seq, label, c, ezy, gid, pos = row
            out.append(
                SubsequenceEntry(
                    DnaSequence(seq), reference, Label(int(label)), int(c),
                    int(ezy), gid, int(pos),
                )
            )
    return out


def write_trace(trace: SynthesisTrace, query_id: str, db: EnzymeDb, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(trace.to_json(query_id, db), fh, indent=2)
        fh.write("\n")
