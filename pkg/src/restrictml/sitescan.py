"""One-pass scanning for the sites of every enzyme in a catalog."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import _kernels
from .enzymedb import EnzymeDb
from .seqcore import IUPAC

# base -> row of the mask table; N (and anything else) maps to an all-zero row
_CODE = {"A": 0, "C": 1, "G": 2, "T": 3, "N": 4}
_LUT = np.full(256, 4, dtype=np.uint8)
for _b, _c in _CODE.items():
    _LUT[ord(_b)] = _c


class SiteHit(NamedTuple):
    enzyme_index: int
    position: int


def encode_codes(seq: str) -> np.ndarray:
    return _LUT[np.frombuffer(str(seq).encode("ascii"), dtype=np.uint8)]


class Scanner:
    """Multi-pattern automaton over all recognition sites of ``db``.

    Each site is a chain of states whose transitions are base classes, so a
    degenerate letter such as ``N`` is one transition rather than four
    branches. The scan itself runs in the compiled kernel when available.
    """

    def __init__(self, db: EnzymeDb, backend: str | None = None):
        self.db = db
        self.enzyme_count = len(db)
        self.backend_name = backend or _kernels.BACKEND
        self._kern = _kernels.get(self.backend_name)

        lengths = [len(e.site) for e in db]
        self.site_lengths = np.array(lengths, dtype=np.int64)
        nbits = sum(lengths)
        nwords = (nbits + 63) // 64
        masks = np.zeros((5, nwords), dtype=np.uint64)
        starts = np.zeros(nwords, dtype=np.uint64)
        ends = np.zeros(nwords, dtype=np.uint64)
        bit_pattern = np.full(nwords * 64, -1, dtype=np.int64)
        bit_length = np.zeros(nwords * 64, dtype=np.int64)

        def setbit(arr, bit):
            arr[bit // 64] |= np.uint64(1) << np.uint64(bit % 64)

        offset = 0
        for idx, enz in enumerate(db):
            setbit(starts, offset)
            last = offset + len(enz.site) - 1
            setbit(ends, last)
            bit_pattern[last] = idx
            bit_length[last] = len(enz.site)
            for k, sym in enumerate(enz.site):
                for base in IUPAC[sym]:
                    row = masks[_CODE[base]]
                    setbit(row, offset + k)
            offset += len(enz.site)
        self._automaton = _kernels.make_automaton(
            self._kern, masks, starts, ends, bit_pattern, bit_length
        )

    def raw_scan(self, seq: str) -> tuple[np.ndarray, np.ndarray]:
        """``(positions, enzyme_indices)`` sorted by position then enzyme."""
        pos, pat = self._kern.scan(self._automaton, encode_codes(seq))
        pos = np.asarray(pos, dtype=np.int64)
        pat = np.asarray(pat, dtype=np.int64)
        order = np.lexsort((pat, pos))
        return pos[order], pat[order]


def build_scanner(db: EnzymeDb, backend: str | None = None) -> Scanner:
    return Scanner(db, backend)


def scan_all(scanner: Scanner, seq: str) -> list[SiteHit]:
    pos, pat = scanner.raw_scan(seq)
    return [SiteHit(int(e), int(p)) for p, e in zip(pos, pat)]


def count_cutters(scanner: Scanner, seq: str) -> int:
    """Number of distinct enzymes with a site lying entirely inside ``seq``."""
    _, pat = scanner.raw_scan(seq)
    return int(np.unique(pat).size)


def cut_positions(scanner: Scanner, seq: str) -> dict[int, list[tuple[int, int]]]:
    """Top-strand cut coordinate -> ``[(enzyme_index, site_position), ...]``.

    Only sites fully inside ``seq`` contribute; coordinates lie in
    ``[0, len(seq)]``.
    """
    pos, pat = scanner.raw_scan(seq)
    cuts: dict[int, list[tuple[int, int]]] = {}
    enzymes = scanner.db.enzymes
    for p, e in zip(pos.tolist(), pat.tolist()):
        cuts.setdefault(p + enzymes[e].cut_top, []).append((e, p))
    return dict(sorted(cuts.items()))
