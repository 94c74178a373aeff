"""Restriction-enzyme catalog and single-enzyme digest simulation."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import Iterable, Literal

from .errors import EnzymeTableError
from .seqcore import IUPAC, DnaSequence, IupacSymbol, iupac_reverse_complement

TABLE_HEADER = ["name", "site", "cut_top", "cut_bottom"]


@dataclass(frozen=True)
class Enzyme:
    """A recognition site with top/bottom strand cut offsets.

    Both offsets count from the first base of the site in top-strand
    coordinates, so ``G^AATTC`` is ``cut_top=1, cut_bottom=5``.
    """

    name: str
    site: str
    cut_top: int
    cut_bottom: int

    def __post_init__(self) -> None:
        if not self.site:
            raise ValueError(f"{self.name}: empty recognition site")
        bad = set(self.site) - set(IUPAC)
        if bad:
            raise ValueError(f"{self.name}: illegal IUPAC letter {sorted(bad)[0]!r}")
        for label, off in (("cut_top", self.cut_top), ("cut_bottom", self.cut_bottom)):
            if not 0 <= off <= len(self.site):
                raise ValueError(
                    f"{self.name}: {label}={off} outside [0, {len(self.site)}]"
                )

    @property
    def symbols(self) -> list[IupacSymbol]:
        return [IupacSymbol(c) for c in self.site]

    @property
    def overhang_length(self) -> int:
        return abs(self.cut_top - self.cut_bottom)

    @property
    def is_palindromic(self) -> bool:
        return iupac_reverse_complement(self.site) == self.site

    @cached_property
    def regex(self) -> re.Pattern:
        # lookahead so overlapping occurrences are all reported
        body = "".join(
            c if len(IUPAC[c]) == 1 else "[" + "".join(sorted(IUPAC[c])) + "]"
            for c in self.site
        )
        return re.compile(f"(?=({body}))")


@dataclass(frozen=True)
class EnzymeDb:
    enzymes: tuple[Enzyme, ...] = ()
    by_name: dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        index: dict[str, int] = {}
        for i, enz in enumerate(self.enzymes):
            if enz.name in index:
                raise ValueError(f"duplicate enzyme name {enz.name!r}")
            index[enz.name] = i
        object.__setattr__(self, "by_name", index)

    @classmethod
    def from_enzymes(cls, enzymes: Iterable[Enzyme]) -> "EnzymeDb":
        return cls(tuple(enzymes))

    def __len__(self) -> int:
        return len(self.enzymes)

    def __iter__(self):
        return iter(self.enzymes)

    def __getitem__(self, key: int | str) -> Enzyme:
        if isinstance(key, str):
            return self.enzymes[self.by_name[key]]
        return self.enzymes[key]

    def subset(self, names: Iterable[str]) -> "EnzymeDb":
        return EnzymeDb(tuple(self[n] for n in names))


def parse_enzyme_table(lines: Iterable[str]) -> EnzymeDb:
    """Parse the ``name, site, cut_top, cut_bottom`` TSV (header required).

    Row numbers in errors are 1-based file lines, so the first data row is 2.
    """
    reader = csv.reader(lines, delimiter="\t")
    try:
        header = next(reader)
    except StopIteration:
        raise EnzymeTableError("missing header", 1) from None
    if [h.strip() for h in header] != TABLE_HEADER:
        raise EnzymeTableError(f"expected header {TABLE_HEADER}, got {header}", 1)

    enzymes: list[Enzyme] = []
    seen: dict[str, int] = {}
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise EnzymeTableError(f"expected 4 columns, got {len(row)}", row_no)
        name, site, top, bottom = (c.strip() for c in row)
        site = site.upper()
        if not name:
            raise EnzymeTableError("empty enzyme name", row_no)
        if name in seen:
            raise EnzymeTableError(
                f"duplicate name {name!r} (first on row {seen[name]})", row_no
            )
        if not site:
            raise EnzymeTableError("empty recognition site", row_no)
        for ch in site:
            if ch not in IUPAC:
                raise EnzymeTableError(f"illegal IUPAC letter {ch!r} in {site}", row_no)
        try:
            cut_top, cut_bottom = int(top), int(bottom)
        except ValueError:
            raise EnzymeTableError(f"non-integer cut offset in {row}", row_no) from None
        for label, off in (("cut_top", cut_top), ("cut_bottom", cut_bottom)):
            if not 0 <= off <= len(site):
                raise EnzymeTableError(
                    f"cut offset out of range: {label}={off} not in [0, {len(site)}]",
                    row_no,
                )
        seen[name] = row_no
        enzymes.append(Enzyme(name, site, cut_top, cut_bottom))
    return EnzymeDb(tuple(enzymes))


def load_enzyme_table(path) -> EnzymeDb:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_enzyme_table(fh)


def bundled_catalog() -> EnzymeDb:
    """The shipped ~200-enzyme stand-in catalog (cuts inside the site only)."""
    text = resources.files("restrictml").joinpath("data/neb_catalog.tsv").read_text()
    return parse_enzyme_table(text.splitlines())


def bundled_catalog_path():
    return resources.files("restrictml").joinpath("data/neb_catalog.tsv")


def find_sites(enzyme: Enzyme, seq: str) -> list[int]:
    """Start positions of every (possibly overlapping) top-strand site match.

    An ``N`` in the sequence never matches a site position.
    """
    return [m.start() for m in enzyme.regex.finditer(str(seq))]


@dataclass(frozen=True)
class End:
    """Fragment end: ``blunt`` or an ``overhang`` on the top or bottom strand."""

    kind: Literal["blunt", "overhang"] = "blunt"
    strand: Literal["top", "bottom"] | None = None
    bases: str = ""

    def to_json(self) -> dict:
        if self.kind == "blunt":
            return {"kind": "blunt"}
        return {"kind": "overhang", "strand": self.strand, "bases": self.bases}


BLUNT = End()


@dataclass(frozen=True)
class Fragment:
    sequence: DnaSequence
    left_end: End
    right_end: End
    source_span: tuple[int, int]


def cut_ends(enzyme: Enzyme, seq: str, site_pos: int) -> tuple[End, End]:
    """Ends created by cutting at the site starting at ``site_pos``.

    Returns ``(end of the fragment to the left, end of the fragment to the right)``.
    With ``cut_top < cut_bottom`` the right fragment keeps a 5' top-strand
    overhang; the reverse stagger leaves a 3' overhang on the left fragment's
    top strand.
    """
    t = site_pos + enzyme.cut_top
    b = site_pos + enzyme.cut_bottom
    if t == b:
        return BLUNT, BLUNT
    lo, hi = min(t, b), max(t, b)
    bases = str(seq[lo:hi])
    if t < b:
        return End("overhang", "bottom", bases), End("overhang", "top", bases)
    return End("overhang", "top", bases), End("overhang", "bottom", bases)


def digest(enzyme: Enzyme, seq: str) -> list[Fragment]:
    """Cut ``seq`` at every selected site of ``enzyme``.

    Overlapping occurrences are resolved leftmost-first; cuts that fall on
    the sequence ends are no-ops. Joining the fragment sequences in order
    always reproduces ``seq``.
    """
    seq = DnaSequence(seq)
    m = len(enzyme.site)
    chosen: list[int] = []
    reach = 0
    for p in find_sites(enzyme, seq):
        if p >= reach:
            chosen.append(p)
            reach = p + m

    cuts: list[tuple[int, End, End]] = []
    for p in chosen:
        c = p + enzyme.cut_top
        if 0 < c < len(seq):
            left, right = cut_ends(enzyme, seq, p)
            cuts.append((c, left, right))

    fragments = []
    start, start_end = 0, BLUNT
    for c, left, right in cuts:
        fragments.append(Fragment(DnaSequence(seq[start:c]), start_end, left, (start, c)))
        start, start_end = c, right
    fragments.append(Fragment(DnaSequence(seq[start:]), start_end, BLUNT, (start, len(seq))))
    return fragments
