"""DNA sequences, IUPAC degeneracy codes, ordinal encoding and FASTA I/O."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import FastaFormatError, RestrictMLError

BASES = "ATCG"
ALPHABET = frozenset("ATCGN")

# A, T, C, G get 1/4 .. 1; the ambiguous base (and SEQ padding) gets 0.
ORDINAL = {"A": 0.25, "T": 0.5, "C": 0.75, "G": 1.0, "N": 0.0}
_DECODE = {v: k for k, v in ORDINAL.items()}

IUPAC = {
    "A": frozenset("A"),
    "C": frozenset("C"),
    "G": frozenset("G"),
    "T": frozenset("T"),
    "R": frozenset("AG"),
    "Y": frozenset("CT"),
    "S": frozenset("CG"),
    "W": frozenset("AT"),
    "K": frozenset("GT"),
    "M": frozenset("AC"),
    "B": frozenset("CGT"),
    "D": frozenset("AGT"),
    "H": frozenset("ACT"),
    "V": frozenset("ACG"),
    "N": frozenset("ACGT"),
}

_COMPLEMENT = str.maketrans("ATCGNRYSWKMBDHV", "TAGCNYRSWMKVHDB")


class DnaSequence(str):
    """Uppercase string over ``A, T, C, G, N``.

    Lowercase input is canonicalised; any other character raises
    :class:`RestrictMLError`. Being a ``str`` subclass, slicing and searching
    work as usual (slices come back as plain ``str``).
    """

    __slots__ = ()

    def __new__(cls, bases: str = "") -> "DnaSequence":
        if isinstance(bases, DnaSequence):
            return bases
        up = bases.upper()
        bad = set(up) - ALPHABET
        if bad:
            pos = min(up.index(ch) for ch in bad)
            raise RestrictMLError(f"illegal base {bases[pos]!r} at offset {pos}")
        return super().__new__(cls, up)

    @property
    def length(self) -> int:
        return len(self)

    def __repr__(self) -> str:
        return f"DnaSequence({str.__repr__(self)})"


@dataclass(frozen=True)
class IupacSymbol:
    code: str

    def __post_init__(self) -> None:
        if self.code not in IUPAC:
            raise RestrictMLError(f"not an IUPAC nucleotide code: {self.code!r}")

    @property
    def expansion(self) -> frozenset[str]:
        return IUPAC[self.code]


@dataclass(frozen=True)
class FastaRecord:
    id: str
    description: str
    sequence: DnaSequence

    def __post_init__(self) -> None:
        if not self.id:
            raise RestrictMLError("FASTA record id must be nonempty")
        if not self.sequence:
            raise RestrictMLError(f"FASTA record {self.id!r} has an empty sequence")


def encode_ordinal(seq: str) -> list[float]:
    return [ORDINAL[b] for b in DnaSequence(seq)]


def decode_ordinal(values: Iterable[float]) -> str:
    """Inverse of :func:`encode_ordinal`; 0 decodes to ``N``."""
    try:
        return "".join(_DECODE[float(v)] for v in values)
    except KeyError as exc:
        raise RestrictMLError(f"not an ordinal code: {exc.args[0]!r}") from None


def iupac_match(pattern: IupacSymbol | str, base: str) -> bool:
    code = pattern.code if isinstance(pattern, IupacSymbol) else pattern
    return base in IUPAC[code]


def reverse_complement(seq: str) -> DnaSequence:
    return DnaSequence(str(seq).translate(_COMPLEMENT)[::-1])


def iupac_reverse_complement(site: str) -> str:
    """Reverse complement of a degenerate pattern (R<->Y, K<->M, B<->V, D<->H)."""
    return site.upper().translate(_COMPLEMENT)[::-1]


def _lines(source: str | Iterable[str]) -> Iterator[str]:
    if isinstance(source, str):
        yield from source.splitlines()
    else:
        for line in source:
            yield line.rstrip("\r\n")


def parse_fasta(source: str | Iterable[str]) -> list[FastaRecord]:
    """Parse FASTA text (a string or an iterable of lines).

    Sequence lines are concatenated and uppercased. Blank lines are ignored.
    Every error carries the 1-based line number it was detected on.
    """
    records: list[FastaRecord] = []
    header: tuple[str, str, int] | None = None
    chunks: list[str] = []

    def flush() -> None:
        if header is None:
            return
        rid, desc, lineno = header
        if not chunks:
            raise FastaFormatError(f"record {rid!r} has an empty sequence", lineno)
        records.append(FastaRecord(rid, desc, DnaSequence("".join(chunks))))

    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(">"):
            flush()
            parts = line[1:].strip().split(None, 1)
            if not parts:
                raise FastaFormatError("header has no identifier", lineno)
            header = (parts[0], parts[1] if len(parts) > 1 else "", lineno)
            chunks = []
            continue
        if header is None:
            raise FastaFormatError("sequence data before the first '>' header", lineno)
        up = line.upper()
        for col, ch in enumerate(up):
            if ch not in ALPHABET:
                raise FastaFormatError(
                    f"illegal character {line[col]!r} at column {col + 1}", lineno
                )
        chunks.append(up)
    flush()
    return records


def read_fasta(path) -> list[FastaRecord]:
    with open(path, encoding="utf-8") as fh:
        return parse_fasta(fh)


def format_fasta(records: Iterable[FastaRecord], width: int = 60) -> str:
    out = []
    for rec in records:
        head = f">{rec.id} {rec.description}".rstrip()
        out.append(head)
        seq = str(rec.sequence)
        out.extend(seq[i : i + width] for i in range(0, len(seq), width))
    return "\n".join(out) + "\n" if out else ""


def write_fasta(records: Iterable[FastaRecord], path, width: int = 60) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_fasta(records, width))
