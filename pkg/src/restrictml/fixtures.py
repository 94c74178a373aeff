"""Seeded synthetic sequences used as the bundled desk-scale fixture."""

from __future__ import annotations

from importlib import resources

import numpy as np

from .seqcore import DnaSequence, FastaRecord, read_fasta

DESK_GENE_LENGTHS = (1500, 2500, 3500)
DESK_REFERENCE_LENGTH = 3000
DESK_GC = 0.65
DESK_SEED = 20


def random_dna(length: int, gc: float = 0.5, rng: np.random.Generator | None = None) -> DnaSequence:
    rng = rng if rng is not None else np.random.default_rng(0)
    p = [(1 - gc) / 2, (1 - gc) / 2, gc / 2, gc / 2]
    return DnaSequence("".join(rng.choice(list("ATCG"), size=length, p=p)))


def desk_fixture(seed: int = DESK_SEED) -> tuple[list[FastaRecord], FastaRecord]:
    """``(genes, reference)`` generated from ``seed``."""
    rng = np.random.default_rng(seed)
    genes = [
        FastaRecord(f"gene{i + 1}", f"synthetic GC={DESK_GC} length={n}", random_dna(n, DESK_GC, rng))
        for i, n in enumerate(DESK_GENE_LENGTHS)
    ]
    ref = FastaRecord("reference", f"synthetic GC={DESK_GC}", random_dna(DESK_REFERENCE_LENGTH, DESK_GC, rng))
    return genes, ref


def bundled_path(name: str):
    return resources.files("restrictml") / "data" / name


def bundled_genes() -> list[FastaRecord]:
    return read_fasta(bundled_path("desk_genes.fa"))


def bundled_reference() -> FastaRecord:
    return read_fasta(bundled_path("desk_reference.fa"))[0]
