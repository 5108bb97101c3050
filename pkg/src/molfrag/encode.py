"""Molecule encodings: generalized fingerprints and hashed bit-vectors.

A generalized fingerprint dedicates one bit to every vocabulary fragment.  A
hashed fingerprint folds the same presence information into ``k`` bits: each
present fragment sets ``b`` positions, position ``j`` being::

    int.from_bytes(blake2b(f"{seed}:{j}:{code}".encode(), digest_size=8).digest(), "little") % k

BLAKE2b is part of the standard library and byte-order independent, so the
positions are identical on every platform.
"""
from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .miner import ScoredPattern, molecule_walk_keys
from .molgraph import LabeledDataset, MolecularGraph
from .patterns import Pattern, WalkPattern, occurrences, occurs


@dataclass(frozen=True)
class FragmentVocabulary:
    """Fragments in mined rank order; one fingerprint column each."""

    patterns: tuple[Pattern, ...]
    provenance: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "patterns", tuple(self.patterns))
        codes = [p.code for p in self.patterns]
        if len(set(codes)) != len(codes):
            raise ValueError("vocabulary codes must be unique")

    @classmethod
    def from_scored(cls, scored: Iterable[ScoredPattern], **provenance) -> "FragmentVocabulary":
        return cls(tuple(sp.pattern for sp in scored), dict(provenance))

    @property
    def codes(self) -> list[str]:
        return [p.code for p in self.patterns]

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def head(self, m: int) -> "FragmentVocabulary":
        return FragmentVocabulary(self.patterns[:m], self.provenance)


def _walk_cap(vocab: FragmentVocabulary) -> int:
    return max((p.n_edges for p in vocab if isinstance(p, WalkPattern)), default=0)


def _walk_keys_covering(molecule: MolecularGraph, cap: int) -> frozenset:
    # walk sets for a longer cap contain every shorter walk, so any cached one will do
    cached = molecule.__dict__.get("_walk_keys", {})
    longer = [L for L in cached if L >= cap]
    return cached[min(longer)] if longer else molecule_walk_keys(molecule, cap)


def encode_gfp(molecule: MolecularGraph, vocab: FragmentVocabulary) -> np.ndarray:
    cap = _walk_cap(vocab)
    keys = _walk_keys_covering(molecule, cap) if cap else frozenset()
    bits = np.zeros(len(vocab), dtype=np.uint8)
    for i, p in enumerate(vocab):
        if isinstance(p, WalkPattern):
            bits[i] = p.walk_key in keys
        else:
            bits[i] = occurs(p, molecule)
    return bits


def hash_positions(code: str, k: int, b: int = 1, seed: int = 0) -> list[int]:
    if k < 1 or b < 1:
        raise ValueError("k and b must be >= 1")
    out = []
    for j in range(b):
        digest = hashlib.blake2b(f"{seed}:{j}:{code}".encode("ascii"), digest_size=8).digest()
        out.append(int.from_bytes(digest, "little") % k)
    return out


def fold_hashed(gfp: np.ndarray, vocab: FragmentVocabulary, k: int, b: int = 1, seed: int = 0) -> np.ndarray:
    """Fold a gfp matrix (or single row) into ``k``-bit hashed fingerprints."""
    gfp = np.asarray(gfp)
    single = gfp.ndim == 1
    rows = np.atleast_2d(gfp)
    proj = np.zeros((len(vocab), k), dtype=np.uint8)
    for i, code in enumerate(vocab.codes):
        proj[i, hash_positions(code, k, b, seed)] = 1
    out = ((rows.astype(np.int64) @ proj) > 0).astype(np.uint8)
    return out[0] if single else out


def encode_hashed(molecule: MolecularGraph, vocab: FragmentVocabulary, k: int, b: int = 1,
                  seed: int = 0) -> np.ndarray:
    return fold_hashed(encode_gfp(molecule, vocab), vocab, k, b, seed)


def encode_dataset(dataset: LabeledDataset, vocab: FragmentVocabulary, *, as_sparse: bool = False):
    """Binary matrix with row ``i`` the gfp of molecule ``i``."""
    n, m = len(dataset), len(vocab)
    rows: list[int] = []
    cols: list[int] = []
    cap = _walk_cap(vocab)
    if cap:
        keys = [_walk_keys_covering(mol, cap) for mol in dataset.molecules]
    for j, p in enumerate(vocab):
        if isinstance(p, WalkPattern):
            key = p.walk_key
            hits = [i for i in range(n) if key in keys[i]]
        else:
            hits = occurrences(p, dataset) if n else []
        rows.extend(hits)
        cols.extend([j] * len(hits))
    mat = sparse.csr_matrix((np.ones(len(rows), dtype=np.uint8), (rows, cols)), shape=(n, m))
    return mat if as_sparse else mat.toarray()


def encode_from_occurrences(n_molecules: int, occ_lists: Sequence[Sequence[int]], *, as_sparse: bool = False):
    """gfp matrix of the mining dataset itself, read off the miner's occurrence lists."""
    rows = [i for occ in occ_lists for i in occ]
    cols = [j for j, occ in enumerate(occ_lists) for _ in occ]
    mat = sparse.csr_matrix((np.ones(len(rows), dtype=np.uint8), (rows, cols)),
                            shape=(n_molecules, len(occ_lists)))
    return mat if as_sparse else mat.toarray()


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def write_fingerprints_csv(matrix, codes: Sequence[str], mol_ids: Sequence[str]) -> str:
    """Dense CSV: a ``molecule`` column followed by one 0/1 column per code."""
    dense = matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["molecule", *codes])
    for mid, row in zip(mol_ids, dense):
        w.writerow([mid, *(int(x) for x in row)])
    return buf.getvalue()


def read_fingerprints_csv(text: str) -> tuple[list[str], list[str], np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not rows[0] or rows[0][0] != "molecule":
        raise ValueError("missing fingerprint CSV header")
    codes = rows[0][1:]
    ids = [r[0] for r in rows[1:] if r]
    mat = np.array([[int(x) for x in r[1:]] for r in rows[1:] if r], dtype=np.uint8).reshape(len(ids), len(codes))
    return codes, ids, mat


def write_fingerprints_tsv(matrix, mol_ids: Sequence[str]) -> str:
    """Sparse TSV: one ``molecule_id<TAB>fragment_rank`` line per set bit (ranks from 1)."""
    csr = sparse.csr_matrix(matrix)
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(["molecule_id", "fragment_rank"])
    for i, mid in enumerate(mol_ids):
        for j in sorted(csr.indices[csr.indptr[i]:csr.indptr[i + 1]]):
            w.writerow([mid, int(j) + 1])
    return buf.getvalue()
