"""Diagnostics over encodings and mined fragment lists."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.stats import norm, rankdata


@dataclass(frozen=True)
class CorrespondenceReport:
    pair_count: int
    involved_molecules: int
    zero_vector_count: int


def _row_keys(fingerprints) -> list:
    if sparse.issparse(fingerprints):
        csr = sparse.csr_matrix(fingerprints)
        csr.eliminate_zeros()
        csr.sort_indices()
        return [csr.indices[csr.indptr[i]:csr.indptr[i + 1]].tobytes() for i in range(csr.shape[0])]
    dense = np.asarray(fingerprints)
    return [np.flatnonzero(row).astype(np.int32).tobytes() for row in dense]


def correspondences(fingerprints, labels) -> CorrespondenceReport:
    """Cross-class pairs of molecules sharing an identical fingerprint.

    The all-zero fingerprint forms a group like any other.
    """
    keys = _row_keys(fingerprints)
    labels = list(labels)
    if len(keys) != len(labels):
        raise ValueError("fingerprints and labels differ in length")
    act: Counter = Counter()
    inact: Counter = Counter()
    for key, y in zip(keys, labels):
        (act if y == 1 else inact)[key] += 1
    pairs = sum(act[k] * inact[k] for k in act)
    involved = sum(act[k] + inact[k] for k in act if inact[k])
    zeros = sum(1 for k in keys if not k)
    return CorrespondenceReport(pairs, involved, zeros)


def intercorrelation(presence) -> np.ndarray:
    """phi coefficients between the columns of a binary presence matrix.

    Columns with constant presence correlate 0 with everything, themselves included.
    """
    X = presence.toarray() if sparse.issparse(presence) else np.asarray(presence)
    X = X.astype(np.float64)
    n, m = X.shape
    if m == 0:
        return np.zeros((0, 0))
    if n == 0:
        return np.zeros((m, m))
    mean = X.mean(axis=0)
    Z = X - mean
    sd = np.sqrt((Z * Z).sum(axis=0))
    live = sd > 0
    Z[:, live] /= sd[live]
    Z[:, ~live] = 0.0
    R = Z.T @ Z
    R = np.clip((R + R.T) / 2, -1.0, 1.0)
    np.fill_diagonal(R, np.where(live, 1.0, 0.0))
    return R


def intercorrelation_tsv(R: np.ndarray, codes: Sequence[str] | None = None) -> str:
    """Long-form ``i<TAB>j<TAB>phi`` table (1-based ranks), upper triangle with diagonal."""
    lines = ["i\tj\tcode_i\tcode_j\tphi" if codes is not None else "i\tj\tphi"]
    m = R.shape[0]
    for i in range(m):
        for j in range(i, m):
            phi = repr(float(R[i, j]))
            if codes is not None:
                lines.append(f"{i + 1}\t{j + 1}\t{codes[i]}\t{codes[j]}\t{phi}")
            else:
                lines.append(f"{i + 1}\t{j + 1}\t{phi}")
    return "\n".join(lines) + "\n"


def features_per_molecule(fingerprints) -> float:
    if sparse.issparse(fingerprints):
        n = fingerprints.shape[0]
        return float(sparse.csr_matrix(fingerprints).count_nonzero() / n) if n else 0.0
    X = np.asarray(fingerprints)
    if X.size == 0:
        return 0.0
    return float(np.count_nonzero(X, axis=1).mean())


@dataclass(frozen=True)
class ScoreStats:
    min: float
    max: float
    scores: tuple[float, ...]


def score_stats(scored) -> ScoreStats:
    if not scored:
        raise ValueError("no scored patterns")
    scores = tuple(sorted((sp.chi2 for sp in scored), reverse=True))
    return ScoreStats(scores[-1], scores[0], scores)


def crop_by_score(scored, floor: float) -> list:
    if floor < 0:
        raise ValueError("floor must be >= 0")
    return [sp for sp in scored if sp.chi2 >= floor]


def cyclic_fraction(scored) -> float:
    """Share of fragments containing a ring (nan for an empty list)."""
    if not scored:
        return math.nan
    return sum(1 for sp in scored if sp.pattern.is_cyclic) / len(scored)


# --------------------------------------------------------------------------
# Wilcoxon matched-pairs signed-rank test
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    significant: bool
    direction: str  # "greater", "less" or "none": sign of median(a - b)
    n: int
    exact: bool


def _exact_null(doubled_ranks: Sequence[int]) -> np.ndarray:
    """Counts of every attainable (doubled) positive-rank sum over the 2^n sign patterns."""
    counts = np.zeros(sum(doubled_ranks) + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:-r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(a, b, alpha: float = 0.99, exact_limit: int = 30) -> WilcoxonResult:
    """Two-sided test; exact null distribution up to ``exact_limit`` pairs, tie-corrected normal above."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("samples must be paired")
    diff = a - b
    d = diff[diff != 0]
    n = len(d)
    if n < 5:
        raise ValueError(f"only {n} nonzero differences; need at least 5")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    stat = min(w_plus, w_minus)
    if n <= exact_limit:
        doubled = [int(round(2 * r)) for r in ranks]
        counts = _exact_null(doubled)
        total = counts.sum()
        s = int(round(2 * w_plus))
        lower = counts[: s + 1].sum() / total
        upper = counts[s:].sum() / total
        p = min(1.0, 2.0 * min(lower, upper))
        exact = True
    else:
        mean = n * (n + 1) / 4.0
        _, tie_sizes = np.unique(np.abs(d), return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - (tie_sizes ** 3 - tie_sizes).sum() / 48.0
        z = (w_plus - mean) / math.sqrt(var)
        p = float(min(1.0, 2.0 * norm.sf(abs(z))))
        exact = False
    med = float(np.median(diff))
    direction = "greater" if med > 0 else "less" if med < 0 else "none"
    return WilcoxonResult(stat, float(p), bool(p <= 1.0 - alpha), direction, n, exact)
