"""Class-correlated fragment mining with chi-square branch-and-bound.

Scores are the Pearson chi-square statistic of the 2x2 table (fragment
presence x class).  Because chi-square is convex in ``(p, n)`` and support is
anti-monotone along refinement, the larger of the two pure-corner scores
``chi2(p, 0)`` and ``chi2(0, n)`` bounds every refinement and is used to prune.
"""
from __future__ import annotations

import csv
import heapq
import io
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from . import _kernels as K
from .molgraph import LabeledDataset
from .patterns import (
    Pattern,
    PatternLanguage,
    WalkPattern,
    candidate_children,
    initial_patterns,
    pattern_from_code,
)


class MiningError(ValueError):
    pass


@dataclass(frozen=True)
class ContingencyTable:
    p: int
    n: int
    P: int
    N: int

    def __post_init__(self):
        if not (0 <= self.p <= self.P and 0 <= self.n <= self.N and self.P >= 1 and self.N >= 1):
            raise ValueError(f"invalid contingency table {self}")


def _chi2(p: int, n: int, P: int, N: int) -> float:
    a, b, c, d = p, n, P - p, N - n
    denom = (a + b) * (c + d) * P * N
    if denom == 0:
        return 0.0
    return (P + N) * (a * d - b * c) ** 2 / denom


def chi2(table: ContingencyTable) -> float:
    """Pearson chi-square of the table; 0 when a marginal is empty."""
    return _chi2(table.p, table.n, table.P, table.N)


def chi2_upper_bound(table: ContingencyTable) -> float:
    """Bound on the score of any pattern whose support is a subset of this one."""
    return max(_chi2(table.p, 0, table.P, table.N), _chi2(0, table.n, table.P, table.N))


_QUANTILE_LEVELS = (0.95, 0.99, 0.999)


def chi2_quantile(confidence: float) -> float:
    """Critical value of chi-square with one degree of freedom."""
    from scipy.stats import chi2 as chi2_dist

    for level in _QUANTILE_LEVELS:
        if abs(float(confidence) - level) < 1e-12:
            return float(chi2_dist.ppf(level, 1))
    raise ValueError(f"unsupported confidence level {confidence!r}; use one of {_QUANTILE_LEVELS}")


@dataclass(frozen=True)
class ScoredPattern:
    pattern: Pattern
    table: ContingencyTable
    chi2: float
    occurrences: tuple[int, ...] = field(default=(), compare=False, repr=False)

    @property
    def code(self) -> str:
        return self.pattern.code

    @property
    def support(self) -> int:
        return self.table.p + self.table.n


@dataclass(frozen=True)
class TopK:
    k: int

    def __post_init__(self):
        if int(self.k) < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class Threshold:
    t: float

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("threshold must be >= 0")


@dataclass(frozen=True)
class MiningTask:
    language: PatternLanguage
    mode: Union[TopK, Threshold]
    dataset: LabeledDataset

    def __post_init__(self):
        object.__setattr__(self, "language", PatternLanguage.parse(self.language))


def rank_key(sp: ScoredPattern):
    return (-sp.chi2, sp.code)


class _Worst:
    """Heap key making the worst pool entry (low score, then high code) the minimum."""

    __slots__ = ("score", "code")

    def __init__(self, score: float, code: str):
        self.score = score
        self.code = code

    def __lt__(self, other: "_Worst") -> bool:
        if self.score != other.score:
            return self.score < other.score
        return self.code > other.code


class _Context:
    def __init__(self, dataset: LabeledDataset):
        labels = dataset.labels
        self.labels = labels
        self.P = sum(labels)
        self.N = len(labels) - self.P
        if self.P == 0 or self.N == 0:
            raise MiningError("undefined correlation: the dataset must contain both classes")
        self.batch = dataset.batch

    def table(self, occ: Sequence[int]) -> ContingencyTable:
        p = 0
        for m in occ:
            p += self.labels[m]
        return ContingencyTable(p, len(occ) - p, self.P, self.N)

    def scored(self, pattern: Pattern, occ: Sequence[int]) -> ScoredPattern:
        t = self.table(occ)
        return ScoredPattern(pattern, t, chi2(t), tuple(occ))


def mine_topk(task: MiningTask) -> list[ScoredPattern]:
    """The ``k`` best patterns, ties at rank ``k`` broken by canonical code.

    Best-first search ordered by upper bound; a node whose bound falls below
    the current k-th score is never expanded.
    """
    if not isinstance(task.mode, TopK):
        raise TypeError("mine_topk needs a TopK mode")
    k = int(task.mode.k)
    ctx = _Context(task.dataset)
    pool: list[tuple[_Worst, ScoredPattern]] = []
    frontier: list = []
    tick = itertools.count()

    def threshold() -> float:
        return pool[0][0].score if len(pool) >= k else -1.0

    def keep(occ) -> bool:
        return chi2_upper_bound(ctx.table(occ)) >= threshold()

    def offer(sp: ScoredPattern):
        key = _Worst(sp.chi2, sp.code)
        if len(pool) < k:
            heapq.heappush(pool, (key, sp))
        elif pool[0][0] < key:
            heapq.heapreplace(pool, (key, sp))

    for pat, occ in initial_patterns(task.language, task.dataset):
        sp = ctx.scored(pat, occ)
        offer(sp)
        heapq.heappush(frontier, (-chi2_upper_bound(sp.table), pat.code, next(tick), pat, occ))

    while frontier:
        neg_ub, _, _, pat, occ = heapq.heappop(frontier)
        if -neg_ub < threshold():
            break
        for child, cocc in candidate_children(pat, ctx.batch, occ, keep):
            t = ctx.table(cocc)
            ub = chi2_upper_bound(t)
            if ub < threshold() or not pat.is_canonical_child(child):
                continue
            offer(ScoredPattern(child, t, chi2(t), tuple(cocc)))
            heapq.heappush(frontier, (-ub, child.code, next(tick), child, cocc))

    return sorted((sp for _, sp in pool), key=rank_key)


def mine_threshold(task: MiningTask) -> list[ScoredPattern]:
    """All patterns with chi2 >= t (depth-first, pruning bound < t)."""
    if not isinstance(task.mode, Threshold):
        raise TypeError("mine_threshold needs a Threshold mode")
    t = float(task.mode.t)
    ctx = _Context(task.dataset)
    out: list[ScoredPattern] = []
    stack = []

    def keep(occ) -> bool:
        return chi2_upper_bound(ctx.table(occ)) >= t

    for pat, occ in reversed(initial_patterns(task.language, task.dataset)):
        table = ctx.table(occ)
        if chi2_upper_bound(table) >= t:
            stack.append((pat, occ, table))
    while stack:
        pat, occ, table = stack.pop()
        score = chi2(table)
        if score >= t:
            out.append(ScoredPattern(pat, table, score, tuple(occ)))
        for child, cocc in reversed(candidate_children(pat, ctx.batch, occ, keep)):
            ct = ctx.table(cocc)
            if chi2_upper_bound(ct) < t or not pat.is_canonical_child(child):
                continue
            stack.append((child, cocc, ct))
    out.sort(key=rank_key)
    return out


def mine(task: MiningTask) -> list[ScoredPattern]:
    if isinstance(task.mode, TopK):
        return mine_topk(task)
    return mine_threshold(task)


# --------------------------------------------------------------------------
# length-restricted path baseline
# --------------------------------------------------------------------------

def molecule_walk_keys(molecule, max_length: int) -> frozenset:
    """Walk keys of one molecule, cached on the molecule object."""
    cache = molecule.__dict__.setdefault("_walk_keys", {})
    keys = cache.get(max_length)
    if keys is None:
        keys = frozenset(K.walk_keys(molecule.batch, 0, max_length))
        cache[max_length] = keys
    return keys


def enumerate_restricted_paths(dataset: LabeledDataset, max_length: int = 10,
                               min_freq: int = 1) -> list[ScoredPattern]:
    """Label strings of non-backtracking walks with 1..max_length bonds.

    Every walk fragment present in at least ``min_freq`` molecules is returned
    with its table and score; scores do not filter.
    """
    if max_length < 1 or min_freq < 1:
        raise ValueError("max_length and min_freq must be >= 1")
    labels = dataset.labels
    P = sum(labels)
    N = len(labels) - P
    if P == 0 or N == 0:
        raise MiningError("undefined correlation: the dataset must contain both classes")
    occ: dict[tuple, list[int]] = {}
    for m, mol in enumerate(dataset.molecules):
        for key in molecule_walk_keys(mol, max_length):
            lst = occ.get(key)
            if lst is None:
                occ[key] = [m]
            else:
                lst.append(m)
    out = []
    for key, ms in occ.items():
        if len(ms) < min_freq:
            continue
        p = sum(labels[m] for m in ms)
        table = ContingencyTable(p, len(ms) - p, P, N)
        out.append(ScoredPattern(WalkPattern.from_key(key), table, chi2(table), tuple(ms)))
    out.sort(key=rank_key)
    return out


# --------------------------------------------------------------------------
# TSV serialization
# --------------------------------------------------------------------------

TSV_HEADER = ("rank", "canonical_code", "chi2", "p", "n", "P", "N")


def write_fragments_tsv(scored: Iterable[ScoredPattern]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(TSV_HEADER)
    for rank, sp in enumerate(scored, start=1):
        t = sp.table
        w.writerow((rank, sp.code, repr(sp.chi2), t.p, t.n, t.P, t.N))
    return buf.getvalue()


def read_fragments_tsv(text: str) -> list[ScoredPattern]:
    rows = list(csv.reader(io.StringIO(text), delimiter="\t"))
    if not rows or tuple(rows[0]) != TSV_HEADER:
        raise ValueError("missing fragment TSV header")
    out = []
    for row in rows[1:]:
        if not row:
            continue
        _, code, score, p, n, P, N = row
        out.append(ScoredPattern(pattern_from_code(code), ContingencyTable(int(p), int(n), int(P), int(N)), float(score)))
    return out
