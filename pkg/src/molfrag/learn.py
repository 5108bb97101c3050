"""Tanimoto-kernel SVM, stratified folds, AUC and the cross-validation driver."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import sparse
from scipy.stats import rankdata

from . import analyze
from .encode import FragmentVocabulary, encode_dataset, encode_from_occurrences
from .miner import (
    MiningTask,
    ScoredPattern,
    Threshold,
    TopK,
    chi2_quantile,
    enumerate_restricted_paths,
    mine,
)
from .molgraph import LabeledDataset
from .patterns import PatternLanguage

# --------------------------------------------------------------------------
# kernel
# --------------------------------------------------------------------------


def tanimoto(x, y) -> float:
    x = np.asarray(x, dtype=bool)
    y = np.asarray(y, dtype=bool)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    union = np.count_nonzero(x | y)
    if union == 0:
        return 1.0
    return np.count_nonzero(x & y) / union


def tanimoto_matrix(X, Y=None) -> np.ndarray:
    """Pairwise Tanimoto similarities between the rows of two binary matrices.

    Intersections come from a float64 product of 0/1 matrices, so every count
    is an exact integer regardless of BLAS threading.
    """
    Y = X if Y is None else Y
    if sparse.issparse(X) or sparse.issparse(Y):
        Xs = sparse.csr_matrix(X, dtype=np.float64)
        Ys = sparse.csr_matrix(Y, dtype=np.float64)
        inter = (Xs @ Ys.T).toarray()
        nx = np.asarray(Xs.sum(axis=1)).ravel()
        ny = np.asarray(Ys.sum(axis=1)).ravel()
    else:
        Xd = np.asarray(X, dtype=np.float64)
        Yd = np.asarray(Y, dtype=np.float64)
        if Xd.shape[1] != Yd.shape[1]:
            raise ValueError("fingerprint widths differ")
        inter = Xd @ Yd.T
        nx = Xd.sum(axis=1)
        ny = Yd.sum(axis=1)
    union = nx[:, None] + ny[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        K = np.where(union > 0, inter / np.where(union > 0, union, 1.0), 1.0)
    return K


# --------------------------------------------------------------------------
# SVM
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SvmModel:
    alpha: np.ndarray
    y: np.ndarray
    bias: float
    C: float
    iterations: int = 0

    @property
    def coef(self) -> np.ndarray:
        return self.alpha * self.y

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.alpha > 0)


def _signs(labels) -> np.ndarray:
    y = np.where(np.asarray(labels) == 1, 1.0, -1.0)
    if len(y) == 0 or np.all(y == y[0]):
        raise ValueError("SVM training needs both classes")
    return y


def dual_objective(K, labels, alpha) -> float:
    """``sum(alpha) - alpha' Q alpha / 2`` with ``Q = yy' * K`` (to be maximised)."""
    y = _signs(labels)
    ay = np.asarray(alpha) * y
    return float(np.sum(alpha) - 0.5 * ay @ np.asarray(K) @ ay)


def train_svm(K, labels, C: float = 1.0, tol: float = 1e-3, max_iter: int | None = None) -> SvmModel:
    """SMO with second-order working-set selection (Fan, Chen & Lin, 2005).

    Stops when the maximal KKT violation ``m(alpha) - M(alpha)`` drops below
    ``tol``.  Ties in working-set selection go to the lowest index, so the
    result is a deterministic function of the inputs.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    if K.shape != (n, n):
        raise ValueError("kernel matrix must be square")
    y = _signs(labels)
    if len(y) != n:
        raise ValueError("labels do not match kernel size")
    max_iter = max_iter or max(10_000_000, 100 * n)
    tau = 1e-12
    diag = np.diag(K).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)  # gradient of alpha'Q alpha / 2 - e'alpha
    it = 0
    while it < max_iter:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        yg = -y * G
        if not up.any() or not low.any():
            break
        cand = np.where(up, yg, -np.inf)
        i = int(np.argmax(cand))
        gmax = cand[i]
        gmin = np.min(np.where(low, yg, np.inf))
        if gmax - gmin < tol:
            break
        b = gmax - yg
        a = diag[i] + diag - 2.0 * K[i]
        a = np.where(a > 0, a, tau)
        obj = np.where(low & (b > 0), -(b * b) / a, np.inf)
        j = int(np.argmin(obj))
        if not np.isfinite(obj[j]):
            break
        it += 1
        Qi = y[i] * y * K[i]
        Qj = y[j] * y * K[j]
        ai, aj = alpha[i], alpha[j]
        quad = diag[i] + diag[j] - 2.0 * K[i, j]
        quad = quad if quad > 0 else tau
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            delta = (G[i] - G[j]) / quad
            s = ai + aj
            ni, nj = ai - delta, aj + delta
            if s > C:
                if ni > C:
                    ni, nj = C, s - C
            elif nj < 0:
                nj, ni = 0.0, s
            if s > C:
                if nj > C:
                    nj, ni = C, s - C
            elif ni < 0:
                ni, nj = 0.0, s
        G += Qi * (ni - ai) + Qj * (nj - aj)
        alpha[i], alpha[j] = ni, nj
    # bias from free vectors, else the midpoint of the feasible interval
    yg = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(np.mean(yg[free]))
    else:
        at_ub = alpha >= C
        at_lb = alpha <= 0
        upper = np.where(((y > 0) & at_lb) | ((y < 0) & at_ub), yg, np.inf).min(initial=np.inf)
        lower = np.where(((y > 0) & at_ub) | ((y < 0) & at_lb), yg, -np.inf).max(initial=-np.inf)
        rho = 0.5 * (upper + lower) if np.isfinite(upper) and np.isfinite(lower) else 0.0
    return SvmModel(alpha=alpha, y=y, bias=-rho, C=float(C), iterations=it)


def decision_values(model: SvmModel, K_test_train) -> np.ndarray:
    K_test_train = np.asarray(K_test_train, dtype=np.float64)
    if K_test_train.ndim != 2 or K_test_train.shape[1] != len(model.alpha):
        raise ValueError("kernel columns must match the training set")
    # row-wise pairwise summation; unlike a BLAS gemv this never depends on threading
    return (K_test_train * model.coef).sum(axis=1) + model.bias


def auc(scores, labels) -> float:
    """Mann-Whitney estimate of P(score_active > score_inactive), ties counting 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(labels) == 1
    n_pos = int(pos.sum())
    n_neg = len(scores) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


# --------------------------------------------------------------------------
# folds
# --------------------------------------------------------------------------


def stratified_folds(labels, folds: int = 10, seed: int = 0) -> np.ndarray:
    """Fold index per molecule.

    Each class is shuffled separately and dealt round-robin, the deal for the
    inactives continuing where the actives stopped, so fold sizes stay balanced.
    """
    labels = np.asarray(labels)
    if folds < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    out = np.empty(len(labels), dtype=np.int64)
    offset = 0
    for cls in (1, 0):
        members = np.flatnonzero(labels == cls)
        if len(members) < folds:
            raise ValueError(f"class {cls} has {len(members)} members, fewer than {folds} folds")
        members = members[rng.permutation(len(members))]
        out[members] = (offset + np.arange(len(members))) % folds
        offset += len(members)
    return out


# --------------------------------------------------------------------------
# cross-validation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Crop:
    """Top-k of the condition's language, cut at the k-th best score of ``reference``."""

    k: int
    reference: PatternLanguage = PatternLanguage.GRAPH


@dataclass(frozen=True)
class Significance:
    confidence: float

    @property
    def threshold(self) -> float:
        return chi2_quantile(self.confidence)


@dataclass(frozen=True)
class RestrictedPaths:
    max_length: int = 10
    min_freq: int = 1


Mode = Union[TopK, Threshold, Significance, Crop, RestrictedPaths]


@dataclass(frozen=True)
class Condition:
    language: str  # "sequence" | "tree" | "graph" | "path"
    mode: Mode

    @property
    def mode_name(self) -> str:
        return {TopK: "topk", Threshold: "threshold", Significance: "significance",
                Crop: "crop", RestrictedPaths: "paths"}[type(self.mode)]

    @property
    def param(self) -> str:
        m = self.mode
        if isinstance(m, (TopK, Crop)):
            return str(m.k)
        if isinstance(m, Threshold):
            return repr(float(m.t))
        if isinstance(m, Significance):
            return repr(float(m.confidence))
        return f"{m.max_length}:{m.min_freq}"

    @property
    def name(self) -> str:
        return f"{self.language}/{self.mode_name}/{self.param}"


def mine_condition(cond: Condition, train: LabeledDataset, cache: dict | None = None) -> list[ScoredPattern]:
    """Fragments of one condition mined on ``train``; ``cache`` shares runs within a fold."""
    cache = {} if cache is None else cache

    def run(language, mode):
        key = (language, mode)
        if key not in cache:
            if language == "path":
                cache[key] = enumerate_restricted_paths(train, mode.max_length, mode.min_freq)
            else:
                cache[key] = mine(MiningTask(language, mode, train))
        return cache[key]

    m = cond.mode
    if isinstance(m, RestrictedPaths):
        return run("path", m)
    if isinstance(m, Significance):
        return run(cond.language, Threshold(m.threshold))
    if isinstance(m, Crop):
        ref = run(PatternLanguage.parse(m.reference).value, TopK(m.k))
        floor = analyze.score_stats(ref).min if ref else 0.0
        return analyze.crop_by_score(run(cond.language, TopK(m.k)), floor)
    return run(cond.language, m)


REPORT_HEADER = ("dataset", "fold", "language", "mode", "param", "n_fragments", "auc",
                 "correspondences", "avg_features_per_molecule", "min_score")


@dataclass
class FoldResult:
    fold: int
    rows: list[dict]
    fragment_stats: dict[str, dict] = field(default_factory=dict)
    fragments: dict[str, list[ScoredPattern]] = field(default_factory=dict)
    train_matrices: dict[str, np.ndarray] = field(default_factory=dict)


def run_fold(dataset: LabeledDataset, conditions: Sequence[Condition], assignment: np.ndarray, fold: int,
             C: float = 1.0, tol: float = 1e-3, keep_details: bool = False) -> FoldResult:
    """Mine on the training part of one fold, then train and score the held-out part."""
    train_idx = np.flatnonzero(assignment != fold)
    test_idx = np.flatnonzero(assignment == fold)
    train = dataset.subset(train_idx)
    test = dataset.subset(test_idx)
    cache: dict = {}
    rows = []
    result = FoldResult(fold, rows)
    for cond in conditions:
        scored = mine_condition(cond, train, cache)
        vocab = FragmentVocabulary.from_scored(scored, condition=cond.name, fold=fold)
        X_train = encode_from_occurrences(len(train), [sp.occurrences for sp in scored], as_sparse=True)
        X_test = encode_dataset(test, vocab, as_sparse=True)
        model = train_svm(tanimoto_matrix(X_train), train.labels, C=C, tol=tol)
        f = decision_values(model, tanimoto_matrix(X_test, X_train))
        corr = analyze.correspondences(X_train, train.labels)
        rows.append({
            "dataset": dataset.name,
            "fold": fold,
            "language": cond.language,
            "mode": cond.mode_name,
            "param": cond.param,
            "n_fragments": len(scored),
            "auc": auc(f, test.labels),
            "correspondences": corr.pair_count,
            "avg_features_per_molecule": analyze.features_per_molecule(X_train),
            "min_score": analyze.score_stats(scored).min if scored else math.nan,
        })
        result.fragment_stats[cond.name] = {
            "max_score": analyze.score_stats(scored).max if scored else math.nan,
            "cyclic_fraction": math.nan if cond.language == "path" else analyze.cyclic_fraction(scored),
        }
        if keep_details:
            result.fragments[cond.name] = scored
            result.train_matrices[cond.name] = X_train
    return result


def _run_fold_star(args):
    return run_fold(*args)


def run_cv(dataset: LabeledDataset, conditions: Sequence[Condition], *, C: float = 1.0, tol: float = 1e-3,
           folds: int = 10, seed: int = 0, workers: int = 1, detail_folds: Sequence[int] = ()) -> list[FoldResult]:
    """Stratified cross-validation of every condition; results ordered by fold.

    Mining sees only the training folds.  Folds are independent, so ``workers``
    processes give the same numbers as one.
    """
    if dataset.n_active == 0 or dataset.n_inactive == 0:
        raise ValueError("cross-validation needs both classes")
    assignment = stratified_folds(dataset.labels, folds, seed)
    jobs = [(dataset, tuple(conditions), assignment, f, C, tol, f in detail_folds) for f in range(folds)]
    if workers <= 1:
        return [run_fold(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_fold_star, jobs))
