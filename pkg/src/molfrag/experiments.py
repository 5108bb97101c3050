"""The four comparative experiments and their table outputs.

Every run writes into ``<outdir>/<experiment>/<dataset>/``:

``report.csv``
    one row per (fold, condition)
``aggregate.csv``
    per-condition means, recomputed from the formatted rows of ``report.csv``
``wilcoxon.csv``
    paired signed-rank tests over per-fold AUCs for each pair of conditions
``fragments.csv``
    per (fold, condition): fragment count, score range and ring share
``fragments_<condition>.tsv``
    the fragments of fold 0 in the miner's TSV format
``scores_<condition>.tsv``
    the rank-ordered fold-0 scores
``intercorr_<condition>.tsv``
    phi between the fold-0 top fragments (E1 only)
``manifest.json``
    parameters needed to reproduce the run
"""
from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__, analyze
from .learn import REPORT_HEADER, Condition, Crop, FoldResult, RestrictedPaths, Significance, run_cv
from .miner import TopK, write_fragments_tsv
from .molgraph import LabeledDataset

EXPERIMENTS = ("E1", "E2", "E3", "E4", "custom")
LANGUAGES = ("sequence", "tree", "graph")


@dataclass(frozen=True)
class ExperimentParams:
    k: int = 1000
    confidences: tuple[float, ...] = (0.95, 0.99, 0.999)
    max_path_length: int = 10
    min_freq: int = 1
    languages: tuple[str, ...] = LANGUAGES
    C: float = 1.0
    tol: float = 1e-3
    folds: int = 10
    seed: int = 0
    workers: int = 1
    intercorr_top: int = 100


def conditions_for(experiment: str, p: ExperimentParams) -> list[Condition]:
    if experiment in ("E1", "custom"):
        return [Condition(lang, TopK(p.k)) for lang in p.languages]
    if experiment == "E2":
        crops = [Condition(lang, Crop(p.k)) for lang in p.languages if lang != "graph"]
        return [Condition("graph", TopK(p.k)), *crops]
    significance = [Condition("sequence", Significance(c)) for c in sorted(p.confidences, reverse=True)]
    if experiment == "E3":
        return significance
    if experiment == "E4":
        return [Condition("path", RestrictedPaths(p.max_path_length, p.min_freq)), *significance]
    raise ValueError(f"unknown experiment {experiment!r}")


def slug(cond: Condition) -> str:
    return f"{cond.language}_{cond.mode_name}_{cond.param.replace(':', '-')}"


# --------------------------------------------------------------------------
# formatting
# --------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def table_csv(header: Sequence[str], rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r[h]) for h in header])
    return buf.getvalue()


def report_csv(rows: Sequence[dict]) -> str:
    return table_csv(REPORT_HEADER, rows)


def read_report(text: str) -> list[dict]:
    out = []
    for r in csv.DictReader(io.StringIO(text)):
        out.append({
            **r,
            "fold": int(r["fold"]),
            "n_fragments": int(r["n_fragments"]),
            "auc": float(r["auc"]),
            "correspondences": int(r["correspondences"]),
            "avg_features_per_molecule": float(r["avg_features_per_molecule"]),
            "min_score": float(r["min_score"]) if r["min_score"] else math.nan,
        })
    return out


AGGREGATE_HEADER = ("dataset", "language", "mode", "param", "folds", "n_fragments", "auc",
                    "correspondences", "avg_features_per_molecule", "min_score")
_METRICS = ("n_fragments", "auc", "correspondences", "avg_features_per_molecule", "min_score")


def _cond_key(r: dict) -> tuple:
    return (r["dataset"], r["language"], r["mode"], r["param"])


def aggregate(rows: Sequence[dict]) -> list[dict]:
    """Per-condition means; ``rows`` are read back from ``report.csv`` so the audit is exact."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault(_cond_key(r), []).append(r)
    out = []
    for key, rs in groups.items():
        agg = dict(zip(("dataset", "language", "mode", "param"), key), folds=len(rs))
        for m in _METRICS:
            vals = [float(r[m]) for r in rs if not math.isnan(float(r[m]))]
            agg[m] = math.fsum(vals) / len(vals) if vals else math.nan
        out.append(agg)
    return out


WILCOXON_HEADER = ("dataset", "condition_a", "condition_b", "n", "statistic", "p_value", "significant",
                   "direction", "note")


def wilcoxon_table(rows: Sequence[dict], alpha: float = 0.99) -> list[dict]:
    """Two-sided tests on per-fold AUCs for every pair of conditions of a dataset."""
    out = []
    by_cond: dict[tuple, dict[int, float]] = {}
    for r in rows:
        by_cond.setdefault(_cond_key(r), {})[r["fold"]] = float(r["auc"])
    keys = list(by_cond)
    for ka, kb in itertools.combinations(keys, 2):
        if ka[0] != kb[0]:
            continue
        folds = sorted(set(by_cond[ka]) & set(by_cond[kb]))
        a = [by_cond[ka][f] for f in folds]
        b = [by_cond[kb][f] for f in folds]
        row = {"dataset": ka[0], "condition_a": "/".join(ka[1:]), "condition_b": "/".join(kb[1:]),
               "n": len(folds), "statistic": math.nan, "p_value": math.nan, "significant": False,
               "direction": "none", "note": ""}
        try:
            res = analyze.wilcoxon_signed_rank(a, b, alpha)
            row.update(statistic=res.statistic, p_value=res.p_value, significant=res.significant,
                       direction=res.direction, note="exact" if res.exact else "normal")
        except ValueError as exc:
            row["note"] = str(exc)
        out.append(row)
    return out


FRAGMENT_SUMMARY_HEADER = ("fold", "condition", "n_fragments", "max_score", "min_score", "cyclic_fraction")


# --------------------------------------------------------------------------
# running
# --------------------------------------------------------------------------

@dataclass
class ExperimentOutput:
    files: dict[str, str] = field(default_factory=dict)
    rows: list[dict] = field(default_factory=list)


def dataset_digest(dataset: LabeledDataset) -> str:
    from .molgraph import write_transactions

    return hashlib.sha256(write_transactions(dataset).encode("ascii")).hexdigest()


def run_experiment(experiment: str, dataset: LabeledDataset, params: ExperimentParams) -> ExperimentOutput:
    """Run one experiment on one dataset and render every output file in memory."""
    conds = conditions_for(experiment, params)
    results: list[FoldResult] = run_cv(
        dataset, conds, C=params.C, tol=params.tol, folds=params.folds, seed=params.seed,
        workers=params.workers, detail_folds=(0,),
    )
    rows = [r for fr in results for r in fr.rows]
    out = ExperimentOutput(rows=rows)
    report = report_csv(rows)
    out.files["report.csv"] = report
    reread = read_report(report)
    out.files["aggregate.csv"] = table_csv(AGGREGATE_HEADER, aggregate(reread))
    out.files["wilcoxon.csv"] = table_csv(WILCOXON_HEADER, wilcoxon_table(reread))

    summary = []
    for fr in results:
        for cond, r in zip(conds, fr.rows):
            stats = fr.fragment_stats[cond.name]
            summary.append({"fold": fr.fold, "condition": cond.name, "n_fragments": r["n_fragments"],
                            "max_score": stats["max_score"], "min_score": r["min_score"],
                            "cyclic_fraction": stats["cyclic_fraction"]})
    details = results[0]
    out.files["fragments.csv"] = table_csv(FRAGMENT_SUMMARY_HEADER, summary)

    for cond in conds:
        scored = details.fragments[cond.name]
        name = slug(cond)
        out.files[f"fragments_{name}.tsv"] = write_fragments_tsv(scored)
        out.files[f"scores_{name}.tsv"] = "rank\tchi2\n" + "".join(
            f"{i}\t{sp.chi2!r}\n" for i, sp in enumerate(scored, start=1))
        if experiment in ("E1", "custom"):
            m = min(params.intercorr_top, len(scored))
            R = analyze.intercorrelation(details.train_matrices[cond.name][:, :m])
            out.files[f"intercorr_{name}.tsv"] = analyze.intercorrelation_tsv(R, [sp.code for sp in scored[:m]])

    manifest = {
        "experiment": experiment,
        "dataset": dataset.name,
        "dataset_sha256": dataset_digest(dataset),
        "n_molecules": len(dataset),
        "n_active": dataset.n_active,
        "n_inactive": dataset.n_inactive,
        "conditions": [c.name for c in conds],
        "params": {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(params).items() if k != "workers"},
        "version": __version__,
        "files": sorted(out.files),
    }
    out.files["manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    return out


def write_outputs(output: ExperimentOutput, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for name, text in output.files.items():
        (directory / name).write_text(text, encoding="ascii", newline="\n")
