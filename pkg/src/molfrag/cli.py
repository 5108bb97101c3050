"""Command line interface: ``molfrag {mine,evaluate,generate,analyze}``.

Exit codes: 0 on success, 1 on configuration or usage errors, 2 when at least
one dataset of a batch failed (the others still produce their outputs).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, analyze
from .config import ConfigError, ExperimentConfig, load_config
from .encode import (
    FragmentVocabulary,
    encode_dataset,
    fold_hashed,
    write_fingerprints_csv,
    write_fingerprints_tsv,
)
from .experiments import (
    AGGREGATE_HEADER,
    EXPERIMENTS,
    LANGUAGES,
    WILCOXON_HEADER,
    ExperimentParams,
    aggregate,
    conditions_for,
    read_report,
    run_experiment,
    slug,
    table_csv,
    wilcoxon_table,
    write_outputs,
)
from .generate import GeneratorSpec, InfeasibleSpecError, generate, planted_spec, redundancy_spec, synthetic_suite
from .learn import mine_condition
from .miner import read_fragments_tsv, write_fragments_tsv
from .molgraph import LabeledDataset, load_dataset

log = logging.getLogger("molfrag")

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


def _csv_list(conv):
    def parse(value: str):
        return tuple(conv(v) for v in value.split(",") if v.strip())
    return parse


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("datasets", nargs="*", type=Path, help="transaction (.txt) or SMILES (.smi) files")
    p.add_argument("--config", type=Path, help="INI file; its values override the flags")
    p.add_argument("--experiment", choices=EXPERIMENTS, default=None)
    p.add_argument("--outdir", type=Path, default=None)
    p.add_argument("--languages", type=_csv_list(str), default=None, help="comma-separated subset of "
                   + ",".join(LANGUAGES))
    p.add_argument("--k", type=int, default=None, help="top-k size")
    p.add_argument("--confidence", type=_csv_list(float), default=None, help="e.g. 0.95,0.99,0.999")
    p.add_argument("--max-path-length", type=int, default=None)
    p.add_argument("--min-freq", type=int, default=None)
    p.add_argument("--C", dest="C", type=float, default=None, help="SVM regularization")
    p.add_argument("--tol", type=float, default=None, help="SVM stopping tolerance")
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None, help="processes for cross-validation folds")


def _config_from_args(args) -> ExperimentConfig:
    params = ExperimentParams()
    flag_map = {"languages": "languages", "k": "k", "confidence": "confidences",
                "max_path_length": "max_path_length", "min_freq": "min_freq", "C": "C", "tol": "tol",
                "folds": "folds", "seed": "seed", "workers": "workers"}
    updates = {field: getattr(args, flag) for flag, field in flag_map.items() if getattr(args, flag) is not None}
    bad_lang = [lang for lang in updates.get("languages", ()) if lang not in LANGUAGES]
    if bad_lang:
        raise ConfigError(f"--languages: unknown language(s) {bad_lang}")
    for name in ("k", "max_path_length", "min_freq", "workers"):
        if name in updates and updates[name] < 1:
            raise ConfigError(f"--{name.replace('_', '-')} must be >= 1")
    if updates.get("folds", 2) < 2:
        raise ConfigError("--folds must be >= 2")
    for c in updates.get("confidences", ()):
        if not any(abs(c - lvl) < 1e-12 for lvl in (0.95, 0.99, 0.999)):
            raise ConfigError(f"--confidence: unsupported level {c}")
    cfg = ExperimentConfig(
        experiment=args.experiment or "E1",
        datasets=tuple(args.datasets),
        outdir=args.outdir or Path("results"),
        params=replace(params, **updates),
    )
    if args.config is not None:
        cfg = load_config(args.config, base=cfg)
    if not cfg.datasets:
        raise ConfigError("no datasets given")
    cfg.check_files()
    return cfg


def _load_all(cfg: ExperimentConfig) -> tuple[list[LabeledDataset], list[tuple[str, str]]]:
    loaded, failed = [], []
    for path in cfg.datasets:
        try:
            loaded.append(load_dataset(path))
        except (ValueError, UnicodeDecodeError) as exc:
            failed.append((str(path), f"{type(exc).__name__}: {exc}"))
    return loaded, failed


def _report_failures(failed) -> int:
    for name, msg in failed:
        print(f"error: {name}: {msg}", file=sys.stderr)
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_mine(args) -> int:
    cfg = _config_from_args(args)
    datasets, failed = _load_all(cfg)
    conds = conditions_for(cfg.experiment, cfg.params)
    for ds in datasets:
        try:
            files = {}
            cache: dict = {}
            for cond in conds:
                files[f"fragments_{slug(cond)}.tsv"] = write_fragments_tsv(mine_condition(cond, ds, cache))
        except ValueError as exc:
            failed.append((ds.name, f"{type(exc).__name__}: {exc}"))
            continue
        target = cfg.outdir / cfg.experiment / ds.name
        target.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (target / name).write_text(text, encoding="ascii", newline="\n")
        log.info("%s: wrote %d fragment files to %s", ds.name, len(files), target)
    return _report_failures(failed)


def cmd_evaluate(args) -> int:
    cfg = _config_from_args(args)
    datasets, failed = _load_all(cfg)
    for ds in datasets:
        try:
            out = run_experiment(cfg.experiment, ds, cfg.params)
        except ValueError as exc:
            failed.append((ds.name, f"{type(exc).__name__}: {exc}"))
            continue
        target = cfg.outdir / cfg.experiment / ds.name
        write_outputs(out, target)
        log.info("%s: wrote %s", ds.name, target)
    return _report_failures(failed)


PRESETS = {
    "planted": lambda n: [planted_spec(**({"n_molecules": n} if n is not None else {}))],
    "redundant": lambda n: [redundancy_spec(**({"n_molecules": n} if n is not None else {}))],
    "suite": lambda n: synthetic_suite(*([n] if n is not None else [])),
}


def cmd_generate(args) -> int:
    try:
        if args.spec is not None:
            specs = [GeneratorSpec.from_dict(json.loads(args.spec.read_text()))]
            if args.molecules is not None:
                specs = [replace(specs[0], n_molecules=args.molecules)]
        else:
            specs = PRESETS[args.preset](args.molecules)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    args.out.mkdir(parents=True, exist_ok=True)
    for d, spec in enumerate(specs):
        gen = generate(spec, seed=args.seed + d)
        base = args.out / spec.name
        base.with_suffix(".txt").write_text(gen.transactions(), encoding="ascii", newline="\n")
        Path(str(base) + ".manifest.json").write_text(gen.manifest_json(), encoding="ascii", newline="\n")
        log.info("wrote %s.txt (%d molecules)", base, len(gen.dataset))
    return EXIT_OK


ANALYZE_HEADER = ("metric", "value")


def cmd_analyze(args) -> int:
    if args.report is not None:
        try:
            rows = read_report(args.report.read_text())
        except (OSError, KeyError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        sys.stdout.write(table_csv(AGGREGATE_HEADER, aggregate(rows)))
        sys.stdout.write("\n")
        sys.stdout.write(table_csv(WILCOXON_HEADER, wilcoxon_table(rows, args.alpha)))
        return EXIT_OK
    if args.dataset is None or args.fragments is None:
        print("error: analyze needs --report, or a dataset with --fragments", file=sys.stderr)
        return EXIT_CONFIG
    try:
        ds = load_dataset(args.dataset)
        scored = read_fragments_tsv(args.fragments.read_text())
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.top is not None:
        scored = scored[: args.top]
    vocab = FragmentVocabulary.from_scored(scored, source=str(args.fragments))
    X = encode_dataset(ds, vocab)
    ids = [m.id or str(i) for i, m in enumerate(ds.molecules)]
    corr = analyze.correspondences(X, ds.labels)
    metrics = [
        ("molecules", len(ds)),
        ("fragments", len(vocab)),
        ("correspondences", corr.pair_count),
        ("involved_molecules", corr.involved_molecules),
        ("zero_vectors", corr.zero_vector_count),
        ("avg_features_per_molecule", analyze.features_per_molecule(X)),
        ("max_score", analyze.score_stats(scored).max if scored else ""),
        ("min_score", analyze.score_stats(scored).min if scored else ""),
        ("cyclic_fraction", analyze.cyclic_fraction(scored) if scored else ""),
    ]
    if args.hash_bits:
        H = fold_hashed(X, vocab, args.hash_bits, args.hash_b, args.hash_seed)
        metrics.append((f"correspondences_hashed_{args.hash_bits}", analyze.correspondences(H, ds.labels).pair_count))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ANALYZE_HEADER)
    for name, value in metrics:
        w.writerow([name, repr(value) if isinstance(value, float) else value])
    sys.stdout.write(buf.getvalue())
    if args.fingerprints_csv:
        args.fingerprints_csv.write_text(write_fingerprints_csv(X, vocab.codes, ids), encoding="ascii")
    if args.fingerprints_tsv:
        args.fingerprints_tsv.write_text(write_fingerprints_tsv(X, ids), encoding="ascii")
    if args.intercorr:
        m = min(args.intercorr_top, len(vocab))
        R = analyze.intercorrelation(X[:, :m])
        args.intercorr.write_text(analyze.intercorrelation_tsv(R, vocab.codes[:m]), encoding="ascii")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="molfrag", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", parents=[common], help="mine fragments on whole datasets and write fragment TSVs")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("evaluate", parents=[common], help="cross-validate an experiment and write report tables")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("generate", parents=[common], help="write synthetic datasets with planted fragments")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=sorted(PRESETS), default="planted")
    src.add_argument("--spec", type=Path, help="JSON generator spec")
    p.add_argument("--molecules", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", parents=[common], help="diagnostics for a fragment set, or tables from a report")
    p.add_argument("dataset", nargs="?", type=Path)
    p.add_argument("--fragments", type=Path, help="fragment TSV from `molfrag mine`")
    p.add_argument("--top", type=int, default=None, help="use only the first N fragments")
    p.add_argument("--report", type=Path, help="report.csv to aggregate and test")
    p.add_argument("--alpha", type=float, default=0.99, help="Wilcoxon confidence level")
    p.add_argument("--hash-bits", type=int, default=0, help="also fold into hashed fingerprints of this width")
    p.add_argument("--hash-b", type=int, default=1)
    p.add_argument("--hash-seed", type=int, default=0)
    p.add_argument("--fingerprints-csv", type=Path)
    p.add_argument("--fingerprints-tsv", type=Path)
    p.add_argument("--intercorr", type=Path)
    p.add_argument("--intercorr-top", type=int, default=100)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
