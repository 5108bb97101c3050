"""INI experiment configuration with line-precise validation.

Example::

    [experiment]
    id = E1
    datasets = data/a.txt
               data/b.smi
    outdir = results
    languages = sequence, tree, graph
    folds = 10
    seed = 0
    workers = 1

    [mining]
    k = 1000
    confidence = 0.95, 0.99, 0.999
    max_path_length = 10
    min_freq = 1

    [svm]
    C = 1.0
    tol = 0.001
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

from .experiments import EXPERIMENTS, LANGUAGES, ExperimentParams

SCHEMA: dict[str, tuple[str, ...]] = {
    "experiment": ("id", "datasets", "outdir", "languages", "folds", "seed", "workers"),
    "mining": ("k", "confidence", "max_path_length", "min_freq", "intercorr_top"),
    "svm": ("c", "tol"),
}


class ConfigError(ValueError):
    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path, self.line = path, line
        where = f"{path}:{line}: " if path and line else f"{path}: " if path else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "E1"
    datasets: tuple[Path, ...] = ()
    outdir: Path = Path("results")
    params: ExperimentParams = field(default_factory=ExperimentParams)

    def check_files(self) -> None:
        missing = [str(p) for p in self.datasets if not Path(p).is_file()]
        if missing:
            raise ConfigError(f"dataset file(s) not found: {', '.join(missing)}")


def _line_index(text: str) -> dict[tuple[str, str], int]:
    """(section, key) -> 1-based line of the key; sections are keyed with key ''."""
    index: dict[tuple[str, str], int] = {}
    section = ""
    for no, raw in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*\[([^\]]+)\]", raw)
        if m:
            section = m.group(1).strip().lower()
            index.setdefault((section, ""), no)
            continue
        m = re.match(r"([^\s=:#;][^=:]*?)\s*[=:]", raw)
        if m and section:
            index.setdefault((section, m.group(1).strip().lower()), no)
    return index


def _split(value: str) -> list[str]:
    return [t for t in re.split(r"[,\s]+", value.strip()) if t]


def _int(v: str) -> int:
    try:
        return int(v.strip())
    except ValueError:
        raise ValueError("not an integer") from None


def _positive_int(v: str) -> int:
    n = _int(v)
    if n < 1:
        raise ValueError("must be >= 1")
    return n


def _nonneg_int(v: str) -> int:
    n = _int(v)
    if n < 0:
        raise ValueError("must be >= 0")
    return n


def _folds(v: str) -> int:
    n = _int(v)
    if n < 2:
        raise ValueError("must be >= 2")
    return n


def _float(v: str) -> float:
    try:
        return float(v.strip())
    except ValueError:
        raise ValueError("not a number") from None


def _positive_float(v: str) -> float:
    x = _float(v)
    if not x > 0:
        raise ValueError("must be > 0")
    return x


def _confidences(v: str) -> tuple[float, ...]:
    out = tuple(_float(t) for t in _split(v))
    if not out:
        raise ValueError("needs at least one level")
    for c in out:
        if not any(abs(c - lvl) < 1e-12 for lvl in (0.95, 0.99, 0.999)):
            raise ValueError(f"unsupported level {c}; use 0.95, 0.99 or 0.999")
    return out


def _languages(v: str) -> tuple[str, ...]:
    out = tuple(t.lower() for t in _split(v))
    bad = [t for t in out if t not in LANGUAGES]
    if bad or not out:
        raise ValueError(f"unknown language(s) {bad}; use {', '.join(LANGUAGES)}")
    return out


def _experiment_id(v: str) -> str:
    v = v.strip()
    canon = v.upper() if v.lower() != "custom" else "custom"
    if canon not in EXPERIMENTS:
        raise ValueError(f"must be one of {', '.join(EXPERIMENTS)}")
    return canon


def load_config(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read ``path`` over ``base``; every problem is reported with its file and line."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text, str(path), base)


def parse_config(text: str, source: str = "<config>", base: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = base or ExperimentConfig()
    lines = _line_index(text)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        msg = getattr(exc, "message", str(exc)).splitlines()[0]
        raise ConfigError(msg, source, line) from None

    for section in parser.sections():
        if section.lower() not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", source, lines.get((section.lower(), "")))
        for key in parser[section]:
            if key not in SCHEMA[section.lower()]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", source, lines.get((section.lower(), key)))

    def get(section: str, key: str, conv: Callable):
        for s in parser.sections():
            if s.lower() == section and key in parser[s]:
                raw = parser[s][key]
                try:
                    return conv(raw)
                except ValueError as exc:
                    raise ConfigError(f"[{section}] {key} = {raw.strip()!r}: {exc}", source,
                                      lines.get((section, key))) from None
        return None

    params = cfg.params
    updates = {
        "languages": get("experiment", "languages", _languages),
        "folds": get("experiment", "folds", _folds),
        "seed": get("experiment", "seed", _nonneg_int),
        "workers": get("experiment", "workers", _positive_int),
        "k": get("mining", "k", _positive_int),
        "confidences": get("mining", "confidence", _confidences),
        "max_path_length": get("mining", "max_path_length", _positive_int),
        "min_freq": get("mining", "min_freq", _positive_int),
        "intercorr_top": get("mining", "intercorr_top", _positive_int),
        "C": get("svm", "c", _positive_float),
        "tol": get("svm", "tol", _positive_float),
    }
    params = replace(params, **{k: v for k, v in updates.items() if v is not None})
    experiment = get("experiment", "id", _experiment_id) or cfg.experiment
    datasets = get("experiment", "datasets", lambda v: tuple(Path(t) for t in _split(v)))
    outdir = get("experiment", "outdir", lambda v: Path(v.strip()))
    if datasets is not None:
        base_dir = Path(source).parent if source != "<config>" else Path(".")
        datasets = tuple(p if p.is_absolute() else base_dir / p for p in datasets)
        for p in datasets:
            if not p.is_file():
                raise ConfigError(f"[experiment] datasets: file not found: {p}", source,
                                  lines.get(("experiment", "datasets")))
    return ExperimentConfig(
        experiment=experiment,
        datasets=datasets if datasets is not None else cfg.datasets,
        outdir=outdir if outdir is not None else cfg.outdir,
        params=params,
    )
