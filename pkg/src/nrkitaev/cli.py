"""Command-line entry point: ``nrkitaev <experiment> [--config FILE] ...``.

Exit codes: 0 when every sweep point succeeds, 2 when some fail, 1 on a
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import EXPERIMENTS, OUTPUT_ROOT_ENV, ExperimentConfig, default_config, load_config
from .errors import ConfigError, KitaevError
from .experiments import SUMMARY_COLUMNS, PointResult, Table, run_point

log = logging.getLogger("nrkitaev")

UNITS = {"energy": "w", "rate": "w", "time": "1/w", "length": "lattice sites"}


@dataclass
class PointStatus:
    index: int
    point: dict
    status: str
    wall_time: float


@dataclass
class RunManifest:
    experiment: str
    config_hash: str
    version: str
    points: list[PointStatus] = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        return all(p.status == "ok" for p in self.points)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=_plain)


def _plain(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"cannot serialize {type(x)}")


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def write_atomic(path: Path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def render_table(table: Table, fmt: str) -> str:
    if fmt == "json":
        rows = [[_plain(v) if isinstance(v, np.generic) else v for v in r] for r in table.rows]
        return json.dumps({"columns": table.columns, "rows": rows}, default=_plain) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    writer.writerows([_cell(v) for v in row] for row in table.rows)
    return buf.getvalue()


def _point_label(index: int, point: dict) -> str:
    body = "_".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in point.items())
    return f"p{index:04d}" + (f"_{body}" if body else "")


def _worker(args) -> tuple[PointResult | None, str, float]:
    config, point = args
    start = time.perf_counter()
    try:
        result = run_point(config, point)
        status = "ok" if result.failure is None else f"failed({result.failure})"
    except (KitaevError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        result, status = None, f"failed({type(exc).__name__}: {exc})"
    return result, status, time.perf_counter() - start


def emit_figure_data(
    config: ExperimentConfig, points: list[dict], results: list[PointResult | None], fmt: str
) -> None:
    out = config.resolved_output_dir()
    ext = "json" if fmt == "json" else "csv"
    summary = Table(SUMMARY_COLUMNS[config.experiment])
    per_table_columns = {}
    for i, (point, result) in enumerate(zip(points, results)):
        if result is None:
            continue
        summary.rows.extend(result.summary)
        for name, table in result.tables.items():
            per_table_columns[name] = table.columns
            write_atomic(out / name / f"{_point_label(i, point)}.{ext}", render_table(table, fmt))
    write_atomic(out / f"summary.{ext}", render_table(summary, fmt))
    sidecar = {
        "experiment": config.experiment,
        "config": config.canonical(),
        "units": UNITS,
        "columns": {"summary": summary.columns, **per_table_columns},
    }
    write_atomic(out / "metadata.json", json.dumps(sidecar, indent=2, default=_plain) + "\n")


def run(config: ExperimentConfig, fmt: str = "csv") -> RunManifest:
    """Run every sweep point, write the figure data, then the manifest."""
    points = config.points() or [{}]
    jobs = [(config, p) for p in points]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_worker, jobs))
    else:
        outcomes = [_worker(j) for j in jobs]

    manifest = RunManifest(config.experiment, config.hash(), __version__)
    results = []
    for i, (point, (result, status, wall)) in enumerate(zip(points, outcomes)):
        if status != "ok":
            log.warning("point %s %s", _point_label(i, point), status)
        manifest.points.append(PointStatus(i, point, status, wall))
        results.append(result)
    emit_figure_data(config, points, results, fmt)
    write_atomic(config.resolved_output_dir() / "manifest.json", manifest.to_json() + "\n")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nrkitaev", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="INI experiment file")
        p.add_argument("--out", type=Path, help=f"output directory (default ${OUTPUT_ROOT_ENV}/<experiment>)")
        p.add_argument("--workers", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.config is not None:
            config = load_config(args.config)
            if config.experiment != args.experiment:
                raise ConfigError(
                    f"config describes {config.experiment!r}, not {args.experiment!r}"
                )
        else:
            config = default_config(args.experiment)
        changes = {}
        if args.out is not None:
            changes["output_dir"] = args.out
        if args.workers is not None:
            changes["workers"] = args.workers
        if args.seed is not None:
            changes["seed"] = args.seed
        config = config.replace(**changes)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        manifest = run(config, args.format)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    failed = sum(p.status != "ok" for p in manifest.points)
    print(
        f"{config.experiment}: {len(manifest.points) - failed}/{len(manifest.points)} points ok"
        f" -> {config.resolved_output_dir()}"
    )
    return 0 if failed == 0 else 2


if __name__ == "__main__":
    sys.exit(main())
