"""Experiment configuration files.

One experiment per INI file::

    [experiment]
    name = spectrum_sweep
    line = nonreciprocal      ; optional: coherent | nonreciprocal
    output_dir = out/fig2b
    workers = 4
    seed = 0

    [params]                  ; ModelParams fields
    n_sites = 100

    [sweep.delta]             ; one section per swept parameter
    grid = geometric          ; linear | geometric
    start = 0.1
    stop = 10
    count = 41

    [options]                 ; experiment-specific knobs
    t_max = 40

With ``line`` set, the standard line couplings are applied at every sweep
point (so ``gamma_p`` follows ``delta`` on the non-reciprocal line).
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import itertools
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .model import ModelParams, Pairing

EXPERIMENTS = (
    "spectrum_sweep",
    "dynamics",
    "steady_state",
    "relaxation_sweep",
    "pbc_currents",
    "lengthscale_sweep",
    "oracle_check",
)
OUTPUT_ROOT_ENV = "NRKITAEV_OUTPUT_ROOT"
PARAM_FIELDS = {f.name: f for f in dataclasses.fields(ModelParams)}
# sweepable names beyond the model fields
EXTRA_AXES = {"draw"}


@dataclass(frozen=True)
class SweepAxis:
    name: str
    grid: str
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.name not in PARAM_FIELDS and self.name not in EXTRA_AXES:
            raise ConfigError(f"sweep axis {self.name!r} is not a parameter name")
        if self.grid not in ("linear", "geometric"):
            raise ConfigError(f"grid must be linear or geometric, got {self.grid!r}")
        if self.count < 1:
            raise ConfigError(f"sweep axis {self.name!r} needs at least one point")
        if self.grid == "geometric" and (self.start <= 0 or self.stop <= 0):
            raise ConfigError("geometric grids need positive bounds")

    def values(self) -> np.ndarray:
        if self.grid == "geometric":
            vals = np.geomspace(self.start, self.stop, self.count)
        else:
            vals = np.linspace(self.start, self.stop, self.count)
        if self.name in ("n_sites", "draw"):
            vals = np.unique(np.round(vals).astype(int))
        return vals


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: ModelParams = ModelParams()
    sweep: tuple[SweepAxis, ...] = ()
    line: Pairing | None = None
    output_dir: Path | None = None
    workers: int = 1
    seed: int = 0
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        names = [a.name for a in self.sweep]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate sweep axis")

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    def resolved_output_dir(self) -> Path:
        if self.output_dir is not None:
            return Path(self.output_dir)
        return Path(os.environ.get(OUTPUT_ROOT_ENV, "results")) / self.experiment

    def points(self) -> list[dict]:
        """Cartesian product of the sweep axes, in axis order."""
        grids = [[(a.name, v.item()) for v in a.values()] for a in self.sweep]
        return [dict(combo) for combo in itertools.product(*grids)]

    def point_params(self, point: dict) -> ModelParams:
        changes = {k: v for k, v in point.items() if k in PARAM_FIELDS}
        params = self.params.replace(**changes)
        if self.line is not None:
            delta = float(np.real(params.delta))
            params = ModelParams.line(
                self.line, delta, params.n_sites, params.boundary, params.w
            )
        return params

    def canonical(self) -> dict:
        """Everything that determines the numbers (not paths or worker counts)."""
        params = dataclasses.asdict(self.params)
        params["boundary"] = self.params.boundary.value
        params["delta"] = [float(np.real(self.params.delta)), float(np.imag(self.params.delta))]
        return {
            "experiment": self.experiment,
            "line": None if self.line is None else self.line.value,
            "params": params,
            "sweep": [dataclasses.asdict(a) for a in self.sweep],
            "seed": self.seed,
            "options": {k: self.options[k] for k in sorted(self.options)},
        }

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _number(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        return text


def _param_value(name: str, text: str):
    if name == "boundary":
        return text.strip()
    if name == "n_sites":
        return int(text)
    value = _number(text)
    if isinstance(value, str):
        raise ConfigError(f"parameter {name} must be numeric, got {text!r}")
    return value


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if not parser.has_section("experiment"):
        raise ConfigError("missing [experiment] section")
    exp = parser["experiment"]
    known = {"name", "line", "output_dir", "workers", "seed"}
    unknown = set(exp) - known
    if unknown:
        raise ConfigError(f"unknown [experiment] keys: {sorted(unknown)}")

    params = {}
    if parser.has_section("params"):
        for key, value in parser["params"].items():
            if key not in PARAM_FIELDS:
                raise ConfigError(f"unknown parameter {key!r}")
            params[key] = _param_value(key, value)

    axes = []
    for section in parser.sections():
        if not section.startswith("sweep."):
            continue
        body = parser[section]
        try:
            axes.append(
                SweepAxis(
                    name=section[len("sweep.") :],
                    grid=body.get("grid", "linear"),
                    start=float(body["start"]),
                    stop=float(body.get("stop", body["start"])),
                    count=int(body.get("count", "1")),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"[{section}] missing key {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"[{section}]: {exc}") from exc

    options = {}
    if parser.has_section("options"):
        options = {k: _number(v) for k, v in parser["options"].items()}

    try:
        return ExperimentConfig(
            experiment=exp.get("name", ""),
            params=ModelParams(**params),
            sweep=tuple(axes),
            line=Pairing(exp["line"]) if "line" in exp else None,
            output_dir=Path(exp["output_dir"]) if "output_dir" in exp else None,
            workers=int(exp.get("workers", "1")),
            seed=int(exp.get("seed", "0")),
            options=options,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def default_config(experiment: str) -> ExperimentConfig:
    """Small presets on the standard lines, one per experiment."""
    delta_axis = SweepAxis("delta", "geometric", 0.1, 10.0, 11)
    presets = {
        "spectrum_sweep": dict(line=Pairing.NONRECIPROCAL, n_sites=100, sweep=(delta_axis,)),
        "dynamics": dict(
            line=Pairing.COHERENT,
            n_sites=100,
            sweep=(SweepAxis("delta", "linear", 0.1, 0.1, 1),),
            options={"t_max": 40.0, "n_times": 201, "initial": "single_particle"},
        ),
        "steady_state": dict(line=Pairing.NONRECIPROCAL, n_sites=100, sweep=(delta_axis,)),
        "relaxation_sweep": dict(
            line=Pairing.NONRECIPROCAL,
            n_sites=100,
            sweep=(SweepAxis("delta", "geometric", 0.05, 0.3, 6),),
            options={"epsilon": 1e-3},
        ),
        "pbc_currents": dict(
            line=Pairing.COHERENT,
            n_sites=200,
            boundary="periodic",
            sweep=(SweepAxis("delta", "geometric", 0.1, 50.0, 21),),
        ),
        "lengthscale_sweep": dict(
            line=Pairing.COHERENT,
            n_sites=200,
            sweep=(SweepAxis("delta", "linear", 2.0, 10.0, 9),),
        ),
        "oracle_check": dict(n_sites=3, sweep=(SweepAxis("draw", "linear", 0, 19, 20),)),
    }
    if experiment not in presets:
        raise ConfigError(f"unknown experiment {experiment!r}")
    p = dict(presets[experiment])
    return ExperimentConfig(
        experiment=experiment,
        params=ModelParams(n_sites=p.pop("n_sites"), boundary=p.pop("boundary", "open")),
        line=p.pop("line", None),
        sweep=p.pop("sweep"),
        options=p.pop("options", {}),
    )
