"""Per-point computations behind each CLI experiment.

Every experiment maps one sweep point to a :class:`PointResult`: summary
rows that are collected into a single scan table, plus optional per-point
tables (spectra, heatmaps, profiles) written as their own files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigError
from .evolution import (
    density_trajectory,
    propagate,
    steady_state,
    steady_state_pbc,
    superoperator_spectrum,
    vectorized_superoperator,
)
from .lattice import InitialState, build_matrices, initial_correlation
from .model import Boundary, ModelParams
from .observables import (
    central_correlations,
    currents,
    density,
    fit_lengthscales,
    lightcone_asymmetry,
    measure_relaxation,
    momentum_occupation,
)
from .oracle import (
    build_liouvillian,
    correlations_exact,
    evolve_exact,
    product_density_matrix,
    steady_state_exact,
)
from .spectral import kstar, multiset_distance, obc_spectrum

ORACLE_TOL = 1e-8

SUMMARY_COLUMNS = {
    "spectrum_sweep": ["delta", "N", "gap", "bandwidth", "zero_modes", "ep_flag", "kstar"],
    "dynamics": ["delta", "N", "asymmetry"],
    "steady_state": ["delta", "N", "mean_density", "max_density", "min_density"],
    "relaxation_sweep": ["delta", "N", "tau", "converged"],
    "pbc_currents": ["delta", "N", "I", "J", "kstar"],
    "lengthscale_sweep": [
        "delta", "N", "xi_nr", "xi_dw", "zeta_l", "zeta_r",
        "r2_xi_nr", "r2_xi_dw", "r2_zeta_l", "r2_zeta_r",
    ],
    "oracle_check": ["draw", "N", "boundary", "steady_dev", "trajectory_dev", "spectrum_dev"],
}


@dataclass
class Table:
    columns: list[str]
    rows: list[list] = field(default_factory=list)


@dataclass
class PointResult:
    summary: list[list]
    tables: dict[str, Table] = field(default_factory=dict)
    failure: str | None = None


def _delta(params: ModelParams) -> float:
    return float(np.real(params.delta))


def _initial(config: ExperimentConfig, n: int):
    kind = str(config.options.get("initial", "single_particle"))
    if kind == "single_particle":
        state = InitialState.single_particle(int(config.options.get("site", n // 2)))
    elif kind == "vacuum":
        state = InitialState.vacuum()
    elif kind == "random_product":
        state = InitialState.random_product(config.seed)
    else:
        raise ConfigError(f"unknown initial state {kind!r}")
    return initial_correlation(state, n)


def spectrum_point(config: ExperimentConfig, params: ModelParams) -> PointResult:
    if params.is_periodic:
        raise ConfigError("spectrum_sweep works on open chains")
    s = obc_spectrum(params)
    ks = kstar(params.replace(boundary=Boundary.PERIODIC))
    d = _delta(params)
    table = Table(["delta", "re_E", "im_E"], [[d, e.real, e.imag] for e in s.eigenvalues])
    row = [d, params.n_sites, s.real_gap, s.imag_bandwidth, s.zero_mode_count, s.ep_flag, ks]
    return PointResult([row], {"spectrum": table})


def dynamics_point(config: ExperimentConfig, params: ModelParams) -> PointResult:
    n = params.n_sites
    t_max = float(config.options.get("t_max", 40.0))
    times = np.linspace(0.0, t_max, int(config.options.get("n_times", 201)))
    m = build_matrices(params)
    dens = density_trajectory(m, _initial(config, n), times)
    background = density_trajectory(m, initial_correlation(InitialState.vacuum(), n), times)
    heat = Table(["t", "j", "n"])
    for t, row in zip(times, dens):
        heat.rows.extend([t, j + 1, v] for j, v in enumerate(row))
    asym = lightcone_asymmetry(times, dens, background=background)
    return PointResult([[_delta(params), n, asym]], {"heatmap": heat})


def steady_state_point(config: ExperimentConfig, params: ModelParams) -> PointResult:
    c = steady_state(build_matrices(params))
    n = density(c)
    profile = Table(["j", "n_ss"], [[j + 1, v] for j, v in enumerate(n)])
    tables = {"profile": profile}
    if params.n_sites % 2 == 0:
        corr = central_correlations(c)
        tables["correlations"] = Table(
            ["j", "re", "im", "abs"], [[j + 1, z.real, z.imag, abs(z)] for j, z in enumerate(corr)]
        )
    row = [_delta(params), params.n_sites, n.mean(), n.max(), n.min()]
    return PointResult([row], tables)


def relaxation_point(config: ExperimentConfig, params: ModelParams) -> PointResult:
    m = build_matrices(params)
    r = measure_relaxation(
        m,
        _initial(config, params.n_sites),
        epsilon=float(config.options.get("epsilon", 1e-3)),
        dt=float(config.options.get("dt", 0.5)),
        t_max=float(config.options.get("t_max", 5000.0)),
    )
    return PointResult([[_delta(params), params.n_sites, r.tau, r.converged]])


def currents_point(config: ExperimentConfig, params: ModelParams) -> PointResult:
    if not params.is_periodic:
        raise ConfigError("pbc_currents needs boundary = periodic")
    blocks = steady_state_pbc(params)
    r = currents(blocks)
    nk = momentum_occupation(blocks)
    order = np.argsort(blocks.k)
    table = Table(["k", "n_k"], [[blocks.k[i], nk[i]] for i in order])
    row = [_delta(params), params.n_sites, r.particle_current, r.pairing_current, kstar(params)]
    return PointResult([row], {"occupation": table})


def lengthscale_point(config: ExperimentConfig, params: ModelParams) -> PointResult:
    c = steady_state(build_matrices(params))
    f = fit_lengthscales(density(c), central_correlations(c), params)
    row = [
        _delta(params), params.n_sites, f.xi_nr, f.xi_dw, f.zeta_l, f.zeta_r,
        f.r2_xi_nr, f.r2_xi_dw, f.r2_zeta_l, f.r2_zeta_r,
    ]
    return PointResult([row])


def random_params(rng: np.random.Generator, n_sites: int, boundary) -> ModelParams:
    """Generic couplings with nonzero hopping loss, used for oracle draws."""
    return ModelParams(
        w=1.0,
        delta=float(rng.normal()),
        mu=float(rng.normal()),
        gamma_h=float(rng.uniform(0.1, 1.5)),
        theta_h=float(rng.uniform(-math.pi, math.pi)),
        gamma_p=float(rng.uniform(0.0, 1.5)),
        theta_p=float(rng.uniform(-math.pi, math.pi)),
        n_sites=n_sites,
        boundary=boundary,
    )


def oracle_comparison(params: ModelParams, rng: np.random.Generator, t_max: float = 10.0):
    """Largest deviations (steady state, trajectory, superoperator spectrum)."""
    n = params.n_sites
    m = build_matrices(params)
    gen = build_liouvillian(params)
    steady_dev = float(
        np.abs(correlations_exact(steady_state_exact(gen).rho).data - steady_state(m).data).max()
    )
    occ = rng.integers(0, 2, size=n)
    times = np.linspace(0.0, t_max, 11)
    exact = evolve_exact(gen, product_density_matrix(occ), times)
    traj = propagate(m, initial_correlation(InitialState.product(occ), n), times)
    traj_dev = max(
        float(np.abs(correlations_exact(r).data - s.data).max()) for r, s in zip(exact, traj.states)
    )
    sup, _ = vectorized_superoperator(m.h, m.f)
    spec_dev = multiset_distance(np.linalg.eigvals(sup), superoperator_spectrum(m.h).values)
    return steady_dev, traj_dev, spec_dev


def oracle_point(config: ExperimentConfig, params: ModelParams, draw: int) -> PointResult:
    rng = np.random.default_rng([config.seed, draw])
    rows = []
    worst = 0.0
    for boundary in (Boundary.OPEN, Boundary.PERIODIC):
        p = random_params(rng, params.n_sites, boundary)
        devs = oracle_comparison(p, rng, float(config.options.get("t_max", 10.0)))
        worst = max(worst, *devs)
        rows.append([draw, params.n_sites, boundary.value, *devs])
    failure = None if worst < ORACLE_TOL else f"oracle deviation {worst:.3e}"
    return PointResult(rows, failure=failure)


RUNNERS = {
    "spectrum_sweep": spectrum_point,
    "dynamics": dynamics_point,
    "steady_state": steady_state_point,
    "relaxation_sweep": relaxation_point,
    "pbc_currents": currents_point,
    "lengthscale_sweep": lengthscale_point,
}


def run_point(config: ExperimentConfig, point: dict) -> PointResult:
    params = config.point_params(point)
    if config.experiment == "oracle_check":
        return oracle_point(config, params, int(point.get("draw", 0)))
    return RUNNERS[config.experiment](config, params)
