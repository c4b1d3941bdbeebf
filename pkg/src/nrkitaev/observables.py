"""Physical diagnostics computed from correlation matrices and trajectories."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy import stats

from .errors import (
    FitDegenerate,
    InsufficientData,
    NotConverged,
    PhysicalityViolation,
    Undefined,
)
from .evolution import TrajectoryRecord, density_trajectory, propagators, steady_state
from .lattice import CorrelationMatrix, DynamicalMatrixSet, MomentumCorrelation, build_matrices
from .model import ModelParams

PHYS_TOL = 1e-9
SIGNAL_FLOOR = 1e-12


@dataclass(frozen=True)
class LengthscaleFits:
    xi_nr: float
    xi_dw: float
    zeta_l: float
    zeta_r: float
    r2_xi_nr: float
    r2_xi_dw: float
    r2_zeta_l: float
    r2_zeta_r: float


@dataclass(frozen=True)
class CurrentReport:
    particle_current: float
    pairing_current: float


@dataclass(frozen=True)
class RelaxationResult:
    tau: float
    epsilon: float
    converged: bool


def _check_unit_interval(values: np.ndarray, what: str) -> np.ndarray:
    if np.any(values < -PHYS_TOL) or np.any(values > 1 + PHYS_TOL):
        raise PhysicalityViolation(f"{what} outside [0, 1]: {values.min()}, {values.max()}")
    return values


def density(c: CorrelationMatrix) -> np.ndarray:
    d = c.g.diagonal()
    if np.abs(d.imag).max(initial=0.0) > 1e-10:
        raise PhysicalityViolation("diagonal of G has an imaginary part")
    return _check_unit_interval(d.real.copy(), "density")


def central_correlations(c: CorrelationMatrix) -> np.ndarray:
    """Row ``<c_{N/2}^+ c_j>`` for j = 1..N (site N/2 is 1-based)."""
    n = c.n_sites
    if n % 2:
        raise ValueError("central correlations need an even number of sites")
    return c.g[n // 2 - 1].copy()


# --- fits -------------------------------------------------------------------


def linear_fit(x, y) -> tuple[float, float, float]:
    """Least-squares line; returns (slope, intercept, R^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise InsufficientData("a line needs at least two points")
    if np.ptp(y) == 0:
        return 0.0, float(y[0]), 1.0
    res = stats.linregress(x, y)
    return float(res.slope), float(res.intercept), float(res.rvalue**2)


def fit_power_law(xs, ys) -> tuple[float, float, float]:
    """Fit ``y = prefactor * x**exponent`` on log-log axes.

    Returns (exponent, prefactor, R^2).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 4 or xs.size != ys.size:
        raise InsufficientData("power-law fit needs at least four (x, y) pairs")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("power-law fit needs positive data")
    slope, intercept, r2 = linear_fit(np.log(xs), np.log(ys))
    return slope, float(np.exp(intercept)), r2


def _decay_length(distance, signal, floor=SIGNAL_FLOOR) -> tuple[float, float]:
    """Length of an exponential decay ``signal ~ exp(-distance / length)``."""
    distance = np.asarray(distance, dtype=float)
    signal = np.abs(np.asarray(signal))
    keep = signal > floor
    if keep.sum() < 3:
        raise FitDegenerate("signal below the noise floor")
    slope, _, r2 = linear_fit(distance[keep], np.log(signal[keep]))
    if slope >= 0:
        raise FitDegenerate("signal does not decay")
    return -1.0 / slope, r2


def _safe_decay_length(distance, signal) -> tuple[float, float]:
    try:
        return _decay_length(distance, signal)
    except FitDegenerate:
        return 0.0, 0.0


def modulation_envelope(n: np.ndarray) -> np.ndarray:
    """``|n_j - (n_{j-1} + n_{j+1}) / 2|`` for interior sites 2..N-1."""
    n = np.asarray(n, dtype=float)
    return np.abs(n[1:-1] - 0.5 * (n[:-2] + n[2:]))


def _penetration(envelope: np.ndarray, rel_floor: float) -> int:
    """Number of sites from the edge before the envelope first drops below the floor."""
    if envelope.max(initial=0.0) <= SIGNAL_FLOOR:
        return 0
    below = np.flatnonzero(envelope < rel_floor * envelope.max())
    return int(below[0]) if below.size else envelope.size


def fit_lengthscales(
    n: np.ndarray,
    correlations: np.ndarray,
    params: ModelParams | None = None,
    edge_window: int | None = None,
    center_exclude: int = 3,
    dw_rel_floor: float = 1e-8,
) -> LengthscaleFits:
    """Non-reciprocal, density-wave and correlation lengths of a profile.

    * ``xi_nr``: decay of ``n_bulk - n_j`` away from the left edge, with
      ``n_bulk`` the median of the middle third; fitted over the left half.
    * ``xi_dw``: decay of the modulation envelope away from the boundary where
      it penetrates deeper, fitted until it first drops below
      ``dw_rel_floor`` times its largest value (at most half the chain).
    * ``zeta_l`` / ``zeta_r``: decay of ``|<c_{N/2}^+ c_j>|`` over
      ``[N/2 - N/4, N/2 - center_exclude]`` and ``[N/2 + center_exclude, N/2 + N/4]``.

    Degenerate fits give length 0 with R^2 = 0.
    """
    n = np.asarray(n, dtype=float)
    size = n.size
    if size < 24:
        raise InsufficientData("lengthscale fits need at least 24 sites")
    half = edge_window or size // 2
    third = size // 3
    bulk = float(np.median(n[third : size - third]))
    sites = np.arange(1, size + 1)

    depletion = bulk - n[:half]
    positive = depletion > SIGNAL_FLOOR
    # only the contiguous depleted stretch touching the edge
    stop = half if positive.all() else int(np.argmin(positive))
    xi_nr, r2_nr = _safe_decay_length(sites[:stop], depletion[:stop])

    env = modulation_envelope(n)
    sides = [env[: half - 1], env[::-1][: half - 1]]
    runs = [_penetration(e, dw_rel_floor) for e in sides]
    edge = sides[int(runs[1] > runs[0])]
    depth = max(runs)
    xi_dw, r2_dw = _safe_decay_length(np.arange(depth), edge[:depth])

    center = size // 2
    corr = np.abs(np.asarray(correlations))
    quarter = size // 4
    left = np.arange(center - quarter, center - center_exclude + 1)
    right = np.arange(center + center_exclude, center + quarter + 1)
    zeta_l, r2_l = _safe_decay_length(center - left, corr[left - 1])
    zeta_r, r2_r = _safe_decay_length(right - center, corr[right - 1])
    return LengthscaleFits(xi_nr, xi_dw, zeta_l, zeta_r, r2_nr, r2_dw, r2_l, r2_r)


# --- relaxation -------------------------------------------------------------


def relative_deviation(densities: np.ndarray, n_ss: np.ndarray) -> np.ndarray:
    """``max_j |n_j(t) - n_j^ss| / n_j^ss`` for each row of ``densities``."""
    n_ss = np.asarray(n_ss, dtype=float)
    if np.any(n_ss <= 0):
        raise Undefined("relative deviation needs a strictly positive steady density")
    return (np.abs(np.atleast_2d(densities) - n_ss) / n_ss).max(axis=1)


def _deviation_at(h, x0, n_ss, t):
    n = n_ss.size
    u = sla.expm(-1j * h * t)[:n]
    dn = np.einsum("ja,ja->j", u @ x0, u.conj()).real
    return float((np.abs(dn) / n_ss).max())


def _refine(h, x0, n_ss, lo, hi, epsilon, rtol):
    """Bisect the last upward-to-downward threshold crossing inside (lo, hi]."""
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if _deviation_at(h, x0, n_ss, mid) >= epsilon:
            lo = mid
        else:
            hi = mid
    return hi


def relaxation_time(
    traj: TrajectoryRecord,
    c_ss: CorrelationMatrix,
    epsilon: float = 1e-3,
    rtol: float = 1e-3,
    matrices: DynamicalMatrixSet | None = None,
) -> RelaxationResult:
    """First sampled time after which ``max_j dn_j`` stays below ``epsilon``.

    The bracketing samples are refined by bisection when the dynamical
    matrices are available (passed in or rebuilt from ``traj.params``).
    """
    n_ss = c_ss.density()
    dev = relative_deviation(traj.densities(), n_ss)
    above = np.flatnonzero(dev >= epsilon)
    if above.size == 0:
        return RelaxationResult(float(traj.times[0]), epsilon, True)
    i = int(above[-1])
    if i == len(traj.times) - 1:
        raise NotConverged(f"deviation {dev[-1]:.3e} still above {epsilon} at t={traj.times[-1]}")
    lo, hi = float(traj.times[i]), float(traj.times[i + 1])
    if matrices is None and traj.params is not None:
        matrices = build_matrices(traj.params)
    if matrices is not None:
        x0 = traj.states[0].data - c_ss.data
        hi = _refine(matrices.h, x0, n_ss, lo, hi, epsilon, rtol)
    return RelaxationResult(hi, epsilon, True)


def measure_relaxation(
    matrices: DynamicalMatrixSet,
    c0: CorrelationMatrix,
    epsilon: float = 1e-3,
    dt: float = 0.5,
    t_max: float = 5000.0,
    rtol: float = 1e-3,
    c_ss: CorrelationMatrix | None = None,
) -> RelaxationResult:
    """Relaxation time without storing a trajectory.

    Steps on a uniform grid of spacing ``dt`` and stops once the deviation
    has stayed below ``epsilon * 1e-6`` for as long as it took to first
    cross ``epsilon`` (plus 50 / w), then refines by bisection.
    """
    c_ss = steady_state(matrices) if c_ss is None else c_ss
    n = matrices.n_sites
    n_ss = c_ss.density()
    if np.any(n_ss <= 0):
        raise Undefined("relaxation time needs a strictly positive steady density")
    x0 = c0.data - c_ss.data
    times = np.arange(0.0, t_max + dt / 2, dt)
    last_above = None
    for t, u in zip(times, propagators(matrices.h, times)):
        top = u[:n]
        dev = (np.abs(np.einsum("ja,ja->j", top @ x0, top.conj()).real) / n_ss).max()
        if dev >= epsilon:
            last_above = t
        elif dev < epsilon * 1e-6 and t > 2 * (last_above or 0.0) + 50.0:
            break
    else:
        raise NotConverged(f"no stable crossing of {epsilon} before t={t_max}")
    if last_above is None:
        return RelaxationResult(0.0, epsilon, True)
    tau = _refine(matrices.h, x0, n_ss, last_above, last_above + dt, epsilon, rtol)
    return RelaxationResult(tau, epsilon, True)


# --- momentum space ---------------------------------------------------------


def momentum_occupation(blocks: MomentumCorrelation) -> np.ndarray:
    """n_k aligned with ``blocks.k``."""
    d = blocks.diagonal()[:, 0, 0]
    return _check_unit_interval(d.real.copy(), "momentum occupation")


def anomalous_correlator(blocks: MomentumCorrelation) -> np.ndarray:
    """``<c_k^+ c_{-k}^+>`` aligned with ``blocks.k``."""
    return blocks.diagonal()[:, 0, 1].copy()


def currents(blocks: MomentumCorrelation) -> CurrentReport:
    """Global particle and pairing currents of a periodic state.

    ``I = -(1/N) sum_k n_k sin k``. The pairing current uses the bond
    operator ``J_l = i (c_{l+1} c_l - c_l^+ c_{l+1}^+)``, whose momentum sum is
    ``J = (4/N) sum_{k>0} Re<c_k^+ c_{-k}^+> sin k``; with this normalization
    the non-reciprocal line saturates at ``1/sqrt(2) - 1``.
    """
    k = blocks.k
    n = blocks.n_sites
    nk = momentum_occupation(blocks)
    fk = anomalous_correlator(blocks)
    positive = k > 0
    return CurrentReport(
        particle_current=float(-(nk * np.sin(k)).sum() / n),
        pairing_current=float(4.0 * (fk[positive].real * np.sin(k[positive])).sum() / n),
    )


def bond_currents(c: CorrelationMatrix, periodic: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Real-space ``<I_l>`` and ``<J_l>`` on bonds (l, l+1), same normalization as :func:`currents`."""
    n = c.n_sites
    left = np.arange(n if periodic else n - 1)
    right = (left + 1) % n
    i_bond = -c.g[left, right].imag
    j_bond = 2.0 * c.f[left, right].imag
    return i_bond, j_bond


def continuity_rhs(c: CorrelationMatrix, params: ModelParams) -> np.ndarray:
    """Right side of the density continuity equation on the standard lines.

    ``dn_l/dt = -4w I_{l-1} + (2D - Gp)/2 J_l + (2D + Gp)/2 J_{l-1}
    - 2(2w + Gp) n_l + Gp``, valid for ``gamma_h = 2w``, ``theta_h = pi/2``,
    ``mu = 0``, ``theta_p = -pi/2`` and real ``delta``. Open chains drop the
    missing bonds.
    """
    w, d, gp = params.w, float(np.real(params.delta)), params.gamma_p
    i_bond, j_bond = bond_currents(c, params.is_periodic)
    if not params.is_periodic:
        i_bond = np.append(i_bond, 0.0)
        j_bond = np.append(j_bond, 0.0)
    i_prev = np.roll(i_bond, 1)
    j_prev = np.roll(j_bond, 1)
    if not params.is_periodic:
        i_prev[0] = j_prev[0] = 0.0
    n = c.density()
    return (
        -4 * w * i_prev
        + 0.5 * (2 * d - gp) * j_bond
        + 0.5 * (2 * d + gp) * j_prev
        - 2 * (2 * w + gp) * n
        + gp
    )


# --- dynamics ---------------------------------------------------------------


def lightcone_asymmetry(times, densities, center: int | None = None, background=None) -> float:
    """``(W_R - W_L) / (W_R + W_L)`` of time-integrated density around ``center``.

    ``densities`` has shape (len(times), N); ``center`` is a 1-based site,
    N/2 by default, and is itself excluded. When ``background`` (same shape)
    is given, the weights integrate ``|densities - background|`` so that
    density produced uniformly by pairing drops out.
    """
    times = np.asarray(times, dtype=float)
    densities = np.asarray(densities, dtype=float)
    if background is not None:
        densities = np.abs(densities - np.asarray(background, dtype=float))
    n = densities.shape[1]
    center = n // 2 if center is None else center
    integrated = np.trapezoid(densities, times, axis=0)
    w_l = integrated[: center - 1].sum()
    w_r = integrated[center:].sum()
    if w_l + w_r < 1e-12:
        raise Undefined("no density away from the center")
    return float((w_r - w_l) / (w_r + w_l))


def trajectory_asymmetry(traj: TrajectoryRecord, center: int | None = None) -> float:
    """Lightcone asymmetry of the excess density over the vacuum-started run.

    The equation of motion is linear in the initial state, so the excess is
    the propagated initial excitation alone.
    """
    if traj.params is None:
        return lightcone_asymmetry(traj.times, traj.densities(), center)
    matrices = build_matrices(traj.params)
    vacuum = CorrelationMatrix(np.zeros_like(traj.states[0].data))
    background = density_trajectory(matrices, vacuum, traj.times)
    return lightcone_asymmetry(traj.times, traj.densities(), center, background)
