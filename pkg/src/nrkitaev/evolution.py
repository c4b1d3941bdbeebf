"""Time evolution and steady states of the correlation matrix.

Production paths never build the (2N)^2 x (2N)^2 superoperator: steady
states come from a Schur-based Sylvester solve and dynamics from the
exponential sandwich ``exp(-iHt) (C0 - Css) exp(iH^+ t) + Css``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import ConfigError, SingularDynamics, SizeGuard
from .lattice import (
    CorrelationMatrix,
    DynamicalMatrixSet,
    MomentumCorrelation,
    bloch_matrices,
)
from .model import ModelParams, momentum_grid

# relative threshold below which a superoperator rate counts as zero
SINGULAR_RTOL = 1e-12
# eigenvector condition number above which spectra are flagged approximate
EP_CONDITION = 1e8


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    times: np.ndarray
    states: list[CorrelationMatrix] = field(repr=False)
    params: ModelParams | None = None

    def densities(self) -> np.ndarray:
        """Occupations, shape (len(times), N)."""
        return np.array([s.density() for s in self.states])


@dataclass(frozen=True, eq=False)
class SuperoperatorSpectrum:
    values: np.ndarray
    condition: float
    approximate: bool


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ConfigError("times must be a non-empty 1-d sequence")
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise ConfigError("times must be sorted and non-negative")
    return times


def _check_rates(h: np.ndarray, eigenvalues: np.ndarray) -> None:
    rates = eigenvalues[:, None] - eigenvalues.conj()[None, :]
    smallest = np.abs(rates).min()
    scale = max(np.linalg.norm(h, 2), 1.0)
    if smallest < SINGULAR_RTOL * scale:
        raise SingularDynamics(
            f"superoperator rate {smallest:.3e} vanishes; no unique steady state"
        )


def steady_state(matrices: DynamicalMatrixSet) -> CorrelationMatrix:
    """Solve ``H C - C H^+ = -i F`` for the stationary correlation matrix."""
    h, f = matrices.h, matrices.f
    _check_rates(h, np.linalg.eigvals(h))
    x = sla.solve_sylvester(h, -h.conj().T, -1j * f)
    return CorrelationMatrix(x)


def sylvester_residual(matrices: DynamicalMatrixSet, c: CorrelationMatrix) -> float:
    h = matrices.h
    r = h @ c.data - c.data @ h.conj().T + 1j * matrices.f
    return float(np.abs(r).max())


def _steady_or_zero(matrices: DynamicalMatrixSet) -> np.ndarray:
    try:
        return steady_state(matrices).data
    except SingularDynamics:
        if np.any(matrices.f != 0):
            raise
        # marginal modes but no drive: only the homogeneous part evolves
        return np.zeros_like(matrices.h)


# propagator entries this far below the largest one are dropped; decayed
# modes otherwise drift into subnormal floats, which are very slow to multiply
FLUSH_RTOL = 1e-100


def _flush(u: np.ndarray) -> np.ndarray:
    u[np.abs(u) < FLUSH_RTOL * np.abs(u).max(initial=0.0)] = 0.0
    return u


def propagators(h: np.ndarray, times: np.ndarray):
    """Yield ``exp(-i h t)`` for each t.

    Uniform grids reuse a single step exponential; anything else pays one
    scaling-and-squaring exponential per time.
    """
    steps = np.diff(times)
    uniform = len(times) > 2 and np.allclose(steps, steps[0], rtol=1e-12, atol=0)
    if uniform:
        u = sla.expm(-1j * h * times[0])
        step = _flush(sla.expm(-1j * h * steps[0]))
        yield u
        for i in range(1, len(times)):
            # re-anchor periodically to keep round-off from accumulating
            u = sla.expm(-1j * h * times[i]) if i % 256 == 0 else step @ u
            yield _flush(u)
    else:
        for t in times:
            yield _flush(sla.expm(-1j * h * t))


def propagate(
    matrices: DynamicalMatrixSet,
    c0: CorrelationMatrix,
    times: Sequence[float],
    c_ss: CorrelationMatrix | None = None,
) -> TrajectoryRecord:
    times = _check_times(times)
    ss = _steady_or_zero(matrices) if c_ss is None else c_ss.data
    x0 = c0.data - ss
    states = []
    for t, u in zip(times, propagators(matrices.h, times)):
        if t == 0:
            states.append(CorrelationMatrix(c0.data.copy()))
        else:
            states.append(CorrelationMatrix(u @ x0 @ u.conj().T + ss))
    return TrajectoryRecord(times=times, states=states, params=matrices.params)


def density_trajectory(
    matrices: DynamicalMatrixSet,
    c0: CorrelationMatrix,
    times: Sequence[float],
    c_ss: CorrelationMatrix | None = None,
) -> np.ndarray:
    """Site occupations along a trajectory without storing full snapshots."""
    times = _check_times(times)
    n = matrices.n_sites
    ss = _steady_or_zero(matrices) if c_ss is None else c_ss.data
    x0 = c0.data - ss
    n_ss = ss.diagonal()[:n].real
    out = np.empty((len(times), n))
    for i, u in enumerate(propagators(matrices.h, times)):
        top = u[:n]
        out[i] = np.einsum("ja,ja->j", top @ x0, top.conj()).real + n_ss
    return out


def superoperator_spectrum(h: np.ndarray) -> SuperoperatorSpectrum:
    """Rates ``E_n - E_m*`` of the vectorized generator, from the 2N eigenvalues."""
    e, v = np.linalg.eig(h)
    cond = float(np.linalg.cond(v))
    values = (e[:, None] - e.conj()[None, :]).ravel()
    return SuperoperatorSpectrum(values=values, condition=cond, approximate=cond > EP_CONDITION)


def vectorized_superoperator(h: np.ndarray, f: np.ndarray, max_sites: int = 8):
    """Dense ``1 (x) H - H* (x) 1`` and column-stacked ``vec(F)``.

    Only meant for cross-checks at small N.
    """
    dim = h.shape[0]
    if dim > 2 * max_sites:
        raise SizeGuard(f"dense superoperator limited to N <= {max_sites}")
    eye = np.eye(dim)
    sup = np.kron(eye, h) - np.kron(h.conj(), eye)
    return sup, np.asarray(f).reshape(-1, order="F")


def steady_state_vectorized(h: np.ndarray, f: np.ndarray) -> CorrelationMatrix:
    sup, vf = vectorized_superoperator(h, f)
    x = np.linalg.solve(sup, -1j * vf)
    return CorrelationMatrix(x.reshape(h.shape, order="F"))


def _require_periodic(params: ModelParams) -> None:
    if not params.is_periodic:
        raise ConfigError("momentum-space evolution requires periodic boundaries")


def steady_state_pbc(params: ModelParams) -> MomentumCorrelation:
    """Per-momentum 2x2 Sylvester solves; only p = q blocks are non-zero."""
    _require_periodic(params)
    n = params.n_sites
    k = momentum_grid(n)
    h, f = bloch_matrices(params, k)
    eye = np.eye(2)
    # column-stacked vec: vec(H X - X H^+) = (1 (x) H - H* (x) 1) vec X
    sup = np.einsum("ab,kcd->kacbd", eye, h).reshape(n, 4, 4) - np.einsum(
        "kab,cd->kacbd", h.conj(), eye
    ).reshape(n, 4, 4)
    for i in range(n):
        _check_rates(h[i], np.linalg.eigvals(h[i]))
    rhs = (-1j * f).transpose(0, 2, 1).reshape(n, 4)
    x = np.linalg.solve(sup, rhs[..., None])[..., 0]
    diag = x.reshape(n, 2, 2).transpose(0, 2, 1)
    blocks = np.zeros((n, n, 2, 2), dtype=complex)
    blocks[np.arange(n), np.arange(n)] = diag
    return MomentumCorrelation(k=k, blocks=blocks)


def propagate_pbc_blocks(
    params: ModelParams, blocks0: MomentumCorrelation, times: Sequence[float]
) -> list[MomentumCorrelation]:
    """Evolve every (p, q) block with ``exp(-iH_p t) X exp(iH_q^+ t)``."""
    _require_periodic(params)
    times = _check_times(times)
    k = momentum_grid(params.n_sites)
    h, _ = bloch_matrices(params, k)
    ss = steady_state_pbc(params).blocks
    x0 = blocks0.blocks - ss
    out = []
    for t in times:
        u = sla.expm(-1j * h * t)
        x = np.einsum("pab,pqbc,qdc->pqad", u, x0, u.conj())
        out.append(MomentumCorrelation(k=k, blocks=x + ss))
    return out


def pbc_density_trajectory(
    params: ModelParams, blocks0: MomentumCorrelation, times: Sequence[float]
) -> np.ndarray:
    return np.array([b.density() for b in propagate_pbc_blocks(params, blocks0, times)])
