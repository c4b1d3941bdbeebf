"""Brute-force Lindblad dynamics on the full Fock space.

Only meant for small chains (N <= 6): the Liouvillian acts on vectorized
density matrices of dimension 4^N. Every correlation-matrix result can be
certified against it.

Sign convention: ``c_j = Z x ... x Z x a x 1 x ... x 1`` with parity strings
over sites 1..j-1 and ``a = |0><1|`` on site j. Density matrices are
vectorized column-major, so ``vec(A X B) = (B^T kron A) vec(X)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.linalg as sla

from .errors import PhysicalityViolation, SizeGuard
from .lattice import CorrelationMatrix
from .model import ModelParams

MAX_SITES = 6
MAX_EVOLVE_SITES = 5


@dataclass(frozen=True, eq=False)
class FockOperatorSet:
    annihilation: tuple[np.ndarray, ...]

    @property
    def n_sites(self) -> int:
        return len(self.annihilation)

    @property
    def dim(self) -> int:
        return 2**self.n_sites

    @property
    def creation(self) -> tuple[np.ndarray, ...]:
        return tuple(c.conj().T for c in self.annihilation)

    def number(self, j: int) -> np.ndarray:
        """Occupation operator of 0-based site ``j``."""
        c = self.annihilation[j]
        return c.conj().T @ c


@dataclass(frozen=True)
class OracleSteadyState:
    rho: np.ndarray
    degenerate: bool


def fock_operators(n_sites: int) -> FockOperatorSet:
    if n_sites > MAX_SITES:
        raise SizeGuard(f"Fock-space oracle limited to N <= {MAX_SITES}")
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2, dtype=complex)
    ops = tuple(
        reduce(np.kron, [z] * j + [a] + [eye] * (n_sites - j - 1)) for j in range(n_sites)
    )
    return FockOperatorSet(ops)


def _bonds(params: ModelParams) -> list[tuple[int, int]]:
    n = params.n_sites
    if params.is_periodic:
        return [(j, (j + 1) % n) for j in range(n)]
    return [(j, j + 1) for j in range(n - 1)]


def hamiltonian(params: ModelParams, ops: FockOperatorSet) -> np.ndarray:
    """``sum_bonds [-w (c_j^+ c_k + h.c.) + (D c_j^+ c_k^+ + h.c.)] - mu sum_j n_j``."""
    c, cd = ops.annihilation, ops.creation
    h = np.zeros((ops.dim, ops.dim), dtype=complex)
    d = complex(params.delta)
    for j, k in _bonds(params):
        h += -params.w * (cd[j] @ c[k] + cd[k] @ c[j])
        h += d * cd[j] @ cd[k] + np.conj(d) * c[k] @ c[j]
    for j in range(ops.n_sites):
        h -= params.mu * ops.number(j)
    return h


def jump_operators(params: ModelParams, ops: FockOperatorSet) -> list[np.ndarray]:
    """Hopping-type ``sqrt(Gh)(c_j + e^{i th_h} c_{j+1})`` and pairing-type
    ``sqrt(Gp)(c_j + e^{i th_p} c_{j+1}^+)`` jumps.

    Open chains use j = 0..N (1-based), dropping terms that refer to sites
    outside the chain, which keeps the on-site loss uniform.
    """
    n, dim = ops.n_sites, ops.dim
    c, cd = ops.annihilation, ops.creation
    eh = np.exp(1j * params.theta_h)
    ep = np.exp(1j * params.theta_p)
    if params.is_periodic:
        pairs = _bonds(params)
    else:
        pairs = [(j, j + 1) for j in range(-1, n)]
    jumps = []
    for j, k in pairs:
        hop = np.zeros((dim, dim), dtype=complex)
        pair = np.zeros((dim, dim), dtype=complex)
        if 0 <= j < n:
            hop += c[j]
            pair += c[j]
        if 0 <= k < n:
            hop += eh * c[k]
            pair += ep * cd[k]
        if params.gamma_h > 0:
            jumps.append(np.sqrt(params.gamma_h) * hop)
        if params.gamma_p > 0:
            jumps.append(np.sqrt(params.gamma_p) * pair)
    return jumps


def build_liouvillian(params: ModelParams) -> np.ndarray:
    """Dense ``4^N x 4^N`` generator of ``d vec(rho)/dt``."""
    if params.n_sites > MAX_SITES:
        raise SizeGuard(f"Liouvillian limited to N <= {MAX_SITES}")
    ops = fock_operators(params.n_sites)
    h = hamiltonian(params, ops)
    eye = np.eye(ops.dim)
    gen = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for jump in jump_operators(params, ops):
        jdj = jump.conj().T @ jump
        gen += np.kron(jump.conj(), jump) - 0.5 * np.kron(eye, jdj) - 0.5 * np.kron(jdj.T, eye)
    return gen


def _sites_of(liouvillian: np.ndarray) -> int:
    return int(round(np.log2(liouvillian.shape[0]) / 2))


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    dim = int(round(np.sqrt(v.size)))
    return v.reshape(dim, dim, order="F")


def check_density_matrix(rho: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    if np.abs(rho - rho.conj().T).max() > tol:
        raise PhysicalityViolation("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > 10 * tol:
        raise PhysicalityViolation("density matrix trace differs from 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -tol:
        raise PhysicalityViolation("density matrix has a negative eigenvalue")
    return rho


def product_density_matrix(occupations) -> np.ndarray:
    """Fock product state; ``occupations`` lists 0/1 per site, site 1 first."""
    index = int("".join(str(int(x)) for x in occupations), 2)
    dim = 2 ** len(occupations)
    rho = np.zeros((dim, dim), dtype=complex)
    rho[index, index] = 1.0
    return rho


def evolve_exact(liouvillian: np.ndarray, rho0: np.ndarray, times) -> list[np.ndarray]:
    """``rho(t) = exp(L t) rho0`` for each requested time."""
    if _sites_of(liouvillian) > MAX_EVOLVE_SITES:
        raise SizeGuard(f"dense exponentials limited to N <= {MAX_EVOLVE_SITES}")
    check_density_matrix(rho0)
    v0 = vec(rho0)
    return [rho0.copy() if t == 0 else unvec(sla.expm(liouvillian * t) @ v0) for t in times]


def correlations_exact(rho: np.ndarray, ops: FockOperatorSet | None = None) -> CorrelationMatrix:
    """``G_lm = tr(rho c_l^+ c_m)``, ``F_lm = tr(rho c_l^+ c_m^+)`` in block form."""
    n = int(round(np.log2(rho.shape[0])))
    ops = fock_operators(n) if ops is None else ops
    c, cd = ops.annihilation, ops.creation
    # tr(rho A B) = sum((rho A)^T * B)
    g = np.empty((n, n), dtype=complex)
    f = np.empty((n, n), dtype=complex)
    for l in range(n):
        left = (rho @ cd[l]).T
        for m in range(n):
            g[l, m] = np.sum(left * c[m])
            f[l, m] = np.sum(left * cd[m])
    return CorrelationMatrix.from_blocks(g, f)


def expectation(rho: np.ndarray, op: np.ndarray) -> complex:
    return complex(np.sum(rho.T * op))


def steady_state_exact(liouvillian: np.ndarray, null_tol: float = 1e-9) -> OracleSteadyState:
    """Null right-singular vector of L, normalized to unit trace.

    ``degenerate`` is set when more than one singular value falls below
    ``null_tol`` times the largest.
    """
    _, s, vh = np.linalg.svd(liouvillian)
    degenerate = bool(s[-2] < null_tol * s[0])
    rho = unvec(vh[-1].conj())
    rho = rho / np.trace(rho)
    return OracleSteadyState(rho=0.5 * (rho + rho.conj().T), degenerate=degenerate)
