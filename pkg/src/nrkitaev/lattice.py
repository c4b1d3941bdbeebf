"""Real-space and Bloch dynamical matrices, noise terms and initial states.

Layout convention: rows/columns ``0..N-1`` form the particle sector and
``N..2N-1`` the hole sector; site label ``j`` (1-based, as used for initial
states) sits at index ``j - 1`` in each sector. The correlation matrix is

    C = [[G, F], [-F*, -G*]],   G_lm = <c_l^+ c_m>,  F_lm = <c_l^+ c_m^+>

and evolves as ``dC/dt = -i (H C - C H^+) + F_noise``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, PhysicalityViolation
from .model import (
    Boundary,
    ModelParams,
    derive_couplings,
    gamma_h_k,
    gamma_p_k,
    momentum_grid,
    xi_k,
)


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1] or data.shape[0] % 2:
            raise ValueError(f"expected a 2N x 2N matrix, got shape {data.shape}")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_blocks(cls, g: np.ndarray, f: np.ndarray) -> CorrelationMatrix:
        g = np.asarray(g, dtype=complex)
        f = np.asarray(f, dtype=complex)
        return cls(np.block([[g, f], [-f.conj(), -g.conj()]]))

    @property
    def n_sites(self) -> int:
        return self.data.shape[0] // 2

    @property
    def g(self) -> np.ndarray:
        n = self.n_sites
        return self.data[:n, :n]

    @property
    def f(self) -> np.ndarray:
        n = self.n_sites
        return self.data[:n, n:]

    def density(self) -> np.ndarray:
        return self.g.diagonal().real.copy()

    def structure_residuals(self) -> dict[str, float]:
        """Deviations from the constraints every physical state satisfies.

        ``occupation`` is how far the spectrum of G leaves [0, 1].
        """
        n = self.n_sites
        g, f = self.g, self.f
        occ = np.linalg.eigvalsh(0.5 * (g + g.conj().T))
        return {
            "g_hermitian": float(np.abs(g - g.conj().T).max()),
            "f_antisymmetric": float(np.abs(f + f.T).max()),
            "lower_left": float(np.abs(self.data[n:, :n] + f.conj()).max()),
            "lower_right": float(np.abs(self.data[n:, n:] + g.conj()).max()),
            "occupation": float(max(0.0, -occ.min(), occ.max() - 1.0)),
            "trace": float(abs(np.trace(self.data))),
        }

    def validate(self, tol: float = 1e-9) -> CorrelationMatrix:
        bad = {k: v for k, v in self.structure_residuals().items() if v > tol}
        if bad:
            raise PhysicalityViolation(f"invalid correlation matrix: {bad}")
        return self


@dataclass(frozen=True, eq=False)
class DynamicalMatrixSet:
    h: np.ndarray
    f: np.ndarray
    boundary: Boundary
    params: ModelParams | None = None

    @property
    def n_sites(self) -> int:
        return self.h.shape[0] // 2


@dataclass(frozen=True, eq=False)
class BlochBlockSet:
    k: float
    h_k: np.ndarray
    f_k: np.ndarray


def _assemble(params: ModelParams, wrap: bool) -> DynamicalMatrixSet:
    n = params.n_sites
    c = derive_couplings(params)
    h = np.zeros((2 * n, 2 * n), dtype=complex)
    f = np.zeros((2 * n, 2 * n), dtype=complex)
    gamma = params.gamma_h + params.gamma_p
    idx = np.arange(n)
    h[idx, idx] = -(1j * gamma - params.mu)
    h[n + idx, n + idx] = -(1j * gamma + params.mu)
    f[idx, idx] = params.gamma_p
    f[n + idx, n + idx] = -params.gamma_p

    # bonds (l, l+1); OBC drops the bond leaving the chain instead of wrapping it
    left = idx if wrap else idx[:-1]
    right = (left + 1) % n
    dr_c = np.conj(c.delta_r)
    dl_c = np.conj(c.delta_l)
    # += so that N = 2 with periodic wrap accumulates both bonds
    np.add.at(h, (left, right), c.w_r)
    np.add.at(h, (right, left), c.w_l)
    np.add.at(h, (left, n + right), -dr_c)
    np.add.at(h, (right, n + left), dl_c)
    np.add.at(h, (n + left, n + right), -np.conj(c.w_r))
    np.add.at(h, (n + right, n + left), -np.conj(c.w_l))
    np.add.at(h, (n + left, right), c.delta_r)
    np.add.at(h, (n + right, left), -c.delta_l)

    np.add.at(f, (left, n + right), 1j * dr_c)
    np.add.at(f, (right, n + left), -1j * dr_c)
    np.add.at(f, (n + left, right), 1j * c.delta_r)
    np.add.at(f, (n + right, left), -1j * c.delta_r)

    h.setflags(write=False)
    f.setflags(write=False)
    return DynamicalMatrixSet(h=h, f=f, boundary=params.boundary, params=params)


def build_obc(params: ModelParams) -> DynamicalMatrixSet:
    if params.is_periodic:
        raise ConfigError("build_obc requires open boundaries")
    return _assemble(params, wrap=False)


def build_pbc_wrapped(params: ModelParams) -> DynamicalMatrixSet:
    """Real-space periodic chain: the open chain plus the bond N -> 1."""
    if not params.is_periodic:
        raise ConfigError("build_pbc_wrapped requires periodic boundaries")
    return _assemble(params, wrap=True)


def build_matrices(params: ModelParams) -> DynamicalMatrixSet:
    return build_pbc_wrapped(params) if params.is_periodic else build_obc(params)


def bloch_matrices(params: ModelParams, k) -> tuple[np.ndarray, np.ndarray]:
    """Stacked 2x2 Bloch matrices and momentum-diagonal noise for an array of k."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    c = derive_couplings(params)
    xi = xi_k(params, k)
    gp = gamma_p_k(params, k)
    s = np.sin(k)
    pair = 2.0 * params.delta * s
    h = np.empty(k.shape + (2, 2), dtype=complex)
    h[..., 0, 0] = -(xi + 1j * gamma_h_k(params, k)) - 1j * params.gamma_p
    h[..., 0, 1] = 1j * np.conj(pair - gp)
    h[..., 1, 0] = -1j * (pair + gp)
    h[..., 1, 1] = (xi - 1j * gamma_h_k(params, -k)) - 1j * params.gamma_p
    off = 2.0 * np.conj(c.delta_r) * s
    f = np.empty_like(h)
    f[..., 0, 0] = params.gamma_p
    f[..., 1, 1] = -params.gamma_p
    f[..., 0, 1] = off
    f[..., 1, 0] = np.conj(off)
    return h, f


def build_bloch(params: ModelParams, k: float) -> BlochBlockSet:
    if not params.is_periodic:
        raise ConfigError("build_bloch requires periodic boundaries")
    h, f = bloch_matrices(params, k)
    return BlochBlockSet(k=float(k), h_k=h[0], f_k=f[0])


@dataclass(frozen=True)
class InitialState:
    """Product initial states with F = 0. Site labels are 1-based."""

    kind: str
    site: int | None = None
    occupations: tuple[int, ...] | None = None
    seed: int | None = None

    @classmethod
    def vacuum(cls) -> InitialState:
        return cls("vacuum")

    @classmethod
    def single_particle(cls, site: int) -> InitialState:
        return cls("single_particle", site=int(site))

    @classmethod
    def product(cls, occupations: Sequence[int]) -> InitialState:
        return cls("product", occupations=tuple(int(x) for x in occupations))

    @classmethod
    def random_product(cls, seed: int) -> InitialState:
        return cls("random_product", seed=int(seed))


def initial_occupations(state: InitialState, n_sites: int) -> np.ndarray:
    occ = np.zeros(n_sites)
    if state.kind == "vacuum":
        pass
    elif state.kind == "single_particle":
        if state.site is None or not 1 <= state.site <= n_sites:
            raise ConfigError(f"site {state.site} outside 1..{n_sites}")
        occ[state.site - 1] = 1.0
    elif state.kind == "product":
        if state.occupations is None or len(state.occupations) != n_sites:
            raise ConfigError("occupation list must have one entry per site")
        if any(x not in (0, 1) for x in state.occupations):
            raise ConfigError("occupations must be 0 or 1")
        occ[:] = state.occupations
    elif state.kind == "random_product":
        rng = np.random.default_rng(state.seed)
        occ[:] = rng.integers(0, 2, size=n_sites)
    else:
        raise ConfigError(f"unknown initial state kind {state.kind!r}")
    return occ


def initial_correlation(state: InitialState, n_sites: int) -> CorrelationMatrix:
    occ = initial_occupations(state, n_sites)
    return CorrelationMatrix.from_blocks(np.diag(occ), np.zeros((n_sites, n_sites)))


def fourier_matrix(n_sites: int) -> np.ndarray:
    """Unitary U[l, p] = exp(-i k_p l) / sqrt(N), sites l = 1..N."""
    k = momentum_grid(n_sites)
    sites = np.arange(1, n_sites + 1)
    return np.exp(-1j * np.outer(sites, k)) / np.sqrt(n_sites)


@dataclass(frozen=True, eq=False)
class MomentumCorrelation:
    """Momentum-resolved correlation blocks.

    ``blocks[p, q]`` is the 2x2 block for the grid momenta ``k[p]``, ``k[q]``:
    ``[[G_pq, F_{p,-q}], [-F*_{-p,q}, -G*_{-p,-q}]]``.
    """

    k: np.ndarray
    blocks: np.ndarray = field(repr=False)

    @property
    def n_sites(self) -> int:
        return len(self.k)

    def diagonal(self) -> np.ndarray:
        """The same-momentum blocks, shape (N, 2, 2)."""
        i = np.arange(self.n_sites)
        return self.blocks[i, i]

    def to_momentum_matrix(self) -> np.ndarray:
        n = self.n_sites
        return self.blocks.transpose(2, 0, 3, 1).reshape(2 * n, 2 * n)

    def to_real_space(self) -> CorrelationMatrix:
        u = np.kron(np.eye(2), fourier_matrix(self.n_sites))
        return CorrelationMatrix(u @ self.to_momentum_matrix() @ u.conj().T)

    def density(self) -> np.ndarray:
        """Real-space occupations (1/N) sum_pq exp(-i(p-q)j) G_pq."""
        u = fourier_matrix(self.n_sites)
        g = self.blocks[:, :, 0, 0]
        return np.einsum("jp,pq,jq->j", u, g, u.conj()).real

    @classmethod
    def from_real_space(cls, corr: CorrelationMatrix) -> MomentumCorrelation:
        n = corr.n_sites
        u = np.kron(np.eye(2), fourier_matrix(n))
        mom = u.conj().T @ corr.data @ u
        blocks = mom.reshape(2, n, 2, n).transpose(1, 3, 0, 2).copy()
        return cls(k=momentum_grid(n), blocks=blocks)


def pbc_block_correlation(
    state: InitialState | CorrelationMatrix, n_sites: int
) -> MomentumCorrelation:
    if isinstance(state, InitialState):
        state = initial_correlation(state, n_sites)
    if state.n_sites != n_sites:
        raise ConfigError("state size does not match n_sites")
    return MomentumCorrelation.from_real_space(state)
