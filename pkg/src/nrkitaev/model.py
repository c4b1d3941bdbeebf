"""Physical parameters of the dissipative Kitaev chain and derived couplings."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


class Boundary(str, enum.Enum):
    OPEN = "open"
    PERIODIC = "periodic"


class Pairing(str, enum.Enum):
    """The two parameter lines studied throughout the package.

    Both fix ``gamma_h = 2w``, ``theta_h = pi/2`` and ``mu = 0``.
    ``COHERENT`` has no dissipative pairing; ``NONRECIPROCAL`` sets
    ``gamma_p = 2 delta`` with ``theta_p = -pi/2`` so that pairing and
    hopping share the same direction.
    """

    COHERENT = "coherent"
    NONRECIPROCAL = "nonreciprocal"


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the chain. ``w`` sets the energy unit.

    ``delta`` may be complex; every other coupling is real.
    """

    w: float = 1.0
    delta: complex = 0.0
    mu: float = 0.0
    gamma_h: float = 0.0
    theta_h: float = 0.0
    gamma_p: float = 0.0
    theta_p: float = 0.0
    n_sites: int = 2
    boundary: Boundary = Boundary.OPEN

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if isinstance(self.delta, complex) and self.delta.imag == 0:
            object.__setattr__(self, "delta", self.delta.real)
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ConfigError(f"n_sites must be an integer >= 2, got {self.n_sites}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        if self.gamma_h < 0 or self.gamma_p < 0:
            raise ConfigError("dissipation rates must be non-negative")
        for name in ("theta_h", "theta_p"):
            if abs(getattr(self, name)) > math.pi + 1e-12:
                raise ConfigError(f"{name} must lie in [-pi, pi]")
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (int, float, complex)) and not np.isfinite(v):
                raise ConfigError(f"{f.name} must be finite")

    def replace(self, **changes) -> ModelParams:
        return dataclasses.replace(self, **changes)

    @property
    def is_periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    @classmethod
    def line(
        cls,
        pairing: Pairing | str,
        delta: float,
        n_sites: int,
        boundary: Boundary | str = Boundary.OPEN,
        w: float = 1.0,
    ) -> ModelParams:
        """Parameters on one of the two standard lines (see :class:`Pairing`)."""
        pairing = Pairing(pairing)
        gamma_p = 0.0 if pairing is Pairing.COHERENT else 2.0 * delta
        return cls(
            w=w,
            delta=delta,
            mu=0.0,
            gamma_h=2.0 * w,
            theta_h=math.pi / 2,
            gamma_p=gamma_p,
            theta_p=-math.pi / 2,
            n_sites=n_sites,
            boundary=boundary,
        )


@dataclass(frozen=True)
class DerivedCouplings:
    w_r: complex
    w_l: complex
    delta_r: complex
    delta_l: complex


@dataclass(frozen=True)
class MomentumCouplings:
    k: float
    xi_k: float
    gamma_h_k: float
    gamma_p_k: complex


def _unit_phase(theta: float) -> complex:
    # exact zeros at multiples of pi/2 keep w_r = 0 exactly on the standard lines
    c, s = math.cos(theta), math.sin(theta)
    if abs(c) < 1e-15:
        c = 0.0
    if abs(s) < 1e-15:
        s = 0.0
    return complex(c, s)


def derive_couplings(params: ModelParams) -> DerivedCouplings:
    """Effective right/left hopping and pairing produced by the dissipators."""
    eh = _unit_phase(params.theta_h)
    ep = _unit_phase(params.theta_p)
    half_h = 0.5 * params.gamma_h
    half_p = 0.5 * params.gamma_p
    return DerivedCouplings(
        w_r=params.w - 1j * half_h * eh.conjugate(),
        w_l=params.w - 1j * half_h * eh,
        delta_r=params.delta - 1j * half_p * ep,
        delta_l=params.delta + 1j * half_p * ep,
    )


def gamma_h_k(params: ModelParams, k):
    return params.gamma_h * (1.0 + np.cos(np.asarray(k) + params.theta_h))


def gamma_p_k(params: ModelParams, k):
    return params.gamma_p * _unit_phase(params.theta_p) * np.cos(np.asarray(k))


def xi_k(params: ModelParams, k):
    return -(2.0 * params.w * np.cos(np.asarray(k)) + params.mu)


def momentum_couplings(params: ModelParams, k: float) -> MomentumCouplings:
    if not params.is_periodic:
        raise ConfigError("momentum couplings require periodic boundaries")
    return MomentumCouplings(
        k=float(k),
        xi_k=float(xi_k(params, k)),
        gamma_h_k=float(gamma_h_k(params, k)),
        gamma_p_k=complex(gamma_p_k(params, k)),
    )


def momentum_grid(n_sites: int) -> np.ndarray:
    """Momenta 2 pi n / N for n = 1..N, folded into (-pi, pi].

    The order follows n, so index N-1 is k = 0.
    """
    if n_sites < 2:
        raise ConfigError("n_sites must be >= 2")
    n = np.arange(1, n_sites + 1)
    m = np.where(2 * n <= n_sites, n, n - n_sites)
    return np.pi * (2 * m) / n_sites


def minus_k_index(n_sites: int) -> np.ndarray:
    """Index permutation mapping each grid momentum k to the index of -k."""
    n = np.arange(1, n_sites + 1)
    partner = (-n) % n_sites
    partner[partner == 0] = n_sites
    return partner - 1
