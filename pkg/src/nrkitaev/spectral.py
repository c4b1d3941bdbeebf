"""Spectra of the dynamical matrix and the transition diagnostics built on them.

The open-chain matrix is strongly non-normal (on the standard lines the
right hopping vanishes), so its double-precision eigenvalues track the
pseudospectrum rather than the exact-arithmetic spectrum. All open-chain
diagnostics here are defined on the LAPACK eigenvalues on purpose.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .errors import ConfigError, NotBracketed
from .lattice import bloch_matrices, build_obc
from .model import ModelParams, gamma_p_k, momentum_grid, xi_k

GAP_TOL = 0.25
ZERO_TOL = 1e-3
BW_TOL = 1e-3
EP_RADIUS_RTOL = 1e-6
EP_CONDITION = 1e8
KSTAR_GRID = 400
EP_PERTURBATION = 1e-14


@dataclass(frozen=True, eq=False)
class SpectralSummary:
    eigenvalues: np.ndarray
    real_gap: float
    imag_bandwidth: float
    zero_mode_count: int
    ep_flag: bool
    cluster_radius: float
    condition: float
    kstar: float | None = None


def real_gap(eigenvalues: np.ndarray, zero_tol: float = ZERO_TOL) -> float:
    """Distance from Re E = 0 to the closest eigenvalue that is not a zero mode."""
    re = np.abs(np.real(eigenvalues))
    rest = re[re >= zero_tol]
    return float(rest.min()) if rest.size else 0.0


def multiset_distance(a, b) -> float:
    """Largest deviation under the optimal one-to-one matching of two eigenvalue sets."""
    a = np.ravel(a)
    b = np.ravel(b)
    if a.size != b.size:
        raise ValueError("multisets of different size")
    rows, cols = linear_sum_assignment(np.abs(a[:, None] - b[None, :]))
    return float(np.abs(a[rows] - b[cols]).max(initial=0.0))


def imag_bandwidth(eigenvalues: np.ndarray) -> float:
    im = np.imag(eigenvalues)
    return float(im.max() - im.min())


def perturbed_cluster_radius(h: np.ndarray, eta: float = EP_PERTURBATION, seed: int = 0) -> float:
    """Eigenvalue spread of ``h`` after a fixed random perturbation of relative size ``eta``."""
    rng = np.random.default_rng(seed)
    r = rng.normal(size=h.shape) + 1j * rng.normal(size=h.shape)
    r /= np.linalg.norm(r, 2)
    e = np.linalg.eigvals(h + eta * np.linalg.norm(h, 2) * r)
    return float(np.abs(e - e.mean()).max())


def summarize(
    eigenvalues: np.ndarray,
    vectors: np.ndarray | None = None,
    scale: float = 1.0,
    zero_tol: float = ZERO_TOL,
    kstar: float | None = None,
    radius: float | None = None,
) -> SpectralSummary:
    """Diagnostics of an eigenvalue set.

    ``radius`` overrides the plain spread ``max |E - mean(E)|`` used for the
    exceptional-point flag.
    """
    e = np.asarray(eigenvalues)
    if radius is None:
        radius = float(np.abs(e - e.mean()).max())
    cond = float(np.linalg.cond(vectors)) if vectors is not None else float("nan")
    ep = radius < EP_RADIUS_RTOL * scale and cond > EP_CONDITION
    return SpectralSummary(
        eigenvalues=e,
        real_gap=real_gap(e, zero_tol),
        imag_bandwidth=imag_bandwidth(e),
        zero_mode_count=int((np.abs(e.real) < zero_tol).sum()),
        ep_flag=bool(ep),
        cluster_radius=radius,
        condition=cond,
        kstar=kstar,
    )


def obc_spectrum(
    params: ModelParams, zero_tol: float = ZERO_TOL, detect_ep: bool = True
) -> SpectralSummary:
    """Open-chain spectrum and diagnostics.

    With ``detect_ep=False`` the perturbed cluster radius and the eigenvector
    condition number are skipped (NaN radius, flag False), which halves the
    cost inside gap and bandwidth scans.
    """
    h = build_obc(params).h
    if not detect_ep:
        e = np.linalg.eigvals(h)
        return summarize(e, None, zero_tol=zero_tol, radius=float("nan"))
    e, v = np.linalg.eig(h)
    return summarize(
        e, v, scale=np.linalg.norm(h, 2), zero_tol=zero_tol, radius=perturbed_cluster_radius(h)
    )


def bloch_spectrum_numeric(params: ModelParams, k) -> np.ndarray:
    """Eigenvalues of the 2x2 Bloch matrices, shape (len(k), 2)."""
    h, _ = bloch_matrices(params, k)
    return np.linalg.eigvals(h)


def bloch_spectrum_analytic(params: ModelParams, k):
    """Closed-form Bloch eigenvalues ``(h_plus, h_minus)``.

    The pairing cross term is written with ``Im(conj(delta) e^{i theta_p})`` so
    that complex ``delta`` is covered; for real ``delta`` it reduces to
    ``delta sin(theta_p)``. For array input the square-root sign is chosen point by point to stay
    continuous along the array; the unordered pair is branch independent.
    """
    scalar = np.ndim(k) == 0
    k = np.atleast_1d(np.asarray(k, dtype=float))
    gh, th = params.gamma_h, params.theta_h
    gp, tp = params.gamma_p, params.theta_p
    d = params.delta
    xi = xi_k(params, k)
    s, c = np.sin(k), np.cos(k)
    center = -1j * (gh * (1.0 + c * np.cos(th)) + gp)
    disc = (
        xi**2
        + 4.0 * abs(d) ** 2 * s**2
        - np.abs(gamma_p_k(params, k)) ** 2
        + 4j * gp * np.imag(np.conj(d) * np.exp(1j * tp)) * s * c
        - gh * np.sin(th) * s * (2j * xi + gh * np.sin(th) * s)
    )
    root = np.sqrt(disc.astype(complex))
    for i in range(1, len(root)):
        if abs(root[i] + root[i - 1]) < abs(root[i] - root[i - 1]):
            root[i] = -root[i]
    plus, minus = center + root, center - root
    if scalar:
        return complex(plus[0]), complex(minus[0])
    return plus, minus


def kstar(params: ModelParams, n_grid: int = KSTAR_GRID) -> float:
    """Momentum of the slowest-decaying Bloch mode on an ``n_grid`` grid.

    Ties go to the smaller |k|, then to positive k.
    """
    k = momentum_grid(n_grid)
    plus, minus = bloch_spectrum_analytic(params, k)
    im = np.maximum(plus.imag, minus.imag)
    top = im.max()
    tol = 1e-9 * max(1.0, abs(top))
    cand = np.flatnonzero(im >= top - tol)
    order = sorted(cand, key=lambda i: (round(abs(k[i]), 12), -k[i]))
    return float(k[order[0]])


class Criterion(str, enum.Enum):
    GAP_OPENING = "gap_opening"
    BANDWIDTH_COLLAPSE = "bandwidth_collapse"
    EXCEPTIONAL_POINT = "exceptional_point"


def _onset(flags: np.ndarray) -> int | None:
    """Index where the final all-true run of ``flags`` starts."""
    if not flags[-1]:
        return None
    false = np.flatnonzero(~flags)
    return 0 if false.size == 0 else int(false[-1]) + 1


def critical_delta_scan(
    template: ModelParams,
    deltas,
    criterion: Criterion | str,
    gap_tol: float = GAP_TOL,
    bw_tol: float = BW_TOL,
    zero_tol: float = ZERO_TOL,
    resolution: float = 1e-3,
    line_gamma_p: float | None = None,
) -> float:
    """Critical pairing amplitude along ``template`` with ``delta`` varied.

    ``line_gamma_p`` is the ratio gamma_p / delta kept fixed while scanning
    (2 on the non-reciprocal line); None keeps the template's gamma_p.
    Threshold criteria return the onset of the last uninterrupted run where
    the criterion holds, refined by bisection to ``resolution``.
    """
    criterion = Criterion(criterion)
    deltas = np.asarray(sorted(deltas), dtype=float)
    if deltas.size < 2:
        raise ConfigError("need at least two scan points")

    def at(delta):
        changes = {"delta": float(delta)}
        if line_gamma_p is not None:
            changes["gamma_p"] = line_gamma_p * float(delta)
        detect = criterion is Criterion.EXCEPTIONAL_POINT
        return obc_spectrum(template.replace(**changes), zero_tol=zero_tol, detect_ep=detect)

    if criterion is Criterion.EXCEPTIONAL_POINT:
        radius = np.array([at(d).cluster_radius for d in deltas])
        i = int(np.argmin(radius))
        lo, hi = deltas[max(i - 1, 0)], deltas[min(i + 1, len(deltas) - 1)]
        res = minimize_scalar(
            lambda d: at(d).cluster_radius,
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": resolution * 1e-2},
        )
        best = float(res.x) if at(res.x).cluster_radius <= radius[i] else float(deltas[i])
        if not at(best).ep_flag:
            raise NotBracketed("no exceptional point found in the scanned window")
        return best

    def holds(delta) -> bool:
        s = at(delta)
        if criterion is Criterion.GAP_OPENING:
            return s.real_gap > gap_tol
        return s.imag_bandwidth < bw_tol

    flags = np.array([holds(d) for d in deltas])
    i = _onset(flags)
    if i is None:
        raise NotBracketed(f"{criterion.value} never holds up to delta={deltas[-1]}")
    if i == 0:
        return float(deltas[0])
    lo, hi = deltas[i - 1], deltas[i]
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            hi = mid
        else:
            lo = mid
    return float(0.5 * (lo + hi))
