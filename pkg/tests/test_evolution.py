import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nrkitaev.errors import ConfigError, SingularDynamics, SizeGuard
from nrkitaev.evolution import (
    density_trajectory,
    pbc_density_trajectory,
    propagate,
    propagate_pbc_blocks,
    steady_state,
    steady_state_pbc,
    steady_state_vectorized,
    superoperator_spectrum,
    sylvester_residual,
    vectorized_superoperator,
)
from nrkitaev.lattice import (
    InitialState,
    MomentumCorrelation,
    build_matrices,
    initial_correlation,
    pbc_block_correlation,
)
from nrkitaev.model import ModelParams, Pairing
from nrkitaev.spectral import multiset_distance


def random_params(rng, n, boundary="open"):
    return ModelParams(
        w=1.0,
        delta=rng.normal(),
        mu=rng.normal(),
        gamma_h=rng.uniform(0.1, 2),
        theta_h=rng.uniform(-3, 3),
        gamma_p=rng.uniform(0, 2),
        theta_p=rng.uniform(-3, 3),
        n_sites=n,
        boundary=boundary,
    )


def test_steady_state_solves_sylvester():
    rng = np.random.default_rng(0)
    for boundary in ("open", "periodic"):
        m = build_matrices(random_params(rng, 12, boundary))
        c = steady_state(m)
        assert sylvester_residual(m, c) < 1e-12
        c.validate(1e-9)


def test_sylvester_matches_vectorized_solve():
    rng = np.random.default_rng(1)
    m = build_matrices(random_params(rng, 5))
    a = steady_state(m).data
    b = steady_state_vectorized(m.h, m.f).data
    assert np.abs(a - b).max() < 1e-11


def test_undriven_chain_relaxes_to_vacuum():
    m = build_matrices(ModelParams(w=1, gamma_h=1.0, theta_h=0.4, n_sites=8))
    assert np.abs(steady_state(m).data).max() < 1e-14


def test_no_dissipation_is_singular():
    m = build_matrices(ModelParams(w=1, delta=0.5, n_sites=6))
    with pytest.raises(SingularDynamics):
        steady_state(m)


def test_propagate_initial_and_late_times():
    p = ModelParams.line(Pairing.COHERENT, 0.4, 10)
    m = build_matrices(p)
    c0 = initial_correlation(InitialState.single_particle(5), 10)
    traj = propagate(m, c0, [0.0, 1.0, 200.0])
    assert np.array_equal(traj.states[0].data, c0.data)
    assert np.abs(traj.states[-1].data - steady_state(m).data).max() < 1e-10


def test_density_trajectory_matches_full_propagation():
    p = ModelParams.line(Pairing.NONRECIPROCAL, 0.3, 12)
    m = build_matrices(p)
    c0 = initial_correlation(InitialState.random_product(2), 12)
    times = np.linspace(0, 6, 13)
    full = propagate(m, c0, times).densities()
    assert np.abs(density_trajectory(m, c0, times) - full).max() < 1e-12


def test_uniform_grid_agrees_with_direct_exponentials():
    rng = np.random.default_rng(3)
    m = build_matrices(random_params(rng, 6))
    c0 = initial_correlation(InitialState.random_product(1), 6)
    grid = np.linspace(0, 30, 601)
    uniform = density_trajectory(m, c0, grid)
    direct = density_trajectory(m, c0, grid[[0, 17, 300, 600]])
    assert np.abs(uniform[[0, 17, 300, 600]] - direct).max() < 1e-10


def test_unsorted_times_rejected():
    m = build_matrices(ModelParams.line(Pairing.COHERENT, 0.4, 4))
    with pytest.raises(ConfigError):
        propagate(m, initial_correlation(InitialState.vacuum(), 4), [1.0, 0.5])


def test_superoperator_spectrum_matches_kronecker():
    rng = np.random.default_rng(5)
    for boundary in ("open", "periodic"):
        m = build_matrices(random_params(rng, 4, boundary))
        sup, _ = vectorized_superoperator(m.h, m.f)
        spec = superoperator_spectrum(m.h)
        assert multiset_distance(np.linalg.eigvals(sup), spec.values) < 1e-10
        assert np.all(spec.values.imag <= 1e-12)


def test_superoperator_flags_exceptional_point():
    m = build_matrices(ModelParams.line(Pairing.NONRECIPROCAL, 1.0, 6))
    assert superoperator_spectrum(m.h).approximate


def test_vectorized_size_guard():
    m = build_matrices(ModelParams.line(Pairing.COHERENT, 0.4, 9))
    with pytest.raises(SizeGuard):
        vectorized_superoperator(m.h, m.f)


def test_pbc_steady_state_matches_wrapped_real_space():
    rng = np.random.default_rng(8)
    for n in (2, 5, 8):
        p = random_params(rng, n, "periodic")
        mc = steady_state_pbc(p)
        real = steady_state(build_matrices(p))
        assert np.abs(mc.to_real_space().data - real.data).max() < 1e-11


def test_pbc_steady_state_is_homogeneous():
    p = ModelParams.line(Pairing.COHERENT, 0.7, 40, boundary="periodic")
    n = steady_state_pbc(p).density()
    assert np.abs(n - n.mean()).max() < 1e-10


def test_pbc_block_dynamics_matches_wrapped_real_space():
    p = ModelParams.line(Pairing.NONRECIPROCAL, 0.4, 8, boundary="periodic")
    c0 = initial_correlation(InitialState.single_particle(3), 8)
    times = [0.0, 0.5, 2.0]
    blocks = propagate_pbc_blocks(p, pbc_block_correlation(c0, 8), times)
    real = propagate(build_matrices(p), c0, times)
    for b, s in zip(blocks, real.states):
        assert np.abs(b.to_real_space().data - s.data).max() < 1e-12
    dens = pbc_density_trajectory(p, MomentumCorrelation.from_real_space(c0), times)
    assert np.abs(dens - real.densities()).max() < 1e-12


def test_momentum_evolution_requires_periodic():
    with pytest.raises(ConfigError):
        steady_state_pbc(ModelParams(n_sites=4, gamma_h=1))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 10), periodic=st.booleans())
def test_structure_preserved_along_trajectory(seed, n, periodic):
    rng = np.random.default_rng(seed)
    p = random_params(rng, n, "periodic" if periodic else "open")
    m = build_matrices(p)
    c0 = initial_correlation(InitialState.random_product(seed), n)
    traj = propagate(m, c0, np.sort(rng.uniform(0, 20, 5)))
    for s in traj.states:
        res = s.structure_residuals()
        assert max(res.values()) < 1e-10, res


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000), s=st.floats(0.01, 5), t=st.floats(0.01, 5))
def test_semigroup_property(seed, s, t):
    rng = np.random.default_rng(seed)
    p = random_params(rng, 6)
    m = build_matrices(p)
    c0 = initial_correlation(InitialState.random_product(seed), 6)
    mid = propagate(m, c0, [s]).states[0]
    two_step = propagate(m, mid, [t]).states[0]
    one_step = propagate(m, c0, [s + t]).states[0]
    assert np.abs(two_step.data - one_step.data).max() < 1e-10
