import numpy as np
import pytest

from meanfield_lab.grid import GridError, WaveFunction, fft, ifft, make_grid
from meanfield_lab.hartree import (
    HartreeState,
    SolverParams,
    h1_diagnostic,
    hartree_energy,
    hartree_evolve,
    hartree_step,
    hartree_trajectory,
    mean_field,
)
from meanfield_lab.initial import from_config, gaussian, harmonic_ground_state, plane_wave
from meanfield_lab.potentials import PotentialSpec, SampledPotential, sample_potential


@pytest.fixture(scope="module")
def setup64():
    g = make_grid(1, 64, 10.0)
    return g, sample_potential(PotentialSpec("yukawa", 0.5, 1.0), g), gaussian(g, width=1.0, momentum=1.0)


def max_energy_drift(phi0, v, dt, t_end=1.0, samples=100):
    e0 = hartree_energy(phi0, v)
    state, worst = HartreeState(phi0), 0.0
    for t in np.linspace(0, t_end, samples + 1)[1:]:
        state = hartree_evolve(state, v, dt, t)
        worst = max(worst, abs(hartree_energy(state.phi, v) - e0) / abs(e0))
    return worst


def test_free_plane_wave_phase():
    g = make_grid(1, 16, 6.0)
    v = sample_potential(PotentialSpec("zero"), g)
    pw = plane_wave(g, 3)
    k1 = 2 * np.pi * 3 / g.L
    out = hartree_step(HartreeState(pw), v, 0.01).phi
    np.testing.assert_allclose(out.coefficients, np.exp(-1j * 0.01 * k1**2) * pw.coefficients, atol=1e-14)


def test_free_gaussian_matches_exact_propagator():
    g = make_grid(1, 64, 10.0)
    v = sample_potential(PotentialSpec("zero"), g)
    phi = gaussian(g, width=0.8, momentum=2.0)
    out = hartree_evolve(HartreeState(phi), v, 1e-2, 0.7).phi
    exact = ifft(np.exp(-1j * 0.7 * g.k_squared) * fft(phi.coefficients))
    assert np.linalg.norm(out.coefficients - exact) < 1e-12


def test_single_step_and_fused_evolution_agree(grid16, yukawa16, packet16):
    state = HartreeState(packet16)
    for _ in range(25):
        state = hartree_step(state, yukawa16, 2e-3)
    fused = hartree_evolve(HartreeState(packet16), yukawa16, 2e-3, 0.05)
    assert np.linalg.norm(state.phi.coefficients - fused.phi.coefficients) < 1e-12
    assert fused.t == pytest.approx(0.05)


def test_self_convergence_order_two(setup64):
    g, v, phi0 = setup64
    ref = hartree_evolve(HartreeState(phi0), v, 1e-4, 0.5).phi.coefficients
    errs = [np.linalg.norm(hartree_evolve(HartreeState(phi0), v, dt, 0.5).phi.coefficients - ref)
            for dt in (1e-3, 5e-4)]
    assert errs[0] < 1e-5
    # err(dt) ~ K (dt^2 - dt_ref^2): the reference shares the leading error term
    expected = (1e-3**2 - 1e-4**2) / (5e-4**2 - 1e-4**2)
    assert errs[0] / errs[1] == pytest.approx(expected, rel=0.1)


def test_mass_conservation_many_steps(grid16, yukawa16, packet16):
    state = HartreeState(packet16)
    for _ in range(1000):
        state = hartree_step(state, yukawa16, 1e-3)
    assert abs(state.phi.norm() - 1.0) < 1e-9


def test_time_reversal(grid16, yukawa16, packet16):
    fwd = hartree_step(HartreeState(packet16), yukawa16, 1e-2)
    back = hartree_step(fwd, yukawa16, -1e-2)
    assert np.linalg.norm(back.phi.coefficients - packet16.coefficients) < 1e-10


def test_gauge_shift_is_global_phase(grid16, yukawa16, packet16):
    shifted = SampledPotential(grid16, yukawa16.values + 0.37)
    a = hartree_evolve(HartreeState(packet16), yukawa16, 1e-3, 0.4).phi
    b = hartree_evolve(HartreeState(packet16), shifted, 1e-3, 0.4).phi
    assert abs(abs(a.vdot(b)) - 1.0) < 1e-9


def test_energy_of_plane_wave():
    g = make_grid(1, 16, 6.0)
    v = sample_potential(PotentialSpec("zero"), g)
    k1 = 2 * np.pi * 2 / g.L
    assert hartree_energy(plane_wave(g, 2), v) == pytest.approx(k1**2, rel=1e-13)


def test_energy_of_constant_state():
    g = make_grid(1, 32, 10.0)
    lam, mu = 0.7, 1.3
    v = sample_potential(PotentialSpec("yukawa", lam, mu), g)
    const = plane_wave(g, 0)
    quad = np.sum(lam * np.exp(-mu * g.torus_distance)) * g.h
    assert hartree_energy(const, v) == pytest.approx(0.5 * quad / g.L, rel=1e-13)


def test_mean_field_is_direct_convolution(grid8, yukawa8, packet8):
    rho = np.abs(packet8.coefficients) ** 2
    M = grid8.M
    direct = np.array([sum(yukawa8.values[(i - j) % M] * rho[j] for j in range(M)) for i in range(M)])
    np.testing.assert_allclose(mean_field(packet8.coefficients, yukawa8), direct, atol=1e-14)


def test_energy_drift_order_two(setup64):
    g, v, phi0 = setup64
    d1 = max_energy_drift(phi0, v, 1e-3)
    d2 = max_energy_drift(phi0, v, 5e-4)
    assert d1 < 1e-8
    assert d1 / d2 == pytest.approx(4.0, rel=0.2)


def test_h1_diagnostic_values():
    g = make_grid(1, 16, 2 * np.pi)
    assert h1_diagnostic(plane_wave(g, 0)) == pytest.approx(1.0, abs=1e-14)
    assert h1_diagnostic(plane_wave(g, 1)) == pytest.approx(np.sqrt(2.0), rel=1e-14)


def test_h1_bounded_along_trajectory(setup64):
    g, v, phi0 = setup64
    times = np.linspace(0.1, 2.0, 20)
    h = [max(h1_diagnostic(s.phi) for s in hartree_trajectory(phi0, v, dt, times)) for dt in (1e-3, 5e-4)]
    assert np.isfinite(h[0])
    assert h[0] == pytest.approx(h[1], rel=0.01)


def test_grid_mismatch_and_nan(grid8, yukawa16):
    with pytest.raises(GridError):
        hartree_step(HartreeState(gaussian(grid8)), yukawa16, 1e-3)


def test_solver_params_validation():
    SolverParams()
    with pytest.raises(ValueError):
        SolverParams(dt=0.0)
    with pytest.raises(ValueError):
        SolverParams(dt=2.0, t_end=1.0)
    with pytest.raises(ValueError):
        SolverParams(splitting_order=4)


def test_initial_data_are_normalized(grid16, yukawa16):
    for cfg in ({"kind": "gaussian", "width": 0.5, "momentum": 2.0}, {"kind": "plane_wave", "n": 2},
                {"kind": "ground_state_of_harmonic_fit", "omega": 2.0}):
        phi = from_config(grid16, cfg, yukawa16)
        assert abs(phi.norm() - 1.0) < 1e-12
    with pytest.raises(ValueError):
        from_config(grid16, {"kind": "triangle"})


def test_harmonic_ground_state_without_interaction():
    g = make_grid(1, 64, 12.0)
    omega = 2.0
    phi = harmonic_ground_state(g, None, omega)
    # -d^2/dx^2 + omega^2 x^2 / 4 has ground state exp(-omega x^2 / 4)
    exact = WaveFunction.from_samples(g, np.exp(-omega * (g.positions - g.L / 2) ** 2 / 4))
    assert abs(abs(phi.vdot(exact)) - 1.0) < 1e-6
