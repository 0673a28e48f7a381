import numpy as np
import pytest

from meanfield_lab.grid import GridError, WaveFunction, make_grid
from meanfield_lab.manybody import ManyBodyState, initial_product_state, tensor_power
from meanfield_lab.marginals import (
    OneBodyProjectorPair,
    hartree_projector,
    partial_trace,
    pickl_functional,
    pickl_routes,
    trace_out_last,
)
from meanfield_lab.suites import random_pair, random_symmetric_state, random_wavefunction
from meanfield_lab.trace_norms import spectral_norms


def orthogonal_pair(grid, rng):
    phi = random_wavefunction(grid, rng)
    chi = random_wavefunction(grid, rng).coefficients
    chi = chi - np.vdot(phi.coefficients, chi) * phi.coefficients
    return phi, WaveFunction(grid, chi / np.linalg.norm(chi))


def test_product_marginals(grid8, rng):
    phi = random_wavefunction(grid8, rng)
    s = initial_product_state(phi, 3)
    for k in (1, 2, 3):
        g = partial_trace(s, k)
        g.check()
        np.testing.assert_allclose(g.matrix, hartree_projector(phi, k).matrix, atol=1e-12)
        lam = g.eigenvalues()
        assert lam[-1] == pytest.approx(1.0, abs=1e-12) and np.all(np.abs(lam[:-1]) < 1e-12)


def test_schmidt_form(grid8, rng):
    phi, chi = orthogonal_pair(grid8, rng)
    psi = (np.multiply.outer(phi.coefficients, chi.coefficients) + np.multiply.outer(chi.coefficients, phi.coefficients)) / np.sqrt(2)
    g = partial_trace(ManyBodyState(grid8, 2, psi), 1).matrix
    expected = 0.5 * np.outer(phi.coefficients, phi.coefficients.conj()) + 0.5 * np.outer(chi.coefficients, chi.coefficients.conj())
    np.testing.assert_allclose(g, expected, atol=1e-12)


def test_nested_traces_against_index_sum(grid8, rng):
    psi = random_symmetric_state(grid8, 3, rng)
    s = ManyBodyState(grid8, 3, psi)
    g2 = partial_trace(s, 2)
    g2.check()
    direct2 = np.einsum("abx,cdx->abcd", psi, psi.conj()).reshape(64, 64)
    np.testing.assert_allclose(g2.matrix, direct2, atol=1e-12)
    direct1 = np.einsum("axy,bxy->ab", psi, psi.conj())
    np.testing.assert_allclose(trace_out_last(g2).matrix, direct1, atol=1e-12)
    np.testing.assert_allclose(partial_trace(s, 1).matrix, trace_out_last(g2).matrix, atol=1e-11)
    assert abs(g2.trace() - 1.0) < 1e-12


def test_partial_trace_guards(grid8, grid16, packet16):
    s = initial_product_state(packet16, 4)
    with pytest.raises(ValueError):
        partial_trace(s, 0)
    with pytest.raises(GridError):
        partial_trace(s, 4)


def test_pickl_product_is_zero(grid8, rng):
    phi = random_wavefunction(grid8, rng)
    assert pickl_functional(initial_product_state(phi, 3), phi) == pytest.approx(0.0, abs=1e-14)


def test_pickl_two_condensates(grid8, rng):
    phi, chi = orthogonal_pair(grid8, rng)
    eps = 0.137
    psi = np.sqrt(1 - eps) * tensor_power([phi.coefficients] * 2) + np.sqrt(eps) * tensor_power([chi.coefficients] * 2)
    s = ManyBodyState(grid8, 2, psi)
    routes = pickl_routes(s, phi)
    assert routes.one_minus_overlap == pytest.approx(eps, abs=1e-12)
    assert routes.spread() < 1e-12


def test_pickl_bounded_by_trace_norm(grid8, rng):
    for _ in range(50):
        pair = random_pair(grid8, 3, rng)
        a = pickl_functional(pair.state, pair.phi)
        assert 0.0 <= a <= 1.0
        p = OneBodyProjectorPair(pair.phi).p
        lam = np.linalg.eigvalsh(partial_trace(pair.state, 1).matrix - p)
        assert a <= np.sum(np.abs(lam)) + 1e-12
        assert a <= spectral_norms(pair.weighted(1, 0.0, "plain")).trace_norm + 1e-12


def test_pickl_zero_iff_condensed(grid8, rng):
    phi = random_wavefunction(grid8, rng)
    exact = initial_product_state(phi, 2)
    assert pickl_functional(exact, phi) < 1e-9
    g1 = partial_trace(exact, 1).matrix
    assert np.max(np.abs(g1 - OneBodyProjectorPair(phi).p)) < 1e-9
    other = random_wavefunction(grid8, rng)
    assert pickl_functional(exact, other) > 1e-9


def test_projectors(grid8, rng):
    phi, chi = random_wavefunction(grid8, rng), random_wavefunction(grid8, rng)
    P1 = hartree_projector(phi, 1)
    P1.check()
    assert np.trace(P1.matrix).real == pytest.approx(1.0)
    P2 = hartree_projector(phi, 2)
    P2.check()
    v2 = P2.vector
    assert np.vdot(v2, P2.matrix @ v2).real == pytest.approx(1.0, abs=1e-12)
    x2 = hartree_projector(chi, 2).vector
    assert np.vdot(x2, P2.matrix @ x2).real == pytest.approx(abs(phi.vdot(chi)) ** 4, abs=1e-14)
    pq = OneBodyProjectorPair(phi)
    p, q = pq.p, pq.q
    assert np.max(np.abs(p @ p - p)) < 1e-12
    assert np.max(np.abs(p @ q)) < 1e-12
    assert np.max(np.abs(p + q - np.eye(8))) < 1e-12
