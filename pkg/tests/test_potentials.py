import numpy as np
import pytest
import scipy.linalg as sla

from meanfield_lab.grid import make_grid
from meanfield_lab.potentials import (
    HARDY_CONSTANT,
    KATO_CONSTANT,
    PotentialError,
    PotentialSpec,
    certify_form_bound,
    dense_multiplier_matrix,
    hardy_kato_audit,
    rayleigh_form_ratio,
    reflect,
    sample_potential,
)


@pytest.mark.parametrize("spec", [
    PotentialSpec("zero"),
    PotentialSpec("yukawa", 0.5, 1.0),
    PotentialSpec("soft_coulomb", -1.3, softening=0.4),
    PotentialSpec("gaussian", 2.0, width=0.7),
])
@pytest.mark.parametrize("d, M", [(1, 16), (2, 8), (3, 6)])
def test_evenness_is_exact(spec, d, M):
    v = sample_potential(spec, make_grid(d, M, 7.3))
    np.testing.assert_array_equal(v.values, reflect(v.values))


def test_kind_values():
    g = make_grid(1, 10, 10.0)
    assert np.all(sample_potential(PotentialSpec("zero"), g).values == 0)
    np.testing.assert_array_equal(sample_potential(PotentialSpec("yukawa", 1.0, 0.0), g).values, np.ones(10))
    v = sample_potential(PotentialSpec("yukawa", 2.0, 1.0), g)
    assert v.values[1] == pytest.approx(2 * np.exp(-1.0), rel=1e-15)  # torus distance 1
    assert v.values[9] == pytest.approx(2 * np.exp(-1.0), rel=1e-15)
    sc = sample_potential(PotentialSpec("soft_coulomb", 1.0, softening=0.5), g)
    assert sc.values[0] == pytest.approx(2.0)


def test_yukawa_monotone_in_distance():
    g = make_grid(1, 32, 10.0)
    v = sample_potential(PotentialSpec("yukawa", 0.8, 0.6), g)
    order = np.argsort(g.torus_distance, kind="stable")
    assert np.all(np.diff(v.values[order]) <= 0)


def test_invalid_specs():
    with pytest.raises(PotentialError, match="singular"):
        PotentialSpec("soft_coulomb", softening=0.0)
    with pytest.raises(PotentialError, match="unknown"):
        PotentialSpec("coulomb")
    with pytest.raises(PotentialError):
        PotentialSpec("yukawa", screening=-1)


def test_zero_potential_form_bound():
    v = certify_form_bound(sample_potential(PotentialSpec("zero"), make_grid(1, 16, 5.0)))
    assert v.certified_C == 0.0


@pytest.mark.parametrize("spec", [PotentialSpec("yukawa", 0.5, 1.0), PotentialSpec("gaussian", -1.5, width=0.3),
                                  PotentialSpec("soft_coulomb", 1.0, softening=0.2)])
def test_form_bound_sharp(spec):
    g = make_grid(1, 32, 10.0)
    v = certify_form_bound(sample_potential(spec, g))
    C = v.certified_C
    assert 0 < C <= v.sup**2
    S = dense_multiplier_matrix(g, 1.0 + g.k_squared)
    v2 = np.diag(v.values**2)
    assert np.linalg.eigvalsh(C * S - v2)[0] >= -1e-10
    assert np.linalg.eigvalsh((C - 1e-3 * C) * S - v2)[0] < 0
    # independent route: largest generalized eigenvalue of (v^2, 1 - Delta)
    sharp = sla.eigh(v2, S, eigvals_only=True)[-1]
    assert C == pytest.approx(sharp, rel=1e-8)


def test_form_bound_against_rayleigh_scan(rng):
    g = make_grid(1, 32, 10.0)
    v = certify_form_bound(sample_potential(PotentialSpec("yukawa", 0.5, 1.0), g))
    white = rng.standard_normal((3000, 32)) + 1j * rng.standard_normal((3000, 32))
    # smooth trial states localized near the potential peak probe the bound much closer
    hat = (rng.standard_normal((3000, 32)) + 1j * rng.standard_normal((3000, 32))) * (1 + g.k_squared) ** -2
    smooth = np.fft.ifft(hat, axis=1, norm="ortho") * np.exp(-(g.torus_distance**2))
    ratios = np.concatenate([rayleigh_form_ratio(v, white), rayleigh_form_ratio(v, smooth)])
    assert ratios.max() <= v.certified_C + 1e-8
    assert ratios.max() > 0.5 * v.certified_C


def test_form_bound_size_guard():
    with pytest.raises(PotentialError, match="256"):
        certify_form_bound(sample_potential(PotentialSpec(), make_grid(1, 512, 10.0)))


def test_hardy_kato_reference_constants():
    rep = hardy_kato_audit(make_grid(3, 8, 6.0), PotentialSpec("soft_coulomb", 0.0, softening=0.5))
    assert rep.hardy_constant == 4.0 == HARDY_CONSTANT
    assert rep.kato_constant == pytest.approx(np.pi / 2) and KATO_CONSTANT == np.pi / 2
    assert rep.random_max_ratio == 0.0


def test_hardy_kato_random_states_below_oracle():
    rep = hardy_kato_audit(make_grid(3, 8, 6.0), PotentialSpec("soft_coulomb", 1.0, softening=0.5), n_states=100)
    assert 0 < rep.random_max_ratio <= 1.0 + rep.tolerance
    assert rep.random_max_ratio <= rep.oracle_max_ratio + 1e-10


@pytest.mark.slow
def test_hardy_kato_m16():
    rep = hardy_kato_audit(make_grid(3, 16, 8.0), PotentialSpec("soft_coulomb", 1.0, softening=0.5), n_states=50)
    assert rep.random_max_ratio <= 1.0 + rep.tolerance


def test_hardy_kato_requires_3d():
    with pytest.raises(PotentialError, match="d = 3"):
        hardy_kato_audit(make_grid(1, 8, 1.0), PotentialSpec("soft_coulomb"))
