"""Pair interactions sampled on the torus and their form-bound certification."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .grid import GridSpec, dft_matrix

log = logging.getLogger(__name__)

KINDS = ("zero", "yukawa", "soft_coulomb", "gaussian")

HARDY_CONSTANT = 4.0
KATO_CONSTANT = np.pi / 2


class PotentialError(ValueError):
    pass


@dataclass(frozen=True)
class PotentialSpec:
    kind: str = "yukawa"
    coupling: float = 0.5
    screening: float = 1.0
    softening: float = 0.5
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PotentialError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "yukawa" and self.screening < 0:
            raise PotentialError("yukawa screening must be non-negative")
        if self.kind == "soft_coulomb" and not self.softening > 0:
            raise PotentialError("soft_coulomb needs softening > 0; the bare 1/|x| is singular on a grid")
        if self.kind == "gaussian" and not self.width > 0:
            raise PotentialError("gaussian width must be positive")


@dataclass(frozen=True)
class SampledPotential:
    """v evaluated at relative coordinates x on the torus, FFT-free position layout."""

    grid: GridSpec
    values: np.ndarray
    spec: PotentialSpec = field(default_factory=PotentialSpec)
    certified_C: float | None = None

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def sample_potential(spec: PotentialSpec, grid: GridSpec) -> SampledPotential:
    r = grid.torus_distance
    lam = spec.coupling
    if spec.kind == "zero":
        values = np.zeros(grid.shape)
    elif spec.kind == "yukawa":
        # bounded analogue of lam * exp(-mu r) / r; the 1/r factor is dropped
        values = lam * np.exp(-spec.screening * r)
    elif spec.kind == "soft_coulomb":
        values = lam / np.sqrt(r**2 + spec.softening**2)
    else:
        values = lam * np.exp(-(r**2) / (2.0 * spec.width**2))
    return SampledPotential(grid, values, spec)


def reflect(values: np.ndarray) -> np.ndarray:
    """values[-x mod L] for every site."""
    out = values
    for axis in range(values.ndim):
        out = np.roll(np.flip(out, axis=axis), 1, axis=axis)
    return out


def _dense_fourier_matrix(grid: GridSpec) -> np.ndarray:
    F = dft_matrix(grid.M)
    out = F
    for _ in range(grid.d - 1):
        out = np.kron(out, F)
    return out


def dense_multiplier_matrix(grid: GridSpec, symbol: np.ndarray) -> np.ndarray:
    """Position-basis matrix of the Fourier multiplier with the given symbol.

    The result is real symmetric for symbols depending on |k| only.
    """
    F = _dense_fourier_matrix(grid)
    mat = F.conj().T @ (symbol.ravel()[:, None] * F)
    mat = 0.5 * (mat + mat.conj().T)
    if np.max(np.abs(mat.imag)) < 1e-12:
        return mat.real
    return mat


def certify_form_bound(v: SampledPotential, tol: float = 1e-10, max_iter: int = 60) -> SampledPotential:
    """Sharp grid constant C with v^2 <= C (1 - Delta), by bisection on the minimum eigenvalue.

    Returns a copy of ``v`` with ``certified_C`` set.
    """
    grid = v.grid
    if grid.size > 256:
        raise PotentialError(f"dense form-bound check needs M^d <= 256, got {grid.size}")
    v2 = np.diag(v.values.ravel() ** 2)
    S = dense_multiplier_matrix(grid, 1.0 + grid.k_squared)

    def min_eig(c: float) -> float:
        return float(sla.eigvalsh(c * S - v2, subset_by_index=[0, 0])[0])

    hi = float(np.max(v.values**2))
    if hi == 0.0:
        return replace(v, certified_C=0.0)
    lo = 0.0
    # (1 - Delta) >= 1 makes max v^2 a valid upper end of the bracket
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if min_eig(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * hi:
            break
    else:
        raise PotentialError(f"form-bound bisection did not converge in {max_iter} iterations")
    log.debug("form bound C=%.12g (bracket width %.3g)", hi, hi - lo)
    return replace(v, certified_C=hi)


def rayleigh_form_ratio(v: SampledPotential, psis: np.ndarray) -> np.ndarray:
    """||v psi||^2 / <psi, (1 - Delta) psi> for each row of ``psis`` (coefficient vectors)."""
    grid = v.grid
    psis = psis.reshape(len(psis), -1)
    num = np.sum(np.abs(v.values.ravel() * psis) ** 2, axis=1)
    hat = np.fft.fftn(psis.reshape((len(psis),) + grid.shape), axes=range(1, grid.d + 1), norm="ortho")
    den = np.sum((1.0 + grid.k_squared) * np.abs(hat) ** 2, axis=tuple(range(1, grid.d + 1)))
    return num / den


@dataclass
class HardyKatoReport:
    hardy_constant: float
    kato_constant: float
    coupling: float
    softening: float
    zero_mode_shift: float
    random_max_ratio: float
    oracle_max_ratio: float
    n_states: int

    @property
    def tolerance(self) -> float:
        """Excess of the sharp grid ratio over 1 (zero when the continuum bound carries over)."""
        return max(0.0, self.oracle_max_ratio - 1.0)


def hardy_kato_audit(grid: GridSpec, spec: PotentialSpec, n_states: int = 200, seed: int = 0,
                     oracle: bool = True) -> HardyKatoReport:
    """Compare <psi,|v_eps| psi> against <psi, (pi/2)|lam| (-Delta)^{1/2} psi + c psi>.

    On the torus (-Delta)^{1/2} annihilates constants, so the form is shifted by
    ``c = mean |v_eps|``, the value of the left-hand form on the constant state.
    Diagnostic only.
    """
    if grid.d != 3:
        raise PotentialError("hardy_kato_audit requires a d = 3 grid")
    if spec.kind != "soft_coulomb":
        raise PotentialError("hardy_kato_audit expects a soft_coulomb potential")
    if grid.size > 4096:
        raise PotentialError("hardy_kato_audit needs M^3 <= 4096")
    v = sample_potential(spec, grid)
    absv = np.abs(v.values)
    lam = abs(spec.coupling)
    shift = float(np.mean(absv))
    if lam == 0.0:
        return HardyKatoReport(HARDY_CONSTANT, KATO_CONSTANT, 0.0, spec.softening, 0.0, 0.0, 0.0, n_states)

    rng = np.random.default_rng(seed)
    decay = (1.0 + grid.k_squared) ** -1.0
    hat = (rng.standard_normal((n_states,) + grid.shape) + 1j * rng.standard_normal((n_states,) + grid.shape)) * decay
    axes = tuple(range(1, 4))
    psi = np.fft.ifftn(hat, axes=axes, norm="ortho")
    num = np.sum(absv * np.abs(psi) ** 2, axis=axes)
    den = np.sum((KATO_CONSTANT * lam * np.sqrt(grid.k_squared) + shift) * np.abs(hat) ** 2, axis=axes)
    random_max = float(np.max(num / den))

    oracle_max = float("nan")
    if oracle:
        B = dense_multiplier_matrix(grid, KATO_CONSTANT * lam * np.sqrt(grid.k_squared) + shift)
        oracle_max = float(sla.eigh(np.diag(absv.ravel()), B, eigvals_only=True, subset_by_index=[grid.size - 1] * 2)[0])
    return HardyKatoReport(HARDY_CONSTANT, KATO_CONSTANT, lam, spec.softening, shift, random_max, oracle_max, n_states)
