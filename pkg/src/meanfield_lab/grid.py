"""Periodic grids, unitary Fourier transforms and Fourier multipliers.

Conventions used throughout the package:

* The domain is the torus ``[0, L)^d`` sampled at ``x_j = j * h`` with
  ``h = L / M``.
* Wave-function coefficients carry the quadrature weight ``h**(d/2)``, so the
  flat Euclidean norm of a coefficient array is the L2 norm of the function
  and operator traces are plain matrix traces.
* Fourier coefficients use the unitary ("ortho") DFT and standard FFT
  layout: modes ``0, 1, ..., M/2 - 1, -M/2, ..., -1`` along every axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

DEFAULT_MEMORY_BUDGET = 2**27


class GridError(ValueError):
    """Invalid grid configuration or mismatched grids."""


@dataclass(frozen=True)
class GridSpec:
    d: int
    M: int
    L: float
    memory_budget: int = field(default=DEFAULT_MEMORY_BUDGET, compare=False)

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise GridError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.M % 2 != 0:
            raise GridError("M must be even")
        if self.M < 4:
            raise GridError(f"M must be at least 4, got {self.M}")
        if not self.L > 0:
            raise GridError(f"box length must be positive, got {self.L}")
        if self.size > self.memory_budget:
            raise GridError(
                f"one-body grid of {self.size} sites exceeds the memory budget "
                f"of {self.memory_budget} complex entries"
            )

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.M,) * self.d

    @property
    def size(self) -> int:
        return self.M**self.d

    @property
    def weight(self) -> float:
        """Quadrature weight h^d folded (as its square root) into coefficients."""
        return self.h**self.d

    @cached_property
    def mode_numbers(self) -> np.ndarray:
        """Integer mode labels n per axis, FFT layout."""
        return np.fft.fftfreq(self.M, d=1.0 / self.M).astype(int)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """k_n = 2 pi n / L per axis, FFT layout."""
        return 2.0 * np.pi * self.mode_numbers / self.L

    @cached_property
    def k_squared(self) -> np.ndarray:
        """|k|^2 on the d-dimensional mode grid."""
        k2 = self.wavenumbers**2
        out = np.zeros(self.shape)
        for axis in range(self.d):
            idx = [None] * self.d
            idx[axis] = slice(None)
            out = out + k2[tuple(idx)]
        return out

    @cached_property
    def positions(self) -> np.ndarray:
        return np.arange(self.M) * self.h

    def coordinates(self) -> list[np.ndarray]:
        """Meshgrid of site coordinates, one array per axis."""
        return np.meshgrid(*([self.positions] * self.d), indexing="ij")

    @cached_property
    def torus_distance(self) -> np.ndarray:
        """Torus distance of every site from the origin.

        Built from integer offsets min(j, M - j) so that the result is exactly
        even under x -> -x.
        """
        j = np.arange(self.M)
        per_axis = np.minimum(j, self.M - j) * self.h
        sq = np.zeros(self.shape)
        for axis in range(self.d):
            idx = [None] * self.d
            idx[axis] = slice(None)
            sq = sq + (per_axis**2)[tuple(idx)]
        return np.sqrt(sq)

    def check_many_body(self, n_particles: int) -> int:
        """Return the N-body tensor size, raising if it exceeds the budget."""
        total = self.size**n_particles
        if total > self.memory_budget:
            raise GridError(
                f"N-body grid of {total} amplitudes (N={n_particles}) exceeds "
                f"the memory budget of {self.memory_budget}"
            )
        return total


def make_grid(d: int, M: int, L: float, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> GridSpec:
    return GridSpec(int(d), int(M), float(L), int(memory_budget))


@dataclass(frozen=True)
class WaveFunction:
    """One-body state; ``coefficients`` already include the quadrature weight."""

    grid: GridSpec
    coefficients: np.ndarray
    basis: str = "position"

    def __post_init__(self):
        if self.coefficients.shape != self.grid.shape:
            raise GridError(
                f"coefficient shape {self.coefficients.shape} does not match grid {self.grid.shape}"
            )
        if self.basis not in ("position", "fourier"):
            raise GridError(f"unknown basis {self.basis!r}")

    @classmethod
    def from_samples(cls, grid: GridSpec, values: np.ndarray, normalize: bool = True) -> WaveFunction:
        """Build from pointwise samples phi(x_j); optionally renormalize to unit L2 norm."""
        coeffs = np.asarray(values, dtype=complex) * np.sqrt(grid.weight)
        if normalize:
            coeffs = coeffs / np.linalg.norm(coeffs)
        return cls(grid, coeffs)

    def samples(self) -> np.ndarray:
        """Pointwise values phi(x_j)."""
        return self.coefficients / np.sqrt(self.grid.weight)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def normalized(self) -> WaveFunction:
        return WaveFunction(self.grid, self.coefficients / self.norm(), self.basis)

    def vdot(self, other: WaveFunction) -> complex:
        _check_same_grid(self.grid, other.grid)
        return complex(np.vdot(self.coefficients, other.coefficients))


def _check_same_grid(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise GridError(f"grid mismatch: {a} vs {b}")


def fft(a: np.ndarray, axes=None) -> np.ndarray:
    """Unitary forward DFT over ``axes`` (all axes by default)."""
    return sfft.fftn(a, axes=axes, norm="ortho")


def ifft(a: np.ndarray, axes=None) -> np.ndarray:
    return sfft.ifftn(a, axes=axes, norm="ortho")


def fourier_forward(phi: WaveFunction) -> WaveFunction:
    if phi.basis != "position":
        raise GridError("fourier_forward expects a position-basis wave function")
    return WaveFunction(phi.grid, fft(phi.coefficients), "fourier")


def fourier_inverse(phi: WaveFunction) -> WaveFunction:
    if phi.basis != "fourier":
        raise GridError("fourier_inverse expects a Fourier-basis wave function")
    return WaveFunction(phi.grid, ifft(phi.coefficients), "position")


@dataclass(frozen=True)
class FourierMultiplier:
    grid: GridSpec
    values: np.ndarray
    label: str

    def __mul__(self, other: FourierMultiplier) -> FourierMultiplier:
        _check_same_grid(self.grid, other.grid)
        return FourierMultiplier(self.grid, self.values * other.values, f"{self.label}*{other.label}")


def laplacian_multiplier(grid: GridSpec) -> FourierMultiplier:
    """Symbol of -Delta, i.e. |k|^2."""
    return FourierMultiplier(grid, grid.k_squared, "laplacian")


def sobolev_multiplier(grid: GridSpec, r: float) -> FourierMultiplier:
    """Symbol of (1 - Delta)^r, i.e. (1 + |k|^2)^r."""
    return FourierMultiplier(grid, (1.0 + grid.k_squared) ** r, f"sobolev({r:g})")


def apply_multiplier(phi: WaveFunction, m: FourierMultiplier) -> WaveFunction:
    _check_same_grid(phi.grid, m.grid)
    if phi.basis == "fourier":
        return WaveFunction(phi.grid, phi.coefficients * m.values, "fourier")
    return WaveFunction(phi.grid, ifft(fft(phi.coefficients) * m.values))


def expectation(phi: WaveFunction, m: FourierMultiplier) -> float:
    """<phi, m(-i grad) phi> for a real multiplier."""
    _check_same_grid(phi.grid, m.grid)
    c = phi.coefficients if phi.basis == "fourier" else fft(phi.coefficients)
    return float(np.sum(m.values * np.abs(c) ** 2))


def dft_matrix(M: int) -> np.ndarray:
    """Dense unitary DFT matrix in FFT layout (used by dense oracles only)."""
    j = np.arange(M)
    return np.exp(-2j * np.pi * np.outer(j, j) / M) / np.sqrt(M)
