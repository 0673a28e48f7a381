"""Exact N-boson dynamics on the full tensor grid.

A state is stored as a complex tensor with ``d`` axes per particle (shape
``grid.shape * N``), position basis, quadrature weights folded in.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .grid import GridError, GridSpec, WaveFunction, dft_matrix, fft, ifft
from .hartree import SolverError
from .potentials import SampledPotential

DENSE_LIMIT = 4096


@dataclass(frozen=True)
class ManyBodyState:
    grid: GridSpec
    N: int
    psi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.psi.shape != self.grid.shape * self.N:
            raise GridError(f"tensor shape {self.psi.shape} does not match N={self.N} on {self.grid.shape}")

    def norm(self) -> float:
        return float(np.linalg.norm(self.psi))

    def slot_axes(self, i: int) -> tuple[int, ...]:
        d = self.grid.d
        return tuple(range(i * d, (i + 1) * d))

    def swapped(self, i: int, j: int) -> np.ndarray:
        """Tensor with particle slots i and j exchanged."""
        perm = list(range(self.N))
        perm[i], perm[j] = perm[j], perm[i]
        d = self.grid.d
        axes = [a for p in perm for a in range(p * d, (p + 1) * d)]
        return np.transpose(self.psi, axes)

    def symmetry_defect(self) -> float:
        """max over transpositions of ||Psi - Psi o swap||."""
        worst = 0.0
        for i, j in itertools.combinations(range(self.N), 2):
            worst = max(worst, float(np.linalg.norm(self.psi - self.swapped(i, j))))
        return worst


def tensor_power(vectors: list[np.ndarray]) -> np.ndarray:
    out = vectors[0]
    for vec in vectors[1:]:
        out = np.multiply.outer(out, vec)
    return out


def initial_product_state(phi0: WaveFunction, N: int) -> ManyBodyState:
    """Psi_0 = phi0^{(x)N}."""
    phi0.grid.check_many_body(N)
    return ManyBodyState(phi0.grid, N, tensor_power([phi0.coefficients] * N))


def symmetric_single_excitation(phi: WaveFunction, chi: WaveFunction, N: int) -> np.ndarray:
    """N^{-1/2} sum_j phi x ... x chi (slot j) x ... x phi, for chi orthogonal to phi."""
    out = np.zeros(phi.grid.shape * N, dtype=complex)
    for j in range(N):
        factors = [phi.coefficients] * N
        factors[j] = chi.coefficients
        out += tensor_power(factors)
    return out / np.sqrt(N)


def perturbed_product_state(phi0: WaveFunction, N: int, eps: float, chi: WaveFunction) -> ManyBodyState:
    """sqrt(1 - eps) phi0^{(x)N} + sqrt(eps) Sym(chi x phi0^{(x)N-1}), chi orthogonalized against phi0.

    Initial data of this kind have a_N = eps / N and bounded energy per particle.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    phi0.grid.check_many_body(N)
    c = chi.coefficients - np.vdot(phi0.coefficients, chi.coefficients) * phi0.coefficients
    chi_perp = WaveFunction(phi0.grid, c / np.linalg.norm(c))
    psi = np.sqrt(1.0 - eps) * tensor_power([phi0.coefficients] * N)
    if N > 1 or eps > 0:
        psi = psi + np.sqrt(eps) * symmetric_single_excitation(phi0, chi_perp, N)
    return ManyBodyState(phi0.grid, N, psi / np.linalg.norm(psi))


def pair_potential_matrix(v: SampledPotential) -> np.ndarray:
    """v(x_a - x_b) as a tensor with axes (a_1..a_d, b_1..b_d)."""
    M, d = v.grid.M, v.grid.d
    idx = np.arange(M)
    rel = (idx[:, None] - idx[None, :]) % M
    offsets = []
    for axis in range(d):
        shape = [1] * (2 * d)
        shape[axis] = M
        shape[d + axis] = M
        offsets.append(rel.reshape(shape))
    return v.values[tuple(np.broadcast_arrays(*offsets))]


class Hamiltonian:
    """H_N = sum_i (-Delta_i) + 1/(N-1) sum_{i<j} v(x_i - x_j), with cached diagonal pieces."""

    def __init__(self, v: SampledPotential, N: int):
        if N < 1:
            raise ValueError("N must be at least 1")
        self.v = v
        self.grid = v.grid
        self.N = N
        self.grid.check_many_body(N)

    @property
    def coupling(self) -> float:
        return 0.0 if self.N == 1 else 1.0 / (self.N - 1)

    @cached_property
    def kinetic_symbol(self) -> np.ndarray:
        """sum_i |k_i|^2 on the N-particle mode grid."""
        k2 = self.grid.k_squared
        d = self.grid.d
        out = np.zeros(self.grid.shape * self.N)
        for i in range(self.N):
            shape = [1] * (d * self.N)
            shape[i * d:(i + 1) * d] = self.grid.shape
            out = out + k2.reshape(shape)
        return out

    @cached_property
    def interaction(self) -> np.ndarray:
        """1/(N-1) sum_{i<j} v(x_i - x_j) on the N-particle position grid."""
        d, N = self.grid.d, self.N
        out = np.zeros(self.grid.shape * N)
        if N == 1:
            return out
        pair = pair_potential_matrix(self.v)
        for i, j in itertools.combinations(range(N), 2):
            shape = [1] * (d * N)
            shape[i * d:(i + 1) * d] = self.grid.shape
            shape[j * d:(j + 1) * d] = self.grid.shape
            out = out + pair.reshape(shape)
        return out * self.coupling

    def dense(self) -> np.ndarray:
        """Dense Hermitian matrix in the position basis (oracle use only)."""
        dim = self.grid.size**self.N
        if dim > DENSE_LIMIT:
            raise GridError(f"dense Hamiltonian of dimension {dim} exceeds {DENSE_LIMIT}")
        F1 = dft_matrix(self.grid.M)
        F = F1
        for _ in range(self.grid.d * self.N - 1):
            F = np.kron(F, F1)
        H = F.conj().T @ (self.kinetic_symbol.ravel()[:, None] * F)
        H[np.diag_indices(dim)] += self.interaction.ravel()
        return H


def _check(state: ManyBodyState, H: Hamiltonian) -> None:
    if state.grid != H.grid or state.N != H.N:
        raise GridError("state and Hamiltonian disagree on grid or particle number")


def manybody_step(state: ManyBodyState, H: Hamiltonian, dt: float) -> ManyBodyState:
    """One Strang step: half kinetic, full interaction phase, half kinetic."""
    _check(state, H)
    half = np.exp(-0.5j * dt * H.kinetic_symbol)
    psi = ifft(half * fft(state.psi))
    psi = psi * np.exp(-1j * dt * H.interaction)
    psi = ifft(half * fft(psi))
    if not np.all(np.isfinite(psi)):
        raise SolverError(f"non-finite amplitudes after N-body step at t={state.t + dt:g}")
    return ManyBodyState(state.grid, state.N, psi, state.t + dt)


def manybody_evolve(state: ManyBodyState, H: Hamiltonian, dt: float, t_final: float) -> ManyBodyState:
    """Advance to ``t_final`` with round((t_final - t)/dt) equal Strang steps, fusing kinetic halves."""
    _check(state, H)
    n = int(round((t_final - state.t) / dt))
    if n < 0:
        raise ValueError("t_final lies before the current time")
    if n == 0:
        return ManyBodyState(state.grid, state.N, state.psi, t_final)
    tau = (t_final - state.t) / n
    half = np.exp(-0.5j * tau * H.kinetic_symbol)
    full = half * half
    pot = np.exp(-1j * tau * H.interaction)
    hat = half * fft(state.psi)
    for i in range(n):
        hat = fft(ifft(hat) * pot)
        hat *= full if i < n - 1 else half
    psi = ifft(hat)
    if not np.all(np.isfinite(psi)):
        raise SolverError(f"non-finite amplitudes in N-body evolution before t={t_final:g}")
    return ManyBodyState(state.grid, state.N, psi, t_final)


def dense_oracle_evolve(state: ManyBodyState, H: Hamiltonian, t: float) -> ManyBodyState:
    """exp(-i H t) applied exactly through a dense eigendecomposition."""
    _check(state, H)
    w, U = sla.eigh(H.dense())
    coeff = U.conj().T @ state.psi.ravel()
    psi = U @ (np.exp(-1j * w * t) * coeff)
    return ManyBodyState(state.grid, state.N, psi.reshape(state.psi.shape), state.t + t)


def slot_kinetic(state: ManyBodyState, slot: int) -> float:
    """<Psi, -Delta_{x_slot} Psi>."""
    axes = state.slot_axes(slot)
    hat = fft(state.psi, axes=axes)
    shape = [1] * state.psi.ndim
    for a in axes:
        shape[a] = state.grid.M
    k2 = state.grid.k_squared.reshape(shape)
    return float(np.sum(k2 * np.abs(hat) ** 2))


def per_particle_kinetic(state: ManyBodyState, check_symmetry: bool = False, tol: float = 1e-9) -> float:
    """<Psi, -Delta_{x_1} Psi>; optionally compared against the slot average."""
    value = slot_kinetic(state, 0)
    if check_symmetry:
        avg = np.mean([slot_kinetic(state, j) for j in range(state.N)])
        if abs(avg - value) > tol * max(1.0, abs(value)):
            raise AssertionError(f"slot-1 kinetic {value!r} differs from slot average {avg!r}")
    return value


def kinetic_total(state: ManyBodyState, H: Hamiltonian) -> float:
    return float(np.sum(H.kinetic_symbol * np.abs(fft(state.psi)) ** 2))


def interaction_total(state: ManyBodyState, H: Hamiltonian) -> float:
    return float(np.sum(H.interaction * np.abs(state.psi) ** 2))


def total_energy(state: ManyBodyState, H: Hamiltonian) -> float:
    """<Psi, H_N Psi>."""
    _check(state, H)
    return kinetic_total(state, H) + interaction_total(state, H)


def pair_expectation(state: ManyBodyState, v: SampledPotential) -> float:
    """<Psi, v(x_1 - x_2) Psi>."""
    if state.N < 2:
        raise ValueError("pair expectation needs N >= 2")
    d = state.grid.d
    pair = pair_potential_matrix(v)
    dens = np.sum(np.abs(state.psi) ** 2, axis=tuple(range(2 * d, state.psi.ndim)))
    return float(np.sum(pair * dens))


def kinetic_bound(state: ManyBodyState, H: Hamiltonian) -> float:
    """(2/N) <Psi, H_N Psi> + sup|v|, an upper bound on the per-particle kinetic energy for bounded v."""
    return 2.0 / state.N * total_energy(state, H) + H.v.sup
