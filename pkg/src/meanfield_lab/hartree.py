"""Strang split-step propagation of the Hartree equation i d/dt phi = -Delta phi + (v * |phi|^2) phi."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridError, WaveFunction, fft, ifft, laplacian_multiplier, sobolev_multiplier, expectation
from .potentials import SampledPotential


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class HartreeState:
    phi: WaveFunction
    t: float = 0.0


@dataclass(frozen=True)
class SolverParams:
    dt: float = 1e-3
    t_end: float = 1.0
    splitting_order: int = 2

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.t_end > 0 and self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if self.splitting_order != 2:
            raise ValueError("only Strang (order 2) splitting is implemented")


def mean_field(coefficients: np.ndarray, v: SampledPotential) -> np.ndarray:
    """w = v * |phi|^2 on the grid.

    Coefficients carry sqrt(h^d), so the plain circular convolution of v with
    |c|^2 is the quadrature of the continuum integral.
    """
    rho = np.abs(coefficients) ** 2
    return np.real(np.fft.ifftn(np.fft.fftn(v.values) * np.fft.fftn(rho)))


def _kinetic_phase(grid, tau: float) -> np.ndarray:
    return np.exp(-1j * tau * grid.k_squared)


def _check(phi: WaveFunction, v: SampledPotential) -> None:
    if phi.grid != v.grid:
        raise GridError(f"grid mismatch: state on {phi.grid}, potential on {v.grid}")


def hartree_step(state: HartreeState, v: SampledPotential, dt: float) -> HartreeState:
    """One Strang step: half kinetic, full mean-field phase, half kinetic."""
    _check(state.phi, v)
    grid = state.phi.grid
    half = _kinetic_phase(grid, 0.5 * dt)
    c = ifft(half * fft(state.phi.coefficients))
    c = c * np.exp(-1j * dt * mean_field(c, v))
    c = ifft(half * fft(c))
    if not np.all(np.isfinite(c)):
        raise SolverError(f"non-finite amplitudes after Hartree step at t={state.t + dt:g}")
    return HartreeState(WaveFunction(grid, c), state.t + dt)


def hartree_evolve(state: HartreeState, v: SampledPotential, dt: float, t_final: float) -> HartreeState:
    """Advance to ``t_final`` with fixed steps; consecutive half kinetic steps are fused.

    ``t_final - state.t`` is split into round((t_final - t)/dt) steps of equal size.
    """
    _check(state.phi, v)
    n = int(round((t_final - state.t) / dt))
    if n < 0:
        raise ValueError("t_final lies before the current time")
    if n == 0:
        return HartreeState(state.phi, t_final)
    tau = (t_final - state.t) / n
    grid = state.phi.grid
    half = _kinetic_phase(grid, 0.5 * tau)
    full = half * half
    vhat = np.fft.fftn(v.values)
    chat = half * fft(state.phi.coefficients)
    for i in range(n):
        c = ifft(chat)
        w = np.real(np.fft.ifftn(vhat * np.fft.fftn(np.abs(c) ** 2)))
        chat = fft(c * np.exp(-1j * tau * w))
        chat *= full if i < n - 1 else half
    c = ifft(chat)
    if not np.all(np.isfinite(c)):
        raise SolverError(f"non-finite amplitudes in Hartree evolution before t={t_final:g}")
    return HartreeState(WaveFunction(grid, c), t_final)


def hartree_trajectory(phi0: WaveFunction, v: SampledPotential, dt: float, times) -> list[HartreeState]:
    """States at each of the (ascending) ``times``, starting from t = 0."""
    state = HartreeState(phi0, 0.0)
    out = []
    for t in times:
        state = hartree_evolve(state, v, dt, float(t))
        out.append(state)
    return out


def kinetic_energy(phi: WaveFunction) -> float:
    return expectation(phi, laplacian_multiplier(phi.grid))


def interaction_energy(phi: WaveFunction, v: SampledPotential) -> float:
    rho = np.abs(phi.coefficients) ** 2
    return 0.5 * float(np.sum(rho * mean_field(phi.coefficients, v)))


def hartree_energy(phi: WaveFunction, v: SampledPotential) -> float:
    """E(phi) = int |grad phi|^2 + 1/2 int int |phi(x)|^2 v(x - y) |phi(y)|^2."""
    _check(phi, v)
    return kinetic_energy(phi) + interaction_energy(phi, v)


def h1_diagnostic(phi: WaveFunction) -> float:
    """H^1 norm <phi, (1 - Delta) phi>^{1/2}."""
    return float(np.sqrt(expectation(phi, sobolev_multiplier(phi.grid, 1.0))))
