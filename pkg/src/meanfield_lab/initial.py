"""Initial one-body data: Gaussian packets, plane waves and trapped ground states."""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, WaveFunction, fft, ifft
from .hartree import mean_field
from .potentials import SampledPotential


def gaussian(grid: GridSpec, center=None, width: float = 1.0, momentum=0.0) -> WaveFunction:
    """Periodized Gaussian packet exp(-d(x, c)^2 / (2 w^2) + i p.x), normalized."""
    center = np.broadcast_to(np.asarray(grid.L / 2 if center is None else center, float), (grid.d,))
    momentum = np.broadcast_to(np.asarray(momentum, float), (grid.d,))
    coords = grid.coordinates()
    envelope = np.ones(grid.shape)
    phase = np.zeros(grid.shape)
    for x, c, p in zip(coords, center, momentum):
        dx = (x - c + grid.L / 2) % grid.L - grid.L / 2
        envelope = envelope * np.exp(-(dx**2) / (2.0 * width**2))
        phase = phase + p * x
    return WaveFunction.from_samples(grid, envelope * np.exp(1j * phase))


def plane_wave(grid: GridSpec, n) -> WaveFunction:
    """exp(i k_n . x) / sqrt(L^d) for integer mode tuple ``n``."""
    n = np.broadcast_to(np.asarray(n, int), (grid.d,))
    phase = np.zeros(grid.shape)
    for x, ni in zip(grid.coordinates(), n):
        phase = phase + 2.0 * np.pi * ni / grid.L * x
    return WaveFunction.from_samples(grid, np.exp(1j * phase))


def harmonic_ground_state(grid: GridSpec, v: SampledPotential | None = None, omega: float = 1.0,
                          dt: float = 1e-2, tol: float = 1e-12, max_steps: int = 100_000) -> WaveFunction:
    """Hartree ground state in the trap omega^2 |x - L/2|^2 / 4, by imaginary-time Strang steps.

    The trap is the harmonic fit used to prepare the condensate; it is switched
    off for the subsequent real-time dynamics.
    """
    coords = grid.coordinates()
    trap = sum((x - grid.L / 2) ** 2 for x in coords) * omega**2 / 4.0
    half = np.exp(-0.5 * dt * grid.k_squared)
    c = gaussian(grid, width=np.sqrt(2.0 / omega)).coefficients
    for _ in range(max_steps):
        prev = c
        c = ifft(half * fft(c))
        w = trap + (mean_field(c, v) if v is not None else 0.0)
        c = c * np.exp(-dt * w)
        c = ifft(half * fft(c))
        c = c / np.linalg.norm(c)
        if np.linalg.norm(c - prev) < tol:
            break
    return WaveFunction(grid, c)


def from_config(grid: GridSpec, cfg: dict, v: SampledPotential | None = None) -> WaveFunction:
    """Build the initial datum from a config table {kind = ..., ...}."""
    cfg = dict(cfg)
    kind = cfg.pop("kind", "gaussian")
    if kind == "gaussian":
        return gaussian(grid, cfg.get("center"), cfg.get("width", 1.0), cfg.get("momentum", 0.0))
    if kind == "plane_wave":
        return plane_wave(grid, cfg.get("n", 0))
    if kind == "ground_state_of_harmonic_fit":
        return harmonic_ground_state(grid, v, cfg.get("omega", 1.0))
    raise ValueError(f"unknown initial datum kind {kind!r}")
