"""Randomized draws of (Psi, phi) pairs and the inequality suites run over them."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec, WaveFunction, ifft, make_grid
from .manybody import ManyBodyState, tensor_power
from .trace_norms import (
    BoundCheck,
    ChainReport,
    MarginalPair,
    concavity_gap,
    hoelder_interpolation_check,
    seiringer_bound_check,
    spectral_norms,
    step3_trace_check,
    theorem21_certificate,
)


def random_wavefunction(grid: GridSpec, rng: np.random.Generator, decay: float | None = None) -> WaveFunction:
    """Random state with Fourier amplitudes ~ (1 + |k|^2)^(-decay/2); decay drawn from [0.5, 3] if not given."""
    if decay is None:
        decay = rng.uniform(0.5, 3.0)
    hat = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    hat *= (1.0 + grid.k_squared) ** (-decay / 2)
    c = ifft(hat)
    return WaveFunction(grid, c / np.linalg.norm(c))


def symmetrize(psi: np.ndarray, N: int, d: int) -> np.ndarray:
    out = np.zeros_like(psi)
    perms = list(itertools.permutations(range(N)))
    for perm in perms:
        out += np.transpose(psi, [a for p in perm for a in range(p * d, (p + 1) * d)])
    return out / len(perms)


def random_symmetric_state(grid: GridSpec, N: int, rng: np.random.Generator) -> np.ndarray:
    """Normalized symmetric tensor built from random smooth one-body factors."""
    decay = rng.uniform(0.5, 3.0)
    hat = rng.standard_normal(grid.shape * N) + 1j * rng.standard_normal(grid.shape * N)
    sym = np.ones(grid.shape * N)
    for i in range(N):
        shape = [1] * (grid.d * N)
        shape[i * grid.d:(i + 1) * grid.d] = grid.shape
        sym = sym * ((1.0 + grid.k_squared) ** (-decay / 2)).reshape(shape)
    psi = symmetrize(ifft(hat * sym), N, grid.d)
    return psi / np.linalg.norm(psi)


def random_pair(grid: GridSpec, N: int, rng: np.random.Generator) -> MarginalPair:
    """A condensate-like draw: Psi = phi0^N + eps R (normalized), eps log-uniform in [1e-3, 10].

    In a third of draws the comparison state phi differs from phi0.
    """
    phi0 = random_wavefunction(grid, rng)
    eps = 10 ** rng.uniform(-3, 1)
    psi = tensor_power([phi0.coefficients] * N) + eps * random_symmetric_state(grid, N, rng)
    state = ManyBodyState(grid, N, psi / np.linalg.norm(psi))
    phi = phi0
    if rng.random() < 1 / 3:
        c = phi0.coefficients + 10 ** rng.uniform(-2, 0) * random_wavefunction(grid, rng).coefficients
        phi = WaveFunction(grid, c / np.linalg.norm(c))
    return MarginalPair(state, phi)


@dataclass
class SuiteResult:
    name: str
    draws: int = 0
    violations: int = 0
    worst_margin: float = np.inf
    failures: Counter = field(default_factory=Counter)

    def record(self, report) -> None:
        self.draws += 1
        self.worst_margin = min(self.worst_margin, min(c.margin for c in report.checks))
        bad = report.violations()
        if bad:
            self.violations += 1
            self.failures.update(c.name for c in bad)


def run_inequality_suites(draws: int = 500, seed: int = 1, M: int = 8, L: float = 2 * np.pi) -> dict[str, SuiteResult]:
    """Step 1 / Step 2 / Step 3 / full-certificate suites over random draws at k in {1, 2}.

    Step 1 and the certificate use theta ~ U[0, 1), s ~ U[0.25, 2]; the Step 2
    suite cycles theta in {0.25, 0.5, 0.75} and s in {0.5, 1}; Step 3 alternates
    theta between [0, 1/2] and (1/2, 1).
    """
    grid = make_grid(1, M, L)
    rng = np.random.default_rng(seed)
    names = ("step1", "step2", "step3", "theorem21", "concavity", "theta_monotone")
    results = {n: SuiteResult(n) for n in names}
    step2_grid = list(itertools.product((0.25, 0.5, 0.75), (0.5, 1.0)))
    for i in range(draws):
        k = 1 + i % 2
        N = int(rng.integers(max(2, k), 4))
        pair = random_pair(grid, N, rng)

        theta, s = rng.uniform(0.0, 1.0), rng.uniform(0.25, 2.0)
        results["step1"].record(seiringer_bound_check(pair.weighted(k, theta * s)))

        theta2, s2 = step2_grid[i % len(step2_grid)]
        results["step2"].record(hoelder_interpolation_check(pair, k, theta2, s2))

        theta3 = 0.5 * rng.uniform() + (0.5 if i % 4 >= 2 else 0.0)
        theta3 = min(theta3, 0.999)
        results["step3"].record(step3_trace_check(pair, k, theta3, rng.choice([0.5, 1.0, 1.5])))

        cert = theorem21_certificate(pair, k, theta, s)
        results["theorem21"].record(_as_report("theorem21", cert.lhs, cert.rhs))

        tup = rng.exponential(size=rng.integers(1, 6))
        gap = concavity_gap(tup, theta)
        results["concavity"].record(_as_report("concavity", 0.0, gap))

        t1, t2 = sorted(rng.uniform(0.0, 1.0, size=2))
        lo = spectral_norms(pair.weighted(k, t1)).trace_norm
        hi = spectral_norms(pair.weighted(k, t2)).trace_norm
        results["theta_monotone"].record(_as_report("theta_monotone", lo, hi))
    return results


def _as_report(name: str, lhs: float, rhs: float) -> ChainReport:
    return ChainReport((BoundCheck(name, lhs, rhs),))
