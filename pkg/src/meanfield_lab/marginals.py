"""Reduced density matrices, Hartree projectors and the Pickl functional."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grid import GridError, GridSpec, WaveFunction
from .manybody import ManyBodyState, tensor_power

DENSE_LIMIT = 4096


@dataclass(frozen=True)
class ReducedDensityMatrix:
    """gamma^(k) in the position basis, rows/columns in C order over (x_1, ..., x_k)."""

    grid: GridSpec
    k: int
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def check(self, herm_tol: float = 1e-12, trace_tol: float = 1e-10, psd_tol: float = 1e-10) -> None:
        """Raise AssertionError if Hermiticity, unit trace, PSD or exchange symmetry fail."""
        g = self.matrix
        if np.max(np.abs(g - g.conj().T)) > herm_tol:
            raise AssertionError("reduced density matrix is not Hermitian")
        if abs(self.trace() - 1.0) > trace_tol:
            raise AssertionError(f"reduced density matrix has trace {self.trace()}")
        if self.eigenvalues()[0] < -psd_tol:
            raise AssertionError("reduced density matrix has a negative eigenvalue")
        if self.k > 1 and self.exchange_defect() > herm_tol * 10:
            raise AssertionError("reduced density matrix is not exchange symmetric")

    def exchange_defect(self) -> float:
        """max |gamma - (swap_i,j on both index groups) gamma| over slot transpositions."""
        D, k = self.grid.size, self.k
        t = self.matrix.reshape((D,) * (2 * k))
        worst = 0.0
        for i in range(k):
            for j in range(i + 1, k):
                perm = list(range(2 * k))
                perm[i], perm[j] = perm[j], perm[i]
                perm[k + i], perm[k + j] = perm[k + j], perm[k + i]
                worst = max(worst, float(np.max(np.abs(t - np.transpose(t, perm)))))
        return worst


def partial_trace(state: ManyBodyState, k: int) -> ReducedDensityMatrix:
    """gamma^(k) = tr_{k+1..N} |Psi><Psi|."""
    if not 1 <= k <= state.N:
        raise ValueError(f"k must lie in [1, N={state.N}], got {k}")
    D = state.grid.size
    if D**k > DENSE_LIMIT:
        raise GridError(f"dense marginal of dimension {D**k} exceeds {DENSE_LIMIT}")
    mat = state.psi.reshape(D**k, D ** (state.N - k))
    return ReducedDensityMatrix(state.grid, k, mat @ mat.conj().T)


def trace_out_last(gamma: ReducedDensityMatrix) -> ReducedDensityMatrix:
    """gamma^(k) -> gamma^(k-1) by tracing the last slot."""
    if gamma.k < 2:
        raise ValueError("cannot trace out a slot of a one-body matrix")
    D = gamma.grid.size
    m = D ** (gamma.k - 1)
    t = gamma.matrix.reshape(m, D, m, D)
    return ReducedDensityMatrix(gamma.grid, gamma.k - 1, np.einsum("iaja->ij", t))


@dataclass(frozen=True)
class HartreeProjector:
    """P^(k) = |phi^{(x)k}><phi^{(x)k}|, stored as its vector."""

    phi: WaveFunction
    k: int

    @cached_property
    def vector(self) -> np.ndarray:
        return tensor_power([self.phi.coefficients] * self.k).ravel()

    @property
    def matrix(self) -> np.ndarray:
        return np.outer(self.vector, self.vector.conj())

    def check(self, tol: float = 1e-12) -> None:
        P = self.matrix
        if abs(np.trace(P) - 1.0) > tol or np.max(np.abs(P @ P - P)) > tol:
            raise AssertionError("Hartree projector is not a unit-trace idempotent")


def hartree_projector(phi: WaveFunction, k: int) -> HartreeProjector:
    if phi.grid.size**k > DENSE_LIMIT:
        raise GridError(f"dense projector of dimension {phi.grid.size**k} exceeds {DENSE_LIMIT}")
    return HartreeProjector(phi, k)


@dataclass(frozen=True)
class OneBodyProjectorPair:
    """p_1 = |phi><phi| and q_1 = 1 - p_1, acting on particle slot 1."""

    phi: WaveFunction

    @property
    def p(self) -> np.ndarray:
        c = self.phi.coefficients.ravel()
        return np.outer(c, c.conj())

    @property
    def q(self) -> np.ndarray:
        return np.eye(self.phi.grid.size) - self.p

    def apply_p1(self, state: ManyBodyState) -> np.ndarray:
        D = state.grid.size
        c = self.phi.coefficients.ravel()
        mat = state.psi.reshape(D, -1)
        return np.outer(c, c.conj() @ mat).reshape(state.psi.shape)

    def apply_q1(self, state: ManyBodyState) -> np.ndarray:
        return state.psi - self.apply_p1(state)


@dataclass(frozen=True)
class PicklRoutes:
    """Three evaluations of a_N that agree to roundoff."""

    one_minus_overlap: float
    trace_identity: float
    q1_norm: float

    def spread(self) -> float:
        vals = (self.one_minus_overlap, self.trace_identity, self.q1_norm)
        return max(vals) - min(vals)


def pickl_routes(state: ManyBodyState, phi: WaveFunction, gamma1: ReducedDensityMatrix | None = None) -> PicklRoutes:
    g = gamma1 if gamma1 is not None else partial_trace(state, 1)
    c = phi.coefficients.ravel()
    pair = OneBodyProjectorPair(phi)
    p = pair.p
    overlap = 1.0 - float(np.real(np.vdot(c, g.matrix @ c)))
    identity = float(np.real(np.trace(p @ (p - g.matrix))))
    q1 = float(np.linalg.norm(pair.apply_q1(state)) ** 2)
    return PicklRoutes(overlap, identity, q1)


def pickl_functional(state: ManyBodyState, phi: WaveFunction, gamma1: ReducedDensityMatrix | None = None,
                     tol: float = 1e-10) -> float:
    """a_N = <Psi, q_1 Psi>, cross-checked against tr(p_1 (p_1 - gamma^(1))) and ||q_1 Psi||^2."""
    routes = pickl_routes(state, phi, gamma1)
    if routes.spread() > tol:
        raise ArithmeticError(f"Pickl functional routes disagree: {routes}")
    return min(1.0, max(0.0, routes.one_minus_overlap))
