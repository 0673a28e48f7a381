"""Sobolev-weighted differences gamma^(k) - P^(k), their norms, and the interpolation inequalities.

Two weight families are exposed:

``summed`` S_{k,r} = sum_i (1 - Delta_i)^r.  At r = 0 this is k * Id, so
           A_{k,0} = k (gamma - P).  Used by the interpolation theorem and
           its proof steps.
``plain``  S_k^r = (sum_i (1 - Delta_i))^r.  At r = 0 this is Id.  Used for
           the Sobolev trace norms tr|S_k^{r/2}(gamma - P)S_k^{r/2}| recorded
           by the convergence sweep.

For k = 1 and for r = 1 the two coincide.  All weighted operators live in the
Fourier basis, where both families are diagonal.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from .grid import GridSpec, WaveFunction, fft, ifft
from .hartree import interaction_energy, kinetic_energy
from .manybody import ManyBodyState, pair_expectation, pair_potential_matrix, slot_kinetic
from .marginals import HartreeProjector, OneBodyProjectorPair, ReducedDensityMatrix, hartree_projector, partial_trace, pickl_functional
from .potentials import SampledPotential

SLACK = 1e-9
NORMALIZATIONS = ("summed", "plain")


def to_fourier(matrix: np.ndarray, grid: GridSpec, k: int) -> np.ndarray:
    """F X F^dagger for a k-particle position-basis matrix, F the unitary DFT on every slot."""
    nax = grid.d * k
    t = matrix.reshape(grid.shape * (2 * k))
    t = fft(t, axes=tuple(range(nax)))
    t = ifft(t, axes=tuple(range(nax, 2 * nax)))
    return t.reshape(matrix.shape)


def slot_symbols(grid: GridSpec, k: int, inner: float) -> list[np.ndarray]:
    """(1 + |k_i|^2)^inner for each slot i, broadcast to the flattened k-particle mode grid."""
    s1 = (1.0 + grid.k_squared) ** inner
    out = []
    for i in range(k):
        shape = [1] * (grid.d * k)
        shape[i * grid.d:(i + 1) * grid.d] = grid.shape
        out.append(np.broadcast_to(s1.reshape(shape), grid.shape * k).ravel())
    return out


def weight_diagonal(grid: GridSpec, k: int, r: float, normalization: str = "summed") -> np.ndarray:
    """Diagonal of the weight operator in the Fourier basis."""
    if normalization == "summed":
        return np.sum(slot_symbols(grid, k, r), axis=0)
    if normalization == "plain":
        return np.sum(slot_symbols(grid, k, 1.0), axis=0) ** r
    raise ValueError(f"unknown normalization {normalization!r}; expected one of {NORMALIZATIONS}")


@dataclass(frozen=True)
class NormReport:
    trace_norm: float
    hs_norm: float
    trace: float
    negative_eigenvalue_count: int


@dataclass(frozen=True, eq=False)
class WeightedOperator:
    """W^{1/2} (gamma - P) W^{1/2} in the Fourier basis."""

    k: int
    r: float
    normalization: str
    matrix: np.ndarray

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def difference_fourier(gamma: ReducedDensityMatrix, P: HartreeProjector) -> np.ndarray:
    if gamma.k != P.k or gamma.grid != P.phi.grid:
        raise ValueError("gamma and P must act on the same k-particle grid")
    return to_fourier(gamma.matrix - P.matrix, gamma.grid, gamma.k)


def weight_operator(diff_hat: np.ndarray, weights: np.ndarray) -> np.ndarray:
    root = np.sqrt(weights)
    m = root[:, None] * diff_hat * root[None, :]
    return 0.5 * (m + m.conj().T)


def build_weighted(gamma: ReducedDensityMatrix, P: HartreeProjector, r: float,
                   normalization: str = "summed", diff_hat: np.ndarray | None = None) -> WeightedOperator:
    if diff_hat is None:
        diff_hat = difference_fourier(gamma, P)
    w = weight_diagonal(gamma.grid, gamma.k, r, normalization)
    return WeightedOperator(gamma.k, r, normalization, weight_operator(diff_hat, w))


def spectral_norms(A, zero_tol: float = 1e-10) -> NormReport:
    """Trace norm, Hilbert-Schmidt norm, trace and number of negative eigenvalues of a Hermitian operator.

    Eigenvalues below ``-zero_tol * max(1, max|lambda|)`` count as negative.
    """
    lam = A.eigenvalues if isinstance(A, WeightedOperator) else np.linalg.eigvalsh(np.asarray(A))
    scale = max(1.0, float(np.max(np.abs(lam)))) if lam.size else 1.0
    return NormReport(
        trace_norm=float(np.sum(np.abs(lam))),
        hs_norm=float(np.sqrt(np.sum(lam**2))),
        trace=float(np.sum(lam)),
        negative_eigenvalue_count=int(np.sum(lam < -zero_tol * scale)),
    )


class MarginalPair:
    """An N-body state and a one-body state, with the marginal quantities both compare through.

    Caches gamma^(k), P^(k), their Fourier-basis difference, and a_N.
    """

    def __init__(self, state: ManyBodyState, phi: WaveFunction):
        if state.grid != phi.grid:
            raise ValueError("state and phi live on different grids")
        self.state = state
        self.phi = phi
        self.grid = state.grid
        self._gamma: dict[int, ReducedDensityMatrix] = {}
        self._diff: dict[int, np.ndarray] = {}

    def gamma(self, k: int) -> ReducedDensityMatrix:
        if k not in self._gamma:
            self._gamma[k] = partial_trace(self.state, k)
        return self._gamma[k]

    def projector(self, k: int) -> HartreeProjector:
        return hartree_projector(self.phi, k)

    def diff_hat(self, k: int) -> np.ndarray:
        if k not in self._diff:
            self._diff[k] = difference_fourier(self.gamma(k), self.projector(k))
        return self._diff[k]

    def weighted(self, k: int, r: float, normalization: str = "summed") -> WeightedOperator:
        return build_weighted(self.gamma(k), self.projector(k), r, normalization, self.diff_hat(k))

    @cached_property
    def a_N(self) -> float:
        return pickl_functional(self.state, self.phi, self.gamma(1))

    def hs_diff(self, k: int) -> float:
        return float(np.linalg.norm(self.diff_hat(k)))

    @cached_property
    def gamma1_fourier_diagonal(self) -> np.ndarray:
        return np.real(np.diag(to_fourier(self.gamma(1).matrix, self.grid, 1)))

    @cached_property
    def phi_fourier_density(self) -> np.ndarray:
        return np.abs(fft(self.phi.coefficients)).ravel() ** 2

    def psi_sobolev(self, r: float) -> float:
        """<Psi, (1 - Delta_1)^r Psi>."""
        return float(np.sum((1.0 + self.grid.k_squared.ravel()) ** r * self.gamma1_fourier_diagonal))

    def phi_sobolev(self, r: float) -> float:
        """<phi, (1 - Delta)^r phi>."""
        return float(np.sum((1.0 + self.grid.k_squared.ravel()) ** r * self.phi_fourier_density))

    def sobolev_sum(self, s: float) -> float:
        """||S_{1,s/2} Psi|| + ||S_{1,s/2} phi||, the quantity inside the interpolation constant."""
        return float(np.sqrt(self.psi_sobolev(s)) + np.sqrt(self.phi_sobolev(s)))


@dataclass(frozen=True)
class BoundCheck:
    """Outcome of one inequality lhs <= rhs (satisfied when margin = rhs - lhs >= -slack)."""

    name: str
    lhs: float
    rhs: float
    slack: float = SLACK

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def satisfied(self) -> bool:
        return self.margin >= -self.slack


@dataclass(frozen=True)
class ChainReport:
    checks: tuple[BoundCheck, ...]
    extra: dict = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return all(c.satisfied for c in self.checks)

    @property
    def margins(self) -> dict[str, float]:
        return {c.name: c.margin for c in self.checks}

    def violations(self) -> list[BoundCheck]:
        return [c for c in self.checks if not c.satisfied]


def seiringer_bound_check(A) -> ChainReport:
    """tr|A| <= 2 ||A||_HS + tr(A), valid when A has at most one negative eigenvalue."""
    rep = spectral_norms(A)
    checks = (
        BoundCheck("trace_norm<=2hs+trace", rep.trace_norm, 2.0 * rep.hs_norm + rep.trace),
        BoundCheck("negative_eigenvalues<=1", float(rep.negative_eigenvalue_count), 1.0, slack=0.0),
    )
    return ChainReport(checks, {"report": rep})


def concavity_gap(a, theta: float) -> float:
    """k^{1-theta} (sum a)^theta - sum a^theta, non-negative for a_i >= 0 and theta in [0, 1]."""
    a = np.asarray(a, float)
    return float(len(a) ** (1.0 - theta) * np.sum(a) ** theta - np.sum(a**theta))


def hoelder_interpolation_check(pair: MarginalPair, k: int, theta: float, s: float) -> ChainReport:
    """Every link of the Hilbert-Schmidt chain

    ||A_{k,theta s}|| <= k^{1-theta} ||S_{k,s}^{theta/2} D S_{k,s}^{theta/2}||       (concavity)
                      <= ||A_{k,s}||^theta ||A_{k,0}||^{1-theta}                      (Hoelder in Fourier)
                      <= k (||S_{1,s/2}Psi|| + ||S_{1,s/2}phi||)^{2 theta} ||D||^{1-theta}

    with D = gamma^(k) - P^(k), plus ||A_{k,s}||_HS <= tr|A_{k,s}| <= k(<Psi,S_{1,s}Psi> + <phi,S_{1,s}phi>).
    """
    if not 0.0 <= theta < 1.0 or s <= 0:
        raise ValueError("need theta in [0, 1) and s > 0")
    grid = pair.grid
    D = pair.diff_hat(k)
    hs_D = pair.hs_diff(k)
    A_theta = weight_operator(D, weight_diagonal(grid, k, theta * s))
    hs_theta = float(np.linalg.norm(A_theta))
    outer = np.sum(slot_symbols(grid, k, s), axis=0) ** theta
    hs_concave = float(np.linalg.norm(weight_operator(D, outer)))
    A_s = pair.weighted(k, s)
    hs_s = float(np.linalg.norm(A_s.matrix))
    tr_abs_s = float(np.sum(np.abs(A_s.eigenvalues)))
    hs_0 = k * hs_D
    energy_sum = k * (pair.psi_sobolev(s) + pair.phi_sobolev(s))
    X = pair.sobolev_sum(s)
    checks = (
        BoundCheck("concavity", hs_theta, k ** (1.0 - theta) * hs_concave),
        BoundCheck("hoelder_fourier", hs_concave, hs_s**theta * hs_D ** (1.0 - theta)),
        BoundCheck("hoelder_chain", hs_theta, hs_s**theta * hs_0 ** (1.0 - theta)),
        BoundCheck("hs_le_trace_norm", hs_s, tr_abs_s),
        BoundCheck("trace_norm_le_energy", tr_abs_s, energy_sum),
        BoundCheck("step2", hs_theta, k * X ** (2.0 * theta) * hs_D ** (1.0 - theta)),
    )
    return ChainReport(checks, {"hs_theta": hs_theta, "hs_s": hs_s, "hs_0": hs_0})


def _slot1_multiplier(state: ManyBodyState, psi: np.ndarray, r: float) -> np.ndarray:
    axes = state.slot_axes(0)
    shape = [1] * psi.ndim
    for a in axes:
        shape[a] = state.grid.M
    sym = ((1.0 + state.grid.k_squared) ** r).reshape(shape)
    return ifft(sym * fft(psi, axes=axes), axes=axes)


def pickl_exponent(theta: float) -> float:
    return min(0.5, 1.0 - theta)


def step3_trace_check(pair: MarginalPair, k: int, theta: float, s: float) -> ChainReport:
    """tr(A_{k,theta s}) <= k max(X, X^{2 theta}) a_N^{min(1/2, 1 - theta)}, X = ||S_{1,s/2}Psi|| + ||S_{1,s/2}phi||,
    with every intermediate bound of the p_1/q_1 decomposition checked separately."""
    if not 0.0 <= theta < 1.0 or s <= 0:
        raise ValueError("need theta in [0, 1) and s > 0")
    state = pair.state
    r = theta * s
    trace_direct = float(np.real(np.trace(pair.weighted(k, r).matrix)))
    trace_formula = k * (pair.psi_sobolev(r) - pair.phi_sobolev(r))
    proj = OneBodyProjectorPair(pair.phi)
    p1psi = proj.apply_p1(state)
    q1psi = state.psi - p1psi
    S_p1psi = _slot1_multiplier(state, p1psi, r)
    S_q1psi = _slot1_multiplier(state, q1psi, r)
    decomposed = float(np.real(np.vdot(q1psi, S_p1psi) + np.vdot(state.psi, S_q1psi)))
    X = pair.sobolev_sum(s)
    a = pair.a_N
    q1_weighted = float(np.linalg.norm(_slot1_multiplier(state, q1psi, r - s / 2)))
    q1_top = float(np.linalg.norm(_slot1_multiplier(state, q1psi, s / 2)))
    if theta > 0.5:
        terminal = (
            BoundCheck("hoelder_q1", q1_weighted, q1_top ** (2 * theta - 1) * a ** (1 - theta)),
            BoundCheck("q1_top", q1_top, X),
        )
        q1_bound = X ** (2 * theta - 1) * a ** (1 - theta)
    else:
        terminal = (BoundCheck("q1_contraction", q1_weighted, np.sqrt(a)),)
        q1_bound = np.sqrt(a)
    rhs = k * max(X, X ** (2 * theta)) * a ** pickl_exponent(theta)
    checks = (
        BoundCheck("trace_formula", abs(trace_direct - trace_formula), 0.0),
        BoundCheck("decomposition", trace_direct, k * decomposed),
        BoundCheck("cauchy_schwarz", k * decomposed, k * X * q1_weighted),
        *terminal,
        BoundCheck("q1_combined", k * X * q1_weighted, k * X * q1_bound),
        BoundCheck("step3", trace_direct, rhs),
    )
    return ChainReport(checks, {"trace": trace_direct, "exponent": pickl_exponent(theta)})


@dataclass(frozen=True)
class InterpolationCertificate:
    N: int
    t: float
    k: int
    theta: float
    s: float
    lhs: float
    rhs: float
    a_N: float
    hs_diff: float
    constant: float
    branch_linear: float
    branch_power: float
    satisfied: bool

    def to_json(self) -> dict:
        return asdict(self)


def interpolation_constant(X: float, theta: float) -> tuple[float, float, float]:
    """(C, linear branch, power branch) with C = 2 max(X, X^{2 theta})."""
    lin, pw = X, X ** (2.0 * theta)
    return 2.0 * max(lin, pw), lin, pw


def theorem21_certificate(pair: MarginalPair, k: int, theta: float, s: float) -> InterpolationCertificate:
    """tr|A_{k,theta s}| <= k C (a_N^{min(1/2, 1-theta)} + ||gamma - P||_HS^{1-theta})."""
    if not 0.0 <= theta < 1.0 or s <= 0:
        raise ValueError("need theta in [0, 1) and s > 0")
    lhs = spectral_norms(pair.weighted(k, theta * s)).trace_norm
    a = pair.a_N
    hs = pair.hs_diff(k)
    C, lin, pw = interpolation_constant(pair.sobolev_sum(s), theta)
    rhs = k * C * (a ** pickl_exponent(theta) + hs ** (1.0 - theta))
    return InterpolationCertificate(
        N=pair.state.N, t=float(pair.state.t), k=k, theta=float(theta), s=float(s), lhs=lhs, rhs=rhs,
        a_N=a, hs_diff=hs, constant=C, branch_linear=lin, branch_power=pw, satisfied=bool(lhs <= rhs + SLACK),
    )


OBSERVABLES = ("identity", "v12", "kinetic", "momentum", "sobolev")
_DEFAULT_THETA = {"identity": 0.0, "v12": 0.5, "kinetic": 1.0, "momentum": 1.0, "sobolev": 1.0}


@dataclass(frozen=True)
class ObservableGap:
    name: str
    k: int
    theta: float
    gap: float
    operator_norm: float
    sobolev_trace_norm: float

    @property
    def bound(self) -> float:
        return self.operator_norm * self.sobolev_trace_norm

    @property
    def satisfied(self) -> bool:
        return abs(self.gap) <= self.bound + SLACK


def observable_matrix(name: str, grid: GridSpec, v: SampledPotential | None = None, k: int | None = None,
                      power: float = 1.0) -> tuple[np.ndarray, int]:
    """Fourier-basis matrix of a built-in observable and its particle number."""
    if name == "identity":
        k = k or 1
        return np.eye(grid.size**k, dtype=complex), k
    if name == "kinetic":
        return np.diag(grid.k_squared.ravel()).astype(complex), 1
    if name == "momentum":
        kx = np.broadcast_to(grid.wavenumbers.reshape((grid.M,) + (1,) * (grid.d - 1)), grid.shape)
        return np.diag(kx.ravel()).astype(complex), 1
    if name == "sobolev":
        k = k or 1
        return np.diag(weight_diagonal(grid, k, power, "plain")).astype(complex), k
    if name == "v12":
        if v is None:
            raise ValueError("v12 observable needs a sampled potential")
        pos = np.diag(pair_potential_matrix(v).ravel()).astype(complex)
        return to_fourier(pos, grid, 2), 2
    raise ValueError(f"unsupported observable {name!r}; expected one of {OBSERVABLES}")


def observable_gap(pair: MarginalPair, name: str, v: SampledPotential | None = None, theta: float | None = None,
                   k: int | None = None, power: float = 1.0) -> ObservableGap:
    """<Psi, A (x) I Psi> - <phi^k, A phi^k> = tr(A (gamma^(k) - P^(k))), with the bound
    ||S_k^{-theta/2} A S_k^{-theta/2}|| tr|S_k^{theta/2} (gamma - P) S_k^{theta/2}|."""
    A, k = observable_matrix(name, pair.grid, v, k, power)
    theta = _DEFAULT_THETA[name] if theta is None else theta
    D = pair.diff_hat(k)
    gap = float(np.real(np.sum(A.T * D)))
    w = weight_diagonal(pair.grid, k, -theta, "plain")
    op_norm = float(np.linalg.norm(weight_operator(A, w), 2))
    strace = spectral_norms(pair.weighted(k, theta, "plain")).trace_norm
    out = ObservableGap(name, k, theta, gap, op_norm, strace)
    if not out.satisfied:
        raise ArithmeticError(f"observable gap {gap} exceeds its bound {out.bound}")
    return out


@dataclass(frozen=True)
class TracepartReport:
    kinetic_gap: float
    potential_gap: float
    budget: float

    @property
    def residual(self) -> float:
        return abs(self.kinetic_gap - self.potential_gap)

    @property
    def satisfied(self) -> bool:
        return self.residual <= self.budget


def tracepart_identity_check(pair: MarginalPair, v: SampledPotential, drift: float = 0.0,
                             floor: float = 1e-12) -> TracepartReport:
    """<Psi,-Delta_1 Psi> - <phi,-Delta phi> against -1/2 (<Psi, v_12 Psi> - <phi^2, v_12 phi^2>).

    ``drift`` is the combined energy drift of the two solvers; the residual budget
    is 10 * drift plus an absolute roundoff floor.
    """
    kin = slot_kinetic(pair.state, 0) - kinetic_energy(pair.phi)
    pot = -0.5 * (pair_expectation(pair.state, v) - 2.0 * interaction_energy(pair.phi, v))
    return TracepartReport(kin, pot, 10.0 * drift + floor)
