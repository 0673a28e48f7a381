"""Convergence sweeps over N and t, rate fits, and CSV/JSON reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .grid import make_grid
from .hartree import HartreeState, h1_diagnostic, hartree_energy, hartree_evolve
from .initial import from_config as initial_from_config
from .initial import plane_wave
from .manybody import (
    Hamiltonian,
    initial_product_state,
    manybody_evolve,
    per_particle_kinetic,
    perturbed_product_state,
    total_energy,
)
from .potentials import PotentialSpec, sample_potential
from .trace_norms import MarginalPair, observable_gap, spectral_norms, theorem21_certificate, tracepart_identity_check

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

OUTPUT_ENV = "MEANFIELD_LAB_OUTPUT"
CSV_COLUMNS = ("N", "t", "k", "theta", "s", "a_N", "hs_diff", "sobolev_trace", "energy_trace", "v12_gap",
               "kinetic_1", "energy_per_particle", "hartree_energy")
THETA_COLUMNS = ("theta", "s", "sobolev_trace")
FLOOR = 1e-16


class ConfigError(ValueError):
    pass


class SweepError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    grid: dict = field(default_factory=lambda: {"d": 1, "M": 16, "L": 10.0})
    potential: dict = field(default_factory=lambda: {"kind": "yukawa", "coupling": 0.5, "screening": 1.0})
    initial: dict = field(default_factory=lambda: {"kind": "gaussian", "width": 1.0, "momentum": 1.0})
    perturbation: dict = field(default_factory=lambda: {"eps": 0.0, "mode": 1})
    dt: float = 1e-3
    sample_times: list = field(default_factory=lambda: [0.25, 0.5, 1.0])
    N_list: list = field(default_factory=lambda: [2, 3, 4])
    theta_list: list = field(default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    s: float = 1.0
    k_list: list = field(default_factory=lambda: [1, 2])
    seed: int = 1
    output_dir: str = "results"
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if list(self.sample_times) != sorted(self.sample_times) or any(t < 0 for t in self.sample_times):
            raise ConfigError("sample_times must be non-negative and sorted ascending")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not set(self.k_list) <= {1, 2} or not self.k_list:
            raise ConfigError("k_list must be a non-empty subset of {1, 2}")
        if any(int(n) < 1 for n in self.N_list) or not self.N_list:
            raise ConfigError("N_list must hold positive particle numbers")
        if any(not 0.0 <= th <= 1.0 for th in self.theta_list):
            raise ConfigError("theta values must lie in [0, 1]")
        if not self.s > 0:
            raise ConfigError("s must be positive")
        try:
            grid = self.make_grid()
            sample_potential(self.potential_spec(), grid)
            for n in self.N_list:
                grid.check_many_body(int(n))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def make_grid(self):
        return make_grid(self.grid.get("d", 1), self.grid["M"], self.grid["L"])

    def potential_spec(self) -> PotentialSpec:
        return PotentialSpec(**self.potential)

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        """Hash of everything that determines the numbers (output location and thread count excluded)."""
        cfg = self.to_dict()
        cfg.pop("output_dir")
        cfg.pop("workers")
        return config_hash(cfg)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    defaults = ExperimentConfig()
    merged = {}
    for key, value in data.items():
        base = getattr(defaults, key)
        merged[key] = {**base, **value} if isinstance(base, dict) else value
    try:
        return ExperimentConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def fnv1a_64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def config_hash(cfg: dict) -> str:
    """64-bit FNV-1a of the canonical JSON form (sorted keys, no whitespace), as 16 hex digits."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return f"{fnv1a_64(blob):016x}"


@dataclass
class ConvergenceRecord:
    N: int
    t: float
    k: int
    a_N: float
    hs_diff: float
    trace_norm: float
    sobolev_trace: dict
    energy_trace: float
    v12_gap: float
    kinetic_1: float
    kinetic_bound: float
    energy_per_particle: float
    hartree_energy: float
    h1_norm: float
    energy_drift: float
    tracepart_residual: float
    tracepart_budget: float
    certificates: list = field(default_factory=list)

    @property
    def pickl_ok(self) -> bool:
        return self.a_N <= self.trace_norm + 1e-12


@dataclass
class RateFit:
    quantity: str
    alpha: float | None
    C: float | None
    D: float | None
    residual: float
    x_range: list
    fixed: dict
    floored: bool


def _times_with_zero(times) -> list[float]:
    return sorted({0.0, *map(float, times)})


def run_cell(cfg: ExperimentConfig, N: int) -> list[ConvergenceRecord]:
    """Evolve one N through every sample time and measure all record fields."""
    grid = cfg.make_grid()
    v = sample_potential(cfg.potential_spec(), grid)
    phi0 = initial_from_config(grid, cfg.initial, v)
    H = Hamiltonian(v, N)
    eps = float(cfg.perturbation.get("eps", 0.0))
    if eps > 0:
        chi = plane_wave(grid, cfg.perturbation.get("mode", 1))
        state = perturbed_product_state(phi0, N, eps, chi)
    else:
        state = initial_product_state(phi0, N)
    hstate = HartreeState(phi0)
    epp0 = total_energy(state, H) / N
    e0 = hartree_energy(phi0, v)
    out = []
    for t in cfg.sample_times:
        try:
            state = manybody_evolve(state, H, cfg.dt, float(t))
            hstate = hartree_evolve(hstate, v, cfg.dt, float(t))
            out.extend(measure(cfg, state, hstate.phi, H, epp0, e0))
        except Exception as exc:
            raise SweepError(f"N={N}, t={t}: {exc}") from exc
    return out


def measure(cfg: ExperimentConfig, state, phi, H: Hamiltonian, epp0: float, e0: float) -> list[ConvergenceRecord]:
    N, v = state.N, H.v
    pair = MarginalPair(state, phi)
    epp = total_energy(state, H) / N
    eh = hartree_energy(phi, v)
    drift = abs(epp - epp0) + abs(eh - e0)
    kin = per_particle_kinetic(state, check_symmetry=True)
    if N >= 2:
        gap = observable_gap(pair, "v12", v).gap
        tp = tracepart_identity_check(pair, v, drift)
        tp_res, tp_budget = tp.residual, tp.budget
    else:
        gap, tp_res, tp_budget = 0.0, 0.0, 0.0
    trace_norm_1 = spectral_norms(pair.weighted(1, 0.0, "plain")).trace_norm
    records = []
    for k in cfg.k_list:
        if k > N:
            continue
        sob = {float(th): spectral_norms(pair.weighted(k, th, "plain")).trace_norm for th in cfg.theta_list}
        certs = [theorem21_certificate(pair, k, th, cfg.s).to_json() for th in cfg.theta_list if 0.0 < th < 1.0]
        records.append(ConvergenceRecord(
            N=N, t=float(state.t), k=k, a_N=pair.a_N, hs_diff=pair.hs_diff(k), trace_norm=trace_norm_1,
            sobolev_trace=sob, energy_trace=spectral_norms(pair.weighted(k, 1.0, "plain")).trace_norm,
            v12_gap=gap, kinetic_1=kin, kinetic_bound=2.0 * epp + v.sup, energy_per_particle=epp,
            hartree_energy=eh, h1_norm=h1_diagnostic(phi), energy_drift=drift, tracepart_residual=tp_res,
            tracepart_budget=tp_budget, certificates=certs,
        ))
    return records


def run_sweep(cfg: ExperimentConfig) -> list[ConvergenceRecord]:
    """All records for every N in ``cfg.N_list``; cells run on ``cfg.workers`` threads."""
    Ns = [int(n) for n in cfg.N_list]
    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as pool:
        cells = list(pool.map(lambda n: run_cell(cfg, n), Ns))
    records = [r for cell in cells for r in cell]
    records.sort(key=lambda r: (r.N, r.t, r.k))
    return records


def _floored(values) -> tuple[np.ndarray, bool]:
    y = np.asarray(values, float)
    flag = bool(np.any(y <= 0))
    return np.log(np.maximum(y, FLOOR)), flag


def fit_decay(Ns, values, quantity: str = "", t: float | None = None) -> RateFit:
    """value ~ C / N^alpha by least squares on (log N, log value)."""
    Ns = np.asarray(Ns, float)
    if len(set(Ns)) < 3:
        raise ValueError("decay fit needs at least 3 distinct N")
    ly, flag = _floored(values)
    A = np.column_stack([np.log(Ns), np.ones_like(Ns)])
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.sqrt(np.mean((A @ [slope, icpt] - ly) ** 2)))
    return RateFit(quantity, float(-slope), float(np.exp(icpt)), None, resid, [float(Ns.min()), float(Ns.max())],
                   {"t": t}, flag)


def fit_growth(ts, values, N: int, quantity: str = "") -> RateFit:
    """value ~ C e^{D t} / N by least squares on (t, log value)."""
    ts = np.asarray(ts, float)
    if len(set(ts)) < 3:
        raise ValueError("growth fit needs at least 3 distinct times")
    ly, flag = _floored(values)
    A = np.column_stack([ts, np.ones_like(ts)])
    (D, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.sqrt(np.mean((A @ [D, icpt] - ly) ** 2)))
    return RateFit(quantity, None, float(np.exp(icpt) * N), float(D), resid, [float(ts.min()), float(ts.max())],
                   {"N": N}, flag)


def record_value(r: ConvergenceRecord, quantity: str) -> float:
    if quantity.startswith("sobolev_trace:"):
        return r.sobolev_trace[float(quantity.split(":", 1)[1])]
    return abs(getattr(r, quantity)) if quantity == "v12_gap" else getattr(r, quantity)


def fit_rates(records, quantity: str, k: int = 1) -> list[RateFit]:
    """Decay fits at every time with >= 3 values of N and growth fits at every N with >= 3 times."""
    rows = [r for r in records if r.k == k]
    fits = []
    for t in sorted({r.t for r in rows}):
        at = sorted((r.N, record_value(r, quantity)) for r in rows if r.t == t)
        if len(at) >= 3:
            fits.append(fit_decay(*zip(*at), quantity=quantity, t=t))
    for N in sorted({r.N for r in rows}):
        at = sorted((r.t, record_value(r, quantity)) for r in rows if r.N == N and r.t > 0)
        if len(at) >= 3:
            fits.append(fit_growth(*zip(*at), N=N, quantity=quantity))
    return fits


def _fmt(x) -> str:
    return repr(float(x)) if not isinstance(x, (int, np.integer)) else str(int(x))


def csv_text(records, theta_list, s: float = 1.0) -> str:
    cols = CSV_COLUMNS if theta_list else tuple(c for c in CSV_COLUMNS if c not in THETA_COLUMNS)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        base = {"N": r.N, "t": r.t, "k": r.k, "a_N": r.a_N, "hs_diff": r.hs_diff, "energy_trace": r.energy_trace,
                "v12_gap": r.v12_gap, "kinetic_1": r.kinetic_1, "energy_per_particle": r.energy_per_particle,
                "hartree_energy": r.hartree_energy}
        rows = [dict(base, theta=th, s=s, sobolev_trace=r.sobolev_trace[float(th)]) for th in theta_list] or [base]
        for row in rows:
            w.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def default_fits(records, cfg: ExperimentConfig) -> list[RateFit]:
    fits = []
    for q in ("a_N", "hs_diff", "energy_trace", "v12_gap"):
        fits.extend(fit_rates(records, q, k=1))
    return fits


def emit_report(records, fits, cfg: ExperimentConfig, out_dir=None) -> Path:
    """Write records.csv, summary.json, certificates.json and series/*.csv; return the output directory."""
    if not records:
        raise ValueError("no records to report")
    out = Path(out_dir or os.environ.get(OUTPUT_ENV) or cfg.output_dir)
    try:
        (out / "series").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise SweepError(f"cannot create output directory {out}: {exc}") from exc
    (out / "records.csv").write_text(csv_text(records, cfg.theta_list, cfg.s))
    certs = [c for r in records for c in r.certificates]
    (out / "certificates.json").write_text(json.dumps(certs, indent=1, sort_keys=True) + "\n")
    summary = {
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "fits": [asdict(f) for f in fits],
        "checks": sweep_checks(records),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    quantities = ["a_N", "hs_diff", "energy_trace", "v12_gap"] + [f"sobolev_trace:{float(th)}" for th in cfg.theta_list]
    for q in quantities:
        for k in sorted({r.k for r in records}):
            for t in sorted({r.t for r in records}):
                pts = sorted((r.N, record_value(r, q)) for r in records if r.k == k and r.t == t)
                name = f"{q.replace(':', '_theta')}_k{k}_t{t:g}.csv"
                (out / "series" / name).write_text("N,value\n" + "".join(f"{n},{_fmt(y)}\n" for n, y in pts))
    return out


def sweep_checks(records) -> dict:
    """Per-sweep invariants; ``energy_trace_nonincreasing`` is informational."""
    certs = [c for r in records for c in r.certificates]
    monotone = True
    for k in {r.k for r in records}:
        for t in {r.t for r in records}:
            vals = [r.energy_trace for r in sorted(records, key=lambda r: r.N) if r.k == k and r.t == t]
            monotone &= all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    return {
        "certificates": len(certs),
        "certificates_satisfied": sum(c["satisfied"] for c in certs),
        "pickl_trace_bound": all(r.pickl_ok for r in records),
        "tracepart_within_budget": all(r.tracepart_residual <= r.tracepart_budget for r in records),
        "kinetic_bound": all(r.kinetic_1 <= r.kinetic_bound for r in records),
        "energy_trace_nonincreasing": bool(monotone),
    }


def sweep_ok(records) -> bool:
    c = sweep_checks(records)
    return (c["certificates"] == c["certificates_satisfied"] and c["pickl_trace_bound"]
            and c["tracepart_within_budget"] and c["kinetic_bound"])
