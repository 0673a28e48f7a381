"""Command line entry point: ``meanfield-lab <subcommand> ...``.

Exit codes: 0 success, 1 inequality violation / oracle mismatch / failed
conservation check, 2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .grid import GridError, make_grid
from .hartree import HartreeState, h1_diagnostic, hartree_energy, hartree_evolve
from .initial import gaussian
from .lab import ConfigError, SweepError, default_fits, emit_report, load_config, run_sweep, sweep_checks, sweep_ok
from .manybody import (
    Hamiltonian,
    dense_oracle_evolve,
    initial_product_state,
    kinetic_bound,
    manybody_evolve,
    per_particle_kinetic,
    total_energy,
)
from .potentials import PotentialError, PotentialSpec, certify_form_bound, dense_multiplier_matrix, rayleigh_form_ratio, sample_potential
from .snapshots import write_state
from .suites import run_inequality_suites

log = logging.getLogger("meanfield_lab")


def _grid_args(p: argparse.ArgumentParser, M: int = 16) -> None:
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--M", type=int, default=M)
    p.add_argument("--L", type=float, default=10.0)


def _potential_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", default="yukawa")
    p.add_argument("--coupling", type=float, default=0.5)
    p.add_argument("--screening", type=float, default=1.0)
    p.add_argument("--softening", type=float, default=0.5)
    p.add_argument("--width", type=float, default=1.0, help="gaussian potential width")


def _dynamics_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t", type=float, default=1.0, dest="t_end")
    p.add_argument("--samples", type=int, default=20, help="energy samples along the run")
    p.add_argument("--packet-width", type=float, default=1.0)
    p.add_argument("--momentum", type=float, default=1.0)


def _setup(args):
    grid = make_grid(args.d, args.M, args.L)
    spec = PotentialSpec(args.kind, args.coupling, args.screening, args.softening, args.width)
    v = sample_potential(spec, grid)
    return grid, v


def cmd_hartree(args) -> int:
    grid, v = _setup(args)
    phi0 = gaussian(grid, width=args.packet_width, momentum=args.momentum)
    e0 = hartree_energy(phi0, v)
    state = HartreeState(phi0)
    drift = mass = 0.0
    h1 = h1_diagnostic(phi0)
    for t in np.linspace(0, args.t_end, args.samples + 1)[1:]:
        state = hartree_evolve(state, v, args.dt, t)
        drift = max(drift, abs(hartree_energy(state.phi, v) - e0) / max(abs(e0), 1e-300))
        mass = max(mass, abs(state.phi.norm() - 1.0))
        h1 = max(h1, h1_diagnostic(state.phi))
    print(f"energy E(phi_0) = {e0:.12g}")
    print(f"max relative energy drift = {drift:.3e}")
    print(f"max mass defect = {mass:.3e}")
    print(f"max H1 norm = {h1:.6g}")
    return 0 if mass < 1e-9 else 1


def cmd_manybody(args) -> int:
    grid, v = _setup(args)
    phi0 = gaussian(grid, width=args.packet_width, momentum=args.momentum)
    H = Hamiltonian(v, args.N)
    state = initial_product_state(phi0, args.N)
    E0 = total_energy(state, H)
    drift = mass = 0.0
    kin_ok = True
    for t in np.linspace(0, args.t_end, args.samples + 1)[1:]:
        state = manybody_evolve(state, H, args.dt, t)
        drift = max(drift, abs(total_energy(state, H) - E0) / max(abs(E0), 1e-300))
        mass = max(mass, abs(state.norm() - 1.0))
        kin_ok &= per_particle_kinetic(state, check_symmetry=True) <= kinetic_bound(state, H)
    sym = state.symmetry_defect()
    print(f"N = {args.N}, <H_N>/N = {E0 / args.N:.12g}")
    print(f"max relative energy drift = {drift:.3e}")
    print(f"max norm defect = {mass:.3e}")
    print(f"symmetry defect = {sym:.3e}")
    print(f"per-particle kinetic bound holds: {kin_ok}")
    if args.snapshot:
        write_state(args.snapshot, state)
        print(f"snapshot written to {args.snapshot}")
    return 0 if (mass < 1e-9 and sym < 1e-9 and kin_ok) else 1


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.output:
        cfg.output_dir = args.output
    records = run_sweep(cfg)
    fits = default_fits(records, cfg)
    out = emit_report(records, fits, cfg)
    for key, val in sweep_checks(records).items():
        print(f"{key}: {val}")
    for f in fits:
        if f.alpha is not None:
            print(f"fit {f.quantity} t={f.fixed['t']:g}: alpha = {f.alpha:.4f} (residual {f.residual:.2e})")
    print(f"report written to {out}")
    return 0 if sweep_ok(records) else 1


def cmd_check_inequalities(args) -> int:
    results = run_inequality_suites(args.draws, args.seed, args.M)
    total = 0
    for name, r in results.items():
        print(f"{name}: draws {r.draws}, violations {r.violations}, worst margin {r.worst_margin:.3e}")
        total += r.violations
    print(f"violations: {total}")
    return 0 if total == 0 else 1


def cmd_oracle(args) -> int:
    grid, v = _setup(args)
    phi0 = gaussian(grid, width=args.packet_width, momentum=args.momentum)
    H = Hamiltonian(v, args.N)
    state = initial_product_state(phi0, args.N)
    exact = dense_oracle_evolve(state, H, args.t_end)
    err = float(np.linalg.norm(manybody_evolve(state, H, args.dt, args.t_end).psi - exact.psi))
    err_half = float(np.linalg.norm(manybody_evolve(state, H, args.dt / 2, args.t_end).psi - exact.psi))
    print(f"L2 error (dt={args.dt:g}) = {err:.3e}")
    print(f"L2 error (dt={args.dt / 2:g}) = {err_half:.3e}")
    print(f"error ratio = {err / err_half:.3f}")
    return 0 if err < args.tol else 1


def cmd_form_bound(args) -> int:
    grid, v = _setup(args)
    v = certify_form_bound(v)
    C = v.certified_C
    S = dense_multiplier_matrix(grid, 1.0 + grid.k_squared)
    v2 = np.diag(v.values.ravel() ** 2)
    lo = float(np.linalg.eigvalsh(C * S - v2)[0])
    hi = float(np.linalg.eigvalsh((C - 1e-3 * C) * S - v2)[0]) if C > 0 else -1.0
    rng = np.random.default_rng(args.seed)
    psis = rng.standard_normal((args.draws, grid.size)) + 1j * rng.standard_normal((args.draws, grid.size))
    rq = float(np.max(rayleigh_form_ratio(v, psis)))
    print(f"certified C = {C:.12g}")
    print(f"min eig(C(1-Delta) - v^2) = {lo:.3e}")
    print(f"min eig((C - 1e-3 C)(1-Delta) - v^2) = {hi:.3e}")
    print(f"max random Rayleigh quotient = {rq:.12g}")
    ok = lo >= -1e-10 and (C == 0 or hi < 0) and rq <= C + 1e-8
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meanfield-lab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hartree", help="single Hartree run with conservation report")
    _grid_args(p, 64)
    _potential_args(p)
    _dynamics_args(p)
    p.set_defaults(func=cmd_hartree)

    p = sub.add_parser("manybody", help="single N-body run")
    _grid_args(p)
    _potential_args(p)
    _dynamics_args(p)
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--snapshot", help="write the final state to this binary file")
    p.set_defaults(func=cmd_manybody)

    p = sub.add_parser("sweep", help="full convergence study from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="output directory (overrides config and environment)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check-inequalities", help="randomized interpolation-inequality suites")
    p.add_argument("--draws", type=int, default=500)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--M", type=int, default=8)
    p.set_defaults(func=cmd_check_inequalities)

    p = sub.add_parser("oracle", help="split-step vs dense propagator")
    _grid_args(p, 8)
    _potential_args(p)
    _dynamics_args(p)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--tol", type=float, default=1e-5)
    p.set_defaults(func=cmd_oracle, t_end=0.5)

    p = sub.add_parser("form-bound", help="certify v^2 <= C (1 - Delta)")
    _grid_args(p, 32)
    _potential_args(p)
    p.add_argument("--draws", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_form_bound)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, GridError, PotentialError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SweepError as exc:
        print(f"sweep failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
