"""Command line: ``solve``, ``verify`` and ``benchmark``.

Exit codes: 0 success, 1 verification failure, 2 non-convergence,
3 missing or unreadable run artifacts, 4 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from .config import ParseError, RunConfig, ValidationError, parse_config, preset_path
from .oracle import Thresholds, verify
from .pmp import (
    NonConvergence,
    SolverError,
    SolveReport,
    StageRecord,
    Trajectory,
    UnknownVector,
    _report,
    solve,
)
from .quantum import InvalidProblem, fidelity, populations, realify_state

log = logging.getLogger("qtransfer")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_NONCONVERGENCE = 2
EXIT_MISSING_ARTIFACTS = 3
EXIT_CONFIG = 4

TRAJECTORY_FILE = "trajectory.csv"
SUMMARY_FILE = "summary.json"
SOLUTION_FILE = "solution.json"
VERIFICATION_FILE = "verification.json"


class ArtifactError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# file formats


def _fmt(v: float) -> str:
    # 17 significant digits; repr-independent and locale-independent
    return format(float(v), ".16e")


def trajectory_header(n: int) -> list[str]:
    return (["t"] + [f"psi_re_{k}" for k in range(1, n + 1)]
            + [f"psi_im_{k}" for k in range(1, n + 1)]
            + [f"pop_{k}" for k in range(1, n + 1)]
            + [f"lambda_{k}" for k in range(1, 2 * n + 1)]
            + ["u", "nu", "phi_mult", "pontryagin_H", "fidelity"])


def trajectory_table(traj: Trajectory) -> np.ndarray:
    return np.column_stack([
        traj.t, traj.psi, traj.populations, traj.lam,
        traj.u, traj.nu, traj.phi_mult, traj.hamiltonian, traj.fidelity,
    ])


def write_trajectory(path: Path, traj: Trajectory, n: int) -> None:
    rows = [",".join(trajectory_header(n))]
    rows += [",".join(_fmt(v) for v in row) for row in trajectory_table(traj)]
    path.write_bytes(("\n".join(rows) + "\n").encode("ascii"))


def read_trajectory(path: Path, n: int) -> Trajectory:
    try:
        lines = path.read_text(encoding="ascii").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise ArtifactError(f"cannot read {path}: {exc}") from exc
    header = trajectory_header(n)
    if not lines or lines[0].split(",") != header:
        raise ArtifactError(f"{path}: unexpected header")
    try:
        data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    except ValueError as exc:
        raise ArtifactError(f"{path}: {exc}") from exc
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != len(header):
        raise ArtifactError(f"{path}: malformed table")
    col = {name: i for i, name in enumerate(header)}
    psi = data[:, col["psi_re_1"]:col["psi_re_1"] + 2 * n]
    lam = data[:, col["lambda_1"]:col["lambda_1"] + 2 * n]
    return Trajectory(
        t=data[:, col["t"]], z=np.full(data.shape[0], np.nan), psi=psi,
        populations=data[:, col["pop_1"]:col["pop_1"] + n], lam=lam,
        u=data[:, col["u"]], nu=data[:, col["nu"]], phi_mult=data[:, col["phi_mult"]],
        hamiltonian=data[:, col["pontryagin_H"]], fidelity=data[:, col["fidelity"]],
    )


def _write_json(path: Path, obj) -> None:
    path.write_bytes((json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("ascii"))


def solution_record(report: SolveReport) -> dict:
    x = report.unknowns
    return {
        "xi_psi": x.xi_psi.tolist(), "xi_lam": x.xi_lam.tolist(),
        "xi_u": x.xi_u.tolist(), "xi_nu": x.xi_nu.tolist(), "xi_phi": x.xi_phi.tolist(),
        "c_map": x.c_map,
    }


def summary_record(report: SolveReport, wall_time: float) -> dict:
    traj = report.trajectory
    return {
        "converged": report.converged,
        "t_final": report.t_final,
        "terminal_fidelity": report.terminal_fidelity,
        "residual_norm": report.residual_norm,
        "mu_path": list(report.mu_path),
        "stages": [dataclasses.asdict(s) for s in report.stages],
        "seed": report.options.seed,
        "wall_time_s": wall_time,
        "max_abs_u": float(np.max(np.abs(traj.u))),
        "hamiltonian_mean": report.hamiltonian_mean,
        "hamiltonian_std": report.hamiltonian_std,
        "controllable": report.controllable,
    }


def load_report(cfg: RunConfig, rundir: Path) -> SolveReport:
    """Rebuild a report from a run directory; the sampled fields come from
    the CSV, the basis expansions from the solution file."""
    rundir = Path(rundir)
    for name in (TRAJECTORY_FILE, SOLUTION_FILE):
        if not (rundir / name).is_file():
            raise ArtifactError(f"missing {rundir / name}")
    try:
        sol = json.loads((rundir / SOLUTION_FILE).read_text())
        x = UnknownVector(
            np.array(sol["xi_psi"], dtype=float), np.array(sol["xi_lam"], dtype=float),
            np.array(sol["xi_u"], dtype=float), np.array(sol["xi_nu"], dtype=float),
            np.array(sol["xi_phi"], dtype=float), float(sol["c_map"]),
        )
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ArtifactError(f"unreadable {rundir / SOLUTION_FILE}: {exc}") from exc
    L, d = cfg.solver.basis_size, 2 * cfg.problem.n
    if x.xi_psi.shape != (L, d) or x.xi_u.shape != (L,):
        raise ArtifactError("solution does not match the configured basis size")
    traj = read_trajectory(rundir / TRAJECTORY_FILE, cfg.problem.n)
    report = _report(x, cfg.problem, cfg.solver, (), (), True, True, 2)
    return dataclasses.replace(report, trajectory=traj)


# --------------------------------------------------------------------------
# commands


def _run_solve(cfg: RunConfig, outdir: Path) -> tuple[int, SolveReport]:
    start = time.perf_counter()
    code = EXIT_OK
    try:
        report = solve(cfg.problem, cfg.solver, samples=cfg.output.samples)
    except NonConvergence as exc:
        log.error("%s", exc)
        report, code = exc.report, EXIT_NONCONVERGENCE
    wall = time.perf_counter() - start
    outdir.mkdir(parents=True, exist_ok=True)
    write_trajectory(outdir / TRAJECTORY_FILE, report.trajectory, cfg.problem.n)
    _write_json(outdir / SOLUTION_FILE, solution_record(report))
    _write_json(outdir / SUMMARY_FILE, summary_record(report, wall))
    return code, report


def cmd_solve(config: str, output: str | None = None) -> int:
    cfg = parse_config(config)
    outdir = Path(output or cfg.output.directory)
    code, report = _run_solve(cfg, outdir)
    print(f"t_f = {report.t_final:.6f}  fidelity = {report.terminal_fidelity:.10f}  "
          f"residual = {report.residual_norm:.3e}  -> {outdir}")
    return code


def _thresholds(overrides: list[str]) -> Thresholds:
    kw = {}
    names = {f.name for f in dataclasses.fields(Thresholds)}
    for item in overrides or []:
        key, sep, value = item.partition("=")
        if not sep or key not in names:
            raise ValidationError(f"bad threshold override {item!r}; known: {sorted(names)}")
        kw[key] = float(value)
    return Thresholds(**kw)


def cmd_verify(config: str, rundir: str, thresholds: list[str] | None = None) -> int:
    cfg = parse_config(config)
    th = _thresholds(thresholds)
    report = load_report(cfg, Path(rundir))
    traj = report.trajectory
    result = verify(report, cfg.problem, th, control=(traj.t, traj.u))
    _write_json(Path(rundir) / VERIFICATION_FILE, result.to_dict())
    for name, ok in result.checks.items():
        print(f"{name:24s} {'pass' if ok else 'FAIL'}")
    return EXIT_OK if result.passed else EXIT_VERIFY_FAILED


def truncate_schedule(schedule, mu_final: float) -> tuple:
    if not mu_final > 0:
        raise ValidationError("mu-final must be positive")
    kept = [m for m in schedule if m > mu_final]
    return tuple(kept) + (mu_final,)


def cmd_benchmark(seed: int | None = None, mu_final: float | None = None,
                  output: str | None = None) -> int:
    cfg = parse_config(preset_path())
    solver = cfg.solver
    if seed is not None:
        solver = dataclasses.replace(solver, seed=seed)
    if mu_final is not None:
        solver = dataclasses.replace(solver, mu_schedule=truncate_schedule(solver.mu_schedule,
                                                                           mu_final))
    cfg = dataclasses.replace(cfg, solver=solver)
    outdir = Path(output or cfg.output.directory)
    start = time.perf_counter()
    code, report = _run_solve(cfg, outdir)
    wall = time.perf_counter() - start
    p = cfg.problem
    result = verify(report, p)
    _write_json(outdir / VERIFICATION_FILE, result.to_dict())
    traj = report.trajectory
    H = traj.hamiltonian
    pop = populations(traj.psi[-1])
    rows = [
        ("solver converged", str(report.converged), report.converged),
        ("t_f", f"{report.t_final:.6f}", True),
        ("oracle terminal fidelity", f"{result.terminal_fidelity:.10f}", result.checks["fidelity"]),
        ("wall time [s]", f"{wall:.1f}", wall < 300.0),
        ("max |u|", f"{np.max(np.abs(traj.u)):.6f}", result.checks["bound_violation"]),
        ("pop_a(t_f), pop_c(t_f)", f"{pop[0]:.3e}, {pop[-1]:.8f}", pop[0] < 0.01 and pop[-1] > 0.99),
        ("H std/(1+|mean|)", f"{H.std() / (1 + abs(H.mean())):.3e}",
         H.std() / (1 + abs(H.mean())) < 1e-4),
        ("H(t_f) + gamma", f"{H[-1] + p.gamma:.3e}", abs(H[-1] + p.gamma) < 1e-4),
        ("oracle state deviation", f"{result.state_deviation:.3e}", result.checks["state_deviation"]),
        ("oracle norm drift", f"{result.norm_drift:.3e}", result.checks["norm_drift"]),
        ("pairing drift", f"{result.pairing_drift:.3e}", result.checks["pairing_drift"]),
        ("stationarity (grid L2)", f"{result.stationarity:.3e}", result.checks["stationarity"]),
        ("final mu", f"{solver.mu_final:g}", True),
    ]
    print(f"benchmark seed={solver.seed} -> {outdir}")
    for name, value, ok in rows:
        print(f"  {name:26s} {value:>28s}  {'pass' if ok else 'FAIL'}")
    return code


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qtransfer", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve a configured transfer problem")
    s.add_argument("config")
    s.add_argument("-o", "--output", help="run directory (overrides the config)")

    v = sub.add_parser("verify", help="certify a run directory with the oracle")
    v.add_argument("config")
    v.add_argument("rundir")
    v.add_argument("--threshold", action="append", metavar="NAME=VALUE",
                   help="override a verification threshold (repeatable)")

    b = sub.add_parser("benchmark", help="solve and certify the shipped three-level preset")
    b.add_argument("--seed", type=int)
    b.add_argument("--mu-final", type=float)
    b.add_argument("-o", "--output", help="run directory")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "solve":
            return cmd_solve(args.config, args.output)
        if args.command == "verify":
            return cmd_verify(args.config, args.rundir, args.threshold)
        return cmd_benchmark(args.seed, args.mu_final, args.output)
    except (ParseError, ValidationError, InvalidProblem) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArtifactError as exc:
        print(f"missing artifacts: {exc}", file=sys.stderr)
        return EXIT_MISSING_ARTIFACTS
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
