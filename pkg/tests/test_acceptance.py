"""Acceptance suite for the three-level benchmark and the structural claims.

Every criterion records a one-line outcome (printed in the terminal summary)
and asserts at its stated tolerance.
"""

import time

import numpy as np
import pytest
from conftest import record

from qtransfer.basis import BasisSpec, TimeMap, collocation_grid
from qtransfer.cli import write_trajectory
from qtransfer.config import parse_config, preset_path
from qtransfer.oracle import constant_control_propagator, rk4_propagate, verify
from qtransfer.pmp import NonConvergence, PMPSystem, UnknownVector, saturation, solve
from qtransfer.quantum import (
    QuantumControlProblem,
    lie_rank,
    populations,
    realify_state,
)
from qtransfer.tfc import StateExpression

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.diag([1.0, -1.0])


def _solve(cfg):
    try:
        return solve(cfg.problem, cfg.solver, samples=cfg.output.samples)
    except NonConvergence as err:
        return err.report


@pytest.fixture(scope="module")
def bench():
    cfg = parse_config(preset_path())
    start = time.perf_counter()
    report = _solve(cfg)
    wall = time.perf_counter() - start
    return cfg, report, wall, verify(report, cfg.problem)


def test_01_benchmark_fidelity_and_wall_time(bench):
    cfg, report, wall, check = bench
    assert cfg.solver.n_points == 40 and cfg.solver.basis_kind.value == "chebyshev"
    ok = check.terminal_fidelity >= 0.99 and wall < 300.0
    record(1, "benchmark reproduction",
           f"oracle fidelity {check.terminal_fidelity:.10f} (>= 0.99), wall {wall:.1f}s (< 300s), "
           f"t_f {report.t_final:.4f}, converged {report.converged}", ok)
    assert ok


def test_02_hard_bounds(bench):
    cfg, report, _, check = bench
    p = cfg.problem
    assert report.trajectory.t.size == 1000
    sat = saturation(report.saturation_spec, report.trajectory.nu)
    inside = bool(np.all(sat > p.u_min) and np.all(sat < p.u_max))
    ok = inside and check.bound_violation < 1e-6
    record(2, "hard bound satisfaction",
           f"phi(nu) in [{sat.min():.6f}, {sat.max():.6f}] strictly inside [-1, 1]; "
           f"u bound violation {check.bound_violation:.2e} (< 1e-6)", ok)
    assert ok


def test_03_terminal_populations(bench):
    cfg, report, _, _ = bench
    states = rk4_propagate(cfg.problem, report.control, [cfg.problem.t0, report.t_final])
    pop = populations(states[-1])
    ok = pop[0] < 0.01 and pop[2] > 0.99
    record(3, "terminal populations", f"pop_a(t_f) {pop[0]:.3e} (< 0.01), "
           f"pop_c(t_f) {pop[2]:.8f} (> 0.99) [oracle-propagated]", ok)
    assert ok


def test_04_constraint_embedding(bench):
    cfg, _, _, _ = bench
    p = cfg.problem
    basis = cfg.solver.basis()
    psi0, psif = realify_state(p.psi0), realify_state(p.psif)
    expr = StateExpression(basis, psi0, psif)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        xi = rng.normal(scale=10.0, size=(basis.size, 2 * p.n))
        tmap = TimeMap(float(rng.uniform(0.01, 10.0)))
        start, _ = expr.evaluate(xi, basis.z0, tmap)
        end, _ = expr.evaluate(xi, basis.zf, tmap)
        worst = max(worst, np.max(np.abs(start - psi0)), np.max(np.abs(end - psif)))
    ok = worst < 1e-12
    record(4, "constraint embedding", f"max endpoint error {worst:.2e} over 1000 draws (< 1e-12)", ok)
    assert ok


def test_05_oracle_consistency(bench):
    _, _, _, check = bench
    ok = check.state_deviation < 1e-3 and check.norm_drift < 1e-9
    record(5, "oracle consistency", f"sup |TFC - RK4| {check.state_deviation:.2e} (< 1e-3), "
           f"norm drift {check.norm_drift:.2e} (< 1e-9)", ok)
    assert ok


def test_06_hamiltonian_constancy(bench):
    cfg, report, _, _ = bench
    H = report.trajectory.hamiltonian
    rel = H.std() / (1 + abs(H.mean()))
    term = abs(H[-1] + cfg.problem.gamma)
    ok = rel < 1e-4 and term < 1e-4
    record(6, "Pontryagin Hamiltonian constancy",
           f"std/(1+|mean|) {rel:.2e} (< 1e-4), |H(t_f) + gamma| {term:.2e} (< 1e-4)", ok)
    assert ok


def test_07_conserved_pairing(bench):
    _, report, _, _ = bench
    traj = report.trajectory
    pairing = np.einsum("ij,ij->i", traj.lam, traj.psi)
    norm = np.linalg.norm(traj.lam, axis=1)
    d1, d2 = np.ptp(pairing), np.ptp(norm)
    ok = d1 < 1e-6 and d2 < 1e-6
    record(7, "conserved pairing", f"drift lam.psi {d1:.2e}, |lam| {d2:.2e} (< 1e-6)", ok)
    assert ok


def test_08_jacobian_against_finite_differences(bench):
    cfg, _, _, _ = bench
    p, opts = cfg.problem, cfg.solver
    L, d = opts.basis_size, 2 * p.n
    rng = np.random.default_rng(8)
    # residual entries reach ~1e2 at random iterates, so a 1e-6 step loses
    # ~1e-8 to cancellation; the residual is low-order polynomial in almost
    # every unknown, so truncation at 1e-4 stays far below that
    h, worst = 1e-4, 0.0
    for k in range(10):
        system = PMPSystem(p, opts, mu=opts.mu_schedule[k % len(opts.mu_schedule)])
        x = UnknownVector(rng.normal(scale=0.3, size=(L, d)), rng.normal(scale=0.3, size=(L, d)),
                          rng.normal(scale=0.3, size=L), rng.normal(scale=0.3, size=L),
                          rng.normal(scale=0.3, size=L), float(rng.uniform(0.05, 0.5)))
        flat = x.to_flat()
        J = system.jacobian(x)
        for j in range(flat.size):
            e = np.zeros_like(flat)
            e[j] = h
            fd = (system.residual(system.unpack(flat + e))
                  - system.residual(system.unpack(flat - e))) / (2 * h)
            big = np.abs(fd) > 1e-8
            if big.any():
                worst = max(worst, float(np.max(np.abs(J[big, j] - fd[big]) / np.abs(fd[big]))))
    ok = worst < 1e-5
    record(8, "Jacobian check", f"max relative error {worst:.2e} over 10 iterates (< 1e-5)", ok)
    assert ok


def test_09_controllability(bench):
    cfg, _, _, _ = bench
    bench_dim, _ = lie_rank(cfg.problem)
    two_dim, _ = lie_rank(QuantumControlProblem(SZ, (SX,), [1, 0], [0, 1], gamma=1.0))
    H_d = cfg.problem.H_d
    same_dim, _ = lie_rank(QuantumControlProblem(H_d, (H_d,), [1, 0, 0], [0, 0, 1], gamma=1.0))
    ok = (bench_dim, two_dim, same_dim) == (8, 3, 1)
    record(9, "controllability", f"Lie rank {bench_dim}/{two_dim}/{same_dim} (8/3/1)", ok)
    assert ok


def test_10_stationarity_at_final_mu(bench):
    cfg, report, _, check = bench
    assert report.options.mu_final == 1e-6
    system = PMPSystem(cfg.problem, cfg.solver, collocation_grid(cfg.solver.n_points), 1e-6)
    psi, _, lam, _, _, nu, _ = system._fields(report.unknowns)
    u = saturation(system.sat, nu)
    g = np.einsum("jk,km,jm->j", lam, system.A_1, psi) + 2 * cfg.problem.eta * u
    value = float(np.linalg.norm(g))
    ok = value < 1e-6
    record(10, "stationarity at final mu", f"grid L2 {value:.2e} (< 1e-6); "
           f"per-stage {[f'{s.stationarity:.1e}' for s in report.stages]}", ok)
    assert abs(value - check.stationarity) < 1e-12
    assert ok


def test_11_determinism(bench, tmp_path):
    cfg, report, _, _ = bench
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    write_trajectory(first, report.trajectory, cfg.problem.n)
    write_trajectory(second, _solve(cfg).trajectory, cfg.problem.n)
    ok = first.read_bytes() == second.read_bytes()
    record(11, "determinism", "two seeded runs give byte-identical trajectory.csv"
           if ok else "trajectory.csv differs between seeded runs", ok)
    assert ok


def test_12_rabi_closed_form():
    p = QuantumControlProblem(np.zeros((2, 2)), (SX,), [1, 0], [0, 1], gamma=1.0)
    worst = 0.0
    for dt in np.linspace(0.0, 4 * np.pi, 97):
        psi = constant_control_propagator(p, 1.0, dt) @ realify_state(p.psi0)
        worst = max(worst, abs(populations(psi)[1] - np.sin(dt) ** 2))
    ok = worst < 1e-8
    record(12, "two-level Rabi cross-check", f"max |P_1 - sin^2(dt)| {worst:.2e} (< 1e-8)", ok)
    assert ok
