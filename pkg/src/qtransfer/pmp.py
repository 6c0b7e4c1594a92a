"""Pontryagin boundary-value problem for bounded-control state transfer,
collocated with constrained expressions and solved by damped Gauss-Newton
under a decreasing slack-penalty schedule.

Unknowns are packed into one flat vector::

    [xi_psi | xi_lam | xi_u | xi_nu | xi_phi | log(c_map)]

where the two ``(L, 2n)`` matrices are stored component-major (all ``L``
coefficients of component 0, then component 1, ...). Residuals are stacked
family by family (state, costate, control stationarity, slack stationarity,
saturation consistency) and node by node, followed by the single terminal
Hamiltonian row.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .basis import Activation, BasisKind, BasisSpec, GridScheme, TimeMap, collocation_grid
from .quantum import (
    QuantumControlProblem,
    control_direction,
    derealify_state,
    drift_generator,
    lie_rank,
    populations,
    realify_state,
)
from .tfc import AdjointExpression, AdjointMode, ScalarExpression, StateExpression

__all__ = [
    "SolverError",
    "NonConvergence",
    "DegenerateJacobian",
    "NotSupported",
    "SaturationSpec",
    "saturation",
    "saturation_slope",
    "saturation_curvature",
    "pontryagin_hamiltonian",
    "UnknownVector",
    "SolveOptions",
    "Trajectory",
    "StageRecord",
    "SolveReport",
    "PMPSystem",
    "residual_vector",
    "residual_jacobian",
    "initial_guess",
    "solve",
    "recover_trajectory",
]

log = logging.getLogger(__name__)

DEFAULT_MU_SCHEDULE = (1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


class SolverError(RuntimeError):
    pass


class NonConvergence(SolverError):
    """Residual still above tolerance after the whole schedule.

    ``report`` carries the best iterate found.
    """

    def __init__(self, message: str, report: "SolveReport"):
        super().__init__(message)
        self.report = report


class DegenerateJacobian(SolverError):
    pass


class NotSupported(SolverError):
    pass


# --------------------------------------------------------------------------
# saturation


@dataclass(frozen=True)
class SaturationSpec:
    u_min: float = -1.0
    u_max: float = 1.0
    c_sat: float = 1.0

    def __post_init__(self):
        if not self.u_min < self.u_max:
            raise ValueError("need u_min < u_max")
        if not self.c_sat > 0:
            raise ValueError("c_sat must be positive")

    @property
    def width(self) -> float:
        return self.u_max - self.u_min

    @property
    def s(self) -> float:
        return self.c_sat / self.width


def saturation(spec: SaturationSpec, nu):
    """``u_max - (u_max - u_min) / (1 + exp(s nu))``, overflow-free."""
    return spec.u_min + spec.width * expit(spec.s * np.asarray(nu, dtype=float))


def saturation_slope(spec: SaturationSpec, nu):
    sig = expit(spec.s * np.asarray(nu, dtype=float))
    return spec.width * spec.s * sig * (1.0 - sig)


def saturation_curvature(spec: SaturationSpec, nu):
    sig = expit(spec.s * np.asarray(nu, dtype=float))
    return spec.width * spec.s**2 * sig * (1.0 - sig) * (1.0 - 2.0 * sig)


def pontryagin_hamiltonian(lam, psi, u, nu, phi_mult, eta, mu, spec: SaturationSpec,
                           p: QuantumControlProblem):
    """Augmented Hamiltonian ``lam^T A(u) psi + eta u^2 + mu nu^2 + phi (u - sat(nu))``."""
    lam = np.asarray(lam, dtype=float)
    psi = np.asarray(psi, dtype=float)
    A = drift_generator(p) + u * control_direction(p, 0)
    return float(lam @ A @ psi + eta * u * u + mu * nu * nu
                 + phi_mult * (u - saturation(spec, nu)))


# --------------------------------------------------------------------------
# unknowns and options


@dataclass(frozen=True)
class UnknownVector:
    xi_psi: np.ndarray   # (L, 2n)
    xi_lam: np.ndarray   # (L, 2n)
    xi_u: np.ndarray     # (L,)
    xi_nu: np.ndarray
    xi_phi: np.ndarray
    c_map: float

    def __post_init__(self):
        if not (math.isfinite(self.c_map) and self.c_map > 0):
            raise ValueError(f"c_map must be positive, got {self.c_map}")

    @property
    def size(self) -> int:
        return self.xi_psi.size + self.xi_lam.size + 3 * self.xi_u.size + 1

    def to_flat(self) -> np.ndarray:
        return np.concatenate([
            self.xi_psi.T.ravel(), self.xi_lam.T.ravel(),
            self.xi_u, self.xi_nu, self.xi_phi, [math.log(self.c_map)],
        ])

    @classmethod
    def from_flat(cls, flat, L: int, d: int) -> "UnknownVector":
        flat = np.asarray(flat, dtype=float)
        expected = (2 * d + 3) * L + 1
        if flat.shape != (expected,):
            raise ValueError(f"flat unknown vector must have length {expected}, got {flat.shape}")
        i = 0
        xi_psi = flat[i:i + d * L].reshape(d, L).T.copy(); i += d * L
        xi_lam = flat[i:i + d * L].reshape(d, L).T.copy(); i += d * L
        xi_u = flat[i:i + L].copy(); i += L
        xi_nu = flat[i:i + L].copy(); i += L
        xi_phi = flat[i:i + L].copy(); i += L
        return cls(xi_psi, xi_lam, xi_u, xi_nu, xi_phi, float(math.exp(flat[i])))


@dataclass(frozen=True)
class SolveOptions:
    n_points: int = 40
    basis_size: int = 20
    basis_kind: BasisKind = BasisKind.CHEBYSHEV
    elm_activation: Activation = Activation.TANH
    grid: GridScheme = GridScheme.CGL
    mu_schedule: tuple = DEFAULT_MU_SCHEDULE
    tolerance: float = 1e-16
    # squared residual at which a schedule that never reaches `tolerance`
    # still counts as converged (least-squares collocation leaves a floor)
    acceptance_tolerance: float = 1e-6
    stagnation_window: int = 5
    stagnation_rtol: float = 1e-12
    max_iterations: int = 200
    damping: float = 1e-3
    seed: int = 0
    adjoint_mode: AdjointMode = AdjointMode.FREE_TERMINAL
    lambda_f: tuple | None = None
    c_sat: float = 1.0
    tf_guess: float = 5.0
    lambda_init_scale: float = 1e-2

    def __post_init__(self):
        object.__setattr__(self, "basis_kind", BasisKind(self.basis_kind))
        object.__setattr__(self, "elm_activation", Activation(self.elm_activation))
        object.__setattr__(self, "grid", GridScheme(self.grid))
        object.__setattr__(self, "adjoint_mode", AdjointMode(self.adjoint_mode))
        sched = tuple(float(m) for m in self.mu_schedule)
        object.__setattr__(self, "mu_schedule", sched)
        if not sched or any(m <= 0 for m in sched):
            raise ValueError("mu schedule must be a nonempty sequence of positive values")
        if any(b >= a for a, b in zip(sched, sched[1:])):
            raise ValueError("mu schedule must be strictly decreasing")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not self.acceptance_tolerance >= self.tolerance:
            raise ValueError("acceptance_tolerance must be at least tolerance")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not self.damping > 0:
            raise ValueError("damping must be positive")
        if not self.c_sat > 0:
            raise ValueError("c_sat must be positive")
        if self.n_points < 2 or self.basis_size < 1:
            raise ValueError("need n_points >= 2 and basis_size >= 1")
        if not self.tf_guess > 0:
            raise ValueError("tf_guess must be positive")
        if self.lambda_f is not None:
            object.__setattr__(self, "lambda_f", tuple(float(v) for v in self.lambda_f))

    @property
    def mu_final(self) -> float:
        return self.mu_schedule[-1]

    def basis(self) -> BasisSpec:
        if self.basis_kind is BasisKind.CHEBYSHEV:
            return BasisSpec.chebyshev(self.basis_size)
        return BasisSpec.elm(self.basis_size, self.seed, self.elm_activation)


# --------------------------------------------------------------------------
# collocated residual system


def _expressions(p: QuantumControlProblem, options: SolveOptions, basis: BasisSpec):
    d = 2 * p.n
    state = StateExpression(basis, realify_state(p.psi0), realify_state(p.psif))
    if options.adjoint_mode is AdjointMode.TERMINAL_ANCHORED:
        lam_f = np.zeros(d) if options.lambda_f is None else np.asarray(options.lambda_f)
        adjoint = AdjointExpression(basis, d, AdjointMode.TERMINAL_ANCHORED, lam_f)
    else:
        adjoint = AdjointExpression(basis, d)
    return state, adjoint, ScalarExpression(basis)


class PMPSystem:
    """Residuals and analytic Jacobian at fixed ``mu`` on a fixed grid."""

    def __init__(self, p: QuantumControlProblem, options: SolveOptions,
                 grid: np.ndarray | None = None, mu: float | None = None):
        if p.m != 1:
            raise NotSupported(f"solver handles a single control field, got {p.m}")
        self.p = p
        self.options = options
        self.mu = options.mu_final if mu is None else float(mu)
        self.basis = options.basis()
        self.grid = (collocation_grid(options.n_points, options.grid)
                     if grid is None else np.asarray(grid, dtype=float))
        self.sat = SaturationSpec(p.u_min, p.u_max, options.c_sat)
        self.A_d = drift_generator(p)
        self.A_1 = control_direction(p, 0)
        self.L = self.basis.size
        self.d = 2 * p.n
        self.state_expr, self.adjoint_expr, self.scalar_expr = _expressions(p, options, self.basis)
        self.state = self.state_expr.design(self.grid)
        self.adjoint = self.adjoint_expr.design(self.grid)
        self.scalar = self.scalar_expr.design(self.grid)
        zf = np.array([self.basis.zf])
        self.state_f = self.state_expr.design(zf)
        self.adjoint_f = self.adjoint_expr.design(zf)
        self.scalar_f = self.scalar_expr.design(zf)

    @property
    def n_unknowns(self) -> int:
        return (2 * self.d + 3) * self.L + 1

    @property
    def n_residuals(self) -> int:
        return (2 * self.d + 3) * self.grid.size + 1

    def _fields(self, x: UnknownVector, zdes=None):
        s, a, h = (self.state, self.adjoint, self.scalar) if zdes is None else zdes
        c = x.c_map
        psi = s.B @ x.xi_psi + s.offset
        dpsi = c * (s.dB @ x.xi_psi + s.d_offset)
        lam = a.B @ x.xi_lam + a.offset
        dlam = c * (a.dB @ x.xi_lam + a.d_offset)
        u = h.B @ x.xi_u
        nu = h.B @ x.xi_nu
        phi = h.B @ x.xi_phi
        return psi, dpsi, lam, dlam, u, nu, phi

    def _generators(self, u):
        return self.A_d[None, :, :] + u[:, None, None] * self.A_1[None, :, :]

    def residual(self, x: UnknownVector) -> np.ndarray:
        with np.errstate(invalid="ignore", over="ignore"):
            return self._residual(x)

    def _residual(self, x: UnknownVector) -> np.ndarray:
        psi, dpsi, lam, dlam, u, nu, phi = self._fields(x)
        A = self._generators(u)
        mu, eta = self.mu, self.p.eta
        r_psi = dpsi - np.einsum("jkm,jm->jk", A, psi)
        r_lam = dlam - np.einsum("jkm,jm->jk", A, lam)
        r_u = np.einsum("jk,km,jm->j", lam, self.A_1, psi) + 2.0 * eta * u + phi
        r_nu = 2.0 * mu * nu - phi * saturation_slope(self.sat, nu)
        r_phi = u - saturation(self.sat, nu)
        r_h = self.terminal_hamiltonian(x) + self.p.gamma
        out = np.concatenate([r_psi.ravel(), r_lam.ravel(), r_u, r_nu, r_phi, [r_h]])
        if not np.all(np.isfinite(out)):
            self._report_nonfinite(out)
        return out

    def _report_nonfinite(self, r: np.ndarray):
        N, d = self.grid.size, self.d
        families = [("state", N * d, d), ("costate", N * d, d), ("control", N, 1),
                    ("slack", N, 1), ("saturation", N, 1), ("terminal", 1, 1)]
        start = 0
        for name, size, per in families:
            bad = np.flatnonzero(~np.isfinite(r[start:start + size]))
            if bad.size:
                raise FloatingPointError(
                    f"non-finite residual in {name} family at node {bad[0] // per}")
            start += size

    def terminal_hamiltonian(self, x: UnknownVector) -> float:
        psi, _, lam, _, u, nu, phi = self._fields(
            x, (self.state_f, self.adjoint_f, self.scalar_f))
        return pontryagin_hamiltonian(lam[0], psi[0], u[0], nu[0], phi[0], self.p.eta,
                                      self.mu, self.sat, self.p)

    def jacobian(self, x: UnknownVector) -> np.ndarray:
        N, L, d = self.grid.size, self.L, self.d
        s, a, h = self.state, self.adjoint, self.scalar
        psi, dpsi, lam, dlam, u, nu, phi = self._fields(x)
        A = self._generators(u)
        c, mu, eta = x.c_map, self.mu, self.p.eta
        eye = np.eye(d)
        H0 = h.B

        J = np.zeros((self.n_residuals, self.n_unknowns))
        c_psi = slice(0, d * L)
        c_lam = slice(d * L, 2 * d * L)
        c_u = slice(2 * d * L, 2 * d * L + L)
        c_nu = slice(2 * d * L + L, 2 * d * L + 2 * L)
        c_phi = slice(2 * d * L + 2 * L, 2 * d * L + 3 * L)
        c_log = self.n_unknowns - 1

        r_psi = slice(0, N * d)
        r_lam = slice(N * d, 2 * N * d)
        r_u = slice(2 * N * d, 2 * N * d + N)
        r_nu = slice(2 * N * d + N, 2 * N * d + 2 * N)
        r_phi = slice(2 * N * d + 2 * N, 2 * N * d + 3 * N)
        r_h = self.n_residuals - 1

        # state and costate dynamics share the same structure
        for rows, cols, des, y, dy in ((r_psi, c_psi, s, psi, dpsi), (r_lam, c_lam, a, lam, dlam)):
            blk = (c * eye[None, :, :, None] * des.dB[:, None, None, :]
                   - A[:, :, :, None] * des.B[:, None, None, :])
            J[rows, cols] = blk.reshape(N * d, d * L)
            A1y = y @ self.A_1.T
            J[rows, c_u] = -(A1y[:, :, None] * H0[:, None, :]).reshape(N * d, L)
            J[rows, c_log] = dy.ravel()

        # control stationarity
        A1T_lam = lam @ self.A_1
        A1_psi = psi @ self.A_1.T
        J[r_u, c_psi] = (A1T_lam[:, :, None] * s.B[:, None, :]).reshape(N, d * L)
        J[r_u, c_lam] = (A1_psi[:, :, None] * a.B[:, None, :]).reshape(N, d * L)
        J[r_u, c_u] = 2.0 * eta * H0
        J[r_u, c_phi] = H0

        slope = saturation_slope(self.sat, nu)
        curv = saturation_curvature(self.sat, nu)
        J[r_nu, c_nu] = (2.0 * mu - phi * curv)[:, None] * H0
        J[r_nu, c_phi] = -slope[:, None] * H0
        J[r_phi, c_u] = H0
        J[r_phi, c_nu] = -slope[:, None] * H0

        # terminal Hamiltonian
        sf, af, hf = self.state_f, self.adjoint_f, self.scalar_f
        psi_f, _, lam_f, _, u_f, nu_f, phi_f = self._fields(x, (sf, af, hf))
        psi_f, lam_f = psi_f[0], lam_f[0]
        u_f, nu_f, phi_f = u_f[0], nu_f[0], phi_f[0]
        A_f = self.A_d + u_f * self.A_1
        J[r_h, c_psi] = np.outer(A_f.T @ lam_f, sf.B[0]).ravel()
        J[r_h, c_lam] = np.outer(A_f @ psi_f, af.B[0]).ravel()
        J[r_h, c_u] = (lam_f @ self.A_1 @ psi_f + 2.0 * eta * u_f + phi_f) * hf.B[0]
        J[r_h, c_nu] = (2.0 * mu * nu_f - phi_f * saturation_slope(self.sat, nu_f)) * hf.B[0]
        J[r_h, c_phi] = (u_f - saturation(self.sat, nu_f)) * hf.B[0]
        return J

    def unpack(self, flat) -> UnknownVector:
        return UnknownVector.from_flat(flat, self.L, self.d)


def residual_vector(x: UnknownVector, p: QuantumControlProblem, options: SolveOptions,
                    grid=None, mu: float | None = None) -> np.ndarray:
    return PMPSystem(p, options, grid, mu).residual(x)


def residual_jacobian(x: UnknownVector, p: QuantumControlProblem, options: SolveOptions,
                      grid=None, mu: float | None = None) -> np.ndarray:
    """Jacobian with respect to the flat unknowns (last column: ``log c_map``)."""
    return PMPSystem(p, options, grid, mu).jacobian(x)


# --------------------------------------------------------------------------
# solve


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    z: np.ndarray
    psi: np.ndarray          # (S, 2n) realified
    populations: np.ndarray  # (S, n)
    lam: np.ndarray          # (S, 2n)
    u: np.ndarray
    nu: np.ndarray
    phi_mult: np.ndarray
    hamiltonian: np.ndarray
    fidelity: np.ndarray


@dataclass(frozen=True)
class StageRecord:
    mu: float
    cost: float
    iterations: int
    reason: str
    stationarity: float


@dataclass(frozen=True)
class SolveReport:
    unknowns: UnknownVector
    problem: QuantumControlProblem = field(repr=False)
    options: SolveOptions = field(repr=False)
    stages: tuple
    residual_history: tuple = field(repr=False)
    t_final: float
    terminal_fidelity: float
    hamiltonian_mean: float
    hamiltonian_std: float
    trajectory: Trajectory = field(repr=False)
    converged: bool
    controllable: bool

    @property
    def mu_path(self) -> tuple:
        return tuple(s.mu for s in self.stages)

    @property
    def residual_norm(self) -> float:
        return math.sqrt(self.stages[-1].cost)

    @property
    def time_map(self) -> TimeMap:
        return TimeMap(self.unknowns.c_map, self.problem.t0)

    def _z(self, t):
        tmap = self.time_map
        return np.clip(tmap.z_of(np.asarray(t, dtype=float)), tmap.z0, tmap.zf)

    def fields(self, z):
        """``(psi, lam, u, nu, phi_mult)`` of the basis expansions at
        computational points ``z``."""
        state, adjoint, scalar = _expressions(self.problem, self.options, self.options.basis())
        x = self.unknowns
        psi, _ = state.evaluate(x.xi_psi, z, self.time_map)
        lam, _ = adjoint.evaluate(x.xi_lam, z, self.time_map)
        return (psi, lam, scalar.evaluate(x.xi_u, z), scalar.evaluate(x.xi_nu, z),
                scalar.evaluate(x.xi_phi, z))

    def control(self, t):
        """Basis expansion of the control at physical times ``t``."""
        return ScalarExpression(self.options.basis()).evaluate(self.unknowns.xi_u, self._z(t))

    def saturated_control(self, t):
        nu = ScalarExpression(self.options.basis()).evaluate(self.unknowns.xi_nu, self._z(t))
        return saturation(self.saturation_spec, nu)

    @property
    def saturation_spec(self) -> SaturationSpec:
        return SaturationSpec(self.problem.u_min, self.problem.u_max, self.options.c_sat)


def initial_guess(p: QuantumControlProblem, options: SolveOptions) -> UnknownVector:
    L, d = options.basis_size, 2 * p.n
    rng = np.random.default_rng(options.seed)
    s = options.lambda_init_scale
    return UnknownVector(
        xi_psi=np.zeros((L, d)),
        xi_lam=rng.uniform(-s, s, (L, d)),
        xi_u=np.zeros(L), xi_nu=np.zeros(L), xi_phi=np.zeros(L),
        c_map=2.0 / options.tf_guess,
    )


def stationarity_residual(system: PMPSystem, x: UnknownVector) -> float:
    """L2 norm over the grid of ``lam^T A_u psi + 2 eta sat(nu)``."""
    psi, _, lam, _, _, nu, _ = system._fields(x)
    u = saturation(system.sat, nu)
    g = np.einsum("jk,km,jm->j", lam, system.A_1, psi) + 2.0 * system.p.eta * u
    return float(np.linalg.norm(g))


def _lm_stage(system: PMPSystem, flat: np.ndarray, options: SolveOptions, history: list):
    x = system.unpack(flat)
    r = system.residual(x)
    cost = float(r @ r)
    history.append(cost)
    stage_costs = [cost]
    damping = options.damping
    reason = "max_iterations"
    it = 0
    for it in range(1, options.max_iterations + 1):
        if cost < options.tolerance:
            reason = "tolerance"
            it -= 1
            break
        J = system.jacobian(x)
        if not np.all(np.isfinite(J)):
            raise DegenerateJacobian("non-finite Jacobian entries")
        JtJ = J.T @ J
        g = J.T @ r
        scale = np.diag(JtJ).copy()
        floor = 1e-12 * max(scale.max(), 1.0)
        scale = np.maximum(scale, floor)
        accepted = False
        while damping < 1e16:
            step = np.linalg.solve(JtJ + damping * np.diag(scale), -g)
            trial = flat + step
            try:
                xt = system.unpack(trial)
                rt = system.residual(xt)
            except (ValueError, FloatingPointError, OverflowError):
                damping *= 10.0
                continue
            cost_t = float(rt @ rt)
            if cost_t < cost:
                flat, x, r, cost = trial, xt, rt, cost_t
                damping = max(damping / 3.0, 1e-15)
                accepted = True
                break
            damping *= 4.0
        history.append(cost)
        stage_costs.append(cost)
        if not accepted:
            reason = "stalled"
            break
        w = options.stagnation_window
        if len(stage_costs) > w:
            past = stage_costs[-1 - w]
            if past - cost <= options.stagnation_rtol * past:
                reason = "stagnated"
                break
    return flat, cost, it, reason


def solve(p: QuantumControlProblem, options: SolveOptions | None = None,
          initial: UnknownVector | None = None, samples: int = 1000) -> SolveReport:
    """Run the full continuation and return the last stage's solution.

    Raises :class:`NonConvergence` (with the report attached) when the final
    squared residual is above both ``tolerance`` and ``acceptance_tolerance``.
    """
    options = options or SolveOptions()
    if p.m != 1:
        raise NotSupported(f"solver handles a single control field, got {p.m}")
    _, controllable = lie_rank(p)
    if not controllable:
        log.warning("problem fails the Lie rank test; a solution may not exist")
    x0 = initial or initial_guess(p, options)
    flat = x0.to_flat()
    grid = collocation_grid(options.n_points, options.grid)
    history: list[float] = []
    stages = []
    system = None
    for mu in options.mu_schedule:
        system = PMPSystem(p, options, grid, mu)
        t_start = time.perf_counter()
        flat, cost, iters, reason = _lm_stage(system, flat, options, history)
        stat = stationarity_residual(system, system.unpack(flat))
        log.info("mu=%.1e cost=%.3e iters=%d (%s) stationarity=%.2e %.2fs",
                 mu, cost, iters, reason, stat, time.perf_counter() - t_start)
        stages.append(StageRecord(mu, cost, iters, reason, stat))
    x = system.unpack(flat)
    last = stages[-1]
    converged = last.cost < options.acceptance_tolerance
    report = _report(x, p, options, tuple(stages), tuple(history), converged, controllable,
                     samples)
    if not converged:
        raise NonConvergence(
            f"squared residual {last.cost:.3e} above tolerance after mu={last.mu:g}", report)
    return report


def _report(x, p, options, stages, history, converged, controllable, samples) -> SolveReport:
    traj = recover_trajectory(x, p, options, samples)
    H = traj.hamiltonian
    tmap = TimeMap(x.c_map, p.t0)
    return SolveReport(
        unknowns=x, problem=p, options=options, stages=stages, residual_history=history,
        t_final=tmap.t_final, terminal_fidelity=float(traj.fidelity[-1]),
        hamiltonian_mean=float(H.mean()), hamiltonian_std=float(H.std()),
        trajectory=traj, converged=converged, controllable=controllable,
    )


def recover_trajectory(x: UnknownVector, p: QuantumControlProblem, options: SolveOptions,
                       samples: int = 1000, mu: float | None = None) -> Trajectory:
    """Dense samples uniformly spaced in time on ``[t0, t_f]``."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    basis = options.basis()
    z = np.linspace(basis.z0, basis.zf, samples)
    state, adjoint, scalar = _expressions(p, options, basis)
    tmap = TimeMap(x.c_map, p.t0)
    psi, _ = state.evaluate(x.xi_psi, z, tmap)
    lam, _ = adjoint.evaluate(x.xi_lam, z, tmap)
    u = scalar.evaluate(x.xi_u, z)
    nu = scalar.evaluate(x.xi_nu, z)
    phi = scalar.evaluate(x.xi_phi, z)
    mu = options.mu_final if mu is None else mu
    sat = SaturationSpec(p.u_min, p.u_max, options.c_sat)
    A_d, A_1 = drift_generator(p), control_direction(p, 0)
    ham = (np.einsum("jk,km,jm->j", lam, A_d, psi)
           + u * np.einsum("jk,km,jm->j", lam, A_1, psi)
           + p.eta * u**2 + mu * nu**2 + phi * (u - saturation(sat, nu)))
    target = derealify_state(realify_state(p.psif))
    overlap = derealify_state(psi) @ target.conj()
    fid = np.minimum(np.abs(overlap) ** 2, 1.0)
    return Trajectory(
        t=tmap.time_of(z), z=z, psi=psi, populations=populations(psi), lam=lam,
        u=u, nu=nu, phi_mult=phi, hamiltonian=ham, fidelity=fid,
    )
