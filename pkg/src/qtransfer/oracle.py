"""Independent certification of a solve: fixed-step RK4 re-propagation of the
Schrödinger equation and exact propagators for constant controls.

Nothing here reads the collocated state trajectory except to compare
against it.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .basis import collocation_grid
from .pmp import saturation
from .quantum import (
    QuantumControlProblem,
    assemble_hamiltonian,
    control_direction,
    drift_generator,
    fidelity,
    realify_state,
)

__all__ = [
    "Thresholds",
    "VerificationReport",
    "rk4_propagate",
    "constant_control_propagator",
    "verify",
]

DEFAULT_STEPS = 2000


def _control_callable(control) -> Callable[[float], float]:
    if callable(control):
        return control
    t, u = control
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    if t.ndim != 1 or t.shape != u.shape or t.size < 2:
        raise ValueError("sampled control needs matching 1-D time and value arrays")
    return CubicSpline(t, u)


def rk4_propagate(p: QuantumControlProblem, control, t_grid, psi0=None,
                  steps: int = DEFAULT_STEPS) -> np.ndarray:
    """Realified states at every point of ``t_grid``.

    ``control`` is either a callable ``u(t)`` (preferred: the exact basis
    expansion) or a ``(t_samples, u_samples)`` pair interpolated by a cubic
    spline. The RK4 step never exceeds ``(t_grid[-1] - t_grid[0]) / steps``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1:
        raise ValueError("t_grid must be a nonempty 1-D array")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    u_of = _control_callable(control)
    A_d, A_1 = drift_generator(p), control_direction(p, 0)
    x = realify_state(p.psi0 if psi0 is None else psi0)
    span = t_grid[-1] - t_grid[0]
    h_max = span / steps if span > 0 else 0.0
    if span > 0 and (not math.isfinite(h_max) or h_max <= 0 or t_grid[0] + h_max == t_grid[0]):
        raise FloatingPointError("RK4 step size underflow")

    def f(t, y):
        return (A_d + float(u_of(t)) * A_1) @ y

    out = np.empty((t_grid.size, x.size))
    out[0] = x
    for i in range(1, t_grid.size):
        ta, tb = t_grid[i - 1], t_grid[i]
        k = max(1, math.ceil((tb - ta) / h_max * (1 - 1e-12)))
        h = (tb - ta) / k
        t = ta
        for _ in range(k):
            k1 = f(t, x)
            k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
            k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
            k4 = f(t + h, x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        if not np.all(np.isfinite(x)):
            raise FloatingPointError(f"non-finite state at t={tb}")
        out[i] = x
    return out


def constant_control_propagator(p: QuantumControlProblem, u: float, dt: float) -> np.ndarray:
    """Realified ``exp(-i H(u) dt)`` from the eigendecomposition of ``H(u)``."""
    if not math.isfinite(dt):
        raise ValueError("dt must be finite")
    w, V = np.linalg.eigh(assemble_hamiltonian(p, [u]))
    U = (V * np.exp(-1j * w * dt)) @ V.conj().T
    return np.block([[U.real, -U.imag], [U.imag, U.real]])


@dataclass(frozen=True)
class Thresholds:
    fidelity: float = 0.99
    norm_drift: float = 1e-9
    pairing_drift: float = 1e-6
    hamiltonian_deviation: float = 1e-4
    stationarity: float = 1e-6
    bound_violation: float = 1e-6
    state_deviation: float = 1e-3


@dataclass(frozen=True)
class VerificationReport:
    terminal_fidelity: float
    norm_drift: float
    pairing_drift: float
    hamiltonian_deviation: float
    stationarity: float
    bound_violation: float
    state_deviation: float
    thresholds: Thresholds = field(default_factory=Thresholds)

    @property
    def checks(self) -> dict[str, bool]:
        th = self.thresholds
        return {
            "fidelity": self.terminal_fidelity >= th.fidelity,
            "norm_drift": self.norm_drift < th.norm_drift,
            "pairing_drift": self.pairing_drift < th.pairing_drift,
            "hamiltonian_deviation": self.hamiltonian_deviation < th.hamiltonian_deviation,
            "stationarity": self.stationarity < th.stationarity,
            "bound_violation": self.bound_violation < th.bound_violation,
            "state_deviation": self.state_deviation < th.state_deviation,
        }

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        out = asdict(self)
        out["checks"] = self.checks
        out["passed"] = self.passed
        return out


def verify(report, p: QuantumControlProblem, thresholds: Thresholds | None = None,
           control=None, steps: int = DEFAULT_STEPS) -> VerificationReport:
    """Certify a solve.

    ``report`` must provide ``trajectory`` (sampled fields) and, unless an
    explicit ``control`` is given, a ``control(t)`` basis expansion. The
    Hamiltonian and pairing checks use the sampled costate; stationarity is
    the 2-norm over the collocation grid of ``lam^T A_1 psi + 2 eta sat(nu)``
    when the report exposes its expansions, else over the samples.
    """
    thresholds = thresholds or Thresholds()
    traj = report.trajectory
    t = np.asarray(traj.t, dtype=float)
    u_of = control if control is not None else report.control
    states = rk4_propagate(p, u_of, t, steps=steps)
    u_samples = np.array([float(u_of(ti)) for ti in t]) if callable(u_of) else (
        _control_callable(u_of)(t))

    norms = np.linalg.norm(states, axis=1)
    lam = np.asarray(traj.lam)
    psi_tfc = np.asarray(traj.psi)
    pairing = np.einsum("ij,ij->i", lam, psi_tfc)
    lam_norm = np.linalg.norm(lam, axis=1)
    A_1 = control_direction(p, 0)
    if hasattr(report, "fields") and hasattr(report, "options"):
        z = collocation_grid(report.options.n_points, report.options.grid)
        psi_g, lam_g, _, nu_g, _ = report.fields(z)
        u_g = saturation(report.saturation_spec, nu_g)
    else:
        psi_g, lam_g, u_g = psi_tfc, lam, u_samples
    grad = np.einsum("jk,km,jm->j", lam_g, A_1, psi_g) + 2.0 * p.eta * u_g
    H = np.asarray(traj.hamiltonian)
    ham_dev = float(max(np.max(np.abs(H - H.mean())), abs(H[-1] + p.gamma)))
    below = np.maximum(p.u_min - u_samples, 0.0)
    above = np.maximum(u_samples - p.u_max, 0.0)
    return VerificationReport(
        terminal_fidelity=fidelity(states[-1], realify_state(p.psif)),
        norm_drift=float(np.max(np.abs(norms - norms[0]))),
        pairing_drift=float(max(np.ptp(pairing), np.ptp(lam_norm))),
        hamiltonian_deviation=ham_dev,
        stationarity=float(np.linalg.norm(grad)),
        bound_violation=float(np.max(np.maximum(below, above))),
        state_deviation=float(np.max(np.abs(states - psi_tfc))),
        thresholds=thresholds,
    )
