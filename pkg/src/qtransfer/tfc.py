"""Constrained expressions that satisfy boundary data for any free function.

The production expressions (state, adjoint, scalar) are linear in their
coefficients, so each one exposes a *design* on a set of points: the basis
matrix ``B`` (and its z-derivative ``dB``) plus the coefficient-independent
offset, with ``value = B @ xi + offset``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .basis import BasisSpec, TimeMap, eval_basis

__all__ = [
    "SwitchingPair",
    "switching_functions",
    "BoundaryConstraint",
    "general_constrained_expression",
    "AdjointMode",
    "Design",
    "StateExpression",
    "AdjointExpression",
    "ScalarExpression",
    "state_value",
    "adjoint_value",
    "scalar_value",
]


class SwitchingPair(NamedTuple):
    omega1: np.ndarray | float
    omega2: np.ndarray | float
    d_omega1: np.ndarray | float
    d_omega2: np.ndarray | float


def switching_functions(z, z0: float, zf: float) -> SwitchingPair:
    """Cubic Hermite blends: ``omega1`` is 1 at ``z0`` and 0 at ``zf``,
    ``omega2 = 1 - omega1``; both have zero slope at the two ends."""
    if not zf > z0:
        raise ValueError(f"switching functions need zf > z0, got [{z0}, {zf}]")
    span = zf - z0
    r = (np.asarray(z, dtype=float) - z0) / span
    omega2 = 3.0 * r**2 - 2.0 * r**3
    d_omega2 = (6.0 * r - 6.0 * r**2) / span
    omega1 = 1.0 - omega2
    if np.ndim(omega1) == 0:
        return SwitchingPair(float(omega1), float(omega2), float(-d_omega2), float(d_omega2))
    return SwitchingPair(omega1, omega2, -d_omega2, d_omega2)


@dataclass(frozen=True)
class BoundaryConstraint:
    """``y^(order)(t) = value``."""

    t: float
    value: float
    order: int = 0


def _monomial_derivative(k: int, m: int, t):
    """m-th derivative of ``t**k``."""
    if m > k:
        return np.zeros_like(np.asarray(t, dtype=float))
    coef = math.factorial(k) // math.factorial(k - m)
    return coef * np.asarray(t, dtype=float) ** (k - m)


def general_constrained_expression(
    g: Callable[[np.ndarray, int], np.ndarray],
    constraints: Sequence[BoundaryConstraint],
    t,
    order: int = 0,
    cond_limit: float = 1e12,
):
    """Evaluate ``y^(order)(t) = g^(order)(t) + sum_k s_k^(order)(t) eta_k``
    with monomial supports ``s_k(t) = t**(k-1)``.

    ``g(t, m)`` returns the m-th derivative of the free function. The
    ``eta_k`` are solved so that every constraint holds for any ``g``.
    """
    constraints = list(constraints)
    nc = len(constraints)
    if nc == 0:
        return g(np.asarray(t, dtype=float), order)
    support = np.array([[_monomial_derivative(k, c.order, c.t) for k in range(nc)]
                        for c in constraints], dtype=float)
    if not np.all(np.isfinite(support)) or np.linalg.cond(support) > cond_limit:
        raise np.linalg.LinAlgError("support functions are linearly dependent on the constraints")
    rhs = np.array([c.value - g(np.asarray(c.t, dtype=float), c.order) for c in constraints],
                   dtype=float)
    eta = np.linalg.solve(support, rhs)
    out = np.asarray(g(np.asarray(t, dtype=float), order), dtype=float)
    for k in range(nc):
        out = out + eta[k] * _monomial_derivative(k, order, t)
    return out


class AdjointMode(str, enum.Enum):
    FREE_TERMINAL = "free"
    TERMINAL_ANCHORED = "anchored"


class Design(NamedTuple):
    """Linear design of an expression on a set of points (z-derivatives)."""

    B: np.ndarray        # (N, L)
    dB: np.ndarray       # (N, L)
    offset: np.ndarray   # (N, d) or (N,)
    d_offset: np.ndarray


def _check_xi(xi, basis: BasisSpec, d: int) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (basis.size, d):
        raise ValueError(f"coefficients must have shape ({basis.size}, {d}), got {xi.shape}")
    return xi


@dataclass(frozen=True)
class StateExpression:
    """Both endpoints fixed:
    ``psi(z) = (h - O1 h(z0) - O2 h(zf))^T xi + O1 psi0 + O2 psif``."""

    basis: BasisSpec
    start: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        start = np.asarray(self.start, dtype=float)
        end = np.asarray(self.end, dtype=float)
        if start.shape != end.shape or start.ndim != 1:
            raise ValueError("boundary states must be 1-D vectors of equal length")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "end", end)

    @property
    def dim(self) -> int:
        return self.start.size

    def design(self, z) -> Design:
        b = self.basis
        rows = eval_basis(b, np.atleast_1d(z), 1)
        ends = eval_basis(b, np.array([b.z0, b.zf]), 0)[0]
        sw = switching_functions(np.atleast_1d(z), b.z0, b.zf)
        B = rows[0] - np.outer(sw.omega1, ends[0]) - np.outer(sw.omega2, ends[1])
        dB = rows[1] - np.outer(sw.d_omega1, ends[0]) - np.outer(sw.d_omega2, ends[1])
        off = np.outer(sw.omega1, self.start) + np.outer(sw.omega2, self.end)
        doff = np.outer(sw.d_omega1, self.start) + np.outer(sw.d_omega2, self.end)
        return Design(B, dB, off, doff)

    def evaluate(self, xi, z, tmap: TimeMap):
        xi = _check_xi(xi, self.basis, self.dim)
        des = self.design(z)
        value = des.B @ xi + des.offset
        rate = tmap.c_map * (des.dB @ xi + des.d_offset)
        if np.ndim(z) == 0:
            return value[0], rate[0]
        return value, rate


@dataclass(frozen=True)
class AdjointExpression:
    """Costate expression; optionally anchored at the terminal value."""

    basis: BasisSpec
    dim: int
    mode: AdjointMode = AdjointMode.FREE_TERMINAL
    terminal: np.ndarray | None = None

    def __post_init__(self):
        mode = AdjointMode(self.mode)
        object.__setattr__(self, "mode", mode)
        if mode is AdjointMode.TERMINAL_ANCHORED:
            if self.terminal is None:
                raise ValueError("terminal-anchored adjoint needs a terminal value")
            term = np.asarray(self.terminal, dtype=float)
            if term.shape != (self.dim,):
                raise ValueError(f"terminal adjoint must have shape ({self.dim},)")
            object.__setattr__(self, "terminal", term)

    def design(self, z) -> Design:
        b = self.basis
        zz = np.atleast_1d(z)
        rows = eval_basis(b, zz, 1)
        if self.mode is AdjointMode.FREE_TERMINAL:
            zeros = np.zeros((zz.size, self.dim))
            return Design(rows[0], rows[1], zeros, zeros)
        end = eval_basis(b, b.zf, 0)[0]
        sw = switching_functions(zz, b.z0, b.zf)
        B = rows[0] - np.outer(sw.omega2, end)
        dB = rows[1] - np.outer(sw.d_omega2, end)
        return Design(B, dB, np.outer(sw.omega2, self.terminal),
                      np.outer(sw.d_omega2, self.terminal))

    def evaluate(self, xi, z, tmap: TimeMap):
        xi = _check_xi(xi, self.basis, self.dim)
        des = self.design(z)
        value = des.B @ xi + des.offset
        rate = tmap.c_map * (des.dB @ xi + des.d_offset)
        if np.ndim(z) == 0:
            return value[0], rate[0]
        return value, rate


@dataclass(frozen=True)
class ScalarExpression:
    """Unconstrained free function ``h(z)^T xi`` (control, slack, multiplier)."""

    basis: BasisSpec

    def design(self, z) -> Design:
        rows = eval_basis(self.basis, np.atleast_1d(z), 1)
        zeros = np.zeros(rows.shape[1])
        return Design(rows[0], rows[1], zeros, zeros)

    def evaluate(self, xi, z):
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.basis.size,):
            raise ValueError(f"coefficients must have shape ({self.basis.size},)")
        value = self.design(z).B @ xi
        return float(value[0]) if np.ndim(z) == 0 else value


def state_value(expr: StateExpression, xi, z, tmap: TimeMap):
    """State and its time derivative at ``z``."""
    return expr.evaluate(xi, z, tmap)


def adjoint_value(expr: AdjointExpression, xi, z, tmap: TimeMap):
    return expr.evaluate(xi, z, tmap)


def scalar_value(basis: BasisSpec, xi, z):
    return ScalarExpression(basis).evaluate(xi, z)
