"""Basis functions on the computational domain, collocation grids and the
linear map between physical time and the computational variable ``z``."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BasisKind",
    "Activation",
    "GridScheme",
    "BasisSpec",
    "TimeMap",
    "eval_basis",
    "collocation_grid",
    "time_of",
    "z_of",
]

Z0 = -1.0
ZF = 1.0
MAX_ORDER = 2


class BasisKind(str, enum.Enum):
    CHEBYSHEV = "chebyshev"
    ELM = "elm"


class Activation(str, enum.Enum):
    TANH = "tanh"
    SIGMOID = "sigmoid"


class GridScheme(str, enum.Enum):
    CGL = "cgl"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class BasisSpec:
    """Description of one family of ``L`` basis functions.

    ELM weights and biases are stored as read-only arrays; build them with
    :meth:`BasisSpec.elm` to get the seeded uniform ``[-1, 1]`` draw.
    """

    kind: BasisKind
    size: int
    weights: np.ndarray | None = field(default=None, repr=False, compare=False)
    biases: np.ndarray | None = field(default=None, repr=False, compare=False)
    activation: Activation = Activation.TANH
    z0: float = Z0
    zf: float = ZF

    def __post_init__(self):
        object.__setattr__(self, "kind", BasisKind(self.kind))
        object.__setattr__(self, "activation", Activation(self.activation))
        if int(self.size) != self.size or self.size < 1:
            raise ValueError(f"basis size must be a positive integer, got {self.size!r}")
        if not self.zf > self.z0:
            raise ValueError(f"empty domain [{self.z0}, {self.zf}]")
        if self.kind is BasisKind.CHEBYSHEV:
            if (self.z0, self.zf) != (Z0, ZF):
                raise ValueError("Chebyshev basis lives on [-1, 1]")
            return
        for name in ("weights", "biases"):
            arr = getattr(self, name)
            if arr is None:
                raise ValueError(f"ELM basis needs {name}")
            arr = np.array(arr, dtype=float)
            if arr.shape != (self.size,):
                raise ValueError(f"ELM {name} must have shape ({self.size},), got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def chebyshev(cls, size: int) -> "BasisSpec":
        return cls(BasisKind.CHEBYSHEV, size)

    @classmethod
    def elm(cls, size: int, seed: int, activation: Activation | str = Activation.TANH,
            z0: float = Z0, zf: float = ZF) -> "BasisSpec":
        rng = np.random.default_rng(seed)
        weights = rng.uniform(-1.0, 1.0, size)
        biases = rng.uniform(-1.0, 1.0, size)
        return cls(BasisKind.ELM, size, weights, biases, Activation(activation), z0, zf)


def _chebyshev_rows(z: np.ndarray, size: int, max_order: int) -> np.ndarray:
    out = np.zeros((max_order + 1, z.size, size))
    t = out[0]
    t[:, 0] = 1.0
    if size > 1:
        t[:, 1] = z
    for k in range(2, size):
        t[:, k] = 2.0 * z * t[:, k - 1] - t[:, k - 2]
    if max_order >= 1 and size > 1:
        d1 = out[1]
        d1[:, 1] = 1.0
        for k in range(2, size):
            d1[:, k] = 2.0 * t[:, k - 1] + 2.0 * z * d1[:, k - 1] - d1[:, k - 2]
    if max_order >= 2 and size > 2:
        d1, d2 = out[1], out[2]
        for k in range(2, size):
            d2[:, k] = 4.0 * d1[:, k - 1] + 2.0 * z * d2[:, k - 1] - d2[:, k - 2]
    return out


def _elm_rows(z: np.ndarray, spec: BasisSpec, max_order: int) -> np.ndarray:
    w = spec.weights
    arg = np.outer(z, w) + spec.biases
    out = np.empty((max_order + 1, z.size, spec.size))
    if spec.activation is Activation.TANH:
        h = np.tanh(arg)
        dh = 1.0 - h * h
        ddh = -2.0 * h * dh
    else:
        h = 0.5 * (1.0 + np.tanh(0.5 * arg))  # overflow-free logistic
        dh = h * (1.0 - h)
        ddh = dh * (1.0 - 2.0 * h)
    out[0] = h
    if max_order >= 1:
        out[1] = dh * w
    if max_order >= 2:
        out[2] = ddh * w * w
    return out


def eval_basis(spec: BasisSpec, z, max_order: int = 1) -> np.ndarray:
    """Basis values and z-derivatives.

    For scalar ``z`` the result has shape ``(max_order + 1, L)``; for a 1-D
    array of ``N`` points it is ``(max_order + 1, N, L)``. Row ``m`` holds the
    ``m``-th derivative with respect to ``z``.
    """
    if max_order < 0 or max_order > MAX_ORDER:
        raise ValueError(f"max_order must be in [0, {MAX_ORDER}], got {max_order}")
    scalar = np.ndim(z) == 0
    zz = np.atleast_1d(np.asarray(z, dtype=float))
    if zz.ndim != 1:
        raise ValueError("z must be a scalar or a 1-D array")
    if not np.all(np.isfinite(zz)):
        raise ValueError("z must be finite")
    span = spec.zf - spec.z0
    if np.any(zz < spec.z0 - 1e-12 * span) or np.any(zz > spec.zf + 1e-12 * span):
        raise ValueError(f"z outside basis domain [{spec.z0}, {spec.zf}]")
    if spec.kind is BasisKind.CHEBYSHEV:
        rows = _chebyshev_rows(zz, spec.size, max_order)
    else:
        rows = _elm_rows(zz, spec, max_order)
    return rows[:, 0, :] if scalar else rows


def collocation_grid(n: int, scheme: GridScheme | str = GridScheme.CGL,
                     z0: float = Z0, zf: float = ZF) -> np.ndarray:
    """``n`` increasing nodes on ``[z0, zf]`` including both endpoints."""
    if int(n) != n or n < 2:
        raise ValueError(f"need at least 2 collocation points, got {n!r}")
    if not zf > z0:
        raise ValueError(f"empty domain [{z0}, {zf}]")
    scheme = GridScheme(scheme)
    if scheme is GridScheme.CGL:
        k = np.arange(n)
        # sin form is exactly antisymmetric, unlike -cos(pi k / (n-1))
        ref = np.sin(np.pi * (2 * k - (n - 1)) / (2 * (n - 1)))
    else:
        ref = np.linspace(-1.0, 1.0, n)
    nodes = 0.5 * (z0 + zf) + 0.5 * (zf - z0) * ref
    nodes[0], nodes[-1] = z0, zf
    return nodes


@dataclass(frozen=True)
class TimeMap:
    """``z = z0 + c_map (t - t0)``."""

    c_map: float
    t0: float = 0.0
    z0: float = Z0
    zf: float = ZF

    def __post_init__(self):
        if not (math.isfinite(self.c_map) and self.c_map > 0):
            raise ValueError(f"c_map must be positive and finite, got {self.c_map}")
        if not self.zf > self.z0:
            raise ValueError(f"empty domain [{self.z0}, {self.zf}]")

    @property
    def t_final(self) -> float:
        return self.t0 + (self.zf - self.z0) / self.c_map

    def time_of(self, z):
        return self.t0 + (np.asarray(z, dtype=float) - self.z0) / self.c_map

    def z_of(self, t):
        return self.z0 + self.c_map * (np.asarray(t, dtype=float) - self.t0)


def time_of(tmap: TimeMap, z):
    return tmap.time_of(z)


def z_of(tmap: TimeMap, t):
    return tmap.z_of(t)
