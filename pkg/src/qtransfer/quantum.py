"""Bilinear Schrödinger model in real arithmetic (hbar = 1)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "InvalidProblem",
    "QuantumControlProblem",
    "assemble_hamiltonian",
    "realify_hamiltonian",
    "realify_state",
    "derealify_state",
    "control_direction",
    "drift_generator",
    "fidelity",
    "populations",
    "lie_rank",
    "three_level_problem",
]

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-12


class InvalidProblem(ValueError):
    """A problem definition violates a model invariant."""


def _is_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.max(np.abs(h - h.conj().T), initial=0.0) <= tol


@dataclass(frozen=True)
class QuantumControlProblem:
    """State-to-state transfer with cost ``gamma * t_f + eta * int u^2 dt``
    and ``u_min <= u <= u_max``."""

    H_d: np.ndarray
    H_c: tuple = field(repr=False)
    psi0: np.ndarray
    psif: np.ndarray
    u_min: float = -1.0
    u_max: float = 1.0
    gamma: float = 0.0
    eta: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        H_d = np.array(self.H_d, dtype=complex)
        controls = self.H_c
        if isinstance(controls, np.ndarray) and controls.ndim == 2:
            controls = (controls,)
        H_c = tuple(np.array(h, dtype=complex) for h in controls)
        psi0 = np.array(self.psi0, dtype=complex).ravel()
        psif = np.array(self.psif, dtype=complex).ravel()
        n = H_d.shape[0] if H_d.ndim == 2 else -1
        if not _is_hermitian(H_d):
            raise InvalidProblem("H_d not Hermitian")
        if not H_c:
            raise InvalidProblem("at least one control Hamiltonian is required")
        for k, h in enumerate(H_c):
            if h.shape != (n, n):
                raise InvalidProblem(f"H_c[{k}] has shape {h.shape}, expected {(n, n)}")
            if not _is_hermitian(h):
                raise InvalidProblem(f"H_c[{k}] not Hermitian")
        for name, psi in (("psi0", psi0), ("psif", psif)):
            if psi.shape != (n,):
                raise InvalidProblem(f"{name} has length {psi.size}, expected {n}")
            norm = np.linalg.norm(psi)
            if abs(norm - 1.0) > NORM_TOL:
                raise InvalidProblem(f"{name} not normalized: norm = {float(norm)!r}")
        if not self.u_min < self.u_max:
            raise InvalidProblem(f"need u_min < u_max, got [{self.u_min}, {self.u_max}]")
        if self.gamma < 0 or self.eta < 0:
            raise InvalidProblem("gamma and eta must be nonnegative")
        if self.gamma == 0 and self.eta == 0:
            raise InvalidProblem("gamma and eta cannot both be zero")
        for name, val in (("H_d", H_d), ("psi0", psi0), ("psif", psif)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        for h in H_c:
            h.setflags(write=False)
        object.__setattr__(self, "H_c", H_c)
        for name in ("u_min", "u_max", "gamma", "eta", "t0"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def n(self) -> int:
        return self.H_d.shape[0]

    @property
    def m(self) -> int:
        return len(self.H_c)


def assemble_hamiltonian(p: QuantumControlProblem, u) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (p.m,):
        raise ValueError(f"expected {p.m} control values, got {u.size}")
    if not np.all(np.isfinite(u)):
        raise ValueError("control values must be finite")
    H = p.H_d.copy()
    for uk, hk in zip(u, p.H_c):
        H = H + uk * hk
    return H


def realify_hamiltonian(H, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Real 2n x 2n generator of ``d psi/dt = -i H psi``."""
    H = np.asarray(H, dtype=complex)
    if not _is_hermitian(H, tol):
        raise ValueError("Hamiltonian is not Hermitian")
    G = -1j * H
    return np.block([[G.real, -G.imag], [G.imag, G.real]])


def realify_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    return np.concatenate([psi.real, psi.imag])


def derealify_state(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] % 2:
        raise ValueError("realified state must have even length")
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


def drift_generator(p: QuantumControlProblem) -> np.ndarray:
    return realify_hamiltonian(p.H_d)


def control_direction(p: QuantumControlProblem, k: int = 0) -> np.ndarray:
    """Derivative of the realified generator with respect to ``u_k``."""
    if not 0 <= k < p.m:
        raise IndexError(f"control index {k} out of range for {p.m} controls")
    return realify_hamiltonian(p.H_c[k])


def fidelity(psi, psif) -> float:
    """``|<psi|psif>|^2``.

    Complex arrays are taken as state vectors; real-valued arrays are taken
    as realified ``[Re; Im]`` stacks.
    """
    a = _complex_state(psi)
    b = _complex_state(psif)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.size} vs {b.size}")
    for v in (a, b):
        if abs(np.linalg.norm(v) - 1.0) > 1e-6:
            warnings.warn("fidelity of a non-normalized state", RuntimeWarning, stacklevel=2)
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


def _complex_state(psi) -> np.ndarray:
    psi = np.asarray(psi)
    if np.iscomplexobj(psi):
        return psi.ravel()
    return derealify_state(psi.ravel())


def populations(psi) -> np.ndarray:
    psi = np.asarray(psi)
    if not np.iscomplexobj(psi):
        psi = derealify_state(psi)
    return np.abs(psi) ** 2


def _su_vector(A: np.ndarray) -> np.ndarray:
    return np.concatenate([A.real.ravel(), A.imag.ravel()])


def _traceless(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    return A - np.trace(A) / n * np.eye(n)


def lie_rank(p: QuantumControlProblem, tol: float = 1e-10) -> tuple[int, bool]:
    """Dimension of the Lie closure of the traceless parts of
    ``{iH_d, iH_1, ..., iH_m}``; controllable when it equals ``n**2 - 1``."""
    gens = [_traceless(1j * p.H_d)] + [_traceless(1j * h) for h in p.H_c]
    scale = max(np.linalg.norm(g) for g in gens)
    n = p.n
    if scale == 0.0:
        return 0, n == 1

    basis_mats: list[np.ndarray] = []
    basis_vecs: list[np.ndarray] = []

    def add(A: np.ndarray) -> bool:
        v = _su_vector(A)
        for q in basis_vecs:
            v = v - (q @ v) * q
        for q in basis_vecs:  # second pass for orthogonality
            v = v - (q @ v) * q
        nv = np.linalg.norm(v)
        if nv <= tol:
            return False
        v = v / nv
        basis_vecs.append(v)
        half = n * n
        basis_mats.append((v[:half] + 1j * v[half:]).reshape(n, n))
        return True

    for g in gens:
        add(g / scale)
    frontier = list(range(len(basis_mats)))
    while frontier and len(basis_mats) < n * n - 1:
        new = []
        for i in frontier:
            for j in range(len(basis_mats)):
                if i == j:
                    continue
                A, B = basis_mats[i], basis_mats[j]
                if add(A @ B - B @ A):
                    new.append(len(basis_mats) - 1)
        frontier = new
    dim = len(basis_mats)
    return dim, dim == n * n - 1


def three_level_problem(gamma: float = 0.01, eta: float = 0.1) -> QuantumControlProblem:
    """Ladder system driven |a> -> |c> with a single bounded field."""
    H_d = np.diag([0.5, 0.4, 0.6])
    H_1 = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    return QuantumControlProblem(
        H_d=H_d, H_c=(H_1,), psi0=[1.0, 0.0, 0.0], psif=[0.0, 0.0, 1.0],
        u_min=-1.0, u_max=1.0, gamma=gamma, eta=eta,
    )
