"""Run configuration files.

The format is INI (``configparser``) with three sections::

    [problem]     n, H_d, H_d_im, H_1, H_1_im, ..., psi0_re, psi0_im,
                  psif_re, psif_im, u_min, u_max, gamma, eta, t0
    [solver]      n_points, basis_size, basis, activation, grid, mu_schedule,
                  tolerance, acceptance_tolerance, max_iterations, damping,
                  seed, c_sat, tf_guess, adjoint_mode, lambda_f
    [output]      directory, samples

Matrices are whitespace- or comma-separated numbers in row-major order;
``*_im`` keys hold imaginary parts and default to zero. Unknown sections or
keys are rejected.
"""

from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .pmp import SolveOptions
from .quantum import InvalidProblem, QuantumControlProblem

__all__ = ["ParseError", "ValidationError", "OutputOptions", "RunConfig", "parse_config",
           "preset_path", "OUTPUT_ENV"]

OUTPUT_ENV = "QTRANSFER_OUTPUT_DIR"

_PROBLEM_SCALARS = {"u_min", "u_max", "gamma", "eta", "t0"}
_PROBLEM_VECTORS = {"psi0_re", "psi0_im", "psif_re", "psif_im"}
_CONTROL_KEY = re.compile(r"^h_(\d+)(_im)?$")

_SOLVER_KEYS = {
    "n_points": int, "basis_size": int, "basis": str, "activation": str, "grid": str,
    "mu_schedule": "floats", "tolerance": float, "acceptance_tolerance": float,
    "max_iterations": int, "damping": float, "seed": int, "c_sat": float,
    "tf_guess": float, "adjoint_mode": str, "lambda_f": "floats",
}
_SOLVER_FIELDS = {"basis": "basis_kind", "activation": "elm_activation"}
_OUTPUT_KEYS = {"directory": str, "samples": int}


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class OutputOptions:
    directory: str = "run"
    samples: int = 1000


@dataclass(frozen=True)
class RunConfig:
    problem: QuantumControlProblem
    solver: SolveOptions
    output: OutputOptions = field(default_factory=OutputOptions)
    source: str | None = None


def preset_path(name: str = "threelevel") -> Path:
    return Path(__file__).with_name("presets") / f"{name}.cfg"


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    """Line number of ``key`` in ``[section]``, or of the header if no key."""
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if key is None and current == section:
                return i
        elif key is not None and current == section and re.match(rf"{re.escape(key)}\s*[=:]", line, re.I):
            return i
    return None


def _floats(value: str) -> list[float]:
    return [float(tok) for tok in re.split(r"[\s,;]+", value.strip()) if tok]


def parse_config(path) -> RunConfig:
    """Read and validate a run configuration."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        cp.read_string(text, source=str(path))
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("expected a [section] header", exc.lineno) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ParseError(f"malformed line in {path}", line) from exc
    except configparser.DuplicateOptionError as exc:
        raise ParseError(f"duplicate key {exc.option!r}", exc.lineno) from exc
    except configparser.DuplicateSectionError as exc:
        raise ParseError(f"duplicate section {exc.section!r}", exc.lineno) from exc
    except configparser.Error as exc:
        raise ParseError(str(exc)) from exc

    unknown = set(cp.sections()) - {"problem", "solver", "output"}
    if unknown:
        name = sorted(unknown)[0]
        raise ParseError(f"unknown section [{name}]", _line_of(text, name.lower()))
    if not cp.has_section("problem"):
        raise ParseError("missing [problem] section")

    def number(section, key, conv, raw):
        try:
            return _floats(raw) if conv == "floats" else conv(raw)
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r}: {raw!r}", _line_of(text, section, key)) from exc

    problem = _problem(cp["problem"], text, number)
    solver_kw = {}
    if cp.has_section("solver"):
        for key, raw in cp["solver"].items():
            if key not in _SOLVER_KEYS:
                raise ParseError(f"unknown key {key!r} in [solver]", _line_of(text, "solver", key))
            solver_kw[_SOLVER_FIELDS.get(key, key)] = number("solver", key, _SOLVER_KEYS[key], raw)
    try:
        solver = SolveOptions(**solver_kw)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    if solver.lambda_f is not None and len(solver.lambda_f) != 2 * problem.n:
        raise ValidationError(f"lambda_f must have {2 * problem.n} entries")

    out_kw = {}
    if cp.has_section("output"):
        for key, raw in cp["output"].items():
            if key not in _OUTPUT_KEYS:
                raise ParseError(f"unknown key {key!r} in [output]", _line_of(text, "output", key))
            out_kw[key] = number("output", key, _OUTPUT_KEYS[key], raw)
    if os.environ.get(OUTPUT_ENV):
        out_kw["directory"] = os.environ[OUTPUT_ENV]
    output = OutputOptions(**out_kw)
    if output.samples < 2:
        raise ValidationError("output samples must be at least 2")
    return RunConfig(problem, solver, output, str(path))


def _problem(sec, text, number) -> QuantumControlProblem:
    values = {}
    controls: dict[int, dict[str, list[float]]] = {}
    for key, raw in sec.items():
        m = _CONTROL_KEY.match(key)
        if key in ("h_d", "h_d_im") or key in _PROBLEM_VECTORS:
            values[key] = number("problem", key, "floats", raw)
        elif key in _PROBLEM_SCALARS:
            values[key] = number("problem", key, float, raw)
        elif key == "n":
            values[key] = number("problem", key, int, raw)
        elif m:
            controls.setdefault(int(m.group(1)), {})["im" if m.group(2) else "re"] = \
                number("problem", key, "floats", raw)
        else:
            raise ParseError(f"unknown key {key!r} in [problem]", _line_of(text, "problem", key))
    for key in ("n", "h_d", "psi0_re", "psif_re"):
        if key not in values:
            raise ValidationError(f"[problem] is missing {key!r}")
    if not controls:
        raise ValidationError("[problem] needs at least one control Hamiltonian H_1")
    n = values["n"]
    if n < 1:
        raise ValidationError("n must be positive")

    def matrix(re_vals, im_vals, name):
        im_vals = im_vals if im_vals is not None else [0.0] * len(re_vals)
        if len(re_vals) != n * n or len(im_vals) != n * n:
            raise ValidationError(f"{name} needs {n * n} entries")
        return (np.array(re_vals) + 1j * np.array(im_vals)).reshape(n, n)

    def vector(prefix):
        re_vals = values[f"{prefix}_re"]
        im_vals = values.get(f"{prefix}_im", [0.0] * len(re_vals))
        if len(re_vals) != n or len(im_vals) != n:
            raise ValidationError(f"{prefix} needs {n} real and {n} imaginary entries")
        return np.array(re_vals) + 1j * np.array(im_vals)

    H_d = matrix(values["h_d"], values.get("h_d_im"), "H_d")
    order = sorted(controls)
    if order != list(range(1, len(order) + 1)):
        raise ValidationError("control Hamiltonians must be numbered H_1, H_2, ...")
    H_c = []
    for k in order:
        if "re" not in controls[k]:
            raise ValidationError(f"H_{k}_im given without H_{k}")
        H_c.append(matrix(controls[k]["re"], controls[k].get("im"), f"H_{k}"))
    try:
        return QuantumControlProblem(
            H_d=H_d, H_c=tuple(H_c), psi0=vector("psi0"), psif=vector("psif"),
            u_min=values.get("u_min", -1.0), u_max=values.get("u_max", 1.0),
            gamma=values.get("gamma", 0.0), eta=values.get("eta", 0.0),
            t0=values.get("t0", 0.0),
        )
    except InvalidProblem as exc:
        raise ValidationError(str(exc)) from exc
