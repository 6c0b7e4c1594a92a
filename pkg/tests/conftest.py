import textwrap

import pytest

TWO_LEVEL = """
[problem]
n = 2
H_d = 0.5 0
      0 -0.5
H_1 = 0 1
      1 0
psi0_re = 1 0
psif_re = 0 1
u_min = -5
u_max = 5
gamma = 0.1
eta = 0.1

[solver]
n_points = 24
basis_size = 12
tf_guess = 2.0

[output]
directory = {outdir}
samples = 200
"""


@pytest.fixture
def two_level_config(tmp_path):
    """Path of a small, fast two-level run configuration."""
    path = tmp_path / "two.cfg"
    path.write_text(textwrap.dedent(TWO_LEVEL).format(outdir=tmp_path / "run"))
    return path


ACCEPTANCE: dict[int, tuple[str, str, bool]] = {}


def record(number: int, name: str, detail: str, ok: bool) -> None:
    """Log an acceptance criterion outcome for the end-of-run table."""
    ACCEPTANCE[number] = (name, detail, bool(ok))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        name, detail, ok = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {name}: {detail}")
    passed = sum(ok for _, _, ok in ACCEPTANCE.values())
    terminalreporter.write_line(f"{passed}/{len(ACCEPTANCE)} criteria pass")
