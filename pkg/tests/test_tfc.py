import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qtransfer.basis import BasisSpec, TimeMap, eval_basis
from qtransfer.tfc import (
    AdjointExpression,
    AdjointMode,
    BoundaryConstraint,
    ScalarExpression,
    StateExpression,
    adjoint_value,
    general_constrained_expression,
    scalar_value,
    state_value,
    switching_functions,
)

PSI0 = np.array([1.0, 0, 0, 0, 0, 0])
PSIF = np.array([0, 0, 0.6, 0, 0, 0.8])


def test_switching_endpoints_and_midpoint():
    assert switching_functions(-1.0, -1.0, 1.0) == (1.0, 0.0, 0.0, 0.0)
    assert switching_functions(1.0, -1.0, 1.0) == (0.0, 1.0, 0.0, 0.0)
    mid = switching_functions(0.0, -1.0, 1.0)
    assert mid.omega1 == 0.5 and mid.omega2 == 0.5
    with pytest.raises(ValueError):
        switching_functions(0.0, 1.0, 1.0)


def test_switching_derivative():
    z, h = 0.37, 1e-6
    sw = switching_functions(z, -1.0, 1.0)
    fd = (switching_functions(z + h, -1.0, 1.0).omega2 - switching_functions(z - h, -1.0, 1.0).omega2) / (2 * h)
    assert sw.d_omega2 == pytest.approx(fd, abs=1e-9)
    assert sw.d_omega1 == -sw.d_omega2


def test_general_expression_straight_line():
    zero = lambda t, m: np.zeros_like(t)
    cons = [BoundaryConstraint(0.0, 1.0), BoundaryConstraint(1.0, 0.0)]
    t = np.linspace(0, 1, 7)
    np.testing.assert_allclose(general_constrained_expression(zero, cons, t), 1 - t, atol=1e-15)


def test_general_expression_hand_solve():
    g = lambda t, m: [t**2, 2 * t, 2 + 0 * t][m]
    cons = [BoundaryConstraint(0.0, 0.0), BoundaryConstraint(1.0, 0.0)]
    t = np.linspace(0, 1, 9)
    np.testing.assert_allclose(general_constrained_expression(g, cons, t), t**2 - t, atol=1e-15)
    np.testing.assert_allclose(general_constrained_expression(g, cons, t, order=1), 2 * t - 1,
                               atol=1e-15)


def test_general_expression_derivative_constraint():
    g = lambda t, m: [np.sin(t), np.cos(t)][m]
    cons = [BoundaryConstraint(0.0, 2.0), BoundaryConstraint(0.5, -1.0, order=1)]
    assert general_constrained_expression(g, cons, 0.0) == pytest.approx(2.0, abs=1e-15)
    assert general_constrained_expression(g, cons, 0.5, order=1) == pytest.approx(-1.0, abs=1e-15)


def test_general_expression_dependent_supports():
    zero = lambda t, m: np.zeros_like(t)
    cons = [BoundaryConstraint(0.3, 1.0), BoundaryConstraint(0.3, 2.0)]
    with pytest.raises(np.linalg.LinAlgError):
        general_constrained_expression(zero, cons, 0.0)


def test_state_expression_zero_coefficients_is_blend():
    expr = StateExpression(BasisSpec.chebyshev(8), PSI0, PSIF)
    z = np.linspace(-1, 1, 11)
    psi, _ = state_value(expr, np.zeros((8, 6)), z, TimeMap(1.0))
    sw = switching_functions(z, -1, 1)
    np.testing.assert_allclose(psi, np.outer(sw.omega1, PSI0) + np.outer(sw.omega2, PSIF), atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.01, 10))
def test_state_expression_embeds_endpoints(seed, c):
    expr = StateExpression(BasisSpec.chebyshev(20), PSI0, PSIF)
    xi = np.random.default_rng(seed).normal(size=(20, 6))
    start, _ = state_value(expr, xi, -1.0, TimeMap(c))
    end, _ = state_value(expr, xi, 1.0, TimeMap(c))
    assert np.max(np.abs(start - PSI0)) < 1e-12
    assert np.max(np.abs(end - PSIF)) < 1e-12


def test_state_rate_scales_every_term_with_c_map():
    expr = StateExpression(BasisSpec.chebyshev(10), PSI0, PSIF)
    xi = np.random.default_rng(0).normal(size=(10, 6))
    z, h, c = 0.2, 1e-6, 0.37
    _, rate = state_value(expr, xi, z, TimeMap(c))
    fd = (state_value(expr, xi, z + h, TimeMap(c))[0] - state_value(expr, xi, z - h, TimeMap(c))[0]) / (2 * h)
    np.testing.assert_allclose(rate, c * fd, atol=1e-8)


def test_anchored_adjoint_vanishes_at_end():
    expr = AdjointExpression(BasisSpec.chebyshev(9), 6, AdjointMode.TERMINAL_ANCHORED, np.zeros(6))
    xi = np.random.default_rng(1).normal(size=(9, 6))
    lam, _ = adjoint_value(expr, xi, 1.0, TimeMap(2.0))
    np.testing.assert_array_equal(lam, 0.0)
    with pytest.raises(ValueError):
        AdjointExpression(BasisSpec.chebyshev(9), 6, AdjointMode.TERMINAL_ANCHORED)


def test_free_adjoint_is_plain_expansion():
    basis = BasisSpec.chebyshev(7)
    expr = AdjointExpression(basis, 2)
    lam, rate = adjoint_value(expr, np.zeros((7, 2)), 0.4, TimeMap(1.0))
    np.testing.assert_array_equal(lam, 0.0)
    xi = np.zeros((7, 2))
    xi[3, 1] = 1.0
    lam, rate = adjoint_value(expr, xi, 0.4, TimeMap(0.25))
    rows = eval_basis(basis, 0.4)
    assert lam[1] == pytest.approx(rows[0, 3]) and lam[0] == 0.0
    assert rate[1] == pytest.approx(0.25 * rows[1, 3])


def test_scalar_expression():
    basis = BasisSpec.chebyshev(5)
    assert scalar_value(basis, np.zeros(5), 0.1) == 0.0
    assert scalar_value(basis, np.eye(5)[0], -0.7) == 1.0
    assert scalar_value(basis, np.eye(5)[1], 0.3) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        ScalarExpression(basis).evaluate(np.zeros(4), 0.0)


def test_coefficient_shape_checked():
    expr = StateExpression(BasisSpec.chebyshev(4), PSI0, PSIF)
    with pytest.raises(ValueError):
        expr.evaluate(np.zeros((4, 5)), 0.0, TimeMap(1.0))
