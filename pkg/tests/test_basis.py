import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qtransfer.basis import (
    Activation,
    BasisKind,
    BasisSpec,
    GridScheme,
    TimeMap,
    collocation_grid,
    eval_basis,
    time_of,
    z_of,
)


def test_chebyshev_at_one_is_all_ones():
    rows = eval_basis(BasisSpec.chebyshev(12), 1.0)
    assert rows.shape == (2, 12)
    np.testing.assert_array_equal(rows[0], np.ones(12))


def test_chebyshev_T3_at_half():
    rows = eval_basis(BasisSpec.chebyshev(6), 0.5, max_order=2)
    assert rows[0, 3] == pytest.approx(-1.0, abs=1e-15)   # 4z^3 - 3z
    assert rows[1, 3] == pytest.approx(0.0, abs=1e-15)    # 12z^2 - 3
    assert rows[2, 3] == pytest.approx(12.0, abs=1e-14)   # 24z


def test_chebyshev_matches_numpy():
    z = np.linspace(-1, 1, 17)
    rows = eval_basis(BasisSpec.chebyshev(9), z, max_order=2)
    for k in range(9):
        c = np.zeros(9)
        c[k] = 1.0
        T = np.polynomial.Chebyshev(c)
        np.testing.assert_allclose(rows[0, :, k], T(z), atol=1e-13)
        np.testing.assert_allclose(rows[1, :, k], T.deriv(1)(z), atol=1e-11)
        np.testing.assert_allclose(rows[2, :, k], T.deriv(2)(z), atol=1e-10)


def test_elm_zero_weights_have_zero_derivative():
    spec = BasisSpec(BasisKind.ELM, 5, np.zeros(5), np.linspace(-1, 1, 5), Activation.TANH)
    rows = eval_basis(spec, np.array([-0.5, 0.2]))
    np.testing.assert_array_equal(rows[1], 0.0)
    np.testing.assert_allclose(rows[0][0], np.tanh(np.linspace(-1, 1, 5)))


@pytest.mark.parametrize("activation", list(Activation))
def test_elm_derivatives_match_finite_differences(activation):
    spec = BasisSpec.elm(7, seed=3, activation=activation)
    z, h = 0.3, 1e-5
    rows = eval_basis(spec, z, max_order=2)
    plus, minus = eval_basis(spec, z + h, 1), eval_basis(spec, z - h, 1)
    np.testing.assert_allclose(rows[1], (plus[0] - minus[0]) / (2 * h), atol=1e-9)
    np.testing.assert_allclose(rows[2], (plus[1] - minus[1]) / (2 * h), atol=1e-9)


def test_elm_is_seeded_and_frozen():
    a, b = BasisSpec.elm(4, seed=11), BasisSpec.elm(4, seed=11)
    np.testing.assert_array_equal(a.weights, b.weights)
    assert np.all(np.abs(a.weights) <= 1) and np.all(np.abs(a.biases) <= 1)
    with pytest.raises(ValueError):
        a.weights[0] = 2.0


def test_eval_basis_rejects_bad_input():
    spec = BasisSpec.chebyshev(4)
    with pytest.raises(ValueError):
        eval_basis(spec, 1.5)
    with pytest.raises(ValueError):
        eval_basis(spec, np.nan)
    with pytest.raises(ValueError):
        eval_basis(spec, 0.0, max_order=3)
    with pytest.raises(ValueError):
        BasisSpec.chebyshev(0)


@pytest.mark.parametrize("scheme", list(GridScheme))
def test_two_point_grid_is_the_endpoints(scheme):
    np.testing.assert_array_equal(collocation_grid(2, scheme), [-1.0, 1.0])


def test_three_point_cgl():
    np.testing.assert_array_equal(collocation_grid(3), [-1.0, 0.0, 1.0])


def test_forty_point_cgl_is_symmetric():
    z = collocation_grid(40)
    assert z.size == 40 and z[0] == -1.0 and z[-1] == 1.0
    assert np.all(np.diff(z) > 0)
    np.testing.assert_array_equal(z, -z[::-1])
    np.testing.assert_allclose(z, -np.cos(np.pi * np.arange(40) / 39), rtol=0, atol=4e-16)


def test_grid_on_other_interval():
    z = collocation_grid(5, GridScheme.UNIFORM, 0.0, 2.0)
    np.testing.assert_allclose(z, [0, 0.5, 1, 1.5, 2])
    with pytest.raises(ValueError):
        collocation_grid(1)


def test_time_map_closed_form():
    tmap = TimeMap(0.5)
    assert time_of(tmap, -1.0) == 0.0
    assert time_of(tmap, 1.0) == 4.0
    assert tmap.t_final == 4.0
    assert z_of(tmap, 4.0) == 1.0
    with pytest.raises(ValueError):
        TimeMap(0.0)


@settings(max_examples=200, deadline=None)
@given(c=st.floats(1e-3, 1e3), t0=st.floats(-10, 10), z=st.floats(-1, 1))
def test_time_map_round_trip(c, t0, z):
    tmap = TimeMap(c, t0)
    assert abs(tmap.z_of(tmap.time_of(z)) - z) < 1e-14 * max(1.0, abs(c * t0))
