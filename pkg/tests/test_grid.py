import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isoflow.grid import (
    Field,
    GridKind,
    differentiate,
    differentiation_matrix,
    inner_product,
    integrate,
    interpolator,
    make_grid,
    norm_l2,
    norm_sup,
    sample,
    zeros,
)
from isoflow.kdv import soliton_profile


def test_periodic_grid_points():
    g = make_grid(8, 8.0, "periodic")
    assert g.spacing == 1.0
    np.testing.assert_array_equal(g.points, np.arange(-4.0, 4.0))


def test_box_grid_points():
    g = make_grid(8, 9.0, GridKind.BOX)
    assert g.spacing == 1.0
    np.testing.assert_array_equal(g.points, np.arange(1.0, 9.0))


def test_box_dirichlet_alias():
    assert make_grid(8, 9.0, "BoxDirichlet").kind is GridKind.BOX


@pytest.mark.parametrize("args", [(3, 1.0, "periodic"), (9, 1.0, "periodic"), (8, 0.0, "periodic"), (8, -1.0, "box"), (4, 1.0, "box")])
def test_make_grid_rejects(args):
    with pytest.raises(ValueError, match="make_grid"):
        make_grid(*args)


def test_points_uniform():
    g = make_grid(100, 7.3)
    steps = np.diff(g.points)
    assert np.max(np.abs(steps - g.spacing)) < 1e-12 * g.length
    assert g.points[0] == pytest.approx(-3.65)


def test_sample_examples():
    g = make_grid(8, 8.0)
    assert np.all(sample(g, lambda q: 0 * q).values == 0)
    np.testing.assert_array_equal(sample(g, lambda q: q**2).values, [16, 9, 4, 1, 0, 1, 4, 9])
    soliton = sample(g, lambda q: soliton_profile(q, 4.0))
    assert soliton.values[4] == -2.0


def test_sample_rejects_nonfinite():
    g = make_grid(8, 8.0)
    with np.errstate(divide="ignore"), pytest.raises(ValueError):
        sample(g, lambda q: 1 / q)


def test_field_is_immutable():
    f = zeros(make_grid(8, 8.0))
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_field_shape_checked():
    with pytest.raises(ValueError):
        Field(make_grid(8, 8.0), np.zeros(7))


@pytest.mark.parametrize("kind", ["periodic", "box"])
@pytest.mark.parametrize("order", [1, 2, 3])
def test_constant_has_zero_derivative(kind, order):
    g = make_grid(64, 10.0, kind)
    d = differentiate(sample(g, lambda q: 3.0 + 0 * q), order)
    assert norm_sup(d) < 1e-10


def test_spectral_derivatives_of_sine():
    L = 10.0
    g = make_grid(64, L)
    w = 2 * math.pi / L
    f = sample(g, lambda q: np.sin(w * q))
    assert np.max(np.abs(differentiate(f, 1).values - w * np.cos(w * g.points))) < 1e-8
    assert np.max(np.abs(differentiate(f, 3).values + w**3 * np.cos(w * g.points))) < 1e-6


def test_box_fd_is_fourth_order():
    errors = []
    for n in (50, 100):
        g = make_grid(n, 3.0, "box")
        f = sample(g, np.sin)
        errors.append(np.max(np.abs(differentiate(f, 2).values + np.sin(g.points))))
    assert errors[0] / errors[1] > 12  # ~2^4 in the interior, closures at least 3rd order


def test_resolved_modes_are_exact():
    g = make_grid(64, 2 * math.pi)
    for m in range(1, 17):
        f = sample(g, lambda q: np.cos(m * q))
        exact = -m * np.sin(m * g.points)
        assert np.max(np.abs(differentiate(f, 1).values - exact)) < 1e-10 * m


def test_first_derivative_twice_is_second(grid64):
    f = sample(grid64, lambda q: np.exp(np.sin(q)))
    twice = differentiate(differentiate(f, 1), 1)
    assert norm_sup(twice - differentiate(f, 2)) < 1e-8


def test_differentiation_matrix_matches(grid64):
    f = sample(grid64, lambda q: np.cos(3 * q) + np.sin(q))
    for order in (1, 2, 3):
        np.testing.assert_allclose(differentiation_matrix(grid64, order) @ f.values, differentiate(f, order).values, atol=1e-10)
    d1 = differentiation_matrix(grid64, 1)
    assert np.array_equal(d1, -d1.T)


def test_bad_order():
    with pytest.raises(ValueError):
        differentiate(zeros(make_grid(8, 1.0)), 4)


@settings(max_examples=30, deadline=None)
@given(
    a=st.floats(-10, 10),
    b=st.floats(-10, 10),
    c1=st.lists(st.floats(-1, 1), min_size=4, max_size=4),
    c2=st.lists(st.floats(-1, 1), min_size=4, max_size=4),
    order=st.sampled_from([1, 2, 3]),
    kind=st.sampled_from(["periodic", "box"]),
)
def test_differentiate_is_linear(a, b, c1, c2, order, kind):
    g = make_grid(32, 2 * math.pi, kind)
    q = g.points
    f = Field(g, sum(c * np.cos((i + 1) * q) for i, c in enumerate(c1)))
    h = Field(g, sum(c * np.sin((i + 1) * q) for i, c in enumerate(c2)))
    lhs = differentiate(a * f + b * h, order).values
    rhs = a * differentiate(f, order).values + b * differentiate(h, order).values
    scale = max(1.0, np.max(np.abs(rhs)))
    assert np.max(np.abs(lhs - rhs)) < 1e-10 * scale


def test_inner_products():
    g = make_grid(8, 8.0)
    one = sample(g, lambda q: 1 + 0 * q)
    assert inner_product(zeros(g), one) == 0
    assert norm_l2(one) == pytest.approx(math.sqrt(8))
    g = make_grid(64, 2 * math.pi)
    assert abs(inner_product(sample(g, np.sin), sample(g, np.cos))) < 1e-10
    assert integrate(sample(g, lambda q: 1 + 0 * q)) == pytest.approx(2 * math.pi)


def test_grid_mismatch():
    with pytest.raises(ValueError, match="grid mismatch"):
        inner_product(zeros(make_grid(8, 8.0)), zeros(make_grid(8, 9.0)))


def test_periodic_interpolator_is_band_limited():
    g = make_grid(32, 2 * math.pi)
    f = sample(g, lambda q: np.cos(3 * q) + 0.5 * np.sin(q))
    interp = interpolator(f)
    x = np.linspace(-3, 3, 17)
    np.testing.assert_allclose(interp(x), np.cos(3 * x) + 0.5 * np.sin(x), atol=1e-12)
    assert interp(0.123) == pytest.approx(np.cos(0.369) + 0.5 * np.sin(0.123), abs=1e-12)


def test_box_interpolator_is_spline():
    g = make_grid(200, 4.0, "box")
    interp = interpolator(sample(g, np.sin))
    assert interp(1.2345) == pytest.approx(np.sin(1.2345), abs=1e-6)
