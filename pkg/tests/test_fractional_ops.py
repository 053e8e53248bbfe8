import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsfrac import discrete_oracle
from tsfrac.delta_calculus import GridFunction, build_mesh, delta_integral
from tsfrac.errors import AlphaOutOfRange, DivergentBoundaryValue, MeshMismatch
from tsfrac.fractional_ops import (
    FractionalOrder,
    OperatorKind,
    apply,
    boundary_value,
    build_left_integral,
    build_operator,
    build_right_integral,
    build_right_rl_derivative,
    image_membership_defect,
    interior,
    left_inverse_residual,
    semigroup_residual,
)
from tsfrac.timescale import discrete, interval

from conftest import HYBRID, INTEGERS, QUARTERS


@pytest.mark.parametrize("bad", [0.0, -0.1, 1.5, float("nan"), float("inf")])
def test_order_range(bad):
    with pytest.raises(AlphaOutOfRange):
        FractionalOrder(bad)


def test_three_point_matrices_by_hand():
    # on {0, 1, 2} the tail sum is I + N with N² = 0, so its α-th power is I + αN
    m = build_mesh(discrete([0, 1, 2]), 1.0)
    a = 0.3
    np.testing.assert_allclose(build_right_integral(m, a).matrix, [[1, a, 0], [0, 1, 0], [0, 0, 0]], atol=1e-13)
    np.testing.assert_allclose(build_left_integral(m, a).matrix, [[1, 0, 0], [a, 1, 0], [a, 1, 0]], atol=1e-13)


@pytest.mark.parametrize("ts", [INTEGERS, QUARTERS, discrete([0.0, 0.1, 0.4, 0.45, 1.0, 1.3])])
@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75, 1.0])
def test_integrals_match_summation_oracle(ts, alpha):
    m = build_mesh(ts, 1.0)
    np.testing.assert_allclose(build_right_integral(m, alpha).matrix, discrete_oracle.right_integral(m, alpha), atol=1e-12)
    np.testing.assert_allclose(build_left_integral(m, alpha).matrix, discrete_oracle.left_integral(m, alpha), atol=1e-12)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("beta", [0.0, 1.0])
def test_power_functions_on_interval(alpha, beta):
    m = build_mesh(interval(0.0, 1.0), 1 / 128)
    t = m.nodes
    got = build_right_integral(m, alpha) @ (1 - t) ** beta
    want = math.gamma(beta + 1) / math.gamma(alpha + beta + 1) * (1 - t) ** (alpha + beta)
    np.testing.assert_allclose(got, want, atol=1e-12)
    got = build_left_integral(m, alpha) @ t**beta
    want = math.gamma(beta + 1) / math.gamma(alpha + beta + 1) * t ** (alpha + beta)
    np.testing.assert_allclose(got, want, atol=1e-12)


@pytest.mark.parametrize("alpha", [0.25, 0.75])
def test_quadratic_converges_at_second_order(alpha):
    errs = []
    for h in (1 / 64, 1 / 128):
        m = build_mesh(interval(0.0, 1.0), h)
        t = m.nodes
        want = 2 / math.gamma(alpha + 3) * (1 - t) ** (alpha + 2)
        errs.append(np.max(np.abs(build_right_integral(m, alpha) @ (1 - t) ** 2 - want)))
    assert errs[1] < 1e-4
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_order_one_is_delta_integral(hybrid_mesh):
    f = GridFunction.from_callable(hybrid_mesh, np.cos)
    got = apply(build_right_integral(hybrid_mesh, 1.0), f).scalar
    want = [delta_integral(f, t, hybrid_mesh.b)[0] for t in hybrid_mesh.nodes]
    np.testing.assert_allclose(got, want, atol=1e-4)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_caputo_exact_on_linear(alpha):
    m = build_mesh(interval(0.0, 1.0), 1 / 64)
    t = m.nodes
    want = (1 - t) ** (1 - alpha) / math.gamma(2 - alpha)
    np.testing.assert_allclose(build_operator(m, alpha, OperatorKind.RightCaputo) @ (1 - t), want, atol=1e-12)
    np.testing.assert_allclose(build_operator(m, alpha, OperatorKind.RightCaputo) @ np.ones(m.n), 0.0, atol=1e-12)
    want = t ** (1 - alpha) / math.gamma(2 - alpha)
    np.testing.assert_allclose(build_operator(m, alpha, OperatorKind.LeftCaputo) @ t, want, atol=1e-12)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_rl_derivative_of_constant_converges(alpha):
    errs = []
    for h in (1 / 64, 1 / 128, 1 / 256):
        m = build_mesh(interval(0.0, 1.0), h)
        t = m.nodes
        away = t <= 0.9
        got = build_right_rl_derivative(m, alpha) @ np.ones(m.n)
        want = (1 - t[away]) ** (-alpha) / math.gamma(1 - alpha)
        errs.append(np.max(np.abs(got[away] - want) / want))
    assert errs[-1] < 1e-2
    assert errs[0] > errs[1] > errs[2]


def test_undefined_derivative_at_scattered_end():
    m = build_mesh(discrete([0.0, 0.5, 1.0]), 1.0)
    d = build_right_rl_derivative(m, 0.5).matrix
    assert np.all(np.isnan(d[-1])) and np.all(np.isfinite(d[:-1]))


def test_mesh_mismatch(unit_mesh):
    other = build_mesh(interval(0.0, 1.0), 1 / 8)
    with pytest.raises(MeshMismatch):
        apply(build_right_integral(unit_mesh, 0.5), GridFunction(other, np.ones(other.n)))


def test_left_inverse_and_semigroup_on_hybrid(hybrid_mesh):
    f = GridFunction.from_callable(hybrid_mesh, lambda t: 1 + t)
    assert left_inverse_residual(hybrid_mesh, 0.5, f) < 5e-3
    assert semigroup_residual(hybrid_mesh, 0.3, 0.4, f) < 1e-3
    with pytest.raises(AlphaOutOfRange):
        semigroup_residual(hybrid_mesh, 0.6, 0.6, f)


def test_boundary_value_of_polynomial(unit_mesh):
    t = unit_mesh.nodes
    assert boundary_value(1 + t - t**2, unit_mesh) == pytest.approx(1.0, abs=1e-12)


def test_boundary_value_detects_blowup(unit_mesh):
    g = np.abs(unit_mesh.b - unit_mesh.nodes + 1e-300) ** -0.5
    with pytest.raises(DivergentBoundaryValue):
        boundary_value(g[:-1].tolist() + [0.0], unit_mesh)


def test_image_membership(unit_mesh):
    g = build_right_integral(unit_mesh, 0.5) @ np.cos(unit_mesh.nodes)
    limit, rough = image_membership_defect(unit_mesh, 0.5, GridFunction(unit_mesh, g))
    assert limit < 1e-4 and rough < 0.1
    limit, _ = image_membership_defect(unit_mesh, 0.5, GridFunction(unit_mesh, np.ones(unit_mesh.n)))
    assert limit > 0.1  # a constant is not in the image of I^α_b


discrete_scales = st.lists(st.integers(0, 200), min_size=3, max_size=8, unique=True).map(
    lambda xs: discrete([x / 20 for x in sorted(xs)])
)
orders = st.floats(0.05, 1.0)


@settings(max_examples=40, deadline=None)
@given(discrete_scales, st.floats(0.05, 1.0), st.floats(0.05, 0.95))
def test_semigroup_exact_on_discrete(ts, total, split):
    m = build_mesh(ts, 1.0)
    f = GridFunction.from_callable(m, lambda t: 1 + t**2)
    a, b = split * total, (1 - split) * total
    assert semigroup_residual(m, a, b, f) < 1e-9


@settings(max_examples=40, deadline=None)
@given(discrete_scales, orders)
def test_left_inverse_exact_on_discrete(ts, a):
    m = build_mesh(ts, 1.0)
    f = GridFunction.from_callable(m, np.sin)
    assert left_inverse_residual(m, a, f) < 1e-9


@settings(max_examples=30, deadline=None)
@given(orders, st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_integral_is_linear_and_positive(a, c1, c2):
    m = build_mesh(HYBRID, 1 / 16)
    x = (m.nodes - m.a) / (m.b - m.a)
    f = np.polynomial.Polynomial(c1)(x)
    g = np.polynomial.Polynomial(c2)(x)
    I = build_right_integral(m, a).matrix
    np.testing.assert_allclose(I @ (2 * f - g), 2 * (I @ f) - I @ g, atol=1e-9)
    assert np.all(I @ (f**2) >= -1e-12)
    assert np.all(build_left_integral(m, a).matrix >= -1e-14)


@pytest.mark.parametrize("eps", [1e-16, 1e-12, 1e-8])
def test_orders_next_to_one_stay_finite(unit_mesh, eps):
    t = unit_mesh.nodes
    d = build_right_rl_derivative(unit_mesh, 1.0 - eps) @ np.cos(t)
    assert np.all(np.isfinite(d))
    away = t < 0.9
    np.testing.assert_allclose(d[away], np.sin(t[away]), atol=1e-3)


def test_interior_mask(unit_mesh):
    mask = interior(unit_mesh)
    assert not mask[0] and not mask[-1] and mask[1:-1].all()
