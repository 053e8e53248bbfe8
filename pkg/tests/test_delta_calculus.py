import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsfrac.delta_calculus import (
    GridFunction,
    build_mesh,
    delta_derivative,
    delta_integral,
    delta_parts_residual,
    delta_stencil,
    read_csv,
    write_csv,
)
from tsfrac.errors import DimensionMismatch, InvalidStep, MeshMismatch, NodeNotInMesh
from tsfrac.timescale import discrete

from conftest import INTEGERS, UNIT


def test_hybrid_mesh_layout(hybrid_mesh):
    m = hybrid_mesh
    assert m.n == 17 + 2 + 8  # 0.2 / (1/32) rounds up to 7 cells
    assert (~m.dense).sum() == 3
    np.testing.assert_allclose(m.mu[m.atom], [0.1, 0.15, 0.05])
    # Δ-weights over [a, b) add up to b − a
    assert m.weights.sum() == pytest.approx(1.0)
    assert m.delta_defined[-1]


def test_bad_step():
    for h in (0.0, -1.0, float("nan"), float("inf")):
        with pytest.raises(InvalidStep):
            build_mesh(UNIT, h)


def test_integral_on_integers():
    m = build_mesh(INTEGERS, 1.0)
    f = GridFunction.from_callable(m, lambda t: t)
    assert delta_integral(f, 0.0, 4.0)[0] == 6.0  # 0 + 1 + 2 + 3
    assert delta_integral(f, 4.0, 1.0)[0] == -6.0


def test_integral_hybrid_constant(hybrid_mesh):
    one = GridFunction(hybrid_mesh, np.ones(hybrid_mesh.n))
    assert delta_integral(one, 0.0, 1.0)[0] == pytest.approx(1.0)
    assert delta_integral(one, 0.5, 0.8)[0] == pytest.approx(0.3)
    with pytest.raises(NodeNotInMesh):
        delta_integral(one, 0.55, 1.0)


def test_forward_difference_on_integers():
    m = build_mesh(INTEGERS, 1.0)
    d = delta_derivative(GridFunction.from_callable(m, lambda t: t**2)).scalar
    np.testing.assert_array_equal(d[:-1], 2 * m.nodes[:-1] + 1)
    assert np.isnan(d[-1])


def test_hybrid_derivative(hybrid_mesh):
    m = hybrid_mesh
    d = delta_derivative(GridFunction.from_callable(m, lambda t: t**2)).scalar
    i = m.index_of(0.6)
    assert d[i] == pytest.approx((0.75**2 - 0.6**2) / 0.15)
    dense = np.flatnonzero(m.dense)
    np.testing.assert_allclose(d[dense], 2 * m.nodes[dense], atol=1e-12)


@pytest.mark.parametrize("accuracy", [4, 6])
def test_high_order_stencil_exact_on_polynomials(accuracy):
    m = build_mesh(UNIT, 1 / 40)
    D = delta_stencil(m, accuracy)
    for k in range(accuracy + 1):
        np.testing.assert_allclose(D @ m.nodes**k, k * m.nodes ** max(k - 1, 0) * (k > 0), atol=1e-8)


def test_stencil_copy_is_private():
    m = build_mesh(UNIT, 1 / 8)
    D = delta_stencil(m)
    D.data[:] = 0.0
    assert delta_stencil(m).nnz > 0 and np.any(delta_stencil(m).data != 0)


def test_parts_rule_on_interval():
    m = build_mesh(UNIT, 1 / 256)
    f = GridFunction.from_callable(m, np.sin)
    g = GridFunction.from_callable(m, np.exp)
    assert delta_parts_residual(f, g) < 1e-4


def test_dimension_checks(unit_mesh):
    with pytest.raises(DimensionMismatch):
        GridFunction(unit_mesh, np.ones(3))
    other = build_mesh(UNIT, 1 / 16)
    with pytest.raises(MeshMismatch):
        GridFunction(unit_mesh, np.ones(unit_mesh.n)) + GridFunction(other, np.ones(other.n))


def test_csv_roundtrip_bit_identical(tmp_path, hybrid_mesh, rng):
    f = GridFunction(hybrid_mesh, rng.normal(size=(hybrid_mesh.n, 2)))
    path = tmp_path / "f.csv"
    write_csv(path, f)
    g = read_csv(path, hybrid_mesh)
    assert np.array_equal(f.values, g.values)
    write_csv(tmp_path / "g.csv", g)
    assert path.read_bytes() == (tmp_path / "g.csv").read_bytes()


def test_csv_errors(tmp_path, unit_mesh):
    path = tmp_path / "f.csv"
    path.write_text("t,v1\n0.0,1.0,2.0\n")
    with pytest.raises(DimensionMismatch):
        read_csv(path, unit_mesh)
    path.write_text("x,v1\n0.0,1.0\n")
    with pytest.raises(DimensionMismatch):
        read_csv(path, unit_mesh)
    write_csv(path, GridFunction(build_mesh(UNIT, 1 / 16), np.zeros(17)))
    with pytest.raises(MeshMismatch):
        read_csv(path, unit_mesh)


discrete_scales = st.lists(st.integers(0, 400), min_size=3, max_size=10, unique=True).map(
    lambda xs: discrete([x / 16 for x in sorted(xs)])
)


@settings(max_examples=60, deadline=None)
@given(discrete_scales, st.data())
def test_product_rule_exact_on_discrete(ts, data):
    m = build_mesh(ts, 1.0)
    vals = st.lists(st.floats(-10, 10), min_size=m.n, max_size=m.n)
    f = GridFunction(m, np.array(data.draw(vals)))
    g = GridFunction(m, np.array(data.draw(vals)))
    scale = 1.0 + np.abs(f.scalar).max() * np.abs(g.scalar).max()
    assert delta_parts_residual(f, g) <= 1e-12 * scale


@settings(max_examples=60, deadline=None)
@given(discrete_scales)
def test_integral_of_derivative_telescopes(ts):
    m = build_mesh(ts, 1.0)
    f = GridFunction.from_callable(m, lambda t: np.cos(3 * t) + t)
    d = delta_derivative(f)
    total = delta_integral(d.with_values(np.nan_to_num(d.values)), m.a, m.b)[0]
    assert total == pytest.approx(f.scalar[-1] - f.scalar[0], abs=1e-12)
