import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import beta

from tsfrac.quadrature import cell_rule, fd_weights, lagrange_weights


@pytest.mark.parametrize("e0, e1", [(0.0, 0.0), (-0.5, 0.0), (0.0, -0.25), (-0.75, -0.5), (0.3, 0.0)])
@pytest.mark.parametrize("k", [0, 1, 3])
def test_jacobi_moments(e0, e1, k):
    x, w = cell_rule(8, e0, e1)
    got = np.sum(w * x ** (e0 + k) * (1 - x) ** e1)
    assert got == pytest.approx(beta(e0 + k + 1, e1 + 1), rel=1e-12)


def test_graded_rule_handles_unknown_exponent():
    x, w = cell_rule(8, 0.0, 0.0, graded0=True)
    # sqrt has an unresolved derivative singularity at 0
    assert np.sum(w * np.sqrt(x)) == pytest.approx(2 / 3, rel=1e-8)


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_lagrange_reproduces_cubics(coef):
    nodes = np.array([0.0, 0.3, 0.7, 1.0])
    x = np.linspace(-0.5, 1.5, 7)
    p = np.polynomial.Polynomial(coef)
    W = lagrange_weights(nodes, x)
    np.testing.assert_allclose(W @ p(nodes), p(x), atol=1e-9)
    np.testing.assert_allclose(W.sum(axis=1), 1.0, atol=1e-12)


def test_fd_weights_known_values():
    np.testing.assert_allclose(fd_weights(np.array([-1.0, 0.0, 1.0]), 0.0), [-0.5, 0.0, 0.5], atol=1e-14)
    np.testing.assert_allclose(fd_weights(np.array([0.0, 1.0, 2.0]), 0.0), [-1.5, 2.0, -0.5], atol=1e-14)
