"""Quadrature rules on the unit cell and small interpolation/differencing helpers."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@lru_cache(maxsize=None)
def _gauss_jacobi01(n: int, e0: float, e1: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for ∫_0^1 η^{e0} (1−η)^{e1} g(η) dη."""
    if e0 == 0.0 and e1 == 0.0:
        x, w = np.polynomial.legendre.leggauss(n)
    else:
        x, w = roots_jacobi(n, e1, e0)
        w = w / 2.0 ** (e0 + e1)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def cell_rule(
    n: int, e0: float = 0.0, e1: float = 0.0, graded0: bool = False, graded1: bool = False, levels: int = 14
) -> tuple[np.ndarray, np.ndarray]:
    """Rule on [0, 1] for integrands η^{e0}(1−η)^{e1} × smooth.

    The returned weights are divided by the singular factor, so the rule is
    applied to the full integrand: Σ w_k F(η_k) ≈ ∫_0^1 F.  ``graded0`` and
    ``graded1`` refine geometrically towards an end where the integrand has a
    weak (Hölder) singularity of unknown exponent.
    """
    cuts = [0.0, 1.0]
    if e0 and e1:
        # one singular end per piece, each seeing the other at distance 1/2
        cuts = [0.0, 0.5, 1.0]
        n += 6
    if graded0:
        cuts = sorted(set(cuts) | set(2.0 ** -np.arange(1, levels + 1)))
    if graded1:
        cuts = sorted(set(cuts) | set(1.0 - 2.0 ** -np.arange(1, levels + 1)))
    xs, ws = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        f0 = e0 if lo == 0.0 else 0.0
        f1 = e1 if hi == 1.0 else 0.0
        z, w = _gauss_jacobi01(n, f0, f1)
        xs.append(lo + (hi - lo) * z)
        ws.append((hi - lo) * w / (z**f0 * (1.0 - z) ** f1))
    x, w = np.concatenate(xs), np.concatenate(ws)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def lagrange_weights(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Lagrange basis values; nodes has shape (..., m), x shape (..., q) -> (..., q, m)."""
    nodes = np.asarray(nodes, float)
    x = np.asarray(x, float)
    m = nodes.shape[-1]
    out = np.ones(x.shape + (m,))
    for k in range(m):
        for j in range(m):
            if j != k:
                out[..., k] *= (x - nodes[..., j, None]) / (nodes[..., k, None] - nodes[..., j, None])
    return out


def fd_weights(nodes: np.ndarray, x0: float, order: int = 1) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at x0 (Vandermonde solve)."""
    nodes = np.asarray(nodes, float)
    scale = np.max(np.abs(nodes - x0))
    z = (nodes - x0) / scale
    m = len(nodes)
    V = np.vander(z, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = np.prod(np.arange(1, order + 1))
    return np.linalg.solve(V, rhs) / scale**order
