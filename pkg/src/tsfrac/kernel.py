r"""Kernel of the fractional power of the tail Δ-integration operator.

For t ≤ s on a time scale let L be the Lebesgue length of the dense part of
[t, s] and μ_p the graininess of each right-scattered point p ∈ [t, s].  The
kernel is

.. math::

    k_\alpha(t, s) = \frac{\sin\pi\alpha}{\pi}\int_0^\infty r^{-\alpha}
        e^{-rL} \prod_p (1 + r\mu_p)^{-1}\, dr,

which equals :math:`(s - t)^{\alpha-1}/\Gamma(\alpha)` when no scattered point
lies in [t, s], and gives the binomial weights
:math:`h^{\alpha-1}\Gamma(j+\alpha)/(\Gamma(\alpha)\, j!)` on hℤ.  It comes
from the Balakrishnan formula applied to K f(t) = ∫_{[t,b)} f Δs, so the
operators it generates form an exact semigroup on discrete time scales.

The r-integral is computed in x = log r with composite Gauss-Legendre panels
on one grid shared by every pair of the mesh, plus two-term asymptotic tails at
both ends.  Products over scattered points become prefix sums on that grid.
"""
from __future__ import annotations

import math

import numpy as np

from .delta_calculus import Mesh

_PANEL = 0.5
_PANEL_NODES = 8
#: r_lo * (largest L + Σμ) stays below this, so the lower tail series is exact.
_LOWER = 1e-8
#: Upper cut for pure-jump pairs, relative to Σ 1/μ.
_UPPER = 1e8
#: exp(-_DECAY) is negligible next to the integral.
_DECAY = 46.0


class ResolventKernel:
    """Evaluates k_α(t, s) for node pairs of one mesh.

    Atoms are the right-scattered mesh nodes; an atom range ``[i0, i1)`` refers
    to node indices, so only the atoms among nodes i0..i1-1 take part.
    """

    def __init__(self, mesh: Mesh, alpha: float, min_dense_length: float | None = None):
        if not 0.0 < alpha < 1.0:
            raise ValueError("the resolvent kernel needs 0 < alpha < 1")
        self.alpha = alpha
        mu = mesh.mu
        atom = mesh.atom
        span = mesh.b - mesh.a
        h = mesh.cell_lengths[mesh.dense]
        if min_dense_length is None:
            min_dense_length = 1e-6 * (h.min() if h.size else span)
        inv_mu = np.where(atom, 1.0 / np.where(atom, mu, 1.0), 0.0)
        x_lo = math.log(_LOWER / (2.0 * span))
        x_hi = math.log(_DECAY / min_dense_length)
        if atom.any():
            x_hi = max(x_hi, math.log(_UPPER * inv_mu.sum()))
        panels = max(1, math.ceil((x_hi - x_lo) / _PANEL))
        edges = np.linspace(x_lo, x_hi, panels + 1)
        g, w = np.polynomial.legendre.leggauss(_PANEL_NODES)
        mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
        self.x = (mid[:, None] + half[:, None] * g).ravel()
        self.wx = (half[:, None] * w).ravel() * np.exp((1.0 - alpha) * self.x)
        self.r = np.exp(self.x)
        self.x_lo, self.x_hi = x_lo, x_hi

        logs = np.where(atom[:, None], np.log1p(np.outer(self.r, mu).T), 0.0)
        self._logp = np.vstack([np.zeros(len(self.r)), np.cumsum(logs, axis=0)])
        self._count = np.concatenate([[0], np.cumsum(atom)])
        self._mass = np.concatenate([[0.0], np.cumsum(mu)])
        self._inv = np.concatenate([[0.0], np.cumsum(inv_mu)])
        self._logmu = np.concatenate([[0.0], np.cumsum(np.where(atom, np.log(np.where(atom, mu, 1.0)), 0.0))])
        # sin(πα) = sin(π(1 − α)); the second form keeps its digits as α → 1
        self._scale = math.sin(math.pi * min(alpha, 1.0 - alpha)) / math.pi

    def __call__(self, L, i0, i1) -> np.ndarray:
        """k_α for dense lengths ``L`` and atom ranges ``[i0, i1)`` (broadcast)."""
        a = self.alpha
        L, i0, i1 = np.broadcast_arrays(np.asarray(L, float), np.asarray(i0), np.asarray(i1))
        shape = L.shape
        L, i0, i1 = L.ravel(), i0.ravel(), i1.ravel()
        logp = self._logp[i1] - self._logp[i0]
        val = np.exp(-np.outer(L, self.r) - logp) @ self.wx
        g1 = L + self._mass[i1] - self._mass[i0]
        r_lo = math.exp(self.x_lo)
        val += r_lo ** (1 - a) / (1 - a) - g1 * r_lo ** (2 - a) / (2 - a)
        m = self._count[i1] - self._count[i0]
        jump_only = (L == 0.0) & (m > 0)
        if jump_only.any():
            mm = m[jump_only]
            s_inv = (self._inv[i1] - self._inv[i0])[jump_only]
            log_mu = (self._logmu[i1] - self._logmu[i0])[jump_only]
            xh = self.x_hi
            val[jump_only] += np.exp(-log_mu + ((1 - mm) - a) * xh) / (a + (mm - 1)) - s_inv * np.exp(
                -log_mu - (a + mm) * xh
            ) / (a + mm)
        return (self._scale * val).reshape(shape)
