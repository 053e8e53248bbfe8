"""Brute-force operators on purely discrete time scales.

On a discrete scale the tail sum K f(t_i) = Σ_{j ≥ i} μ_j f(t_j) is an upper
triangular matrix with positive diagonal, and the right fractional integral is
its principal matrix power.  These matrices come from
:func:`scipy.linalg.fractional_matrix_power` and share no code with the
kernel quadrature, so they serve as an independent reference.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import fractional_matrix_power

from .delta_calculus import Mesh


def _require_discrete(mesh: Mesh) -> None:
    if mesh.dense.any():
        raise ValueError("the summation oracle needs a purely discrete time scale")


def right_integral(mesh: Mesh, alpha: float) -> np.ndarray:
    _require_discrete(mesh)
    n = mesh.n
    out = np.zeros((n, n))
    if alpha == 0.0:
        return np.eye(n)
    mu = mesh.mu[:-1]
    K = np.triu(np.broadcast_to(mu, (n - 1, n - 1)))
    out[:-1, :-1] = np.real(fractional_matrix_power(K, alpha))
    return out


def left_integral(mesh: Mesh, alpha: float) -> np.ndarray:
    """Sum over s ∈ [a, t] of μ(s) k(s, t) f(s), with k read off the right power."""
    _require_discrete(mesh)
    n = mesh.n
    if alpha == 0.0:
        return np.eye(n)
    P = right_integral(mesh, alpha)[:-1, :-1]
    mu = mesh.mu[:-1]
    k = P / mu[None, :]  # k[j, i] for j <= i: kernel with scattered points t_j..t_i
    out = np.zeros((n, n))
    for i in range(n):
        last = min(i, n - 2)
        for j in range(last + 1):
            out[i, j] = mu[j] * k[j, last]
    return out


def forward_difference(mesh: Mesh) -> np.ndarray:
    """Exact Δ-derivative; the row of b is NaN."""
    n = mesh.n
    mu = mesh.mu[:-1]
    D = np.zeros((n, n))
    D[np.arange(n - 1), np.arange(n - 1)] = -1.0 / mu
    D[np.arange(n - 1), np.arange(1, n)] = 1.0 / mu
    D[-1] = np.nan
    return D


def _sum(mesh: Mesh, f: np.ndarray) -> float:
    return float(np.sum(mesh.mu[:-1] * f[:-1]))


def residuals(mesh: Mesh, alpha: float, f: dict[str, np.ndarray]) -> dict[str, float]:
    """The five identity residuals computed from the oracle matrices.

    ``f`` supplies the nodal test functions used by the suites: ``semigroup``,
    ``left_inverse``, ``phi``/``psi`` (integral parts), ``rl_f``/``rl_g``
    generators and ``caputo_f``/``caputo_g``.
    """
    half = alpha / 2.0
    IR = lambda g: right_integral(mesh, g)  # noqa: E731
    IL = lambda g: left_integral(mesh, g)  # noqa: E731
    Dl = forward_difference(mesh)
    out = {}
    s = f["semigroup"]
    out["semigroup"] = float(np.max(np.abs(IR(half) @ (IR(half) @ s) - IR(alpha) @ s)))
    h = f["left_inverse"]
    Dr = -(Dl[:-1] @ IR(1.0 - alpha))
    r = Dr @ (IR(alpha) @ h) - h[:-1]
    out["left_inverse"] = float(np.max(np.abs(r[1:]))) if len(r) > 1 else 0.0
    phi, psi = f["phi"], f["psi"]
    out["parts_integral"] = abs(_sum(mesh, phi * (IL(alpha) @ psi)) - _sum(mesh, psi * (IR(alpha) @ phi)))
    ff = IL(alpha) @ f["rl_f"]
    gg = IR(alpha) @ f["rl_g"]
    dl = np.append(Dl[:-1] @ (IL(1.0 - alpha) @ ff), 0.0)
    dr = np.append(-(Dl[:-1] @ (IR(1.0 - alpha) @ gg)), 0.0)
    out["parts_rl"] = abs(_sum(mesh, gg * dl) - _sum(mesh, ff * dr))
    cf, cg = f["caputo_f"], IR(alpha) @ f["caputo_g"]
    caputo = IL(1.0 - alpha) @ np.append(Dl[:-1] @ cf, 0.0)
    G = IR(1.0 - alpha) @ cg
    bracket = G[-1] * cf[-1] - G[0] * cf[0]
    dr = np.append(-(Dl[:-1] @ G), 0.0)
    f_sigma = np.append(cf[1:], cf[-1])
    out["parts_caputo"] = abs(_sum(mesh, cg * caputo) - (bracket + _sum(mesh, f_sigma * dr)))
    return out
