"""Discrete fractional Sobolev norms, embedding margins and the AC representation.

Functions here work with the right-sided operators: the derivative D^α_b and
the representation

    u(t) = d (b − t)^{α−1} / Γ(α) + (I^α_b ψ)(t),   d = (I^{1−α}_b u)(b),  ψ = D^α_b u.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from .delta_calculus import GridFunction, Mesh, delta_stencil
from .errors import HypothesisViolated, NonFiniteValue
from .fractional_ops import (
    FractionalOrder,
    Side,
    _finite_on_used,
    _integral_matrix,
    _order,
    apply,
    boundary_value,
    build_left_rl_derivative,
    build_right_rl_derivative,
)
from .kernel import ResolventKernel

#: Interpolation degree and extrapolation width of the representation path.
AC_DEGREE = 5
AC_POINTS = 5
AC_ACCURACY = 6


@dataclass(frozen=True)
class NormSpec:
    p: float
    alpha: FractionalOrder

    def __post_init__(self):
        p = float(self.p)
        if not (p >= 1.0 and math.isfinite(p)):
            raise ValueError(f"p must be a finite number >= 1, got {self.p!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "alpha", _order(self.alpha))

    @property
    def q(self) -> float:
        """Conjugate exponent; inf at p = 1."""
        return math.inf if self.p == 1.0 else self.p / (self.p - 1.0)


@dataclass(frozen=True)
class ACRepresentation:
    d: np.ndarray
    psi: GridFunction

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.d, float)).copy()
        d.setflags(write=False)
        object.__setattr__(self, "d", d)


@dataclass(frozen=True)
class NormEquivalenceReport:
    norm_standard: float
    norm_boundary: float
    ratio: float


def _pointwise(f: GridFunction) -> np.ndarray:
    return np.linalg.norm(f.values, axis=1)


def lp_norm(f: GridFunction, spec: NormSpec | float) -> float:
    """(Σ w_i |f(t_i)|^p)^{1/p} with the Δ-weights of [a, b).

    Masked (NaN) nodes, such as a singular endpoint, are left out.
    """
    p = spec.p if isinstance(spec, NormSpec) else float(spec)
    mag = _pointwise(f)
    keep = (f.mesh.weights > 0) & ~np.isnan(mag)
    w, mag = f.mesh.weights[keep], mag[keep]
    if not np.all(np.isfinite(mag)):
        raise NonFiniteValue("grid function is not finite where the norm weights it")
    return float(np.sum(w * mag**p) ** (1.0 / p))


def sup_norm(f: GridFunction) -> float:
    """Largest |f| over the nodes; masked (NaN) nodes are skipped."""
    mag = _pointwise(f)
    return float(np.nanmax(mag)) if np.any(~np.isnan(mag)) else math.nan


def _derivative(u: GridFunction, order: FractionalOrder) -> GridFunction:
    return apply(build_right_rl_derivative(u.mesh, order), u)


def sobolev_norm(u: GridFunction, spec: NormSpec) -> float:
    p = spec.p
    return (lp_norm(u, p) ** p + lp_norm(_derivative(u, spec.alpha), p) ** p) ** (1.0 / p)


def boundary_term(u: GridFunction, order: FractionalOrder | float) -> np.ndarray:
    """lim_{t→b} (I^{1−α}_b u)(t) as a vector, the coefficient d of the representation."""
    return ac_decompose(u, order).d


def boundary_norm(u: GridFunction, spec: NormSpec) -> float:
    p = spec.p
    d = float(np.linalg.norm(boundary_term(u, spec.alpha)))
    return (d**p + lp_norm(_derivative(u, spec.alpha), p) ** p) ** (1.0 / p)


def norm_equivalence(u: GridFunction, spec: NormSpec) -> NormEquivalenceReport:
    s, bn = sobolev_norm(u, spec), boundary_norm(u, spec)
    return NormEquivalenceReport(s, bn, bn / s if s > 0 else math.nan)


# Embedding constants ---------------------------------------------------------

def _check_left_end(mesh: Mesh) -> None:
    if mesh.a < 0:
        raise HypothesisViolated(f"embedding constants assume a >= 0, got a = {mesh.a!r}")


def lp_constant(spec: NormSpec, b: float) -> float:
    a = spec.alpha.alpha
    return b**a / gamma(a + 1.0)


def holder_factor(spec: NormSpec) -> float:
    """(1 + (α − 1) q)^{1/q}, equal to 1 in the limit q = ∞ (which forces α = 1)."""
    a, q = spec.alpha.alpha, spec.q
    if math.isinf(q):
        return 1.0
    return (1.0 + (a - 1.0) * q) ** (1.0 / q)


def sup_constant(spec: NormSpec, b: float) -> float:
    a = spec.alpha.alpha
    return b ** (a - 1.0 / spec.p) / (gamma(a) * holder_factor(spec))


def _require_sup_hypothesis(spec: NormSpec) -> None:
    a, p = spec.alpha.alpha, spec.p
    if not a > 1.0 / p:
        raise HypothesisViolated(f"needs alpha > 1/p, got alpha={a!r}, p={p!r}")


def embedding_margin_lp(u: GridFunction, spec: NormSpec) -> float:
    """b^α/Γ(α+1) ‖D^α_b u‖_p − ‖u‖_p."""
    a, p = spec.alpha.alpha, spec.p
    if not (1.0 - a >= 1.0 / p or a > 1.0 / p):
        raise HypothesisViolated(f"needs 1 - alpha >= 1/p or alpha > 1/p, got alpha={a!r}, p={p!r}")
    _check_left_end(u.mesh)
    rhs = lp_constant(spec, u.mesh.b) * lp_norm(_derivative(u, spec.alpha), p)
    return rhs - lp_norm(u, p)


def embedding_margin_sup(u: GridFunction, spec: NormSpec) -> float:
    """b^{α−1/p}/(Γ(α)(1+(α−1)q)^{1/q}) ‖D^α_b u‖_p − ‖u‖_∞."""
    _require_sup_hypothesis(spec)
    _check_left_end(u.mesh)
    rhs = sup_constant(spec, u.mesh.b) * lp_norm(_derivative(u, spec.alpha), spec.p)
    return rhs - sup_norm(u)


def holder_modulus_margin(u: GridFunction, spec: NormSpec, t1: float, t2: float) -> float:
    """2‖D^α_b u‖_p (t2 − t1)^{α−1/p}/(Γ(α)(1+(α−1)q)^{1/q}) − |u(t1) − u(t2)|."""
    _require_sup_hypothesis(spec)
    mesh = u.mesh
    i, j = mesh.index_of(t1), mesh.index_of(t2)
    if j < i:
        i, j = j, i
    a = spec.alpha.alpha
    gap = mesh.nodes[j] - mesh.nodes[i]
    rhs = 2.0 * lp_norm(_derivative(u, spec.alpha), spec.p) * gap ** (a - 1.0 / spec.p)
    rhs /= gamma(a) * holder_factor(spec)
    return float(rhs - np.linalg.norm(u.values[i] - u.values[j]))


# AC representation -----------------------------------------------------------

def singular_profile(mesh: Mesh, order: FractionalOrder | float) -> np.ndarray:
    """k_α(t, b) at the nodes, NaN at b when α < 1.

    This is (b − t)^{α−1}/Γ(α) wherever no scattered point lies between t
    and b; across gaps it is the resolvent kernel, the function that
    D^α_b annihilates on this time scale.
    """
    a = _order(order).alpha
    dist = mesh.b - mesh.nodes
    with np.errstate(divide="ignore"):
        k = dist ** (a - 1.0) / gamma(a)
    if a < 1.0:
        atoms_after = np.cumsum(mesh.atom[::-1])[::-1]
        across = atoms_after > 0
        if across.any():
            dense_len = np.concatenate([[0.0], np.cumsum(np.where(mesh.dense, mesh.cell_lengths, 0.0))])
            idx = np.flatnonzero(across)
            k[idx] = ResolventKernel(mesh, a)(dense_len[-1] - dense_len[idx], idx, mesh.n - 1)
        k[-1] = np.nan
    return k


def ac_decompose(u: GridFunction, order: FractionalOrder | float) -> ACRepresentation:
    """Split u into its boundary coefficient d and density ψ.

    I^{1−α}_b u is built with quintic interpolation of (b − s)^{1−α} u, so a
    singular term d (b − s)^{α−1} is integrated exactly.  Its limit at b is
    extrapolated from five nodes, written into the node b, and ψ = −Δ of the
    result by seven-point differences.
    """
    order = _order(order)
    mesh = u.mesh
    a = order.alpha
    if a == 1.0:
        G = np.array(u.values, float)
    else:
        M = _integral_matrix(mesh, 1.0 - a, Side.Right, a - 1.0, AC_DEGREE)
        G = M @ _finite_on_used(mesh, u.values)
        if mesh.dense[-1]:
            G[-1] = boundary_value(G, mesh, AC_POINTS)
    d = G[-1].copy()
    psi = -(delta_stencil(mesh, accuracy=AC_ACCURACY) @ G)
    psi[~mesh.delta_defined] = np.nan
    return ACRepresentation(d, u.with_values(psi))


def ac_reconstruct(rep: ACRepresentation, order: FractionalOrder | float) -> GridFunction:
    """d (b − t)^{α−1}/Γ(α) + I^α_b ψ; the node b is NaN when d ≠ 0 and α < 1."""
    order = _order(order)
    psi = rep.psi
    mesh = psi.mesh
    a = order.alpha
    M = _integral_matrix(mesh, a, Side.Right, 0.0, AC_DEGREE)
    vals = M @ np.where(np.isfinite(psi.values), psi.values, 0.0)
    kappa = singular_profile(mesh, order)
    singular = np.outer(np.nan_to_num(kappa, nan=0.0), rep.d)
    vals = vals + singular
    if a < 1.0 and np.any(rep.d != 0):
        vals[-1] = np.nan
    return psi.with_values(vals)


def weak_derivative_defect(u: GridFunction, order: FractionalOrder | float, phi: GridFunction) -> float:
    """|∫ u · D^α_a φ Δt − ∫ D^α_b u · φ Δt| for a test function φ vanishing near a and b."""
    order = _order(order)
    mesh = u.mesh
    w = mesh.weights
    keep = w > 0
    left = build_left_rl_derivative(mesh, order).matrix @ phi.values
    right = apply(build_right_rl_derivative(mesh, order), u).values
    lhs = np.sum(w[keep, None] * u.values[keep] * left[keep])
    rhs = np.sum(w[keep, None] * right[keep] * phi.values[keep])
    return float(abs(lhs - rhs))


def random_density(mesh: Mesh, rng: np.random.Generator, dim: int = 1, modes: int = 4) -> GridFunction:
    """A smooth random ψ: a cubic polynomial plus a few Fourier modes in (t − a)/(b − a)."""
    x = (mesh.nodes - mesh.a) / (mesh.b - mesh.a)
    cols = []
    for _ in range(dim):
        poly = np.polynomial.Polynomial(rng.normal(size=4))(2.0 * x - 1.0)
        k = np.arange(1, modes + 1)
        cs, sn = rng.normal(size=(2, modes)) / k
        fourier = np.cos(np.pi * np.outer(x, k)) @ cs + np.sin(np.pi * np.outer(x, k)) @ sn
        cols.append(poly + fourier)
    return GridFunction(mesh, np.column_stack(cols))


def sample_representation(
    mesh: Mesh,
    spec: NormSpec,
    rng: np.random.Generator,
    zero_boundary: bool = False,
    dim: int = 1,
) -> tuple[ACRepresentation, GridFunction]:
    """One draw of the representation class and the grid function it generates.

    d is forced to 0 when (1 − α) p ≥ 1, where the singular term is not p-integrable.
    """
    a = spec.alpha.alpha
    psi = random_density(mesh, rng, dim)
    if zero_boundary or (1.0 - a) * spec.p >= 1.0:
        d = np.zeros(dim)
    else:
        d = rng.normal(size=dim)
    rep = ACRepresentation(d, psi)
    return rep, ac_reconstruct(rep, spec.alpha)
