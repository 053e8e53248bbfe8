"""Left/right Riemann-Liouville and Caputo operators on a mesh.

Every operator is a dense matrix acting on nodal values.  The right integral of
order α is

    (I^α_b f)(t) = ∫_{[t,b)} k_α(t, s) f(s) Δs,

with the kernel of :mod:`tsfrac.kernel`; on a continuous stretch it is the
classical (s − t)^{α−1}/Γ(α).  Dense cells are integrated against the
piecewise-linear interpolant of f: in closed form where the kernel is a pure
power, by Gauss-Legendre otherwise.  Scattered points carry the point mass
μ(s) k_α(t, s) f(s).

The left integral integrates over [a, t] with k_α(s, t), which makes it the
exact Δ-adjoint of the right integral on discrete time scales.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma

from .delta_calculus import GridFunction, Mesh, _check_same_mesh, delta_stencil
from .errors import AlphaOutOfRange, DivergentBoundaryValue, MeshMismatch
from .kernel import ResolventKernel
from .quadrature import cell_rule, lagrange_weights


@dataclass(frozen=True)
class FractionalOrder:
    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (math.isfinite(a) and 0.0 < a <= 1.0):
            raise AlphaOutOfRange(f"fractional order must satisfy 0 < alpha <= 1, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)


class Side(enum.Enum):
    Left = "left"
    Right = "right"


class OperatorKind(enum.Enum):
    LeftIntegral = "left-integral"
    RightIntegral = "right-integral"
    LeftRLDerivative = "left-rl-derivative"
    RightRLDerivative = "right-rl-derivative"
    LeftCaputo = "left-caputo"
    RightCaputo = "right-caputo"


@dataclass(frozen=True, eq=False)
class FracOperator:
    kind: OperatorKind
    order: FractionalOrder
    mesh: Mesh
    matrix: np.ndarray

    def __matmul__(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values


def _order(order) -> FractionalOrder:
    return order if isinstance(order, FractionalOrder) else FractionalOrder(order)


END_DEGREE = 2


def _power_cell_weights(gam, near, h):
    """∫ u^{γ−1} × (hat of near node, hat of far node) over u ∈ [near, near + h].

    Closed-form moments, returned divided by Γ(γ).
    """
    far = near + h
    if gam == 1.0:
        m0 = np.asarray(h, float)
        w_far = 0.5 * m0
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(near > 0, h / np.where(near > 0, near, 1.0), np.inf)
            m0 = np.where(
                near > 0,
                near**gam * np.expm1(gam * np.log1p(ratio)) / gam,
                far**gam / gam,
            )
        m1 = (far ** (gam + 1) - near ** (gam + 1)) / (gam + 1)
        w_far = (m1 - near * m0) / h
    return (m0 - w_far) / gamma(gam), w_far / gamma(gam)


class _Assembler:
    """Matrix of u ↦ ∫ k_γ(t, s) u(s) Δs over [t, b) (right) or [a, t] (left).

    On dense cells the integrand is written as ω(s) W(s) with W = u/ω, and W is
    replaced by its piecewise polynomial interpolant of the given degree inside
    each segment.  ω = (b − s)^θ on the right and (s − a)^θ on the left; it
    carries a known endpoint singularity of u, and the endpoint value of W is
    then extrapolated from its neighbours instead of read from u.  Jump cells
    contribute the point mass μ(s) k_γ(t, s) u(s).
    """

    def __init__(self, mesh: Mesh, gam: float, side: Side, theta: float = 0.0, degree: int = 1):
        self.mesh, self.gam, self.side, self.degree = mesh, gam, side, degree
        n = mesh.n
        self.x = mesh.nodes
        self.h = mesh.cell_lengths
        self.dense = mesh.dense
        self.atom = mesh.atom
        self.mu = mesh.mu
        self.D = np.concatenate([[0.0], np.cumsum(np.where(self.dense, self.h, 0.0))])
        self.A = np.concatenate([[0], np.cumsum(self.atom)])
        end_dense = self.dense[-1] if side is Side.Right else self.dense[0]
        self.theta = float(theta) if end_dense else 0.0
        self.end = n - 1 if side is Side.Right else 0
        dist = (mesh.b - self.x) if side is Side.Right else (self.x - mesh.a)
        with np.errstate(divide="ignore"):
            om = dist**self.theta if self.theta else np.ones(n)
        om[self.end] = 1.0
        self.omega_nodes = om
        # first and last node of the segment of every dense cell
        seg = np.concatenate([[0], np.cumsum(~self.dense)[:-1]])
        seg_lo = np.zeros(n - 1, int)
        seg_hi = np.zeros(n - 1, int)
        for k in np.unique(seg[self.dense]):
            cells = np.flatnonzero((seg == k) & self.dense)
            seg_lo[cells], seg_hi[cells] = cells[0], cells[-1] + 1
        if self.theta:
            if side is Side.Right:
                seg_hi = np.where(seg_hi == n - 1, n - 2, seg_hi)
            else:
                seg_lo = np.where(seg_lo == 0, 1, seg_lo)
        self.seg_lo, self.seg_hi = seg_lo, seg_hi
        self.kernel = None
        if 0.0 < gam < 1.0 and self.atom.any():
            self.kernel = ResolventKernel(mesh, gam)
        self.fast = self.theta == 0.0 and degree == 1

    def omega(self, s):
        if not self.theta:
            return np.ones_like(s)
        d = (self.mesh.b - s) if self.side is Side.Right else (s - self.mesh.a)
        return d**self.theta

    def k_jump(self, L, i0, i1):
        if self.gam == 1.0:
            return np.ones(np.broadcast(np.asarray(L), np.asarray(i0), np.asarray(i1)).shape)
        return self.kernel(L, i0, i1)

    def build(self) -> np.ndarray:
        n = self.mesh.n
        M = np.zeros((n, n))
        dense_cells = np.flatnonzero(self.dense)
        atoms = np.flatnonzero(self.atom)
        right = self.side is Side.Right
        for i in range(n):
            cells = dense_cells[dense_cells >= i] if right else dense_cells[dense_cells + 1 <= i]
            if cells.size:
                if right:
                    power = self.A[cells] == self.A[i]
                else:
                    power = self.A[i + 1] == self.A[cells + 1]
                if self.fast:
                    c = cells[power]
                    if c.size:
                        near = self.x[c] - self.x[i] if right else self.x[i] - self.x[c + 1]
                        wn, wf = _power_cell_weights(self.gam, near, self.h[c])
                        np.add.at(M[i], c if right else c + 1, wn)
                        np.add.at(M[i], c + 1 if right else c, wf)
                    self._quadrature(M, i, cells[~power], power=False)
                else:
                    self._quadrature(M, i, cells[power], power=True)
                    self._quadrature(M, i, cells[~power], power=False)
            js = atoms[atoms >= i] if right else atoms[atoms <= i]
            if js.size:
                if right:
                    M[i, js] += self.mu[js] * self.k_jump(self.D[js] - self.D[i], i, js + 1)
                else:
                    M[i, js] += self.mu[js] * self.k_jump(self.D[i] - self.D[js], js, i + 1)
        return M

    def _rule_keys(self, i, cells, power):
        """Per-cell (e0, e1, graded0, graded1, points) for the cell rule."""
        n = self.mesh.n
        right = self.side is Side.Right
        h = self.h[cells]
        e0 = np.zeros(len(cells))
        e1 = np.zeros(len(cells))
        g0 = np.zeros(len(cells), bool)
        g1 = np.zeros(len(cells), bool)
        pts = np.full(len(cells), 8)
        sing = self.gam - 1.0
        if right:
            if power:
                e0[cells == i] = sing
                pts[cells == i + 1] = 12
            else:
                g0 = (self.D[cells] - self.D[i]) < h
            if self.theta:
                e1[cells + 1 == n - 1] = self.theta
                pts[cells + 1 == n - 2] = 12
        else:
            if power:
                e1[cells + 1 == i] = sing
                pts[cells + 2 == i] = 12
            else:
                g1 = (self.D[i] - self.D[cells + 1]) < h
            if self.theta:
                e0[cells == 0] = self.theta
                pts[cells == 1] = 12
        return e0, e1, g0, g1, pts

    def _quadrature(self, M, i, cells, power):
        if not cells.size:
            return
        right = self.side is Side.Right
        keys = self._rule_keys(i, cells, power)
        deg = np.full(len(cells), self.degree)
        if self.theta:
            # the cell next to the excluded endpoint extrapolates W
            touches = (cells + 1 == self.mesh.n - 1) if right else (cells == 0)
            deg[touches] = np.maximum(deg[touches], END_DEGREE)
        deg = np.minimum(deg, self.seg_hi[cells] - self.seg_lo[cells])
        table = np.rec.fromarrays([*keys, deg])
        for key in np.unique(table):
            sel = table == key
            c = cells[sel]
            e0, e1, g0, g1, npts, d = key
            eta, w = cell_rule(int(npts), float(e0), float(e1), bool(g0), bool(g1))
            h = self.h[c][:, None]
            s = self.x[c][:, None] + h * eta[None, :]
            if power:
                dist = (s - self.x[i]) if right else (self.x[i] - s)
                if self.gam == 1.0:
                    kv = np.ones_like(s)
                else:
                    with np.errstate(divide="ignore"):
                        kv = dist ** (self.gam - 1.0) / gamma(self.gam)
            elif right:
                L = (self.D[c] - self.D[i])[:, None] + (s - self.x[c][:, None])
                kv = self.k_jump(L, i, c[:, None])
            else:
                L = (self.D[i] - self.D[c + 1])[:, None] + (self.x[c + 1][:, None] - s)
                kv = self.k_jump(L, c[:, None] + 1, i + 1)
            F = h * w[None, :] * kv * self.omega(s)
            start = np.clip(c - (d - 1) // 2, self.seg_lo[c], self.seg_hi[c] - d)
            idx = start[:, None] + np.arange(d + 1)[None, :]
            if d == 0:
                lw = np.ones(s.shape + (1,))
            else:
                lw = lagrange_weights(self.x[idx], s)
            contrib = np.einsum("cq,cqm->cm", F, lw) / self.omega_nodes[idx]
            np.add.at(M[i], idx.ravel(), contrib.ravel())


#: On meshes with dense cells, integral orders below this are treated as 0
#: (the identity).  I^γ f differs from f by O(γ log) there, about what the
#: Gauss-Jacobi rules lose as their exponent γ − 1 approaches −1; scipy's nodes
#: turn NaN near γ = 1e-12.  Purely discrete meshes only use the kernel and
#: need no floor.
ORDER_FLOOR = 1e-6


@lru_cache(maxsize=64)
def _integral_matrix(mesh: Mesh, gam: float, side: Side, theta: float = 0.0, degree: int = 1) -> np.ndarray:
    if gam == 0.0 or (gam < ORDER_FLOOR and mesh.dense.any()):
        M = np.eye(mesh.n)
    else:
        M = _Assembler(mesh, gam, side, theta, degree).build()
    M.setflags(write=False)
    return M


def build_right_integral(mesh: Mesh, order) -> FracOperator:
    order = _order(order)
    return FracOperator(OperatorKind.RightIntegral, order, mesh, _integral_matrix(mesh, order.alpha, Side.Right))


def build_left_integral(mesh: Mesh, order) -> FracOperator:
    order = _order(order)
    return FracOperator(OperatorKind.LeftIntegral, order, mesh, _integral_matrix(mesh, order.alpha, Side.Left))


def _mark_undefined(mesh: Mesh, M: np.ndarray) -> np.ndarray:
    M = np.array(M)
    M[~mesh.delta_defined] = np.nan
    return M


@lru_cache(maxsize=64)
def _rl_matrix(mesh: Mesh, alpha: float, side: Side) -> np.ndarray:
    sign = -1.0 if side is Side.Right else 1.0
    M = sign * (delta_stencil(mesh) @ _integral_matrix(mesh, 1.0 - alpha, side, alpha - 1.0))
    M = _mark_undefined(mesh, M)
    M.setflags(write=False)
    return M


def build_right_rl_derivative(mesh: Mesh, order) -> FracOperator:
    """D^α_b = −Δ ∘ I^{1−α}_b; the row of b is NaN when b is left-scattered."""
    order = _order(order)
    return FracOperator(OperatorKind.RightRLDerivative, order, mesh, _rl_matrix(mesh, order.alpha, Side.Right))


def build_left_rl_derivative(mesh: Mesh, order) -> FracOperator:
    """D^α_a = Δ ∘ I^{1−α}_a."""
    order = _order(order)
    return FracOperator(OperatorKind.LeftRLDerivative, order, mesh, _rl_matrix(mesh, order.alpha, Side.Left))


def build_caputo(mesh: Mesh, order, side: Side | str) -> FracOperator:
    """Right: −I^{1−α}_b ∘ Δ.  Left: I^{1−α}_a ∘ Δ."""
    order = _order(order)
    side = Side(side)
    stencil = delta_stencil(mesh).toarray()
    I = _integral_matrix(mesh, 1.0 - order.alpha, side)
    if side is Side.Right:
        M, kind = -(I @ stencil), OperatorKind.RightCaputo
    else:
        M, kind = I @ stencil, OperatorKind.LeftCaputo
    # For α < 1 neither integral has weight on a left-scattered b, so only the
    # pure Δ case inherits the missing derivative there.
    if order.alpha == 1.0:
        M = _mark_undefined(mesh, M)
    return FracOperator(kind, order, mesh, M)


def build_operator(mesh: Mesh, order, kind: OperatorKind) -> FracOperator:
    builders = {
        OperatorKind.LeftIntegral: build_left_integral,
        OperatorKind.RightIntegral: build_right_integral,
        OperatorKind.LeftRLDerivative: build_left_rl_derivative,
        OperatorKind.RightRLDerivative: build_right_rl_derivative,
    }
    if kind is OperatorKind.LeftCaputo:
        return build_caputo(mesh, order, Side.Left)
    if kind is OperatorKind.RightCaputo:
        return build_caputo(mesh, order, Side.Right)
    return builders[kind](mesh, order)


def apply(op: FracOperator, f: GridFunction) -> GridFunction:
    if not op.mesh.same_as(f.mesh):
        raise MeshMismatch("operator and grid function live on different meshes")
    values = np.array(f.values)
    # a node the operator never reads (e.g. a masked b) must not poison the product
    unused = ~np.any(op.matrix != 0.0, axis=0)
    values[unused[:, None] & ~np.isfinite(values)] = 0.0
    return f.with_values(op.matrix @ values)


# Identity residuals ---------------------------------------------------------

def _inner(f: np.ndarray, g: np.ndarray, mesh: Mesh) -> float:
    """Δ-integral over [a, b) of the product of two scalar nodal vectors."""
    w = mesh.weights
    keep = w != 0.0
    return float(np.sum(w[keep] * f[keep] * g[keep]))


def semigroup_residual(mesh: Mesh, alpha: float, beta: float, f: GridFunction, side: Side | str = Side.Right) -> float:
    """max over nodes of |I^α I^β f − I^{α+β} f|.

    I^β f behaves like (b − t)^β at b (like (t − a)^β on the left), so the
    outer integral interpolates (I^β f)/(b − s)^β instead of I^β f itself.
    """
    side = Side(side)
    if not (0 < alpha and 0 < beta and alpha + beta <= 1.0):
        raise AlphaOutOfRange("semigroup check needs alpha, beta > 0 and alpha + beta <= 1")
    Ia = _integral_matrix(mesh, alpha, side, beta if beta < 1.0 else 0.0)
    Ib = _integral_matrix(mesh, beta, side)
    Iab = _integral_matrix(mesh, alpha + beta, side)
    return float(np.max(np.abs(Ia @ (Ib @ f.values) - Iab @ f.values)))


def interior(mesh: Mesh) -> np.ndarray:
    mask = np.ones(mesh.n, bool)
    mask[[0, -1]] = False
    return mask


def left_inverse_residual(mesh: Mesh, alpha: float, f: GridFunction) -> float:
    """max over interior nodes of |D^α_b I^α_b f − f|."""
    D = build_right_rl_derivative(mesh, alpha).matrix
    I = _integral_matrix(mesh, alpha, Side.Right)
    r = D @ (I @ f.values) - f.values
    return float(np.max(np.abs(r[interior(mesh)])))


def parts_residual_integral(mesh: Mesh, alpha: float, phi: GridFunction, psi: GridFunction) -> float:
    """|∫ φ · I^α_a ψ Δt − ∫ ψ · I^α_b φ Δt|."""
    _check_same_mesh(phi, psi)
    left = _integral_matrix(mesh, alpha, Side.Left) @ psi.scalar
    right = _integral_matrix(mesh, alpha, Side.Right) @ phi.scalar
    return abs(_inner(phi.scalar, left, mesh) - _inner(psi.scalar, right, mesh))


def parts_residual_rl(mesh: Mesh, alpha: float, f: GridFunction, g: GridFunction) -> float:
    """|∫ g · D^α_a f Δt − ∫ f · D^α_b g Δt|."""
    _check_same_mesh(f, g)
    dl = build_left_rl_derivative(mesh, alpha).matrix @ f.scalar
    dr = build_right_rl_derivative(mesh, alpha).matrix @ g.scalar
    return abs(_inner(g.scalar, dl, mesh) - _inner(f.scalar, dr, mesh))


def parts_residual_caputo(mesh: Mesh, alpha: float, f: GridFunction, g: GridFunction) -> float:
    """|∫ g · ^C D^α_a f − ([I^{1−α}_b g · f]_a^b + ∫ f^σ · D^α_b g)|."""
    _check_same_mesh(f, g)
    lhs = _inner(g.scalar, build_caputo(mesh, alpha, Side.Left).matrix @ f.scalar, mesh)
    G = _integral_matrix(mesh, 1.0 - alpha, Side.Right) @ g.scalar
    fv = f.scalar
    bracket = G[-1] * fv[-1] - G[0] * fv[0]
    dr = build_right_rl_derivative(mesh, alpha).matrix @ g.scalar
    rhs = bracket + _inner(f.sigma().scalar, dr, mesh)
    return abs(lhs - rhs)


# Boundary limits and image membership ---------------------------------------

#: Differences below this (relative to 1 + |value|) count as converged.
BOUNDARY_ATOL = 1e-6
#: A change that keeps this fraction of the previous one when the stride halves
#: is not settling: a logarithmic blow-up keeps all of it, order-1/2 convergence
#: about 0.71.
SETTLE_RATIO = 0.75


def boundary_value(G: np.ndarray, mesh: Mesh, points: int = 3) -> np.ndarray:
    """Limit of a grid function at b, extrapolated from the interior nodes nearest b.

    When b is left-scattered the node value is returned unchanged.  Otherwise
    the polynomial through the ``points`` nodes before b is evaluated at b.  The
    same extrapolation from every 2nd, 4th and 8th node gives a crude rate
    estimate; when every change between successive strides exceeds
    BOUNDARY_ATOL and none shrinks below SETTLE_RATIO of the coarser one, the values blow up at b
    and DivergentBoundaryValue is raised.
    """
    G = np.asarray(G, float)
    vec = G.ndim == 1
    G2 = G[:, None] if vec else G
    n = mesh.n
    if not mesh.dense[-1]:
        out = G2[-1].copy()
        return out[0] if vec else out
    k = n - 1
    while k > 0 and mesh.dense[k - 1]:
        k -= 1
    available = n - 1 - k
    pts = max(1, min(points, available))

    def extrap(stride):
        idx = n - 1 - stride * np.arange(1, pts + 1)
        w = lagrange_weights(mesh.nodes[idx], np.array([mesh.b]))[0]
        return w @ G2[idx]

    with np.errstate(invalid="ignore", over="ignore"):
        e1 = extrap(1)
        if not np.all(np.isfinite(e1)):
            raise DivergentBoundaryValue("boundary extrapolation is not finite")
        strides = [s for s in (1, 2, 4, 8) if s * pts <= available]
        if len(strides) >= 3:
            est = [e1] + [extrap(s) for s in strides[1:]]
            if not all(np.all(np.isfinite(e)) for e in est):
                raise DivergentBoundaryValue("boundary extrapolation is not finite")
            # change between stride s and 2s, finest first
            steps = [np.abs(est[k] - est[k + 1]) for k in range(len(est) - 1)]
            atol = BOUNDARY_ATOL * (1.0 + np.abs(e1))
            growing = np.all([steps[k] >= SETTLE_RATIO * steps[k + 1] for k in range(len(steps) - 1)], axis=0)
            if np.any(growing & np.all([st > atol for st in steps], axis=0)):
                raise DivergentBoundaryValue(
                    f"boundary extrapolation does not settle (changes {', '.join(f'{st.max():.3g}' for st in steps[::-1])})"
                )
    return e1[0] if vec else e1


def image_membership_defect(mesh: Mesh, alpha: float, f: GridFunction) -> tuple[float, float]:
    """(|lim_{t→b} I^{1−α}_b f|, roughness of Δ I^{1−α}_b f).

    The first entry is the boundary condition of the image of I^α_b; the
    second is the largest jump of the Δ-derivative across a dense node, which
    tends to 0 when I^{1−α}_b f is continuously differentiable.
    """
    order = _order(alpha)
    G = _integral_matrix(mesh, 1.0 - order.alpha, Side.Right, order.alpha - 1.0) @ _finite_on_used(mesh, f.values)
    if order.alpha < 1.0:
        G[-1] = boundary_value(G, mesh)
    limit = float(np.linalg.norm(G[-1]))
    dG = delta_stencil(mesh) @ G
    # jumps of ΔG between neighbouring nodes that share a dense cell
    jumps = np.linalg.norm(np.diff(dG, axis=0), axis=1)[mesh.dense & mesh.delta_defined[1:]]
    return limit, float(jumps.max()) if jumps.size else 0.0


def _finite_on_used(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    """Zero a non-finite value at b; the weighted integrals never read it."""
    values = np.array(values, float)
    values[-1] = np.where(np.isfinite(values[-1]), values[-1], 0.0)
    return values
