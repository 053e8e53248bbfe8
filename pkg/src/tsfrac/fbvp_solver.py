"""Ritz-Galerkin solver for the Dirichlet problem of the right fractional operator.

Weak solutions are critical points of

    φ(u) = ½ ∫ |D^α_b u|² Δt − ∫ F(t, u) Δt,      u(a) = u(b) = 0,

over piecewise-linear hats on the interior mesh nodes.  Each cell carries one
quadrature point: the midpoint of a dense cell (weight h) or the left node of
a jump (weight μ).  D^α_b of a hat is exact as a cell average there, because
the product-integration rule integrates piecewise-linear functions exactly.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh
from scipy.optimize import minimize_scalar
from scipy.special import gamma

from .delta_calculus import GridFunction, Mesh
from .errors import (
    AlphaOutOfRange,
    GeometryNotFound,
    MaxIterations,
    MissingCertificate,
    NonFiniteValue,
)
from .fractional_ops import FractionalOrder, Side, _integral_matrix, _order, apply, build_right_rl_derivative

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CoercivityCert:
    """|F(t, x)| ≤ ā|x|² + b̄(t)|x|^{2−γ} + c̄(t)."""

    a_bar: float
    b_bar: Callable[[np.ndarray], np.ndarray]
    c_bar: Callable[[np.ndarray], np.ndarray]
    gamma: float


@dataclass(frozen=True)
class ARCondition:
    """0 < F(t, x) ≤ mu (∇F(t, x), x) for |x| ≥ M."""

    mu: float
    M: float

    def __post_init__(self):
        if not 0.0 <= self.mu < 0.5:
            raise ValueError(f"AR constant must lie in [0, 1/2), got {self.mu!r}")
        if not self.M > 0:
            raise ValueError(f"AR radius must be positive, got {self.M!r}")


@dataclass(frozen=True)
class PotentialSpec:
    """F and ∇F take t of shape (q,) and x of shape (q, N)."""

    dim: int
    F: Field
    gradF: Field
    growth: CoercivityCert | None = None
    ar: ARCondition | None = None
    name: str = "custom"


def _radial(x):
    return np.linalg.norm(x, axis=1)


def linear_potential(f, growth: CoercivityCert | None = None) -> PotentialSpec:
    """F(t, x) = f · x with a constant vector f."""
    f = np.atleast_1d(np.asarray(f, float))
    return PotentialSpec(
        len(f),
        lambda t, x: x @ f,
        lambda t, x: np.broadcast_to(f, x.shape).copy(),
        growth,
        None,
        "linear",
    )


def quartic_potential(dim: int = 1, coef: float = 1.0, M: float = 1.0) -> PotentialSpec:
    """F(t, x) = coef |x|⁴; satisfies the AR condition with mu = 1/4."""
    ar = ARCondition(0.25, M) if coef > 0 else None
    return PotentialSpec(
        dim,
        lambda t, x: coef * _radial(x) ** 4,
        lambda t, x: 4.0 * coef * (_radial(x) ** 2)[:, None] * x,
        None,
        ar,
        "quartic",
    )


def polynomial_potential(terms, dim: int = 1, growth=None, ar=None) -> PotentialSpec:
    """F(t, x) = Σ c_k |x|^{p_k} from (c_k, p_k) pairs with p_k ≥ 1."""
    terms = [(float(c), float(p)) for c, p in terms]
    if any(p < 1 for _, p in terms):
        raise ValueError("polynomial powers must be >= 1")

    def F(t, x):
        r = _radial(x)
        return sum(c * r**p for c, p in terms) + 0.0 * r

    def gradF(t, x):
        r = _radial(x)
        safe = np.where(r > 0, r, 1.0)
        scale = sum(c * p * safe ** (p - 2.0) for c, p in terms) + 0.0 * r
        return np.where(r[:, None] > 0, scale[:, None] * x, 0.0)

    return PotentialSpec(dim, F, gradF, growth, ar, "custom-polynomial")


@dataclass(frozen=True, eq=False)
class GalerkinSystem:
    mesh: Mesh
    order: FractionalOrder
    dim: int
    #: Mesh indices of the basis functions (interior nodes).
    free: np.ndarray
    tq: np.ndarray
    Wq: np.ndarray
    #: Basis values at the quadrature points, shape (q, nb).
    B: np.ndarray
    #: D^α_b of each basis function at the quadrature points, shape (q, nb).
    D: np.ndarray
    stiffness: np.ndarray
    _chol: tuple = field(repr=False, default=None)

    @property
    def n_basis(self) -> int:
        return len(self.free)

    def solve_stiffness(self, g: np.ndarray) -> np.ndarray:
        return cho_solve(self._chol, g)

    def s_norm(self, c: np.ndarray) -> float:
        c = self.coefficients(c)
        return float(math.sqrt(max(np.sum(c * (self.stiffness @ c)), 0.0)))

    def coefficients(self, c) -> np.ndarray:
        c = np.asarray(c, float)
        return c.reshape(self.n_basis, self.dim)

    def grid_function(self, c) -> GridFunction:
        vals = np.zeros((self.mesh.n, self.dim))
        vals[self.free] = self.coefficients(c)
        return GridFunction(self.mesh, vals)


def assemble(mesh: Mesh, order, pot: PotentialSpec | None = None) -> GalerkinSystem:
    order = _order(order)
    if not order.alpha > 0.5:
        raise AlphaOutOfRange(f"the variational problem needs 1/2 < alpha <= 1, got {order.alpha!r}")
    n = mesh.n
    free = np.arange(1, n - 1)
    if not free.size:
        raise ValueError("mesh has no interior nodes")
    h = mesh.cell_lengths
    tq = np.where(mesh.dense, 0.5 * (mesh.nodes[:-1] + mesh.nodes[1:]), mesh.nodes[:-1])
    Wq = h.copy()
    B = np.zeros((n - 1, n))
    cells = np.arange(n - 1)
    B[cells, cells] = np.where(mesh.dense, 0.5, 1.0)
    B[cells, cells + 1] = np.where(mesh.dense, 0.5, 0.0)
    B = B[:, free]
    G = _integral_matrix(mesh, 1.0 - order.alpha, Side.Right)[:, free]
    D = -np.diff(G, axis=0) / h[:, None]
    S = D.T @ (Wq[:, None] * D)
    S = 0.5 * (S + S.T)
    try:
        chol = cho_factor(S)
    except np.linalg.LinAlgError:
        raise NonFiniteValue("stiffness matrix is not positive definite") from None
    dim = pot.dim if pot is not None else 1
    return GalerkinSystem(mesh, order, dim, free, tq, Wq, B, D, S, chol)


def _check(c):
    if not np.all(np.isfinite(c)):
        raise NonFiniteValue("coefficients are not finite")


def energy(sys: GalerkinSystem, c, pot: PotentialSpec) -> float:
    c = sys.coefficients(c)
    _check(c)
    du = sys.D @ c
    uq = sys.B @ c
    val = 0.5 * np.sum(sys.Wq[:, None] * du**2) - np.sum(sys.Wq * pot.F(sys.tq, uq))
    if not math.isfinite(val):
        raise NonFiniteValue("energy is not finite")
    return float(val)


def energy_gradient(sys: GalerkinSystem, c, pot: PotentialSpec) -> np.ndarray:
    """Coefficient gradient of the energy, shape (n_basis, N)."""
    c = sys.coefficients(c)
    _check(c)
    uq = sys.B @ c
    g = sys.stiffness @ c - sys.B.T @ (sys.Wq[:, None] * pot.gradF(sys.tq, uq))
    if not np.all(np.isfinite(g)):
        raise NonFiniteValue("energy gradient is not finite")
    return g


def dual_norm(sys: GalerkinSystem, g: np.ndarray) -> float:
    """max_j |⟨φ′(u), v_j⟩| / ‖v_j‖ over the basis, with ‖v‖² = ∫|D^α_b v|²."""
    scale = np.sqrt(np.diag(sys.stiffness))[:, None]
    return float(np.max(np.abs(g) / scale)) if g.size else 0.0


# Certificates ------------------------------------------------------------------

def coercivity_threshold(alpha: float, b: float) -> float:
    """Γ²(α+1)/(2 b^{2α})."""
    return gamma(alpha + 1.0) ** 2 / (2.0 * b ** (2.0 * alpha))


@dataclass(frozen=True)
class CoercivityReport:
    threshold: float
    a_bar: float
    gamma: float
    a_bar_ok: bool
    gamma_ok: bool
    audit_ok: bool
    #: (t, |x|, |F|, bound) of the worst probe when the growth audit fails.
    witness: tuple | None

    @property
    def passed(self) -> bool:
        return self.a_bar_ok and self.gamma_ok and self.audit_ok


def _probes(sys: GalerkinSystem, radii: np.ndarray, dirs: int = 4, seed: int = 0):
    """Probe points (t, x): a few times, radii and directions."""
    rng = np.random.default_rng(seed)
    ts = np.linspace(sys.mesh.a, sys.mesh.b, 9)
    u = rng.normal(size=(dirs, sys.dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    if sys.dim == 1:
        u = np.array([[1.0], [-1.0]])
    x = (radii[:, None, None] * u[None]).reshape(-1, sys.dim)
    T = np.repeat(ts, len(x))
    X = np.tile(x, (len(ts), 1))
    return T, X


def check_coercivity(sys: GalerkinSystem, pot: PotentialSpec) -> CoercivityReport:
    cert = pot.growth
    if cert is None:
        raise MissingCertificate("potential has no coercivity certificate")
    alpha = sys.order.alpha
    thr = coercivity_threshold(alpha, sys.mesh.b)
    T, X = _probes(sys, np.geomspace(1e-3, 1e6, 28))
    r = _radial(X)
    lhs = np.abs(pot.F(T, X))
    bound = cert.a_bar * r**2 + cert.b_bar(T) * r ** (2.0 - cert.gamma) + cert.c_bar(T)
    excess = lhs - bound * (1.0 + 1e-12)
    worst = int(np.argmax(excess))
    audit_ok = bool(excess[worst] <= 0)
    witness = None if audit_ok else (float(T[worst]), float(r[worst]), float(lhs[worst]), float(bound[worst]))
    return CoercivityReport(
        thr,
        cert.a_bar,
        cert.gamma,
        bool(0.0 <= cert.a_bar < thr),
        bool(0.0 < cert.gamma < 2.0),
        audit_ok,
        witness,
    )


@dataclass(frozen=True)
class GeometryReport:
    #: 0 < F ≤ mu (∇F, x) held on every probe with |x| ≥ M.
    ar_ok: bool
    #: max F/|x|² on small probes stayed below the coercivity threshold.
    small_ok: bool
    small_ratio: float
    threshold: float
    #: The small-|x| audit samples an asymptotic condition and proves nothing.
    heuristic: bool = True

    @property
    def passed(self) -> bool:
        return self.ar_ok and self.small_ok


def check_geometry(sys: GalerkinSystem, pot: PotentialSpec) -> GeometryReport:
    ar = pot.ar
    if ar is None:
        raise MissingCertificate("potential has no Ambrosetti-Rabinowitz certificate")
    T, X = _probes(sys, ar.M * np.geomspace(1.0, 1e4, 17))
    F = pot.F(T, X)
    pair = np.sum(pot.gradF(T, X) * X, axis=1)
    ar_ok = bool(np.all(F > 0) and np.all(F <= ar.mu * pair * (1.0 + 1e-12)))
    T0, X0 = _probes(sys, np.geomspace(1e-6, 1e-2, 9))
    ratio = float(np.max(pot.F(T0, X0) / _radial(X0) ** 2))
    thr = coercivity_threshold(sys.order.alpha, sys.mesh.b)
    return GeometryReport(ar_ok, bool(ratio < thr), ratio, thr)


def compute_a0(b: float, grid: int = 2001) -> float:
    """min over λ ∈ [1/2, 1] of Γ²(λ+1)/(2 b^{2λ}): grid search, then a bounded refinement."""
    if not b > 0:
        raise ValueError("b must be positive")
    lam = np.linspace(0.5, 1.0, grid)
    vals = coercivity_threshold(lam, b)
    k = int(np.argmin(vals))
    lo, hi = lam[max(k - 1, 0)], lam[min(k + 1, grid - 1)]
    best = float(vals[k])
    if hi > lo:
        res = minimize_scalar(lambda x: coercivity_threshold(x, b), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return best


# Solvers -----------------------------------------------------------------------

class SolutionKind(enum.Enum):
    Minimizer = "minimizer"
    MountainPass = "mountain-pass"


@dataclass(frozen=True, eq=False)
class SolverResult:
    u: GridFunction
    coefficients: np.ndarray
    energy: float
    residual: float
    kind: SolutionKind
    converged: bool
    diagnostics: dict


def _result(sys, c, pot, kind, converged, diag) -> SolverResult:
    c = sys.coefficients(c)
    return SolverResult(
        sys.grid_function(c),
        c.copy(),
        energy(sys, c, pot),
        dual_norm(sys, energy_gradient(sys, c, pot)),
        kind,
        converged,
        diag,
    )


def _descend(sys, c, pot, e0, g, step=1.0, shrink=0.5, armijo=1e-4, max_halvings=60):
    """One backtracking step along −S⁻¹g; returns (c, energy, step) or None when stalled."""
    d = -sys.solve_stiffness(g)
    slope = float(np.sum(g * d))
    if slope >= 0:
        return None
    for _ in range(max_halvings):
        trial = c + step * d
        try:
            e = energy(sys, trial, pot)
        except NonFiniteValue:
            e = math.inf
        if e <= e0 + armijo * step * slope:
            return trial, e, step
        step *= shrink
    return None


def _leave_origin(sys: GalerkinSystem, pot: PotentialSpec, c: np.ndarray, e: float):
    """Step off u = 0 when it is a critical point but not a minimum.

    Potentials with ∇F(t, 0) = 0 make the origin stationary, so descent from
    zero would stop there even when the energy dips nearby (F growing slower
    than |x|² at 0).  Sample the lowest stiffness modes over a range of radii
    and start from the best point found, if any beats the origin.
    """
    best_c, best_e = c, e
    for v in _sphere_directions(sys, np.random.default_rng(0), sys.dim, 1):
        for r in np.geomspace(1e-6, 1.0, 13):
            for sgn in (1.0, -1.0):
                trial = c + sgn * r * v
                try:
                    et = energy(sys, trial, pot)
                except NonFiniteValue:
                    continue
                if et < best_e:
                    best_c, best_e = trial, et
    return best_c, best_e


def solve_minimize(sys: GalerkinSystem, pot: PotentialSpec, init=None, tol: float = 1e-8,
                   max_iter: int = 10_000) -> SolverResult:
    """Gradient descent in the energy inner product with Armijo backtracking.

    The search direction is −S⁻¹∇φ, the gradient with respect to ∫ D^α u D^α v,
    which keeps the iteration count independent of the mesh.
    """
    c = np.zeros((sys.n_basis, sys.dim)) if init is None else sys.coefficients(init).copy()
    e = energy(sys, c, pot)
    if init is None:
        c, e = _leave_origin(sys, pot, c, e)
    energies = [e]
    for it in range(max_iter):
        g = energy_gradient(sys, c, pot)
        res = dual_norm(sys, g)
        if res <= tol:
            return _result(sys, c, pot, SolutionKind.Minimizer, True,
                           {"iterations": it, "energies": energies})
        step = _descend(sys, c, pot, e, g)
        if step is None:
            break
        c, e, _ = step
        energies.append(e)
    result = _result(sys, c, pot, SolutionKind.Minimizer, False, {"iterations": len(energies) - 1, "energies": energies})
    raise MaxIterations(f"descent stopped at residual {result.residual:.3g} > {tol:g}", result)


def _sphere_directions(sys: GalerkinSystem, rng: np.random.Generator, count: int, smooth: int) -> np.ndarray:
    """Unit directions in the energy norm: the lowest Rayleigh modes plus random ones."""
    M = sys.B.T @ (sys.Wq[:, None] * sys.B)
    _, vecs = eigh(sys.stiffness, M, subset_by_index=[0, min(smooth, sys.n_basis) - 1])
    dirs = []
    for k in range(vecs.shape[1]):
        for comp in range(sys.dim):
            v = np.zeros((sys.n_basis, sys.dim))
            v[:, comp] = vecs[:, k]
            dirs.append(v)
    L = np.linalg.cholesky(sys.stiffness)
    while len(dirs) < count:
        z = rng.normal(size=(sys.n_basis, sys.dim))
        dirs.append(np.linalg.solve(L.T, z))
    dirs = dirs[:count]
    return np.array([d / sys.s_norm(d) for d in dirs])


def solve_mountain_pass(sys: GalerkinSystem, pot: PotentialSpec, tol: float = 1e-8, *, seed: int = 0,
                        directions: int = 64, smooth_directions: int = 8, path_points: int = 33,
                        max_iter: int = 10_000, polish_below: float = 1e-2) -> SolverResult:
    """Saddle-type critical point between 0 and a far point of negative energy.

    The sphere ‖c‖_S = ρ is sampled along the lowest Rayleigh modes and random
    directions; σ is half the smallest sampled energy.  The far point e comes
    from doubling along the sampled direction of lowest energy.  The path from
    0 to e is then deformed by descending its highest point and redistributing
    the points by arc length.  Once the highest point's residual falls below
    ``polish_below`` a Newton iteration on ∇φ = 0 finishes the job; it is kept
    only if it converges at a level of at least σ.
    """
    if pot.ar is None:
        raise MissingCertificate("mountain-pass search needs an Ambrosetti-Rabinowitz certificate")
    geometry = check_geometry(sys, pot)
    zero = np.zeros((sys.n_basis, sys.dim))
    if abs(energy(sys, zero, pot)) > 1e-12:
        raise GeometryNotFound("energy does not vanish at 0")
    rng = np.random.default_rng(seed)
    dirs = _sphere_directions(sys, rng, directions, smooth_directions)

    def sampled(radius):
        vals = []
        for d in dirs:
            try:
                vals.append(energy(sys, radius * d, pot))
            except NonFiniteValue:
                vals.append(-math.inf)
        return np.array(vals)

    best = None
    for radius in 2.0 ** np.arange(10, -31, -1.0):
        vals = sampled(radius)
        low = float(vals.min())
        if low > 0 and (best is None or low > best[1]):
            best = (radius, low, vals)
        elif best is not None and low <= best[1]:
            break
    if best is None:
        raise GeometryNotFound("no sampled sphere with positive energy")
    rho, low, vals = best
    sigma = 0.5 * low

    # far point: double along the sphere direction with the lowest energy
    c0 = dirs[int(np.argmin(vals))]
    kappa, e_point, e_energy = rho, None, None
    while kappa <= 2.0**20:
        kappa *= 2.0
        try:
            val = energy(sys, kappa * c0, pot)
        except NonFiniteValue:
            val = -math.inf
        if val < 0:
            e_point, e_energy = kappa * c0, val
            break
    if e_point is None:
        raise GeometryNotFound("no point of negative energy found along the ray")

    s = np.linspace(0.0, 1.0, path_points)
    path = s[:, None, None] * e_point[None]
    levels = np.array([energy(sys, p, pot) for p in path])
    step = 1.0
    it = 0
    converged = False
    polished = None
    for it in range(1, max_iter + 1):
        k = int(np.argmax(levels[1:-1])) + 1
        g = energy_gradient(sys, path[k], pot)
        res = dual_norm(sys, g)
        if res <= tol:
            converged = True
            break
        if res <= polish_below:
            polished = _newton_polish(sys, path[k], pot, tol)
            if polished is not None and energy(sys, polished, pot) >= sigma:
                converged = True
                break
            polished = None
            polish_below = 0.1 * res
        moved = _descend(sys, path[k], pot, levels[k], g, step=min(1.0, 2.0 * step))
        if moved is None:
            break
        path[k], levels[k], step = moved
        path = _reparametrize(sys, path)
        levels = np.array([energy(sys, p, pot) for p in path])
    k = int(np.argmax(levels[1:-1])) + 1
    diag = {
        "iterations": it,
        "sigma": sigma,
        "rho": rho,
        "e_norm": sys.s_norm(e_point),
        "e_energy": e_energy,
        "ray_kappa": kappa,
        "ar_audit": geometry.ar_ok,
        "small_audit": geometry.small_ok,
        "small_ratio": geometry.small_ratio,
        "small_audit_heuristic": geometry.heuristic,
        "path_levels": levels.tolist(),
    }
    diag["newton_polish"] = polished is not None
    result = _result(sys, path[k] if polished is None else polished, pot, SolutionKind.MountainPass, converged, diag)
    if not converged:
        raise MaxIterations(f"mountain-pass search stopped at residual {result.residual:.3g} > {tol:g}", result)
    return result


def _hessian(sys: GalerkinSystem, c: np.ndarray, pot: PotentialSpec, eps: float = 1e-6) -> np.ndarray:
    """Energy Hessian; the Jacobian of ∇F comes from central differences."""
    uq = sys.B @ c
    N = sys.dim
    J = np.empty((len(uq), N, N))
    for l in range(N):
        step = eps * np.maximum(1.0, np.abs(uq[:, l]))
        plus, minus = uq.copy(), uq.copy()
        plus[:, l] += step
        minus[:, l] -= step
        J[:, :, l] = (pot.gradF(sys.tq, plus) - pot.gradF(sys.tq, minus)) / (2.0 * step[:, None])
    nb = sys.n_basis
    H = np.einsum("ij,kl->ikjl", sys.stiffness, np.eye(N))
    H -= np.einsum("qi,q,qkl,qj->ikjl", sys.B, sys.Wq, J, sys.B)
    return H.reshape(nb * N, nb * N)


def _newton_polish(sys, c, pot, tol, max_iter: int = 30):
    """Newton's method on ∇φ = 0 with residual backtracking; None if it fails."""
    c = sys.coefficients(c).copy()
    res = dual_norm(sys, energy_gradient(sys, c, pot))
    for _ in range(max_iter):
        if res <= tol:
            return c
        g = energy_gradient(sys, c, pot)
        try:
            d = -np.linalg.solve(_hessian(sys, c, pot), g.ravel()).reshape(c.shape)
        except np.linalg.LinAlgError:
            return None
        for _ in range(20):
            trial = c + d
            try:
                new = dual_norm(sys, energy_gradient(sys, trial, pot))
            except NonFiniteValue:
                new = math.inf
            if new < res:
                break
            d = 0.5 * d
        else:
            return None
        c, res = trial, new
    return c if res <= tol else None


def _reparametrize(sys: GalerkinSystem, path: np.ndarray) -> np.ndarray:
    """Redistribute the path points evenly by energy-norm arc length, keeping both ends."""
    seg = np.array([sys.s_norm(path[i + 1] - path[i]) for i in range(len(path) - 1)])
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    if arc[-1] <= 0:
        return path
    target = np.linspace(0.0, arc[-1], len(path))
    flat = path.reshape(len(path), -1)
    out = np.empty_like(flat)
    for j in range(flat.shape[1]):
        out[:, j] = np.interp(target, arc, flat[:, j])
    return out.reshape(path.shape)


def weak_residual(sys: GalerkinSystem, result: SolverResult | GridFunction, pot: PotentialSpec) -> float:
    """max_j |∫ D^α u · D^α v_j − ∫ ∇F(t, u) · v_j| / ‖v_j‖ from the nodal values of u.

    The fractional derivative is taken from the operator matrix and the
    integrals are summed cell by cell, independently of the stiffness matrix.
    """
    u = result.u if isinstance(result, SolverResult) else result
    vals = u.values
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValue("solution is not finite")
    mesh = sys.mesh
    G = _integral_matrix(mesh, 1.0 - sys.order.alpha, Side.Right) @ vals
    du = -np.diff(G, axis=0) / mesh.cell_lengths[:, None]
    uq = np.where(mesh.dense[:, None], 0.5 * (vals[:-1] + vals[1:]), vals[:-1])
    load = pot.gradF(sys.tq, uq)
    worst = 0.0
    for col, node in enumerate(sys.free):
        v = np.zeros(mesh.n)
        v[node] = 1.0
        gv = _integral_matrix(mesh, 1.0 - sys.order.alpha, Side.Right) @ v
        dv = -np.diff(gv) / mesh.cell_lengths
        vq = np.where(mesh.dense, 0.5 * (v[:-1] + v[1:]), v[:-1])
        pairing = np.sum(sys.Wq[:, None] * du * dv[:, None], axis=0) - np.sum(sys.Wq[:, None] * load * vq[:, None], axis=0)
        norm = math.sqrt(np.sum(sys.Wq * dv**2))
        worst = max(worst, float(np.max(np.abs(pairing))) / norm)
    return worst


def fractional_derivative(sys: GalerkinSystem, u: GridFunction) -> GridFunction:
    """Nodal D^α_b u, as written to solution files."""
    return apply(build_right_rl_derivative(sys.mesh, sys.order), u)
