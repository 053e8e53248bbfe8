"""Computational meshes, grid functions, Δ-integrals and Δ-derivatives."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, InvalidStep, MeshMismatch, NodeNotInMesh
from .quadrature import fd_weights
from .timescale import EPS_TS, Interval, TimeScale


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Nodes of a time scale plus the cell structure between them.

    Cell ``j`` joins ``nodes[j]`` and ``nodes[j + 1]``.  A dense cell lies
    inside an interval segment; every other cell is a jump, and its left node
    is right-scattered with graininess equal to the cell length.
    """

    ts: TimeScale
    nodes: np.ndarray
    #: True where cell j lies inside an interval segment.
    dense: np.ndarray
    h_max: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(np.asarray(self.nodes, float)))
        object.__setattr__(self, "dense", _frozen(np.asarray(self.dense, bool)))
        if self.nodes.ndim != 1 or len(self.nodes) < 2:
            raise InvalidStep("a mesh needs at least two nodes")
        if len(self.dense) != len(self.nodes) - 1:
            raise ValueError("dense flags must have one entry per cell")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("mesh nodes must be strictly increasing")

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        return float(self.nodes[-1])

    @cached_property
    def cell_lengths(self) -> np.ndarray:
        return _frozen(np.diff(self.nodes))

    @cached_property
    def atom(self) -> np.ndarray:
        """Right-scattered nodes (b is right-dense by convention)."""
        return _frozen(np.append(~self.dense, False))

    @cached_property
    def mu(self) -> np.ndarray:
        """Graininess of the time scale at every node."""
        out = np.zeros(self.n)
        out[:-1] = np.where(self.dense, 0.0, self.cell_lengths)
        return _frozen(out)

    @cached_property
    def weights(self) -> np.ndarray:
        """Δ-quadrature weights for integrals over [a, b)."""
        h = self.cell_lengths
        w = np.zeros(self.n)
        dense_h = np.where(self.dense, h, 0.0)
        w[:-1] += 0.5 * dense_h
        w[1:] += 0.5 * dense_h
        w[:-1] += np.where(self.dense, 0.0, h)
        return _frozen(w)

    @cached_property
    def sigma_index(self) -> np.ndarray:
        idx = np.arange(self.n)
        idx[:-1] = np.where(self.atom[:-1], idx[:-1] + 1, idx[:-1])
        return _frozen(idx)

    @cached_property
    def left_dense(self) -> np.ndarray:
        out = np.zeros(self.n, bool)
        out[1:] = self.dense
        out[0] = True
        return _frozen(out)

    @cached_property
    def delta_defined(self) -> np.ndarray:
        """Nodes where the Δ-derivative exists (b only when b is left-dense)."""
        out = np.ones(self.n, bool)
        out[-1] = bool(self.dense[-1])
        return _frozen(out)

    def index_of(self, t: float) -> int:
        i = int(np.searchsorted(self.nodes, t))
        for j in (i - 1, i):
            if 0 <= j < self.n and abs(self.nodes[j] - t) <= EPS_TS * max(1.0, abs(t)):
                return j
        raise NodeNotInMesh(f"{t!r} is not a mesh node")

    def same_as(self, other: "Mesh") -> bool:
        return self is other or (
            self.n == other.n
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.dense, other.dense)
        )


def build_mesh(ts: TimeScale, h_max: float) -> Mesh:
    """Uniform refinement of every interval segment with spacing at most h_max."""
    if not (isinstance(h_max, (int, float)) and math.isfinite(h_max) and h_max > 0):
        raise InvalidStep(f"h_max must be a positive finite number, got {h_max!r}")
    nodes: list[float] = []
    dense: list[bool] = []
    for seg in ts.segments:
        if nodes:
            dense.append(False)
        if isinstance(seg, Interval):
            m = max(1, math.ceil((seg.hi - seg.lo) / h_max - 1e-9))
            pts = np.linspace(seg.lo, seg.hi, m + 1)
            pts[-1] = seg.hi
            nodes.extend(pts.tolist())
            dense.extend([True] * m)
        else:
            nodes.append(seg.t)
    if len(nodes) < 2:
        raise InvalidStep("a single-point time scale has no cells to mesh")
    return Mesh(ts, np.array(nodes), np.array(dense), float(h_max))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of an R^N-valued function at the mesh nodes; values has shape (n, N)."""

    mesh: Mesh
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.mesh.n or v.shape[1] < 1:
            raise DimensionMismatch(
                f"values of shape {np.shape(self.values)} do not fit a mesh of {self.mesh.n} nodes"
            )
        object.__setattr__(self, "values", _frozen(v))

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def scalar(self) -> np.ndarray:
        if self.dim != 1:
            raise DimensionMismatch(f"expected a scalar grid function, got dim={self.dim}")
        return self.values[:, 0]

    @classmethod
    def from_callable(cls, mesh: Mesh, f: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(mesh, np.asarray(f(mesh.nodes), float))

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.mesh, values)

    def sigma(self) -> "GridFunction":
        """f∘σ, a re-indexing on the mesh."""
        return self.with_values(self.values[self.mesh.sigma_index])

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_mesh(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_mesh(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return self.with_values(c * self.values)

    __rmul__ = __mul__


def _check_same_mesh(f: GridFunction, g: GridFunction) -> None:
    if not f.mesh.same_as(g.mesh):
        raise MeshMismatch("grid functions live on different meshes")


def delta_integral(f: GridFunction, lo: float, hi: float) -> np.ndarray:
    """Δ-integral of f from lo to hi, both mesh nodes; returns a vector of length N."""
    mesh = f.mesh
    i, j = mesh.index_of(lo), mesh.index_of(hi)
    sign = 1.0
    if j < i:
        i, j, sign = j, i, -1.0
    v = f.values
    h = mesh.cell_lengths[i:j]
    dense = mesh.dense[i:j]
    left, right = v[i:j], v[i + 1 : j + 1]
    trap = 0.5 * h[:, None] * (left + right)
    jump = h[:, None] * left
    cells = np.where(dense[:, None], trap, jump)
    return sign * cells.sum(axis=0)


def delta_stencil(mesh: Mesh, accuracy: int = 2) -> sp.csr_matrix:
    """Sparse Δ-derivative matrix; the row of b is empty when b is left-scattered.

    Jump cells use the exact forward quotient, dense interior nodes the
    three-point nonuniform central difference, and segment ends second-order
    one-sided formulas (two-point when the segment has a single cell).
    ``accuracy`` 4 or 6 swaps the dense formulas for five- or seven-point ones.
    """
    return _cached_stencil(mesh, accuracy).copy()


@lru_cache(maxsize=64)
def _cached_stencil(mesh: Mesh, accuracy: int) -> sp.csr_matrix:
    if accuracy in (4, 6):
        return _stencil_high_order(mesh, accuracy + 1)
    if accuracy != 2:
        raise ValueError("accuracy must be 2, 4 or 6")
    x = mesh.nodes
    n = mesh.n
    dense = mesh.dense
    rows, cols, vals = [], [], []

    def put(i, js, cs):
        rows.extend([i] * len(js))
        cols.extend(js)
        vals.extend(cs)

    for i in range(n):
        right_dense = i < n - 1 and dense[i]
        left_dense = i > 0 and dense[i - 1]
        if i < n - 1 and not right_dense:
            mu = x[i + 1] - x[i]
            put(i, [i, i + 1], [-1.0 / mu, 1.0 / mu])
        elif right_dense and left_dense:
            h1, h2 = x[i] - x[i - 1], x[i + 1] - x[i]
            put(
                i,
                [i - 1, i, i + 1],
                [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))],
            )
        elif right_dense:
            h1 = x[i + 1] - x[i]
            if i + 2 < n and dense[i + 1]:
                h2 = x[i + 2] - x[i + 1]
                put(
                    i,
                    [i, i + 1, i + 2],
                    [-(2 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2))],
                )
            else:
                put(i, [i, i + 1], [-1.0 / h1, 1.0 / h1])
        elif left_dense:
            h1 = x[i] - x[i - 1]
            if i >= 2 and dense[i - 2]:
                h2 = x[i - 1] - x[i - 2]
                put(
                    i,
                    [i - 2, i - 1, i],
                    [h1 / (h2 * (h1 + h2)), -(h1 + h2) / (h1 * h2), (2 * h1 + h2) / (h1 * (h1 + h2))],
                )
            else:
                put(i, [i - 1, i], [-1.0 / h1, 1.0 / h1])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _stencil_high_order(mesh: Mesh, width: int) -> sp.csr_matrix:
    x, n = mesh.nodes, mesh.n
    rows, cols, vals = [], [], []
    # node ranges of the dense segments
    bounds = []
    j = 0
    while j < n - 1:
        if mesh.dense[j]:
            k = j
            while k < n - 1 and mesh.dense[k]:
                k += 1
            bounds.append((j, k))
            j = k
        else:
            j += 1
    for lo, hi in bounds:
        m = min(width, hi - lo + 1)
        for i in range(lo, hi + 1):
            if i < n - 1 and not mesh.dense[i]:
                continue  # right-scattered segment end: forward quotient below
            start = min(max(i - m // 2, lo), hi - m + 1)
            idx = np.arange(start, start + m)
            rows.extend([i] * m)
            cols.extend(idx.tolist())
            vals.extend(fd_weights(x[idx], x[i]).tolist())
    for i in np.flatnonzero(mesh.atom):
        mu = x[i + 1] - x[i]
        rows.extend([i, i])
        cols.extend([i, i + 1])
        vals.extend([-1.0 / mu, 1.0 / mu])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _undefined_to_nan(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    values = np.array(values, float)
    values[~mesh.delta_defined] = np.nan
    return values


def delta_derivative(f: GridFunction) -> GridFunction:
    """f^Δ at every node; NaN marks the node b when b is left-scattered."""
    mesh = f.mesh
    return f.with_values(_undefined_to_nan(mesh, delta_stencil(mesh) @ f.values))


def delta_parts_residual(f: GridFunction, g: GridFunction) -> float:
    """|∫ f^σ g^Δ + ∫ f^Δ g − [(fg)(b) − (fg)(a)]|."""
    _check_same_mesh(f, g)
    if f.dim != 1 or g.dim != 1:
        raise DimensionMismatch("integration by parts needs scalar grid functions")
    mesh = f.mesh
    fd, gd = delta_derivative(f), delta_derivative(g)
    lhs = delta_integral(f.sigma().with_values(f.sigma().values * gd.values), mesh.a, mesh.b)
    lhs = lhs + delta_integral(fd.with_values(fd.values * g.values), mesh.a, mesh.b)
    fv, gv = f.scalar, g.scalar
    bracket = fv[-1] * gv[-1] - fv[0] * gv[0]
    return float(abs(lhs[0] - bracket))


def write_csv(path: str | Path, f: GridFunction, names: list[str] | None = None) -> None:
    """Write ``t,v1,...,vN`` with shortest round-trip float formatting."""
    names = names or [f"v{k + 1}" for k in range(f.dim)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *names])
        for t, row in zip(f.mesh.nodes, f.values):
            w.writerow([repr(float(t)), *(repr(float(v)) for v in row)])


def read_csv(path: str | Path, mesh: Mesh) -> GridFunction:
    """Read a ``t,v1,...,vN`` file whose t column must reproduce the mesh nodes."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0].strip() != "t" or len(rows[0]) < 2:
        raise DimensionMismatch(f"{path}: header must be t,v1,...,vN")
    width = len(rows[0])
    body = [r for r in rows[1:] if r]
    for k, r in enumerate(body):
        if len(r) != width:
            raise DimensionMismatch(f"{path}: row {k + 1} has {len(r)} columns, header has {width}")
    try:
        data = np.array([[float(x) for x in r] for r in body], float).reshape(len(body), width)
    except ValueError as exc:
        raise DimensionMismatch(f"{path}: {exc}") from None
    if len(body) != mesh.n or np.any(np.abs(data[:, 0] - mesh.nodes) > EPS_TS * np.maximum(1.0, np.abs(mesh.nodes))):
        raise MeshMismatch(f"{path}: t column does not match the {mesh.n} mesh nodes")
    return GridFunction(mesh, data[:, 1:])
