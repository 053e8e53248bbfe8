"""Audit suites behind ``tsfrac verify``.

Every suite yields :class:`ReportRow` records; a row passes when
``value <= threshold``.  Margins of inequalities are reported as violations
(the negated margin), so the same rule applies throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import discrete_oracle
from .delta_calculus import GridFunction, Mesh
from .errors import DivergentBoundaryValue
from .fractional_ops import (
    Side,
    _integral_matrix,
    interior,
    left_inverse_residual,
    parts_residual_caputo,
    parts_residual_integral,
    parts_residual_rl,
    semigroup_residual,
)
from .sobolev import (
    NormSpec,
    ac_decompose,
    ac_reconstruct,
    embedding_margin_lp,
    embedding_margin_sup,
    holder_modulus_margin,
    lp_norm,
    norm_equivalence,
    random_density,
    sample_representation,
)

COLUMNS = ("suite", "case", "alpha", "p", "h_max", "value", "threshold", "pass")

#: Residual envelopes C·h^r on scales with dense parts, about three times the
#: largest value seen in scripts/refinement_study.py on [0, 1] and, for every
#: case except parts_rl, on a hybrid scale; never looser than IDENTITY_CAP.
#: parts_rl has an O(μ) defect at jumps that no mesh removes, so it fails there.
IDENTITY_RATES = {
    "semigroup": (0.3, 2.0),
    "left_inverse": (0.25, 1.0),
    "parts_integral": (0.25, 1.0),
    "parts_rl": (0.1, 1.0),
    "parts_caputo": (0.5, 1.0),
}
IDENTITY_CAP = 5e-3
#: Deviation allowed from the summation oracle on discrete scales.
ORACLE_TOL = 1e-12
MARGIN_TOL = 1e-9
ROUNDTRIP_TOL = 1e-6
#: Boundary and standard norms must agree within this factor.
EQUIVALENCE_FACTOR = 2.0


@dataclass(frozen=True)
class ReportRow:
    suite: str
    case: str
    alpha: float
    p: float | None
    h_max: float
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.threshold)

    def cells(self) -> list[str]:
        p = "" if self.p is None else repr(float(self.p))
        return [self.suite, self.case, repr(float(self.alpha)), p, repr(float(self.h_max)),
                repr(float(self.value)), repr(float(self.threshold)), "true" if self.passed else "false"]


def identity_functions(mesh: Mesh) -> dict[str, np.ndarray]:
    """Fixed smooth test functions, rescaled to the span of the time scale."""
    x = (mesh.nodes - mesh.a) / (mesh.b - mesh.a)
    return {
        "semigroup": 1.0 + x - x**2,
        "left_inverse": 1.0 + x,
        "phi": 1.0 + x,
        "psi": np.cos(x),
        "rl_f": 1.0 + x,
        "rl_g": np.cos(x),
        "caputo_f": x * (1.0 - x),
        "caputo_g": np.ones_like(x),
    }


def identity_residuals(mesh: Mesh, alpha: float) -> dict[str, float]:
    fn = identity_functions(mesh)
    gf = {k: GridFunction(mesh, v) for k, v in fn.items()}
    IL = _integral_matrix(mesh, alpha, Side.Left)
    IR = _integral_matrix(mesh, alpha, Side.Right)
    return {
        "semigroup": semigroup_residual(mesh, alpha / 2.0, alpha / 2.0, gf["semigroup"]),
        "left_inverse": left_inverse_residual(mesh, alpha, gf["left_inverse"]),
        "parts_integral": parts_residual_integral(mesh, alpha, gf["phi"], gf["psi"]),
        "parts_rl": parts_residual_rl(
            mesh, alpha, GridFunction(mesh, IL @ fn["rl_f"]), GridFunction(mesh, IR @ fn["rl_g"])
        ),
        "parts_caputo": parts_residual_caputo(
            mesh, alpha, gf["caputo_f"], GridFunction(mesh, IR @ fn["caputo_g"])
        ),
    }


def identity_threshold(case: str, h: float) -> float:
    c, r = IDENTITY_RATES[case]
    return min(c * h**r, IDENTITY_CAP)


def identities_suite(mesh: Mesh, alphas) -> list[ReportRow]:
    """Residuals of the operator identities.

    On a discrete scale each value is the distance to the same residual
    summed with the brute-force oracle; elsewhere it is the residual itself,
    checked against a calibrated C·h^r bound.
    """
    discrete = not mesh.dense.any()
    h = float(mesh.cell_lengths.max()) if discrete else float(mesh.cell_lengths[mesh.dense].max())
    rows = []
    for alpha in alphas:
        got = identity_residuals(mesh, alpha)
        ref = discrete_oracle.residuals(mesh, alpha, identity_functions(mesh)) if discrete else None
        for case, value in got.items():
            if discrete:
                scale = 1.0 + abs(ref[case])
                rows.append(ReportRow("identities", case, alpha, None, h, abs(value - ref[case]) / scale, ORACLE_TOL))
            else:
                rows.append(ReportRow("identities", case, alpha, None, h, value, identity_threshold(case, h)))
    return rows


def boundedness_suite(mesh: Mesh, alphas, ps, samples: int, rng: np.random.Generator) -> list[ReportRow]:
    """‖I^α_b f‖_p − (b−a)^α/Γ(α+1) ‖f‖_p for random f."""
    rows = []
    span = mesh.b - mesh.a
    for alpha in alphas:
        I = _integral_matrix(mesh, alpha, Side.Right)
        K = span**alpha / math.gamma(alpha + 1.0)
        for p in ps:
            for k in range(samples):
                f = random_density(mesh, rng)
                lhs = lp_norm(f.with_values(I @ f.values), p)
                rows.append(ReportRow("boundedness", f"draw{k}", alpha, p, mesh.h_max, lhs - K * lp_norm(f, p), MARGIN_TOL))
    return rows


def sobolev_suite(mesh: Mesh, alphas, ps, samples: int, rng: np.random.Generator) -> list[ReportRow]:
    """Per draw: embedding and modulus violations, norm equivalence and the AC roundtrip.

    A boundary term that will not settle on this mesh fails its row with an
    infinite value instead of aborting the suite.
    """
    rows = []
    inner = np.flatnonzero(interior(mesh))
    for alpha in alphas:
        for p in ps:
            spec = NormSpec(p, alpha)
            sup_ok = alpha > 1.0 / p
            lp_ok = sup_ok or 1.0 - alpha >= 1.0 / p
            for k in range(samples):
                tag = f"draw{k}"
                _, u0 = sample_representation(mesh, spec, rng, zero_boundary=True)
                if lp_ok:
                    rows.append(ReportRow("sobolev", f"{tag}:lp_violation", alpha, p, mesh.h_max,
                                          -embedding_margin_lp(u0, spec), MARGIN_TOL))
                if sup_ok:
                    rows.append(ReportRow("sobolev", f"{tag}:sup_violation", alpha, p, mesh.h_max,
                                          -embedding_margin_sup(u0, spec), MARGIN_TOL))
                    i, j = np.sort(rng.choice(mesh.n, size=2, replace=False))
                    rows.append(ReportRow("sobolev", f"{tag}:modulus_violation", alpha, p, mesh.h_max,
                                          -holder_modulus_margin(u0, spec, mesh.nodes[i], mesh.nodes[j]), MARGIN_TOL))
                rep, u = sample_representation(mesh, spec, rng)
                try:
                    ratio_log = abs(math.log(norm_equivalence(u, spec).ratio))
                except DivergentBoundaryValue:
                    ratio_log = math.inf
                rows.append(ReportRow("sobolev", f"{tag}:norm_ratio_log", alpha, p, mesh.h_max,
                                      ratio_log, math.log(EQUIVALENCE_FACTOR)))
                try:
                    back = ac_reconstruct(ac_decompose(u, alpha), alpha)
                    err = float(np.max(np.abs(back.values[inner] - u.values[inner]))) if inner.size else 0.0
                except DivergentBoundaryValue:
                    err = math.inf
                rows.append(ReportRow("sobolev", f"{tag}:roundtrip", alpha, p, mesh.h_max, err, ROUNDTRIP_TOL))
    return rows
