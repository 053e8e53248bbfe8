"""Command-line entry point ``tsfrac``.

Subcommands::

    tsfrac describe   --timescale ts.json [--h-max H]
    tsfrac frac-int   --timescale ts.json --alpha A --side right --input f.csv --output g.csv
    tsfrac frac-deriv --timescale ts.json --alpha A --side right [--kind rl|caputo] --input f.csv --output g.csv
    tsfrac verify     --suite identities,boundedness,sobolev --timescale ts.json --report report.csv
    tsfrac solve      --timescale ts.json --alpha A --potential pot.json --method minimize|mountain-pass
                      --out solution.csv --diag diag.json

Exit codes: 0 success, 1 verification failure or unconverged solve, 2 invalid
configuration or rejected certificate, 3 mesh/CSV mismatch.  Every input is
validated before any computation starts, and nothing is written on failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .delta_calculus import build_mesh, read_csv, write_csv
from .errors import (
    DimensionMismatch,
    GeometryNotFound,
    MaxIterations,
    MeshMismatch,
    MissingCertificate,
    TsfracError,
)
from .fbvp_solver import (
    ARCondition,
    CoercivityCert,
    PotentialSpec,
    assemble,
    check_coercivity,
    check_geometry,
    fractional_derivative,
    linear_potential,
    polynomial_potential,
    quartic_potential,
    solve_minimize,
    solve_mountain_pass,
    weak_residual,
)
from .fractional_ops import FractionalOrder, OperatorKind, Side, apply, build_operator
from .suites import COLUMNS, boundedness_suite, identities_suite, sobolev_suite
from .timescale import TimeScale, _describe, classify, load_timescale

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_MISMATCH = 0, 1, 2, 3
SUITES = ("identities", "boundedness", "sobolev")


class ConfigError(Exception):
    """Invalid command-line configuration (exit code 2)."""


@dataclass
class RunConfig:
    timescale: TimeScale
    h_max: float
    alphas: list[float] = field(default_factory=list)
    ps: list[float] = field(default_factory=list)
    suites: list[str] = field(default_factory=list)
    samples: int = 100
    seed: int = 0


# Parsing helpers ---------------------------------------------------------------

def _floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{what} must be a comma-separated list of numbers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"{what} is empty")
    return vals


def _alpha(value: float) -> float:
    try:
        return FractionalOrder(value).alpha
    except TsfracError as exc:
        raise ConfigError(str(exc)) from None


def _h_max(value: float) -> float:
    if not (math.isfinite(value) and value > 0):
        raise ConfigError(f"--h-max must be a positive number, got {value!r}")
    return value


def _timescale(path: str) -> TimeScale:
    try:
        return load_timescale(path)
    except TsfracError as exc:
        raise ConfigError(str(exc)) from None


def _seed(cli_seed: int) -> int:
    env = os.environ.get("TSFRAC_SEED")
    if env is None:
        return cli_seed
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"TSFRAC_SEED must be an integer, got {env!r}") from None


def _mesh(ts: TimeScale, h_max: float):
    try:
        return build_mesh(ts, h_max)
    except TsfracError as exc:
        raise ConfigError(str(exc)) from None


def _atomic_write(path: str, text: str) -> None:
    target = Path(path)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(target)


# describe ----------------------------------------------------------------------

def cmd_describe(args) -> int:
    ts = _timescale(args.timescale)
    print(f"time scale [{ts.a!r}, {ts.b!r}] with {len(ts.segments)} segment(s)")
    for k, seg in enumerate(ts.segments):
        print(f"  segment {k}: {_describe(seg)}")
    print("scattered points:" if ts.scattered_points() else "scattered points: none")
    for t in ts.scattered_points():
        cls = classify(ts, t)
        print(f"  {t!r}: {cls.right.value}, {cls.left.value}")
    if args.h_max is not None:
        mesh = _mesh(ts, _h_max(args.h_max))
        print(f"mesh: {mesh.n} nodes, {int(mesh.dense.sum())} dense cells, {int((~mesh.dense).sum())} jumps")
    return EXIT_OK


# frac-int / frac-deriv ---------------------------------------------------------

def _operator_kind(command: str, side: Side, kind: str) -> OperatorKind:
    if command == "frac-int":
        return OperatorKind.RightIntegral if side is Side.Right else OperatorKind.LeftIntegral
    if kind == "caputo":
        return OperatorKind.RightCaputo if side is Side.Right else OperatorKind.LeftCaputo
    return OperatorKind.RightRLDerivative if side is Side.Right else OperatorKind.LeftRLDerivative


def cmd_frac(args) -> int:
    ts = _timescale(args.timescale)
    alpha = _alpha(args.alpha)
    mesh = _mesh(ts, _h_max(args.h_max))
    side = Side(args.side)
    try:
        f = read_csv(args.input, mesh)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.input}: {exc.strerror}") from None
    except (DimensionMismatch, MeshMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    op = build_operator(mesh, alpha, _operator_kind(args.command, side, args.kind))
    g = apply(op, f)
    write_csv(args.output, g)
    return EXIT_OK


# verify ------------------------------------------------------------------------

def verify_config(args) -> RunConfig:
    ts = _timescale(args.timescale)
    suites = [s.strip() for s in args.suite.split(",") if s.strip()]
    if suites == ["all"]:
        suites = list(SUITES)
    bad = [s for s in suites if s not in SUITES]
    if bad or not suites:
        raise ConfigError(f"unknown suite(s) {bad or suites}; choose from {', '.join(SUITES)} or all")
    alphas = [_alpha(a) for a in (_floats(args.alpha, "--alpha") if args.alpha else _floats(args.alpha_grid, "--alpha-grid"))]
    ps = _floats(args.p, "--p")
    if any(not (p >= 1 and math.isfinite(p)) for p in ps):
        raise ConfigError("every p must be a finite number >= 1")
    if args.samples < 1:
        raise ConfigError("--samples must be positive")
    if "sobolev" in suites and not ts.a > 0:
        raise ConfigError(f"the sobolev suite needs 0 < a < b, got a = {ts.a!r}")
    cfg = RunConfig(ts, _h_max(args.h_max), alphas, ps, suites, args.samples, _seed(args.seed))
    _mesh(ts, cfg.h_max)
    return cfg


def _cells(cfg: RunConfig) -> list[tuple]:
    """(suite index, alpha index, p index) for every independent unit of work."""
    out = []
    for si, suite in enumerate(SUITES):
        if suite not in cfg.suites:
            continue
        for ai in range(len(cfg.alphas)):
            if suite == "identities":
                out.append((si, ai, -1))
            else:
                out.extend((si, ai, pi) for pi in range(len(cfg.ps)))
    return out


def _run_cell(cfg: RunConfig, mesh, key: tuple) -> list:
    si, ai, pi = key
    alpha = [cfg.alphas[ai]]
    if SUITES[si] == "identities":
        return identities_suite(mesh, alpha)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, si, ai, pi]))
    run = boundedness_suite if SUITES[si] == "boundedness" else sobolev_suite
    return run(mesh, alpha, [cfg.ps[pi]], cfg.samples, rng)


def run_verify(cfg: RunConfig, workers: int | None = None) -> list:
    """Run every (suite, alpha, p) cell on a thread pool and merge by cell key.

    Each cell owns a generator seeded from (seed, cell key), so the report
    does not depend on scheduling or on which other cells were selected.
    """
    mesh = build_mesh(cfg.timescale, cfg.h_max)
    keys = _cells(cfg)
    with ThreadPoolExecutor(max_workers=workers or min(8, os.cpu_count() or 1)) as pool:
        results = dict(zip(keys, pool.map(lambda k: _run_cell(cfg, mesh, k), keys)))
    return [row for key in sorted(results) for row in results[key]]


def format_report(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow(row.cells())
    return buf.getvalue()


def cmd_verify(args) -> int:
    cfg = verify_config(args)
    rows = run_verify(cfg)
    failed = [r for r in rows if not r.passed]
    _atomic_write(args.report, format_report(rows))
    print(f"{len(rows) - len(failed)}/{len(rows)} checks passed")
    for r in failed[:20]:
        print(f"  FAIL {r.suite}:{r.case} alpha={r.alpha} value={r.value:.3e} threshold={r.threshold:.3e}")
    return EXIT_OK if not failed else EXIT_FAIL


# solve -------------------------------------------------------------------------

def _constant(value, what):
    try:
        c = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be a number, got {value!r}") from None
    return lambda t: np.full(np.shape(t), c)


def load_potential(path: str) -> PotentialSpec:
    """Read a potential file: a named built-in plus optional certificate blocks."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    kind = data.get("kind")
    dim = int(data.get("dim", 1))
    growth = ar = None
    try:
        if "coercivity" in data:
            c = data["coercivity"]
            growth = CoercivityCert(float(c["a_bar"]), _constant(c.get("b_bar", 0.0), "b_bar"),
                                    _constant(c.get("c_bar", 0.0), "c_bar"), float(c["gamma"]))
        if "ar" in data:
            ar = ARCondition(float(data["ar"]["mu"]), float(data["ar"]["M"]))
        if kind == "linear":
            f = np.atleast_1d(np.asarray(data["f"], float))
            if growth is None:
                norm = float(np.linalg.norm(f))
                growth = CoercivityCert(0.0, _constant(norm, "b_bar"), _constant(0.0, "c_bar"), 1.0)
            pot = linear_potential(f, growth)
        elif kind == "quartic":
            pot = quartic_potential(dim, float(data.get("coef", 1.0)))
            pot = PotentialSpec(pot.dim, pot.F, pot.gradF, growth, ar or pot.ar, pot.name)
        elif kind == "custom-polynomial":
            terms = [(t["coef"], t["power"]) for t in data["terms"]]
            pot = polynomial_potential(terms, dim, growth, ar)
        else:
            raise ConfigError(f"unknown potential kind {kind!r}; use linear, quartic or custom-polynomial")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: malformed potential ({exc})") from None
    return pot


def _diag_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (np.floating, float)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_diag_value(x) for x in v]
    return v


def _reject(certificate: dict) -> None:
    clean = {k: _diag_value(v) for k, v in certificate.items()}
    print(f"certificate rejected: {json.dumps(clean, sort_keys=True)}", file=sys.stderr)


def cmd_solve(args) -> int:
    ts = _timescale(args.timescale)
    alpha = _alpha(args.alpha)
    if not alpha > 0.5:
        raise ConfigError(f"solve needs 1/2 < alpha <= 1, got {alpha!r}")
    if not args.tol > 0:
        raise ConfigError("--tol must be positive")
    pot = load_potential(args.potential)
    mesh = _mesh(ts, _h_max(args.h_max))
    system = assemble(mesh, alpha, pot)
    certificate = {}
    try:
        if args.method == "minimize":
            if pot.growth is None and args.skip_certificates:
                print("warning: no coercivity certificate; minimizing anyway", file=sys.stderr)
            else:
                report = check_coercivity(system, pot)
                certificate = {"threshold": report.threshold, "a_bar": report.a_bar, "gamma": report.gamma,
                               "a_bar_ok": report.a_bar_ok, "gamma_ok": report.gamma_ok,
                               "growth_audit_ok": report.audit_ok, "witness": report.witness}
                if not report.passed:
                    _reject(certificate)
                    return EXIT_CONFIG
        else:
            geo = check_geometry(system, pot)
            certificate = {"ar_audit_ok": geo.ar_ok, "small_audit_ok": geo.small_ok,
                           "small_ratio": geo.small_ratio, "threshold": geo.threshold,
                           "small_audit_heuristic": geo.heuristic}
            if not geo.passed:
                _reject(certificate)
                return EXIT_CONFIG
    except MissingCertificate as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    code = EXIT_OK
    try:
        if args.method == "minimize":
            result = solve_minimize(system, pot, tol=args.tol, max_iter=args.max_iter)
        else:
            result = solve_mountain_pass(system, pot, tol=args.tol, seed=_seed(args.seed), max_iter=args.max_iter)
    except MaxIterations as exc:
        result, code = exc.result, EXIT_FAIL
        print(f"warning: {exc}", file=sys.stderr)
    except GeometryNotFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    du = fractional_derivative(system, result.u)
    names = [f"u{k + 1}" for k in range(pot.dim)] + [f"dalpha_u{k + 1}" for k in range(pot.dim)]
    write_csv(args.out, result.u.with_values(np.hstack([result.u.values, du.values])), names)
    diag = {
        "method": args.method,
        "alpha": alpha,
        "h_max": args.h_max,
        "kind": result.kind.value,
        "converged": result.converged,
        "energy": result.energy,
        "residual": result.residual,
        "weak_residual": weak_residual(system, result, pot),
        "iterations": result.diagnostics.get("iterations"),
        "sigma": result.diagnostics.get("sigma"),
        "rho": result.diagnostics.get("rho"),
        "certificate": certificate,
    }
    for key in ("e_norm", "e_energy", "ray_kappa", "newton_polish"):
        if key in result.diagnostics:
            diag[key] = result.diagnostics[key]
    diag = {k: (_diag_value(v) if not isinstance(v, dict) else {kk: _diag_value(vv) for kk, vv in v.items()})
            for k, v in diag.items()}
    _atomic_write(args.diag, json.dumps(diag, indent=2, sort_keys=True) + "\n")
    return code


# Entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsfrac", description="Fractional calculus on time scales.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("describe", help="print the structure of a time scale")
    p.add_argument("--timescale", required=True)
    p.add_argument("--h-max", type=float, help="also report the mesh for this step")
    p.set_defaults(func=cmd_describe)

    for name, text in (("frac-int", "apply a fractional integral"), ("frac-deriv", "apply a fractional derivative")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--timescale", required=True)
        p.add_argument("--alpha", type=float, required=True)
        p.add_argument("--side", choices=["left", "right"], default="right")
        p.add_argument("--kind", choices=["rl", "caputo"], default="rl", help="derivative flavour (frac-deriv)")
        p.add_argument("--h-max", type=float, default=0.01)
        p.add_argument("--input", required=True)
        p.add_argument("--output", required=True)
        p.set_defaults(func=cmd_frac)

    p = sub.add_parser("verify", help="run identity and inequality audits")
    p.add_argument("--suite", default="identities", help="comma list of identities, boundedness, sobolev, or all")
    p.add_argument("--timescale", required=True)
    p.add_argument("--alpha-grid", default="0.25,0.5,0.75,1.0")
    p.add_argument("--alpha", help="overrides --alpha-grid")
    p.add_argument("--p", default="2", help="comma list of Lebesgue exponents")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--h-max", type=float, default=1.0 / 64)
    p.add_argument("--seed", type=int, default=0, help="overridden by TSFRAC_SEED")
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("solve", help="compute a weak solution of the Dirichlet problem")
    p.add_argument("--timescale", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--potential", required=True)
    p.add_argument("--method", choices=["minimize", "mountain-pass"], default="minimize")
    p.add_argument("--h-max", type=float, default=0.01)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0, help="overridden by TSFRAC_SEED")
    p.add_argument("--skip-certificates", action="store_true", help="minimize without a coercivity certificate")
    p.add_argument("--out", required=True)
    p.add_argument("--diag", required=True)
    p.set_defaults(func=cmd_solve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TsfracError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
