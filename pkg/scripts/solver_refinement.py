"""Critical points of the Galerkin energy as the mesh is halved.

Runs the minimizer on F(t, x) = f·x and the mountain pass on F = |x|⁴ for a
sequence of meshes and prints energy, residual and the change of the
solution between levels (compared at the coarse nodes).

    python3 scripts/solver_refinement.py [--alpha 0.75] [--levels 4]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from tsfrac.delta_calculus import build_mesh
from tsfrac.fbvp_solver import assemble, linear_potential, quartic_potential, solve_minimize, solve_mountain_pass
from tsfrac.timescale import Interval, Point, TimeScale, interval

SCALES = {
    "interval": interval(0.0, 1.0),
    "hybrid": TimeScale((Interval(0.0, 0.5), Point(0.6), Point(0.75), Interval(0.8, 1.0))),
}
PROBLEMS = {
    "linear": (lambda: linear_potential([1.0]), solve_minimize),
    "quartic": (lambda: quartic_potential(1), solve_mountain_pass),
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=0.75)
    ap.add_argument("--levels", type=int, default=4, help="halvings starting at h = 1/16")
    ap.add_argument("--problems", default="linear,quartic")
    args = ap.parse_args()
    print(f"{'scale':<9}{'problem':<9}{'h':>10}{'energy':>13}{'residual':>11}{'change':>11}{'secs':>7}")
    for name, ts in SCALES.items():
        for prob in args.problems.split(","):
            make, solve = PROBLEMS[prob]
            prev = None
            for k in range(args.levels):
                h = 2.0 ** -(4 + k)
                pot = make()
                t0 = time.perf_counter()
                sys = assemble(build_mesh(ts, h), args.alpha, pot)
                res = solve(sys, pot)
                secs = time.perf_counter() - t0
                u = res.u
                change = ""
                if prev is not None:
                    fine = np.interp(prev.mesh.nodes, u.mesh.nodes, u.values[:, 0])
                    # u and −u are both critical points of an even energy
                    gap = min(np.max(np.abs(fine - prev.values[:, 0])), np.max(np.abs(fine + prev.values[:, 0])))
                    change = f"{float(gap):11.2e}"
                print(f"{name:<9}{prob:<9}{h:10.2e}{res.energy:13.6f}{res.residual:11.1e}{change:>11}{secs:7.2f}")
                prev = u


if __name__ == "__main__":
    main()
