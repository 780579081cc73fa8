"""Hoelder seminorm of DPP solutions on B_1/4 under grid refinement."""

from __future__ import annotations

import argparse
import time

import numpy as np

from tugcoupling import payoffs
from tugcoupling.dpp import dpp_solve
from tugcoupling.geometry import DomainSpec, GameParams, build_grid
from tugcoupling.matrixlab import ComparisonFn
from tugcoupling.regularity import Region, calibrate_C, comparison_gap_search, holder_seminorm

DATA = {
    "saddle": payoffs.saddle(),
    "coordinate": payoffs.coordinate(),
    "product": lambda z: z[:, 0] * z[:, 1],
    "wave": lambda z: np.sin(3 * z[:, 0]) + 0.5 * z[:, 1],
    "kink": lambda z: np.abs(z[:, 0]),
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--p", type=float, nargs="+", default=[2.0, 4.0])
    ap.add_argument("--data", nargs="+", default=["saddle"], choices=sorted(DATA))
    ap.add_argument("--levels", type=int, nargs="+", default=[4, 8], help="h = eps / level")
    ap.add_argument("--delta", type=float, default=0.5)
    ap.add_argument("--budget", type=int, default=20_000_000)
    args = ap.parse_args()

    region = Region.ball(0.25)
    grids = {k: build_grid(DomainSpec.ball(2, 1.0, epsilon=args.eps, spacing=args.eps / k)) for k in args.levels}
    print("data,p,level,seminorm,calibrated_C,theta,seconds")
    for name in args.data:
        for p in args.p:
            for k, dom in grids.items():
                t = time.perf_counter()
                u = dpp_solve(dom, DATA[name], GameParams.from_p(2, p, args.eps), tol=1e-10, method="policy")
                s = holder_seminorm(u, args.delta, region, pair_budget=args.budget).seminorm
                C = calibrate_C(u, args.delta, region, pair_budget=args.budget)
                th = comparison_gap_search(u, ComparisonFn(C, args.delta), region, pair_budget=args.budget).theta
                print(f"{name},{p:g},{k},{s:.6f},{C:.6f},{th:.3g},{time.perf_counter() - t:.1f}", flush=True)


if __name__ == "__main__":
    main()
