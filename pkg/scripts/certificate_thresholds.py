"""Minimal constants C for which the test-function side of the contradiction holds."""

from __future__ import annotations

import argparse
import math

from tugcoupling.regularity import ishii_lions_certificate, minimal_general_C, random_walk_threshold


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--deltas", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    ap.add_argument("--ps", nargs="+", default=["2", "1.5", "3", "4", "10", "inf"])
    args = ap.parse_args()

    print("p,delta,C_min,passes_at_1.01C")
    for ptxt in args.ps:
        p = math.inf if ptxt == "inf" else float(ptxt)
        for d in args.deltas:
            C = random_walk_threshold(args.n, d) if p == 2 else minimal_general_C(args.n, p, d)
            x0 = [0.5] + [0.0] * (args.n - 1)
            y0 = [0.0] * args.n
            ok = ishii_lions_certificate(args.n, p, 1.01 * C, d, x0, y0).passed
            print(f"{ptxt},{d:g},{C:.6f},{ok}")


if __name__ == "__main__":
    main()
