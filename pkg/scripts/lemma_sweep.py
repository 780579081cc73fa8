"""Ball average of f(x0+h, y0+Rh) - f(x0, y0) against its second-order prediction."""

from __future__ import annotations

import argparse

from tugcoupling.matrixlab import ComparisonFn, lemma_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--C", type=float, nargs="+", default=[1.0, 5.0])
    ap.add_argument("--delta", type=float, nargs="+", default=[0.3, 0.5, 0.8])
    ap.add_argument("--dist", type=float, nargs="+", default=[0.25, 0.5])
    ap.add_argument("--fractions", type=float, nargs="+", default=[0.04, 0.02, 0.01])
    args = ap.parse_args()

    print("C,delta,dist,epsilon,integral,taylor,ratio,point_reflection")
    for C in args.C:
        for d in args.delta:
            for r in args.dist:
                for res in lemma_sweep([r / 2, 0.0], [-r / 2, 0.0], ComparisonFn(C, d),
                                       [f * r for f in args.fractions]):
                    print(f"{C:g},{d:g},{r:g},{res.epsilon:g},{res.integral:.6e},{res.taylor:.6e},"
                          f"{res.ratio:.6f},{res.contrast:.6e}")


if __name__ == "__main__":
    main()
