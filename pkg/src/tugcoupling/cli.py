"""Command-line entry point.

    tugcoupling <subcommand> --config run.json [--out DIR] [--format json|csv]
                             [--threads N] [--seed U64]

Exit status: 0 when every check passes, 1 on a failed check, 2 on an invalid
configuration.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import warnings

import numpy as np

from . import payoffs
from .config import SUBCOMMANDS, RunConfig, dumps, load_params, parse_exponent, to_csv
from .dpp import dpp_solve, expansion_check
from .errors import ConfigInvalid, NonTerminating, NotConverged, TugCouplingError
from .geometry import DomainSpec, GameParams, build_grid
from .matrixlab import ComparisonFn, lemma_sweep, standard_checks
from .regularity import (Region, calibrate_C, comparison_gap_search, holder_seminorm,
                         ishii_lions_certificate)
from .simulate import CouplingRule, coupling_bound_estimate, greedy_strategies_from_value, simulate_game

log = logging.getLogger("tugcoupling")


class Outcome:
    """Collects the report, the main table and extra CSV artifacts of a run."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.report: dict = {"subcommand": cfg.subcommand, "config": cfg.params}
        if cfg.seed is not None:
            self.report["seed"] = cfg.seed
        self.table: list[dict] = []
        self.checks: list[dict] = []
        self.artifacts: dict[str, str] = {}

    def check(self, name: str, value, bound, ok: bool, tol=0.0, **extra) -> None:
        self.checks.append({"name": name, "value": value, "bound": bound, "tol": tol,
                            "pass": bool(ok), **extra})

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)


def _params(cfg: RunConfig, n: int, eps: float) -> GameParams:
    return GameParams.from_p(n, parse_exponent(cfg.get("p")), eps)


def _solve(cfg: RunConfig):
    spec = DomainSpec.from_dict(cfg.get("domain"))
    dom = build_grid(spec)
    params = _params(cfg, spec.n, spec.epsilon)
    F = payoffs.from_spec(cfg.get("payoff"), p=params.p, n=spec.n)
    max_iter = cfg.get("max_iter", 10_000 if params.is_infinity else None)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotConverged)
        u = dpp_solve(dom, F, params, tol=cfg.get("tol", 1e-10), max_iter=max_iter,
                      method=cfg.get("method", "jacobi"), damping=cfg.get("damping", 1.0))
    return dom, params, F, u


def cmd_solve(cfg: RunConfig, out: Outcome) -> None:
    dom, params, _, u = _solve(cfg)
    tol = cfg.get("tol", 1e-10)
    out.report.update(n_interior=dom.n_interior, n_strip=dom.n_nodes - dom.n_interior,
                      iterations=u.iterations, residual=u.residual, converged=u.converged,
                      alpha=params.alpha, beta=params.beta)
    out.check("fixed_point_residual", u.residual, tol, u.converged, tol)
    cols = [f"x{i + 1}" for i in range(dom.n)]
    out.table = [{**dict(zip(cols, node)), "interior": i < dom.n_interior, "value": v}
                 for i, (node, v) in enumerate(zip(dom.nodes, u.values))]
    out.artifacts["field.csv"] = to_csv(out.table)
    out.artifacts["residuals.csv"] = u.residual_csv()


def cmd_simulate(cfg: RunConfig, out: Outcome) -> None:
    dom, params, F, u = _solve(cfg)
    seed = cfg.seed if cfg.seed is not None else cfg.get("seed", 0)
    smax, smin = greedy_strategies_from_value(u)
    x0 = np.asarray(cfg.get("x0"), dtype=float)
    rep = simulate_game(x0, dom, params, u.values, smax, smin, rng_seed=seed,
                        n_samples=cfg.get("n_samples", 10_000),
                        step_cap=cfg.get("step_cap", None if params.beta > 0 else 100_000),
                        threads=cfg.threads)
    out.report.update(rep.as_dict())
    out.report["dpp_value"] = u.at(x0)
    out.report["dpp_converged"] = u.converged
    out.check("paths_terminated", rep.discarded_paths, 0, rep.discarded_paths == 0)
    out.table = [rep.as_dict()]
    out.artifacts["paths.csv"] = rep.paths_csv()


def cmd_couple(cfg: RunConfig, out: Outcome) -> None:
    n = cfg.get("n")
    params = _params(cfg, n, cfg.get("epsilon"))
    x0, y0 = cfg.get("x0"), cfg.get("y0")
    if len(x0) != n or len(y0) != n:
        raise ConfigInvalid("x0 and y0 must have n coordinates")
    cspec = cfg.get("coupling", {"kind": "reflection"})
    rule = CouplingRule(cspec["kind"], np.asarray(cspec["Q"], dtype=float) if "Q" in cspec else None)
    seed = cfg.seed if cfg.seed is not None else cfg.get("seed", 0)
    cap = cfg.get("step_cap", 1_000_000 if params.beta > 0 else 100_000)
    rep = coupling_bound_estimate(x0, y0, rule, params, cfg.get("payoff_cap", 2.0),
                                  cfg.get("n_samples", 10_000), seed, diag_tol=cfg.get("diag_tol"),
                                  radius=cfg.get("radius", 1.0), step_cap=cap, threads=cfg.threads)
    out.report.update(rep.as_dict())
    out.check("paths_terminated", rep.discarded_paths, 0, rep.discarded_paths == 0)
    out.table = [rep.as_dict()]
    out.artifacts["paths.csv"] = rep.paths_csv()


def cmd_verify_matrix(cfg: RunConfig, out: Outcome) -> None:
    n, p = cfg.get("n"), parse_exponent(cfg.get("p"))
    C, delta = cfg.get("C", 1.0), cfg.get("delta", 0.5)
    seed = cfg.seed if cfg.seed is not None else cfg.get("seed", 0)
    rng = np.random.default_rng(seed)
    for k in range(cfg.get("draws", 20)):
        x = rng.uniform(-1, 1, n)
        y = x - rng.standard_normal(n) * rng.uniform(0.05, 1.0)
        for c in standard_checks(n, p, C, delta, x, y):
            row = {"draw": k, **c.as_dict()}
            out.table.append(row)
            out.check(f"{c.name}[{k}]", c.value, c.expected, c.passed, c.tol)


def cmd_verify_lemma(cfg: RunConfig, out: Outcome) -> None:
    x0 = np.asarray(cfg.get("x0"), dtype=float)
    y0 = np.asarray(cfg.get("y0"), dtype=float)
    r = float(np.linalg.norm(x0 - y0))
    cf = ComparisonFn(cfg.get("C"), cfg.get("delta"))
    fr = sorted(cfg.get("eps_fractions", [0.04, 0.02, 0.01]), reverse=True)
    rows = lemma_sweep(x0, y0, cf, [f * r for f in fr], m=cfg.get("m", 96))
    lo, hi = cfg.get("ratio_band", [0.8, 1.2])
    for row in rows:
        out.table.append({"epsilon": row.epsilon, "integral": row.integral, "taylor": row.taylor,
                          "ratio": row.ratio, "negative": row.negative,
                          "contrast_point_reflection": row.contrast, "identity": row.identity})
        out.check(f"negative[eps={row.epsilon:.6g}]", row.integral, 0.0, row.negative)
    last = rows[-1].ratio
    out.check("ratio_band_smallest_eps", last, [lo, hi], lo <= last <= hi)
    gaps = [abs(r_.ratio - 1) for r_ in rows]
    out.check("ratio_tightening", gaps, "nonincreasing", all(b <= a for a, b in zip(gaps, gaps[1:])))


def cmd_expansion(cfg: RunConfig, out: Outcome) -> None:
    x = np.asarray(cfg.get("x"), dtype=float)
    params = GameParams.from_p(x.size, parse_exponent(cfg.get("p")), max(cfg.get("eps_list")))
    fn = payoffs.from_spec(cfg.get("function"), p=params.p, n=x.size)
    if not callable(fn):
        raise ConfigInvalid("expansion needs a function, not a table")
    rows = expansion_check(fn, x, params, cfg.get("eps_list"), m=cfg.get("m", 64))
    out.table = [{"epsilon": r.epsilon, "residual": r.residual, "ratio": r.ratio, "limit": r.limit}
                 for r in rows]
    if cfg.get("min_decay") is not None:
        first, last = abs(rows[0].ratio), abs(rows[-1].ratio)
        decay = first / last if last > 0 else math.inf
        out.check("ratio_decay", decay, cfg.get("min_decay"), decay >= cfg.get("min_decay"))


def cmd_holder(cfg: RunConfig, out: Outcome) -> None:
    dom, params, _, u = _solve(cfg)
    reg = cfg.get("region")
    region = Region.ball(reg["radius"], reg.get("center", ()))
    delta = cfg.get("delta")
    budget = cfg.get("pair_budget", 10_000_000)
    seed = cfg.seed if cfg.seed is not None else cfg.get("seed", 0)
    rep = holder_seminorm(u, delta, region, budget, seed)
    out.report.update(holder=rep.as_dict(), dpp_converged=u.converged, dpp_residual=u.residual)
    out.check("seminorm_finite", rep.seminorm, "finite", math.isfinite(rep.seminorm))
    row = rep.as_dict()
    if cfg.get("calibrate", True):
        C = calibrate_C(u, delta, region, pair_budget=budget, seed=seed)
        gap = comparison_gap_search(u, ComparisonFn(C, delta), region, budget, seed)
        out.report.update(calibrated_C=C, theta=gap.theta, argmax=[list(gap.x0), list(gap.y0)])
        out.check("theta_nonpositive", gap.theta, 0.0, gap.theta <= 0)
        row.update(calibrated_C=C, theta=gap.theta)
    out.table = [row]


def cmd_certify(cfg: RunConfig, out: Outcome) -> None:
    n = cfg.get("n")
    x0 = cfg.get("x0", [0.5] + [0.0] * (n - 1))
    y0 = cfg.get("y0", [0.0] * n)
    rep = ishii_lions_certificate(n, parse_exponent(cfg.get("p")), cfg.get("C"), cfg.get("delta"),
                                  x0, y0, cfg.get("z0"))
    out.report.update(certificate=rep.as_dict())
    out.table = [c.as_dict() for c in rep.checks]
    for c in rep.checks:
        out.check(c.name, c.value, c.bound, c.passed, c.tol, margin=c.margin)


COMMANDS = {"solve": cmd_solve, "simulate": cmd_simulate, "couple": cmd_couple,
            "verify-matrix": cmd_verify_matrix, "verify-lemma": cmd_verify_lemma,
            "expansion": cmd_expansion, "holder": cmd_holder, "certify": cmd_certify}


def run(cfg: RunConfig) -> tuple[int, Outcome]:
    """Validate and execute; returns the exit code and collected outputs."""
    cfg.validate()
    out = Outcome(cfg)
    try:
        COMMANDS[cfg.subcommand](cfg, out)
    except NonTerminating as exc:
        out.check("terminating", str(exc), "all paths absorbed", False)
    out.report["checks"] = out.checks
    out.report["pass"] = out.passed
    return (0 if out.passed else 1), out


def emit(out: Outcome) -> str:
    cfg = out.cfg
    main = to_csv(out.table if out.table else out.checks) if cfg.format == "csv" else dumps(out.report)
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        files = {"report.json": dumps(out.report), "table.csv": to_csv(out.table),
                 "checks.csv": to_csv(out.checks), **out.artifacts}
        for name, text in files.items():
            with open(os.path.join(cfg.out, name), "w") as fh:
                fh.write(text)
    return main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tugcoupling", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="JSON file with the run parameters")
    ap.add_argument("--out", help="directory for report.json and CSV artifacts")
    ap.add_argument("--format", default="json", choices=("json", "csv"))
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, help="overrides the seed in the config (unsigned 64-bit)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigInvalid("seed must be an unsigned 64-bit integer")
        cfg = RunConfig(args.subcommand, load_params(args.config), seed=args.seed,
                        threads=args.threads, out=args.out, format=args.format)
        code, out = run(cfg)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TugCouplingError as exc:
        print(f"invalid input: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(emit(out))
    if code:
        failed = [c["name"] for c in out.checks if not c["pass"]]
        print(f"FAILED checks: {', '.join(failed)}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
