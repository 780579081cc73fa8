"""Empirical Hölder quantities of solved fields and f-side certificates for the
doubling-of-variables argument.

Pair scans are exact (blocked all-pairs) up to ``pair_budget`` unordered
pairs and fall back to seeded stratified sampling beyond it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dpp import ValueField
from .errors import BadExponent, CoincidentPoints, EmptyRegion, NoBracket
from .matrixlab import (ComparisonFn, coefficient_matrix_A, comparison_hessian, infinity_matrix,
                        infinity_matrix_diagonal, m_squared_formula, trace_product)

PAIR_BUDGET = 10_000_000
C_MAX = 1e6
_BLOCK = 512


@dataclass(frozen=True)
class Region:
    """Open ball ``|x - center| < radius`` used to restrict pair scans."""

    center: tuple[float, ...]
    radius: float

    def select(self, u: ValueField) -> np.ndarray:
        pts = u.domain.nodes[: u.domain.n_interior]
        c = np.zeros(pts.shape[1]) if not self.center else np.asarray(self.center, dtype=float)
        idx = np.flatnonzero(np.linalg.norm(pts - c, axis=1) < self.radius)
        if idx.size == 0:
            raise EmptyRegion(f"no interior nodes within {self.radius} of {self.center}")
        return idx

    @classmethod
    def ball(cls, radius: float, center: Sequence[float] = ()) -> Region:
        return cls(tuple(float(c) for c in center), float(radius))


@dataclass
class HolderReport:
    delta: float
    seminorm: float
    pair: tuple[tuple[float, ...], tuple[float, ...]] | None
    n_nodes: int
    n_pairs: int
    exact: bool
    pair_budget: int
    seed: int

    def as_dict(self) -> dict:
        return {"delta": self.delta, "seminorm": self.seminorm,
                "pair": None if self.pair is None else [list(self.pair[0]), list(self.pair[1])],
                "n_nodes": self.n_nodes, "n_pairs": self.n_pairs, "exact": self.exact,
                "pair_budget": self.pair_budget, "seed": self.seed}


def _pair_blocks(N: int, pair_budget: int, seed: int):
    """Yield ``(rows, cols)`` index arrays covering the pairs to examine.

    Exact mode yields row blocks against all columns (ordered pairs).  Sampling
    splits the rows into strata and draws the same number of partners for
    every row, so every region of the set is represented.
    """
    if N * (N - 1) // 2 <= pair_budget:
        cols = np.arange(N)
        for s in range(0, N, _BLOCK):
            yield np.arange(s, min(N, s + _BLOCK)), cols
        return
    rng = np.random.Generator(np.random.Philox(key=seed))
    per_row = max(1, pair_budget // N)
    for s in range(0, N, _BLOCK):
        rows = np.arange(s, min(N, s + _BLOCK))
        yield rows, rng.integers(0, N, size=(rows.size, per_row))


def _scan(pts, vals, score, pair_budget, seed):
    """Max of ``score(dist, du, rows, cols)`` over pairs; returns (max, i, j, exact, count)."""
    N = pts.shape[0]
    best, bi, bj, count = -math.inf, 0, 0, 0
    exact = N * (N - 1) // 2 <= pair_budget
    for rows, cols in _pair_blocks(N, pair_budget, seed):
        if cols.ndim == 1:
            diff = pts[rows, None, :] - pts[None, cols, :]
            du = vals[rows, None] - vals[None, cols]
            cgrid = np.broadcast_to(cols, (rows.size, cols.size))
        else:
            diff = pts[rows, None, :] - pts[cols]
            du = vals[rows, None] - vals[cols]
            cgrid = cols
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        sc = score(dist, du, rows, cgrid)
        k = int(np.argmax(sc))
        count += sc.size
        if sc.flat[k] > best:
            best = float(sc.flat[k])
            bi, bj = int(rows[k // sc.shape[1]]), int(cgrid.flat[k])
    return best, bi, bj, exact, count


def holder_seminorm(u: ValueField, delta: float, region: Region, pair_budget: int = PAIR_BUDGET,
                    seed: int = 0) -> HolderReport:
    """``max |u(x) - u(y)| / |x - y|^delta`` over node pairs in ``region``."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    idx = region.select(u)
    pts, vals = u.domain.nodes[idx], u.values[idx]

    def score(dist, du, rows, cols):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.abs(du) / dist**delta
        return np.where(dist > 0, r, 0.0)

    best, i, j, exact, count = _scan(pts, vals, score, pair_budget, seed)
    pair = (tuple(pts[i]), tuple(pts[j])) if best > 0 else None
    return HolderReport(float(delta), max(best, 0.0), pair, int(idx.size), count, exact,
                        int(pair_budget), int(seed))


@dataclass
class GapResult:
    theta: float
    x0: tuple[float, ...]
    y0: tuple[float, ...]
    exact: bool


def comparison_gap_search(u: ValueField, cf: ComparisonFn, region: Region,
                          pair_budget: int = PAIR_BUDGET, seed: int = 0) -> GapResult:
    """``theta = max u(x) - u(y) - C|x-y|^delta - w|x-z0|^2`` over node pairs."""
    idx = region.select(u)
    pts, vals = u.domain.nodes[idx], u.values[idx]
    loc = np.zeros(idx.size)
    if cf.loc_weight:
        loc = cf.loc_weight * np.sum((pts - np.asarray(cf.z0)) ** 2, axis=1)

    def score(dist, du, rows, cols):
        return du - cf.C * dist**cf.delta - loc[rows][:, None]

    best, i, j, exact, _ = _scan(pts, vals, score, pair_budget, seed)
    return GapResult(best, tuple(pts[i]), tuple(pts[j]), exact)


def calibrate_C(u: ValueField, delta: float, region: Region, *, c_max: float = C_MAX,
                tol: float = 1e-6, pair_budget: int = PAIR_BUDGET, seed: int = 0) -> float:
    """Smallest ``C`` (to ``tol`` relative to the bracket) with ``theta(C) <= 0``.

    The comparison function carries no localization here.  ``theta`` is
    nonincreasing in ``C``, so plain bisection on ``[0, c_max]`` applies.
    """
    def ok(C):
        return comparison_gap_search(u, ComparisonFn(C, delta), region, pair_budget, seed).theta <= 0

    if ok(0.0):
        return 0.0
    if not ok(c_max):
        raise NoBracket(f"theta > 0 even at C = {c_max}")
    # start from the empirical seminorm, which is the exact threshold for exact scans
    s = holder_seminorm(u, delta, region, pair_budget, seed).seminorm
    lo, hi = 0.0, c_max
    if 0 < s < c_max:
        hi_try = s * (1 + tol)
        if ok(hi_try):
            hi = hi_try
            lo_try = s * (1 - tol)
            lo = lo_try if not ok(lo_try) else 0.0
    while hi - lo > tol * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# certificates


def normalization_gap(a, b) -> tuple[float, float]:
    """``(|a/|a| - b/|b||, 2|a-b| / max(|a|,|b|))``; the first never exceeds the second."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("vectors must be nonzero")
    return float(np.linalg.norm(a / na - b / nb)), float(2 * np.linalg.norm(a - b) / max(na, nb))


@dataclass(frozen=True)
class CertCheck:
    name: str
    value: float
    bound: float
    sense: str = "<="  # value <sense> bound
    tol: float = 0.0

    @property
    def margin(self) -> float:
        return self.bound - self.value if self.sense in ("<=", "<") else self.value - self.bound

    @property
    def passed(self) -> bool:
        if self.sense in ("<", ">"):
            return bool(self.margin > 0)
        return bool(self.margin >= -self.tol)

    def as_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "bound": self.bound, "sense": self.sense,
                "margin": self.margin, "tol": self.tol, "pass": self.passed}


@dataclass
class CertificateReport:
    n: int
    p: float
    C: float
    delta: float
    x0: tuple[float, ...]
    y0: tuple[float, ...]
    mu: dict[str, float] = field(default_factory=dict)
    checks: list[CertCheck] = field(default_factory=list)
    info: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CertCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "C": self.C, "delta": self.delta,
                "x0": list(self.x0), "y0": list(self.y0), "mu": dict(self.mu),
                "checks": [c.as_dict() for c in self.checks], "info": dict(self.info),
                "verdict": "PASS" if self.passed else "FAIL"}


def _bisect_min(pred, lo: float, hi: float, tol: float) -> float:
    """Smallest value in ``[lo, hi]`` (to ``tol``) where a monotone ``pred`` turns true."""
    if not pred(hi):
        raise NoBracket(f"condition fails at the upper end {hi}")
    if pred(lo):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def random_walk_threshold(n: int, delta: float) -> float:
    """Closed-form ``C*`` with ``4n + 3 C delta 2^(delta-2) (delta-1) = 0``."""
    return 4 * n / (3 * delta * 2 ** (delta - 2) * (1 - delta))


def xnorm_bound_factor(delta: float) -> float:
    """Bracket ``K`` in ``|X| <= C r^(delta-2) K`` for ``mu = C r^(delta-2)``."""
    return 1 + delta * (1 - delta) + 2 * delta * (delta * (2 - delta) + 1)


def _t1_factor(delta: float) -> float:
    # <(M + (2/mu) M^2) eta, eta> / (C delta r^(delta-2)) with mu = C r^(delta-2)
    return (delta - 1) + 2 * delta * (delta - 1) ** 2


def general_constants(n: int, p: float, delta: float) -> dict[str, float]:
    """``L`` and ``T3`` for the finite-p (or p = inf) chain."""
    K = xnorm_bound_factor(delta)
    if math.isinf(p):
        return {"K": K, "L": 8 * n * K, "T3": 4.0}
    return {"K": K, "L": 8 * n * abs(p - 2) * K, "T3": 4.0 * (n + p - 2)}


def _t1_coefficient(p: float) -> float:
    # tr(A [[K,-K],[-K,K]]) = coef * <K eta, eta>
    return 4.0 if math.isinf(p) else 4.0 * (p - 1)


def general_final_holds(n: int, p: float, C: float, delta: float, r: float) -> bool:
    const = general_constants(n, p, delta)
    t1 = _t1_coefficient(p) * C * delta * r ** (delta - 2) * _t1_factor(delta)
    return t1 + const["L"] / r + const["T3"] <= r ** (delta - 2) * (delta - 1)


def minimal_general_C(n: int, p: float, delta: float, *, r_grid: np.ndarray | None = None,
                      c_max: float = C_MAX, tol: float = 1e-6) -> float:
    """Smallest ``C <= c_max`` making the final finite-p inequality hold on the whole
    ``|x0 - y0|`` grid (100 log-spaced points in ``[1e-3, 1]`` by default)."""
    if r_grid is None:
        r_grid = np.logspace(-3, 0, 100)
    return _bisect_min(lambda C: all(general_final_holds(n, p, C, delta, r) for r in r_grid),
                       0.0, c_max, tol)


def ishii_lions_certificate(n: int, p: float, C: float, delta: float, x0, y0, z0=None, *,
                            tol: float = 1e-6, c_max: float = C_MAX) -> CertificateReport:
    """Evaluate the test-function side of the contradiction chain at ``(x0, y0)``.

    ``p = 2`` follows the random-walk route (free choice of ``mu``); other finite
    ``p`` and ``p = inf`` use ``mu = C r^(delta-2)`` with the ``T1 + T2 + T3``
    split.  Every check is reported with value, bound and margin.
    """
    p = float(p)
    if not p > 1:
        raise BadExponent(f"certificate needs p > 1, got {p}")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if C <= 0:
        raise ValueError("C must be positive")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if x0.size != n or y0.size != n:
        raise ValueError(f"points must lie in R^{n}")
    r = float(np.linalg.norm(x0 - y0))
    if r < 1e-12:
        raise CoincidentPoints("x0 and y0 coincide")
    if r > 2:
        raise ValueError("|x0 - y0| must not exceed 2")
    eta = (x0 - y0) / r
    cf = ComparisonFn(C, delta)
    _, _, M, H = comparison_hessian(x0, y0, cf)
    M2 = m_squared_formula(x0, y0, cf)
    base = C * delta * r ** (delta - 2)
    rep = CertificateReport(n, p, C, delta, tuple(x0), tuple(y0))
    if z0 is not None:
        rep.info["z0_distance"] = float(np.linalg.norm(x0 - np.asarray(z0, dtype=float)))

    if p == 2:
        _random_walk_path(rep, n, C, delta, r, eta, M, M2, base, tol, c_max)
    else:
        _general_path(rep, n, p, C, delta, r, eta, M, M2, H, base, tol, c_max)
    return rep


def _random_walk_path(rep, n, C, delta, r, eta, M, M2, base, tol, c_max):
    mu_star = 8 * base * (1 - delta)
    mu = 2 * mu_star
    rep.mu.update(threshold=mu_star, chosen=mu)
    # mu-choice: (8/mu) <M^2 eta, eta> < -C delta r^(delta-2) (delta-1)
    lhs = 8 / mu * C**2 * delta**2 * r ** (2 * (delta - 2)) * (delta * (delta - 2) + 1)
    rep.checks.append(CertCheck("mu_choice", lhs, -base * (delta - 1), "<"))
    eig = 4 * float(eta @ (M + 2 / mu * M2) @ eta)
    rep.checks.append(CertCheck("eigen_test", eig, 3 * base * (delta - 1), "<="))
    final = 4 * n + 3 * C * delta * 2 ** (delta - 2) * (delta - 1)
    rep.checks.append(CertCheck("trace_contradiction", final, 0.0, "<"))
    c_min = _bisect_min(lambda c: 4 * n + 3 * c * delta * 2 ** (delta - 2) * (delta - 1) < 0,
                        0.0, c_max, tol)
    rep.info.update(C_min=c_min, C_min_closed_form=random_walk_threshold(n, delta))


def _general_path(rep, n, p, C, delta, r, eta, M, M2, H, base, tol, c_max):
    inf = math.isinf(p)
    mu = C * r ** (delta - 2)
    rep.mu["chosen"] = mu
    coef = _t1_coefficient(p)
    amat = infinity_matrix(eta) if inf else coefficient_matrix_A(eta, p)

    # T1 closed form as displayed against the half-size bound (4 delta (1-delta) <= 1)
    pw = 1.0 if inf else p - 1
    t1_printed = 8 * pw * base * _t1_factor(delta)
    rep.checks.append(CertCheck("T1_closed_vs_bound", t1_printed, 4 * pw * base * (delta - 1), "<=",
                                1e-12 * abs(base) * max(pw, 1.0)))

    # trace route: tr(A (H + H^2/mu)) with H^2 = 2[[M^2,-M^2],[-M^2,M^2]]
    Kmat = M + 2 / mu * M2
    t1_trace = trace_product(amat, H + H @ H / mu)
    t1_quad = coef * float(eta @ Kmat @ eta)
    rep.checks.append(CertCheck("T1_trace_crosscheck", abs(t1_trace - t1_quad), 0.0, "<=",
                                1e-10 * max(abs(t1_quad), 1.0)))
    t1 = t1_quad
    rep.info.update(T1_trace=t1_trace, T1_printed=t1_printed,
                    T1_printed_8p_form=2 * t1_quad)
    if inf:
        z = infinity_matrix_diagonal(eta)
        rep.info["T1_diagonal_variant"] = trace_product(z, H + H @ H / mu)

    # |X| <= mu + |M| + (2/mu)|M^2| <= C r^(delta-2) K
    const = general_constants(n, p, delta)
    true_x = mu + float(np.linalg.norm(M, 2)) + 2 / mu * float(np.linalg.norm(M2, 2))
    xbound = C * r ** (delta - 2) * const["K"]
    rep.checks.append(CertCheck("xnorm_bound", true_x, xbound, "<=", 1e-12 * xbound))

    # T2 <= 8 n |p-2| |X| C^-1 r^(1-delta) = L / r
    pfac = 1.0 if inf else abs(p - 2)
    t2_pre = 8 * n * pfac * xbound / C * r ** (1 - delta)
    rep.checks.append(CertCheck("T2_collapse", abs(t2_pre - const["L"] / r), 0.0, "<=",
                                1e-12 * max(t2_pre, 1.0)))
    t3 = const["T3"]
    rep.info.update(L=const["L"], K=const["K"], T2_bound=t2_pre, T3=t3,
                    T3_printed=4.0 if inf else 4.0 * (n - p - 2))

    total = t1 + const["L"] / r + t3
    rep.checks.append(CertCheck("final_sum", total, r ** (delta - 2) * (delta - 1), "<="))
    rep.info["C_min_worst_r"] = minimal_general_C(n, p, delta, c_max=c_max, tol=tol)
