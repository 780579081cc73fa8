"""Small dense matrices behind the coupling argument and their identities.

Everything here acts on vectors in R^n and block matrices on R^{2n} ordered
as ``(x, y)``.  ``P = eta eta^T`` is the projection on the unit direction of
``x - y``, ``R = I - 2P`` the reflection that couples the noise steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (BadExponent, CoincidentPoints, DimensionMismatch, NotSymmetric, NotUnit,
                     PointsTooClose)
from .quadrature import RULES

UNIT_TOL = 1e-12
SYM_TOL = 1e-12


def _unit(eta) -> np.ndarray:
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if eta.ndim != 1:
        raise DimensionMismatch("eta must be a vector")
    if abs(np.linalg.norm(eta) - 1.0) > UNIT_TOL:
        raise NotUnit(f"|eta| = {np.linalg.norm(eta)!r}")
    return eta


def projection_matrix(eta) -> np.ndarray:
    eta = _unit(eta)
    return np.outer(eta, eta)


def reflection_matrix(eta) -> np.ndarray:
    eta = _unit(eta)
    return np.eye(eta.size) - 2.0 * np.outer(eta, eta)


def coefficient_matrix_A(eta, p: float) -> np.ndarray:
    """``[[I+(p-2)P, I-pP], [I-pP, I+(p-2)P]]``, the second-order coefficient of
    the doubled equation under reflection coupling."""
    if not p > 1 or math.isinf(p):
        raise BadExponent(f"coefficient matrix needs 1 < p < inf, got {p}")
    P = projection_matrix(eta)
    I = np.eye(P.shape[0])
    d, o = I + (p - 2) * P, I - p * P
    return np.block([[d, o], [o, d]])


def infinity_matrix(eta) -> np.ndarray:
    """``[[P, -P], [-P, P]]``: the pure tug-of-war coefficient."""
    P = projection_matrix(eta)
    return np.block([[P, -P], [-P, P]])


def infinity_matrix_diagonal(eta) -> np.ndarray:
    """``diag(P, P)``: alternative form with only the diagonal blocks kept.

    Against a Hessian of the form ``[[M,-M],[-M,M]]`` its trace is half that of
    :func:`infinity_matrix`; reported for comparison only.
    """
    P = projection_matrix(eta)
    Z = np.zeros_like(P)
    return np.block([[P, Z], [Z, P]])


@dataclass(frozen=True)
class SpectralReport:
    dim: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    psd: bool
    norm: float
    max_residual: float

    def multiplicity(self, value: float, tol: float = 1e-10) -> int:
        return int(np.sum(np.abs(self.eigenvalues - value) <= tol))


def spectral_analysis(A, *, tol_scale: float = 1e-10) -> SpectralReport:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch("expected a square matrix")
    if np.max(np.abs(A - A.T), initial=0.0) > SYM_TOL:
        raise NotSymmetric("matrix is not symmetric within 1e-12")
    w, V = np.linalg.eigh(0.5 * (A + A.T))
    order = np.argsort(w, kind="stable")
    w, V = w[order], V[:, order]
    norm = float(np.linalg.norm(A, 2)) if A.size else 0.0
    res = float(np.max(np.linalg.norm(A @ V - V * w, axis=0), initial=0.0))
    return SpectralReport(A.shape[0], w, V, bool(w.min() >= -tol_scale * max(norm, 1.0)), norm, res)


def expected_spectrum(n: int, p: float) -> np.ndarray:
    """Sorted eigenvalues of ``coefficient_matrix_A`` in dimension ``n``."""
    return np.sort(np.array([0.0] * n + [2.0] * (n - 1) + [2.0 * (p - 1)]))


# ---------------------------------------------------------------------------
# comparison function


@dataclass(frozen=True)
class ComparisonFn:
    """``f(x, y) = C |x-y|^delta + loc_weight |x - z0|^2``."""

    C: float
    delta: float
    z0: tuple[float, ...] | None = None
    loc_weight: float | None = None

    def __post_init__(self):
        if self.C < 0:
            raise ValueError("C must be nonnegative")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.z0 is not None:
            object.__setattr__(self, "z0", tuple(float(v) for v in np.atleast_1d(self.z0)))
        if self.loc_weight is None:
            object.__setattr__(self, "loc_weight", 2.0 if self.z0 is not None else 0.0)
        if self.loc_weight and self.z0 is None:
            raise ValueError("loc_weight needs a center z0")

    def __call__(self, x, y) -> np.ndarray:
        x, y = np.atleast_2d(x), np.atleast_2d(y)
        out = self.C * np.linalg.norm(x - y, axis=1) ** self.delta
        if self.loc_weight:
            out = out + self.loc_weight * np.sum((x - np.asarray(self.z0)) ** 2, axis=1)
        return out


def _geometry(x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise DimensionMismatch("x and y differ in dimension")
    d = x - y
    r = float(np.linalg.norm(d))
    if r < 1e-12:
        raise CoincidentPoints(f"|x - y| = {r:.3g}")
    return x, y, r, d / r


def comparison_hessian(x, y, cf: ComparisonFn):
    """Gradients and Hessian of ``C|x-y|^delta`` (localization excluded).

    Returns ``(Dxf, Dyf, M, H)`` with ``H = [[M, -M], [-M, M]]`` and
    ``M = C delta r^(delta-2) ((delta-2) P + I)``.
    """
    x, y, r, eta = _geometry(x, y)
    c = cf.C * cf.delta * r ** (cf.delta - 2)
    g = c * (x - y)
    M = c * ((cf.delta - 2) * np.outer(eta, eta) + np.eye(eta.size))
    H = np.block([[M, -M], [-M, M]])
    return g, -g, M, H


def m_squared_formula(x, y, cf: ComparisonFn) -> np.ndarray:
    _, _, r, eta = _geometry(x, y)
    c = cf.C**2 * cf.delta**2 * r ** (2 * (cf.delta - 2))
    return c * (cf.delta * (cf.delta - 2) * np.outer(eta, eta) + np.eye(eta.size))


def trace_product(A, H) -> float:
    A, H = np.asarray(A, dtype=float), np.asarray(H, dtype=float)
    if A.shape != H.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"shapes {A.shape} and {H.shape} are not conformable")
    return float(np.sum(A * H.T))


def trace_closed_forms(n: int, p: float, C: float, delta: float, r: float) -> dict[str, float]:
    """Predicted ``tr(A H)`` for the coefficient, identity and infinity matrices."""
    base = C * delta * r ** (delta - 2)
    out = {"identity": 2 * base * (delta - 2 + n), "infinity": 4 * base * (delta - 1)}
    if not math.isinf(p):
        out["coefficient"] = 4 * (p - 1) * base * (delta - 1)
    return out


# ---------------------------------------------------------------------------
# ball averages


def quadratic_mean_identity_check(A, B, epsilon: float, n_mc: int = 128, rng_seed: int = 0,
                                  rule: str = "spherical") -> tuple[float, float, float]:
    """Average of ``<A h, B h>`` over ``B_eps(0)`` against ``eps^2/(n+2) tr(B^T A)``.

    ``n_mc`` is the resolution: points per axis for the grid rules, total
    samples for ``rule="mc"``.
    """
    A, B = np.atleast_2d(np.asarray(A, dtype=float)), np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise DimensionMismatch("A and B must be square of equal size")
    n = A.shape[0]
    kw = {"seed": rng_seed} if rule == "mc" else {}
    pts, w = RULES[rule](n, epsilon, n_mc, **kw)
    val = float(w @ np.einsum("ki,ki->k", pts @ A.T, pts @ B.T))
    exact = epsilon**2 / (n + 2) * float(np.trace(B.T @ A))
    return val, exact, abs(val - exact)


@dataclass(frozen=True)
class LemmaResult:
    epsilon: float
    integral: float
    taylor: float
    negative: bool
    ratio: float
    contrast: float  # same integral under the point reflection h -> -h
    identity: float  # same integral under h -> h


def lemma_negativity_check(x0, y0, cf: ComparisonFn, epsilon: float, *, m: int = 96,
                           rule: str = "spherical") -> LemmaResult:
    """Average of ``f(x0+h, y0+Rh) - f(x0,y0)`` over ``h in B_eps`` with ``R`` the
    reflection across the hyperplane orthogonal to ``x0 - y0``.

    The Taylor prediction is ``eps^2/(2(n+2)) * 4 C delta r^(delta-2) (delta-1)``.
    """
    if cf.loc_weight:
        raise ValueError("lemma check uses the unlocalized comparison function")
    x0, y0, r, eta = _geometry(x0, y0)
    if epsilon > r / 4:
        raise PointsTooClose(f"epsilon={epsilon} exceeds |x0-y0|/4 = {r / 4}")
    n = eta.size
    pts, w = RULES[rule](n, epsilon, m)
    d0 = x0 - y0
    f0 = cf.C * r**cf.delta

    def avg(R):
        # f depends on x - y only: (x0 + h) - (y0 + Rh) = d0 + (I - R) h
        dist = np.linalg.norm(d0 + pts @ (np.eye(n) - R).T, axis=1)
        return float(w @ (cf.C * dist**cf.delta - f0))

    I = avg(reflection_matrix(eta))
    T = epsilon**2 / (2 * (n + 2)) * 4 * cf.C * cf.delta * r ** (cf.delta - 2) * (cf.delta - 1)
    return LemmaResult(float(epsilon), I, T, I < 0, I / T if T != 0 else math.nan,
                       avg(-np.eye(n)), avg(np.eye(n)))


def lemma_sweep(x0, y0, cf: ComparisonFn, eps_list: Sequence[float], **kw) -> list[LemmaResult]:
    return [lemma_negativity_check(x0, y0, cf, e, **kw) for e in eps_list]


# ---------------------------------------------------------------------------
# check table


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    expected: float
    tol: float
    relative: bool = False

    @property
    def abs_err(self) -> float:
        return abs(self.value - self.expected)

    @property
    def rel_err(self) -> float:
        return self.abs_err / abs(self.expected) if self.expected else self.abs_err

    @property
    def passed(self) -> bool:
        err = self.rel_err if self.relative else self.abs_err
        return bool(err <= self.tol)

    def as_dict(self) -> dict:
        return {"name": self.name, "computed": self.value, "closed_form": self.expected,
                "abs_err": self.abs_err, "rel_err": self.rel_err, "tol": self.tol,
                "pass": self.passed}


def standard_checks(n: int, p: float, C: float, delta: float, x, y) -> list[Check]:
    """Spectrum, trace and square identities at one parameter point."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    _, _, r, eta = _geometry(x, y)
    cf = ComparisonFn(C, delta)
    _, _, M, H = comparison_hessian(x, y, cf)
    closed = trace_closed_forms(n, p, C, delta, r)
    checks = []
    if math.isinf(p):
        Ainf = infinity_matrix(eta)
        checks.append(Check("trace_infinity", trace_product(Ainf, H), closed["infinity"], 1e-10, True))
        rep = spectral_analysis(Ainf)
        checks.append(Check("spectrum_infinity_max", rep.eigenvalues[-1], 2.0, 1e-10))
        checks.append(Check("psd_infinity", float(rep.psd), 1.0, 0.0))
    else:
        A = coefficient_matrix_A(eta, p)
        rep = spectral_analysis(A)
        exp = expected_spectrum(n, p)
        for i, (got, want) in enumerate(zip(rep.eigenvalues, exp)):
            checks.append(Check(f"eigenvalue_{i}", float(got), float(want), 1e-10))
        checks.append(Check("psd", float(rep.psd), 1.0, 0.0))
        checks.append(Check("trace_coefficient", trace_product(A, H), closed["coefficient"], 1e-10, True))
        checks.append(Check("kernel_eta_eta", float(np.linalg.norm(A @ np.concatenate([eta, eta]))), 0.0, 1e-12))
    checks.append(Check("trace_identity", trace_product(np.eye(2 * n), H), closed["identity"], 1e-10, True))
    MM = M @ M
    diff = float(np.linalg.norm(m_squared_formula(x, y, cf) - MM) / np.linalg.norm(MM))
    checks.append(Check("m_squared", diff, 0.0, 1e-12))
    R = reflection_matrix(eta)
    checks.append(Check("reflection_involution", float(np.linalg.norm(R @ R - np.eye(n))), 0.0, 1e-12))
    checks.append(Check("hessian_annihilates_diagonal",
                        float(np.linalg.norm(H @ np.concatenate([eta, eta]))), 0.0, 1e-10 * np.linalg.norm(H)))
    return checks
