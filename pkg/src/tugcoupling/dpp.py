"""Dynamic programming principle for tug-of-war with noise on a lattice.

At an interior node ``x`` the one-step operator is

    T u(x) = alpha/2 * (max_{N(x)} u + min_{N(x)} u) + beta * mean_{N(x)} u

with ``N(x)`` the discrete open epsilon-ball.  Strip values hold the payoff and
never change.  The game value is the fixed point of ``T``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import MissingBoundaryData, NotConverged, VanishingGradient
from .geometry import GameParams, GridDomain, alpha_beta  # noqa: F401  (re-export)
from .quadrature import spherical_rule

log = logging.getLogger(__name__)

_CHUNK = 1 << 14


@dataclass
class ValueField:
    domain: GridDomain
    values: np.ndarray
    residual: float = math.inf
    iterations: int = 0
    converged: bool = False
    history: list[tuple[int, float]] = field(default_factory=list)

    @property
    def interior(self) -> np.ndarray:
        return self.values[: self.domain.n_interior]

    @property
    def strip(self) -> np.ndarray:
        return self.values[self.domain.n_interior:]

    def at(self, x) -> float:
        idx = self.domain.locate(x)
        if idx < 0:
            raise KeyError(f"{x!r} is not a lattice node of this domain")
        return float(self.values[idx])

    def residual_csv(self) -> str:
        rows = ["iteration,residual"]
        rows += [f"{k},{r:.17g}" for k, r in self.history]
        return "\n".join(rows) + "\n"


def strip_values(domain: GridDomain, F) -> np.ndarray:
    """Evaluate a payoff (callable or array) on the strip nodes."""
    if callable(F):
        vals = np.asarray(F(domain.strip_nodes), dtype=float)
    else:
        vals = np.asarray(F, dtype=float)
        if vals.shape == (domain.n_nodes,):
            vals = vals[domain.n_interior:]
    n_strip = domain.n_nodes - domain.n_interior
    if vals.shape != (n_strip,):
        raise MissingBoundaryData(f"expected {n_strip} strip values, got shape {vals.shape}")
    if not np.all(np.isfinite(vals)):
        raise MissingBoundaryData("payoff is missing or non-finite on some strip nodes")
    return vals


def initial_field(domain: GridDomain, F) -> ValueField:
    """Strip gets ``F``; interior gets ``F`` itself when it is a function on R^n,
    otherwise the mean of the strip data."""
    values = np.empty(domain.n_nodes)
    values[domain.n_interior:] = strip_values(domain, F)
    if callable(F):
        values[: domain.n_interior] = np.asarray(F(domain.interior_nodes), dtype=float)
    else:
        values[: domain.n_interior] = values[domain.n_interior:].mean()
    return ValueField(domain, values)


def _apply_interior(values: np.ndarray, domain: GridDomain, params: GameParams) -> np.ndarray:
    nb = domain.neighbors
    out = np.empty(domain.n_interior)
    a, b = params.alpha, params.beta
    for s in range(0, domain.n_interior, _CHUNK):
        g = values[nb[s: s + _CHUNK]]
        acc = np.zeros(g.shape[0])
        if b > 0:
            acc += b * g.mean(axis=1)
        if a > 0:
            acc += 0.5 * a * (g.max(axis=1) + g.min(axis=1))
        out[s: s + _CHUNK] = acc
    return out


def _check_strip(u: ValueField) -> None:
    if not np.all(np.isfinite(u.strip)):
        raise MissingBoundaryData("strip nodes without payoff values")


def dpp_apply(u: ValueField, params: GameParams, damping: float = 1.0) -> ValueField:
    """One Jacobi sweep ``(1 - damping) u + damping T u``; strip values are copied."""
    _check_strip(u)
    new = u.values.copy()
    Tu = _apply_interior(u.values, u.domain, params)
    if damping == 1.0:
        new[: u.domain.n_interior] = Tu
    else:
        new[: u.domain.n_interior] = (1 - damping) * u.interior + damping * Tu
    return ValueField(u.domain, new, float(np.max(np.abs(Tu - u.interior), initial=0.0)))


def fixed_point_residual(u: ValueField, params: GameParams) -> float:
    return float(np.max(np.abs(_apply_interior(u.values, u.domain, params) - u.interior), initial=0.0))


def dpp_solve(domain: GridDomain, F, params: GameParams, tol: float = 1e-10,
              max_iter: int | None = None, *, method: str = "jacobi",
              damping: float = 1.0, initial: ValueField | None = None) -> ValueField:
    """Solve ``u = T u`` with the strip fixed to the payoff ``F``.

    ``method="jacobi"`` iterates full sweeps until ``|T u - u|_inf <= tol``.
    ``method="policy"`` freezes the max/min selections, solves the resulting
    linear system (AMG-preconditioned Krylov), and repeats; it needs
    ``beta > 0`` and falls back to Jacobi if the residual stalls.  Both stop
    on the same criterion, so either returns the same fixed point up to ``tol``.

    Hitting ``max_iter`` sets ``converged=False`` and emits a ``NotConverged``
    warning instead of raising.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if params.is_infinity and max_iter is None:
        raise ValueError("p = inf needs an explicit max_iter")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    if max_iter is None:
        max_iter = 1_000_000
    u = initial_field(domain, F) if initial is None else ValueField(domain, initial.values.copy())
    _check_strip(u)

    if method == "policy":
        if params.beta <= 0:
            raise ValueError("policy iteration needs beta > 0; use method='jacobi' for p = inf")
        u = _policy_iteration(u, params, tol, max_iter)
        if u.converged:
            return u
        log.info("policy iteration stalled at residual %.3g; continuing with Jacobi", u.residual)
    elif method != "jacobi":
        raise ValueError(f"unknown method {method!r}")

    start = u.iterations
    history = list(u.history)
    it = start
    while it < max_iter:
        it += 1
        nxt = dpp_apply(u, params, damping)
        history.append((it, nxt.residual))
        u = nxt
        if u.residual <= tol:
            break
    u.iterations, u.history = it, history
    u.converged = u.residual <= tol
    if not u.converged:
        warnings.warn(f"DPP iteration stopped at max_iter={max_iter} with residual {u.residual:.3g}",
                      NotConverged, stacklevel=2)
    return u


def _policy_iteration(u: ValueField, params: GameParams, tol: float, max_iter: int) -> ValueField:
    dom = u.domain
    ni, nb = dom.n_interior, dom.neighbors
    K = nb.shape[1]
    inner = nb < ni
    rows = np.repeat(np.arange(ni), K).reshape(ni, K)
    mean_int = sp.csr_matrix((np.full(inner.sum(), 1.0 / K), (rows[inner], nb[inner])), shape=(ni, ni))
    bvals = u.values
    b_mean = np.where(inner, 0.0, bvals[np.minimum(nb, dom.n_nodes - 1)]).sum(axis=1) / K

    import pyamg  # deferred: only this path needs it

    base = (sp.identity(ni, format="csr") - mean_int).tocsr()
    precond = pyamg.smoothed_aggregation_solver(base).aspreconditioner(cycle="V")

    a, b = params.alpha, params.beta
    x = u.interior.copy()
    best = ValueField(dom, u.values.copy(), math.inf)
    history = []
    ar = np.arange(ni)
    for it in range(1, max_iter + 1):
        if a > 0:
            g = bvals[nb]
            jmax = nb[ar, g.argmax(axis=1)]
            jmin = nb[ar, g.argmin(axis=1)]
            mat = sp.identity(ni, format="csr") - b * mean_int
            rhs = b * b_mean
            for tgt in (jmax, jmin):
                ins = tgt < ni
                mat = mat - sp.csr_matrix((np.full(ins.sum(), 0.5 * a), (ar[ins], tgt[ins])), shape=(ni, ni))
                rhs = rhs + 0.5 * a * np.where(ins, 0.0, bvals[tgt])
            x, info = spla.gmres(mat.tocsr(), rhs, x0=x, M=precond, rtol=1e-13, atol=0.0,
                                 restart=60, maxiter=40)
        else:
            x, info = spla.cg(base, b_mean, x0=x, M=precond, rtol=1e-14, atol=0.0, maxiter=500)
        if info < 0:
            raise RuntimeError(f"Krylov solver failed with code {info}")
        vals = bvals.copy()
        vals[:ni] = x
        cur = ValueField(dom, vals)
        cur.residual = fixed_point_residual(cur, params)
        history.append((it, cur.residual))
        if cur.residual < best.residual:
            best = cur
            bvals = vals
        if cur.residual <= tol or cur.residual >= best.residual and cur is not best:
            break
    best.iterations = len(history)
    best.history = history
    best.converged = best.residual <= tol
    return best


# ----------------------------------------------------------------------------
# Continuum diagnostics


def _fd_derivatives(u: Callable, x: np.ndarray, step: float):
    n = x.size
    eye = np.eye(n) * step
    pts = [x]
    for i in range(n):
        pts += [x + eye[i], x - eye[i]]
    for i in range(n):
        for j in range(i + 1, n):
            pts += [x + eye[i] + eye[j], x + eye[i] - eye[j], x - eye[i] + eye[j], x - eye[i] - eye[j]]
    vals = np.asarray(u(np.array(pts)), dtype=float)
    u0 = vals[0]
    grad = np.empty(n)
    hess = np.empty((n, n))
    for i in range(n):
        up, um = vals[1 + 2 * i], vals[2 + 2 * i]
        grad[i] = (up - um) / (2 * step)
        hess[i, i] = (up - 2 * u0 + um) / step**2
    k = 1 + 2 * n
    for i in range(n):
        for j in range(i + 1, n):
            pp, pm, mp, mm = vals[k: k + 4]
            hess[i, j] = hess[j, i] = (pp - pm - mp + mm) / (4 * step**2)
            k += 4
    return grad, hess


def p_laplacian_eval(u: Callable, x: Sequence[float], p: float, *, step: float | None = None,
                     gradient_floor: float = 1e-8) -> float:
    """Normalized p-Laplacian of a smooth ``u`` at ``x`` by central differences.

    ``tr((I + (p-2) eta eta^T) D^2u)`` for finite ``p`` and ``<D^2u eta, eta>``
    for ``p = inf``, with ``eta = Du/|Du|``.  ``u`` is vectorized over rows.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if step is None:
        step = 1e-4 * max(1.0, float(np.linalg.norm(x)))
    grad, hess = _fd_derivatives(u, x, step)
    gnorm = float(np.linalg.norm(grad))
    if p == 2:
        return float(np.trace(hess))
    if gnorm < gradient_floor:
        raise VanishingGradient(f"|Du(x)| = {gnorm:.3g} below floor {gradient_floor}")
    eta = grad / gnorm
    if math.isinf(p):
        return float(eta @ hess @ eta)
    return float(np.trace(hess) + (p - 2) * eta @ hess @ eta)


def _ball_extrema(u: Callable, x: np.ndarray, eps: float, m: int) -> tuple[float, float]:
    """Sup and inf of ``u`` over the closed ball (equal to the open-ball values)."""
    from scipy.optimize import minimize, minimize_scalar

    n = x.size
    pts, _ = spherical_rule(n, eps, min(m, 24))
    inner = np.asarray(u(x + pts))
    hi, lo = float(inner.max()), float(inner.min())
    if n == 1:
        ends = np.asarray(u(np.array([x - eps, x + eps])))
        return max(hi, float(ends.max())), min(lo, float(ends.min()))

    if n == 2:
        th = np.linspace(0, 2 * np.pi, 2048, endpoint=False)
        ring = lambda t: u((x + eps * np.stack([np.cos(t), np.sin(t)], axis=-1)).reshape(-1, 2))
        vals = np.asarray(ring(th))
        dth = th[1] - th[0]
        out = []
        for sign, k in ((1.0, int(vals.argmax())), (-1.0, int(vals.argmin()))):
            res = minimize_scalar(lambda t: -sign * float(ring(np.array([t]))[0]),
                                  bounds=(th[k] - dth, th[k] + dth), method="bounded",
                                  options={"xatol": 1e-12})
            out.append(sign * -res.fun)
        return max(hi, out[0]), min(lo, out[1])

    rng = np.random.default_rng(12345)
    dirs = rng.standard_normal((4096, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    vals = np.asarray(u(x + eps * dirs))
    out = []
    for sign, k in ((1.0, int(vals.argmax())), (-1.0, int(vals.argmin()))):
        obj = lambda v: -sign * float(u((x + eps * v / np.linalg.norm(v))[None, :])[0])
        res = minimize(obj, dirs[k], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000})
        out.append(sign * -res.fun)
    return max(hi, out[0]), min(lo, out[1])


@dataclass(frozen=True)
class ExpansionRow:
    epsilon: float
    residual: float
    ratio: float  # residual / epsilon^2
    limit: float  # predicted epsilon -> 0 value of ratio


def expansion_check(u: Callable, x: Sequence[float], params: GameParams,
                    eps_list: Sequence[float], *, m: int = 64) -> list[ExpansionRow]:
    """``r(eps) = alpha/2 (sup + inf) + beta * mean - u(x)`` over continuum balls.

    The ratio ``r / eps^2`` tends to ``beta/(2(n+2)) * Delta_p^N u(x)`` for finite
    ``p`` and ``Delta_inf^N u(x) / 2`` for ``p = inf``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.size
    if params.is_infinity:
        limit = 0.5 * p_laplacian_eval(u, x, math.inf)
    else:
        limit = params.beta / (2 * (n + 2)) * p_laplacian_eval(u, x, params.p)
    u0 = float(np.asarray(u(x[None, :]))[0])
    rows = []
    for eps in eps_list:
        r = 0.0
        if params.beta > 0:
            pts, w = spherical_rule(n, eps, m)
            r += params.beta * float(w @ (np.asarray(u(x + pts)) - u0))
        if params.alpha > 0:
            hi, lo = _ball_extrema(u, x, eps, m)
            r += 0.5 * params.alpha * ((hi - u0) + (lo - u0))
        rows.append(ExpansionRow(float(eps), r, r / eps**2, limit))
    return rows
