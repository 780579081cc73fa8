"""Monte Carlo for single games on the lattice and for coupled pairs in R^2n.

Randomness is drawn per path from a Philox stream keyed by the run seed, with
the path index in the counter, so any path can be replayed alone and results
do not depend on how paths are batched or threaded.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateReflection, DimensionMismatch, NonTerminating, NotInterior
from .geometry import DomainSpec, GameParams, GridDomain
from .dpp import ValueField

BATCH = 25_000
POOL = 4096
CHUNK = 256
DEFAULT_STEP_CAP = 1_000_000


class Status(str, enum.Enum):
    RUNNING = "running"
    HIT_DIAGONAL = "hit_diagonal"
    EXITED = "exited"


# status codes used inside the vectorized engines
_CODES = (Status.RUNNING, Status.HIT_DIAGONAL, Status.EXITED)


def path_rng(seed: int, path_index: int) -> np.random.Generator:
    """Independent stream for one path."""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, int(path_index), 0]))


class _Pool:
    """Fixed set of slots, each running one path with its own stream.

    Each path consumes a single stream of standard normals, ``n + 2`` per
    round (two are mapped to uniforms through the normal CDF).  The stream is
    chunk-invariant, so a path sees the same numbers whatever slot it lands
    in and whenever its buffer is refilled; outcomes therefore do not depend
    on the pool size or on how paths are split across workers.
    """

    def __init__(self, seed: int, width: int, size: int, chunk: int = CHUNK):
        self.seed, self.chunk = seed, chunk
        self.gens: list[np.random.Generator | None] = [None] * size
        self.buf = np.empty((chunk, size, width))
        self.j = 0

    def assign(self, slot: int, path_index: int) -> None:
        g = path_rng(self.seed, path_index)
        self.gens[slot] = g
        if self.j < self.chunk:
            self.buf[self.j:, slot] = g.standard_normal((self.chunk - self.j, self.buf.shape[2]))

    def draw(self) -> np.ndarray:
        if self.j == self.chunk:
            for i, g in enumerate(self.gens):
                if g is not None:
                    self.buf[:, i] = g.standard_normal((self.chunk, self.buf.shape[2]))
            self.j = 0
        out = self.buf[self.j]
        self.j += 1
        return out

    def release(self, slot: int) -> None:
        self.gens[slot] = None

    def compact(self, keep: np.ndarray) -> None:
        self.gens = [self.gens[i] for i in keep]
        self.buf = np.ascontiguousarray(self.buf[:, keep])


def _run_paths(seed, first, count, n, init, advance, final, step_cap, pool_size=POOL):
    """Drive paths ``first .. first+count-1`` to absorption or the step cap.

    ``init(state, slots)`` resets slots, ``advance(state, U, G)`` moves every
    slot one round and returns status codes (0 = running), ``final(state,
    slots)`` extracts a per-path value.  ``state`` is a dict of slot-major
    arrays created by ``init(None, size)``.  Idle slots are re-initialized
    and ignored, so ``advance`` never sees an absorbed state.
    """
    size = min(pool_size, count)
    pool = _Pool(seed, n + 2, size)
    codes = np.zeros(count, dtype=np.int8)
    steps = np.zeros(count, dtype=np.int64)
    values = np.full(count, np.nan)
    owner = np.arange(size)  # local path index held by each slot, -1 when idle
    ssteps = np.zeros(size, dtype=np.int64)
    state = init(None, size)
    for i in range(size):
        pool.assign(i, first + i)
    nxt = size
    while True:
        Z = pool.draw()
        c = advance(state, ndtr(Z[:, :2]), Z[:, 2:])
        ssteps += 1
        term = (c != 0) | (ssteps >= step_cap)
        if not term.any():
            continue
        term = np.flatnonzero(term)
        done = term[owner[term] >= 0]
        paths = owner[done]
        codes[paths] = c[done]
        steps[paths] = ssteps[done]
        values[paths] = final(state, done)
        for slot in done:
            if nxt < count:
                owner[slot] = nxt
                pool.assign(int(slot), first + nxt)
                nxt += 1
            else:
                owner[slot] = -1
                pool.release(int(slot))
        ssteps[term] = 0
        init(state, term)
        live = owner >= 0
        if not live.any():
            break
        if nxt >= count and live.sum() * 4 < owner.size:
            keep = np.flatnonzero(live)
            pool.compact(keep)
            owner, ssteps = owner[keep], ssteps[keep]
            for k in state:
                state[k] = state[k][keep]
    return codes, steps, values


def ball_step(eps: float, U: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Uniform point of ``B_eps(0)`` from a normal direction and a uniform radius."""
    n = G.shape[1]
    scale = eps * U ** (1.0 / n) / np.sqrt(np.einsum("ij,ij->i", G, G))
    return G * scale[:, None]


def _map_batches(fn, n_samples: int, threads: int, batch: int):
    starts = list(range(0, n_samples, batch))
    jobs = [(s, min(batch, n_samples - s)) for s in starts]
    if threads <= 1 or len(jobs) == 1:
        return [fn(*j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda j: fn(*j), jobs))


# ---------------------------------------------------------------------------
# single games on the lattice


NodeStrategy = Callable[[np.ndarray], np.ndarray]


def greedy_strategies_from_value(u: ValueField) -> tuple[NodeStrategy, NodeStrategy]:
    """Move to the argmax (resp. argmin) of ``u`` over ``N(x)``.

    Ties go to the lexicographically smallest node since neighborhoods are
    stored in lexicographic offset order and ``argmax`` takes the first hit.
    """
    nb = u.domain.neighbors
    vals = u.values

    def smax(idx):
        idx = np.asarray(idx)
        return nb[idx, np.argmax(vals[nb[idx]], axis=-1)]

    def smin(idx):
        idx = np.asarray(idx)
        return nb[idx, np.argmin(vals[nb[idx]], axis=-1)]

    return smax, smin


@dataclass
class PathRecord:
    path_id: int
    steps: int
    outcome: str
    payoff: float


@dataclass
class MCReport:
    estimate: float
    stderr: float
    n_samples: int
    discarded_paths: int
    seed: int
    p_hit_diagonal: float | None = None
    paths: list[PathRecord] = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        out = {"estimate": self.estimate, "stderr": self.stderr, "n_samples": self.n_samples,
               "discarded_paths": self.discarded_paths, "seed": self.seed}
        if self.p_hit_diagonal is not None:
            out["p_hit_diagonal"] = self.p_hit_diagonal
        return out

    def paths_csv(self) -> str:
        rows = ["path_id,steps,outcome,payoff"]
        rows += [f"{r.path_id},{r.steps},{r.outcome},{r.payoff:.17g}" for r in self.paths]
        return "\n".join(rows) + "\n"


def _summarize(payoff, steps, outcome, seed, n_samples, strict, hit_label=None):
    done = outcome != "running"
    n_bad = int((~done).sum())
    if n_bad and (strict or n_bad == n_samples):
        raise NonTerminating(f"{n_bad} of {n_samples} paths hit the step cap")
    vals = payoff[done]
    est = float(vals.mean()) if vals.size else math.nan
    se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    recs = [PathRecord(i, int(steps[i]), str(outcome[i]), float(payoff[i]) if done[i] else math.nan)
            for i in range(n_samples)]
    rep = MCReport(est, se, int(vals.size), n_bad, int(seed), paths=recs)
    if hit_label is not None:
        rep.p_hit_diagonal = float(np.mean(outcome[done] == hit_label)) if vals.size else math.nan
    return rep


def simulate_game(x0, domain: GridDomain, params: GameParams, F,
                  strategy_max: NodeStrategy | None = None, strategy_min: NodeStrategy | None = None,
                  rng_seed: int = 0, n_samples: int = 10_000, *, step_cap: int | None = None,
                  threads: int = 1, strict: bool = False) -> MCReport:
    """Play the game from node ``x0`` and average the payoff at the exit node.

    Each round: with probability ``beta`` the token moves to a uniformly chosen
    node of ``N(x)``; otherwise a fair coin picks which player's strategy
    chooses the next node.  ``F`` is a callable on points or an array over all
    nodes (or strip nodes).  Paths reaching ``step_cap`` are discarded and
    counted; ``NonTerminating`` is raised if none finishes or ``strict`` is set.
    """
    if params.alpha > 0 and (strategy_max is None or strategy_min is None):
        raise ValueError("tug-of-war steps need both strategies")
    if params.beta == 0 and step_cap is None:
        raise ValueError("pure tug-of-war needs an explicit step_cap")
    step_cap = DEFAULT_STEP_CAP if step_cap is None else int(step_cap)
    start = int(x0) if np.ndim(x0) == 0 else domain.locate(x0)
    if start < 0 or start >= domain.n_interior:
        raise NotInterior(f"{x0!r} is not an interior node")
    ni = domain.n_interior
    if callable(F):
        fvals = np.full(domain.n_nodes, np.nan)
        fvals[ni:] = F(domain.strip_nodes)
    else:
        fa = np.asarray(F, dtype=float)
        fvals = fa if fa.shape == (domain.n_nodes,) else np.concatenate([np.full(ni, np.nan), fa])
    nb, K = domain.neighbors, domain.neighbors.shape[1]
    a, b = params.alpha, params.beta

    def init(state, slots):
        if state is None:
            return {"pos": np.full(slots, start, dtype=np.int64)}
        state["pos"][slots] = start

    def advance(state, U, G):
        cur = state["pos"]
        nxt = nb[cur, np.minimum((U[:, 1] * K).astype(np.int64), K - 1)]
        if a > 0:
            pick = U[:, 0] >= b
            up = pick & (U[:, 0] < b + 0.5 * a)
            down = pick & ~up
            if up.any():
                nxt[up] = strategy_max(cur[up])
            if down.any():
                nxt[down] = strategy_min(cur[down])
        state["pos"] = nxt
        return (nxt >= ni).astype(np.int8) * 2

    def run(first, count):
        return _run_paths(rng_seed, first, count, 0, init, advance,
                          lambda state, slots: fvals[state["pos"][slots]], step_cap)

    parts = _map_batches(run, n_samples, threads, BATCH)
    codes = np.concatenate([p[0] for p in parts])
    steps = np.concatenate([p[1] for p in parts])
    payoff = np.concatenate([p[2] for p in parts])
    outcome = np.array([c.value for c in _CODES])[codes]
    return _summarize(payoff, steps, outcome, rng_seed, n_samples, strict)


# ---------------------------------------------------------------------------
# coupled processes


@dataclass(frozen=True)
class CouplingRule:
    """How the y-noise step is built from the x-noise step ``h``."""

    kind: str
    Q: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("reflection", "identity", "orthogonal"):
            raise ValueError(f"unknown coupling {self.kind!r}")
        if self.kind == "orthogonal":
            Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
            if Q.shape[0] != Q.shape[1] or not np.allclose(Q.T @ Q, np.eye(Q.shape[0]), atol=1e-12):
                raise ValueError("Q must be an orthogonal matrix")
            object.__setattr__(self, "Q", Q)

    @classmethod
    def reflection(cls) -> CouplingRule:
        return cls("reflection")

    @classmethod
    def identity(cls) -> CouplingRule:
        return cls("identity")

    @classmethod
    def orthogonal(cls, Q) -> CouplingRule:
        return cls("orthogonal", np.asarray(Q, dtype=float))

    def apply(self, h: np.ndarray, x: np.ndarray, y: np.ndarray, diag_tol: float = 0.0) -> np.ndarray:
        """Image of steps ``h`` (rows) for states ``(x, y)`` (rows)."""
        h = np.atleast_2d(h)
        if self.kind == "identity":
            return h.copy()
        if self.kind == "orthogonal":
            if self.Q.shape[0] != h.shape[1]:
                raise DimensionMismatch("Q does not match the dimension")
            return h @ self.Q.T
        d = np.atleast_2d(x) - np.atleast_2d(y)
        r2 = np.einsum("ij,ij->i", d, d)
        if np.any(r2 <= max(diag_tol, 1e-150) ** 2):
            raise DegenerateReflection("reflection undefined on the diagonal band")
        # h - 2 <h, eta> eta with eta = d / |d|
        return h - (2 * np.einsum("ij,ij->i", h, d) / r2)[:, None] * d


@dataclass(frozen=True)
class StrategyPair:
    """Coupled player moves ``(x, y) -> (x', y')`` on batches of rows."""

    maximizer: Callable[[np.ndarray, np.ndarray, float], tuple[np.ndarray, np.ndarray]]
    minimizer: Callable[[np.ndarray, np.ndarray, float], tuple[np.ndarray, np.ndarray]]


_PULL = 1 - 1e-6


def _pull(sign: float):
    def move(x, y, eps):
        d = x - y
        eta = d / np.linalg.norm(d, axis=1, keepdims=True)
        s = sign * eps * _PULL
        return x + s * eta, y - s * eta
    return move


PULL_APART_TOGETHER = StrategyPair(_pull(+1.0), _pull(-1.0))


@dataclass
class CoupledState:
    x: np.ndarray
    y: np.ndarray
    steps: int = 0
    status: Status = Status.RUNNING

    @classmethod
    def start(cls, x0, y0, diag_tol: float, radius: float = 1.0) -> CoupledState:
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        y0 = np.atleast_1d(np.asarray(y0, dtype=float))
        if x0.shape != y0.shape:
            raise DimensionMismatch("x and y differ in dimension")
        return cls(x0, y0, 0, _CODES[_status(x0[None], y0[None], diag_tol, radius)[0]])


def _status(x, y, diag_tol, radius) -> np.ndarray:
    """Status codes (indices into ``_CODES``); the diagonal takes precedence."""
    d = x - y
    hit = np.einsum("ij,ij->i", d, d) <= diag_tol * diag_tol
    r2 = radius * radius
    out = (np.einsum("ij,ij->i", x, x) >= r2) | (np.einsum("ij,ij->i", y, y) >= r2)
    return np.where(hit, 1, np.where(out, 2, 0)).astype(np.int8)


def _coupled_move(x, y, U, G, rule, params, strategies, diag_tol):
    """One round for every row; player moves are computed for all rows and
    selected with masks, which is cheaper than fancy indexing at this size."""
    a, b, eps = params.alpha, params.beta, params.epsilon
    if b > 0:
        h = ball_step(eps, U[:, 1], G)
        xn, yn = x + h, y + rule.apply(h, x, y, diag_tol)
    if a == 0:
        return xn, yn
    xu, yu = strategies.maximizer(x, y, eps)
    xd, yd = strategies.minimizer(x, y, eps)
    up = (U[:, 0] < b + 0.5 * a)[:, None]
    xp, yp = np.where(up, xu, xd), np.where(up, yu, yd)
    if b == 0:
        return xp, yp
    noise = (U[:, 0] < b)[:, None]
    return np.where(noise, xn, xp), np.where(noise, yn, yp)


def coupled_step(s: CoupledState, rule: CouplingRule, params: GameParams,
                 strategy_pair: StrategyPair = PULL_APART_TOGETHER,
                 rng: np.random.Generator | None = None, *, diag_tol: float | None = None,
                 radius: float = 1.0, draws: tuple[np.ndarray, np.ndarray] | None = None) -> CoupledState:
    """One round of the coupled game.  ``draws = (U, G)`` overrides ``rng`` with
    explicit uniforms ``(2,)`` and normals ``(n,)``."""
    if s.status is not Status.RUNNING:
        raise ValueError("state is absorbed")
    diag_tol = 2 * params.epsilon if diag_tol is None else diag_tol
    if rule.kind == "reflection" and np.linalg.norm(s.x - s.y) <= diag_tol:
        raise DegenerateReflection("reflection undefined on the diagonal band")
    if draws is None:
        rng = np.random.default_rng() if rng is None else rng
        draws = (rng.random(2), rng.standard_normal(s.x.size))
    U, G = np.atleast_2d(draws[0]), np.atleast_2d(draws[1])
    x, y = _coupled_move(s.x[None], s.y[None], U, G, rule, params, strategy_pair, diag_tol)
    return CoupledState(x[0], y[0], s.steps + 1, _CODES[_status(x, y, diag_tol, radius)[0]])


def coupling_bound_estimate(x0, y0, rule: CouplingRule, params: GameParams, payoff_cap: float,
                            n_samples: int = 100_000, rng_seed: int = 0, *,
                            strategy_pair: StrategyPair = PULL_APART_TOGETHER,
                            diag_tol: float | None = None, radius: float = 1.0,
                            step_cap: int = DEFAULT_STEP_CAP, threads: int = 1,
                            strict: bool = False) -> MCReport:
    """Payoff 0 on reaching the diagonal band, ``payoff_cap`` on leaving ``B_radius``.

    Returns the mean payoff with its standard error and the fraction of
    finished paths that reached the diagonal first.
    """
    diag_tol = 2 * params.epsilon if diag_tol is None else float(diag_tol)
    s0 = CoupledState.start(x0, y0, diag_tol, radius)
    if np.linalg.norm(s0.x) >= radius or np.linalg.norm(s0.y) >= radius:
        raise ValueError("starting points must lie in the open ball")
    n = s0.x.size

    if s0.status is not Status.RUNNING:
        outcome = np.full(n_samples, s0.status.value)
        payoff = np.full(n_samples, 0.0 if s0.status is Status.HIT_DIAGONAL else float(payoff_cap))
        return _summarize(payoff, np.zeros(n_samples, dtype=np.int64), outcome, rng_seed,
                          n_samples, strict, hit_label=Status.HIT_DIAGONAL.value)

    def init(state, slots):
        if state is None:
            return {"x": np.tile(s0.x, (slots, 1)), "y": np.tile(s0.y, (slots, 1))}
        state["x"][slots], state["y"][slots] = s0.x, s0.y

    def advance(state, U, G):
        x, y = _coupled_move(state["x"], state["y"], U, G, rule, params, strategy_pair, diag_tol)
        state["x"], state["y"] = x, y
        return _status(x, y, diag_tol, radius)

    def run(first, count):
        return _run_paths(rng_seed, first, count, n, init, advance,
                          lambda state, slots: np.zeros(len(slots)), step_cap)

    parts = _map_batches(run, n_samples, threads, BATCH)
    codes = np.concatenate([p[0] for p in parts])
    steps = np.concatenate([p[1] for p in parts])
    outcome = np.array([c.value for c in _CODES])[codes]
    payoff = np.where(codes == 1, 0.0, np.where(codes == 2, float(payoff_cap), np.nan))
    return _summarize(payoff, steps, outcome, rng_seed, n_samples, strict,
                      hit_label=Status.HIT_DIAGONAL.value)


# ---------------------------------------------------------------------------
# oracle for the reflection-coupled random walk (p = 2, n in {1, 2})


def reflection_hit_probability(x0, y0, eps: float, *, spacing: float, diag_tol: float | None = None,
                               radius: float = 1.0) -> float:
    """Exact diagonal-hitting probability of a lattice version of the
    reflection-coupled random walk.

    Under reflection the half-distance ``s = |x-y|/2`` moves by ``<h, eta>``
    and the midpoint moves by the orthogonal part of ``h``, so in ``n <= 2``
    the pair reduces to a uniform ball walk in ``(s, m)`` (``s`` alone for
    ``n = 1``).  The walk is put on a lattice of the given spacing (so the
    answer carries an ``O(spacing)`` discretization error) and the absorption
    probabilities are solved exactly.
    """
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    from .geometry import ball_offsets

    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    n = x0.size
    if n not in (1, 2):
        raise DimensionMismatch("the reduced chain is implemented for n = 1 and n = 2")
    diag_tol = 2 * eps if diag_tol is None else diag_tol
    d = x0 - y0
    s0 = 0.5 * float(np.linalg.norm(d))
    if 2 * s0 <= diag_tol:
        return 1.0
    eta = d / (2 * s0)
    mid = 0.5 * (x0 + y0)
    c = float(mid @ eta)
    perp = np.array([-eta[1], eta[0]]) if n == 2 else np.zeros(0)
    m0 = float(mid @ perp) if n == 2 else 0.0

    h = spacing
    off = ball_offsets(n, eps / h)
    lo_s = int(math.floor((diag_tol / 2 - eps) / h)) - 1
    hi_s = int(math.ceil((radius + abs(c) + eps) / h)) + 1
    axes = [np.arange(lo_s, hi_s + 1)]
    if n == 2:
        mm = int(math.ceil((radius + eps) / h)) + 1
        axes.append(np.arange(-mm, mm + 1) + int(round(m0 / h)))
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    S = grid[:, 0] * h
    Mv = grid[:, 1] * h if n == 2 else np.zeros_like(S)
    hit = 2 * S <= diag_tol
    out = ((c + S) ** 2 + Mv**2 >= radius**2) | ((c - S) ** 2 + Mv**2 >= radius**2)
    inner = ~hit & ~out
    shape = tuple(a.size for a in axes)
    ids = -np.ones(grid.shape[0], dtype=np.int64)
    ids[inner] = np.arange(inner.sum())
    ids = ids.reshape(shape)
    sub = (grid[inner] - np.array([a[0] for a in axes]))
    nbr = sub[:, None, :] + off[None, :, :]
    flat_ok = np.all((nbr >= 0) & (nbr < np.array(shape)), axis=2)
    if not flat_ok.all():
        raise RuntimeError("lattice box too small for the reduced chain")
    nb_id = ids[tuple(nbr.transpose(2, 0, 1))]
    lin = np.ravel_multi_index(tuple(nbr.transpose(2, 0, 1)), shape)
    nb_hit = hit[lin]
    Ni, K = int(inner.sum()), off.shape[0]
    rows = np.repeat(np.arange(Ni), K).reshape(Ni, K)
    keep = nb_id >= 0
    P = sp.csr_matrix((np.full(keep.sum(), 1.0 / K), (rows[keep], nb_id[keep])), shape=(Ni, Ni))
    rhs = nb_hit.sum(axis=1) / K
    A = (sp.identity(Ni, format="csr") - P).tocsr()
    if Ni > 20000:
        import pyamg
        ml = pyamg.smoothed_aggregation_solver(A)
        sol = ml.solve(rhs, tol=1e-12, accel="cg", maxiter=500)
    else:
        sol = spla.spsolve(A.tocsc(), rhs)
    k0 = [int(round(s0 / h)) - lo_s]
    if n == 2:
        k0.append(int(round(m0 / h)) - axes[1][0])
    j = ids[tuple(k0)]
    if j < 0:
        raise RuntimeError("starting point is not an interior node of the reduced lattice")
    return float(sol[j])


def gamblers_ruin_probability(d0: float, eps: float, *, spacing: float, diag_tol: float,
                              upper: float) -> float:
    """Hitting probability of ``{d <= diag_tol}`` before ``{d >= upper}`` for a
    walk with increments uniform on the lattice points of ``(-2 eps, 2 eps)``.

    This is the pure one-dimensional view of the distance process (it ignores
    the moving midpoint), exact for ``n = 1`` with a centred pair.
    """
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    k = np.arange(-int(math.ceil(2 * eps / spacing)), int(math.ceil(2 * eps / spacing)) + 1)
    k = k[np.abs(k) * spacing < 2 * eps * (1 - 1e-12)]
    lo = int(math.floor(diag_tol / spacing))
    hi = int(math.ceil(upper / spacing))
    states = np.arange(lo + 1, hi)
    states = states[(states * spacing > diag_tol) & (states * spacing < upper)]
    idx = {int(s): i for i, s in enumerate(states)}
    N, K = states.size, k.size
    rows, cols, rhs = [], [], np.zeros(N)
    for i, s in enumerate(states):
        for kk in k:
            t = int(s + kk)
            if t * spacing <= diag_tol:
                rhs[i] += 1.0 / K
            elif t in idx:
                rows.append(i)
                cols.append(idx[t])
    P = sp.csr_matrix((np.full(len(rows), 1.0 / K), (rows, cols)), shape=(N, N))
    sol = spla.spsolve((sp.identity(N, format="csc") - P.tocsc()), rhs)
    j = int(round(d0 / spacing))
    return float(sol[idx[j]])
