"""Lattice domains, boundary strips and discrete epsilon-ball neighborhoods.

The lattice is ``spacing * Z^n`` (a node sits at the origin).  Nodes inside the
open domain are *interior*; nodes outside it but within ``epsilon`` of its
closure form the absorbing *strip* where payoffs are read.  Every interior node
gets the same set of lattice offsets ``k`` with ``|k| * spacing < epsilon``,
which is the discrete stand-in for the uniform measure on the open ball.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import BadExponent, DegenerateDomain, NotInterior, SpacingTooCoarse

# relative slack used when classifying nodes that sit exactly on a boundary
_GEOM_TOL = 1e-12


def alpha_beta(p: float, n: int) -> tuple[float, float]:
    """Weights of the tug-of-war and noise parts for ``2 < p < inf``."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if not (p > 2) or math.isinf(p):
        raise BadExponent(f"alpha_beta needs 2 < p < inf, got p={p}")
    return (p - 2) / (p + n), (n + 2) / (p + n)


@dataclass(frozen=True)
class GameParams:
    n: int
    p: float
    epsilon: float
    alpha: float
    beta: float

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if abs(self.alpha + self.beta - 1.0) > 1e-12 or self.alpha < 0 or self.beta < 0:
            raise ValueError(f"inconsistent weights alpha={self.alpha}, beta={self.beta}")
        if self.beta == 0 and not math.isinf(self.p):
            raise ValueError("beta = 0 is reserved for p = inf")

    @classmethod
    def from_p(cls, n: int, p: float, epsilon: float) -> GameParams:
        """p = 2 is the random walk, p = inf pure tug-of-war."""
        p = float(p)
        if p == 2:
            a, b = 0.0, 1.0
        elif math.isinf(p) and p > 0:
            a, b = 1.0, 0.0
        elif p > 2:
            a, b = alpha_beta(p, n)
        else:
            raise BadExponent(f"games are defined for p in [2, inf], got p={p}")
        return cls(n=n, p=p, epsilon=float(epsilon), alpha=a, beta=b)

    @property
    def is_infinity(self) -> bool:
        return math.isinf(self.p)


@dataclass(frozen=True)
class DomainSpec:
    """Analytic description of the open domain (ball or axis-aligned box)."""

    shape: str
    n: int
    size: float  # radius for balls, halfwidth for boxes
    epsilon: float
    spacing: float
    center: tuple[float, ...] = ()

    def __post_init__(self):
        if self.shape not in ("ball", "box"):
            raise ValueError(f"unknown domain shape {self.shape!r}")
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        if not self.center:
            object.__setattr__(self, "center", (0.0,) * self.n)
        if len(self.center) != self.n:
            raise ValueError("center has wrong dimension")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @classmethod
    def ball(cls, n, radius=1.0, *, epsilon, spacing, center=()):
        return cls("ball", n, float(radius), float(epsilon), float(spacing), tuple(center))

    @classmethod
    def box(cls, n, halfwidth, *, epsilon, spacing, center=()):
        return cls("box", n, float(halfwidth), float(epsilon), float(spacing), tuple(center))

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> DomainSpec:
        shape = d["shape"]
        size = d["radius"] if shape == "ball" else d["halfwidth"]
        return cls(shape, int(d["n"]), float(size), float(d["epsilon"]),
                   float(d["spacing"]), tuple(d.get("center", ())))

    def to_dict(self) -> dict[str, Any]:
        key = "radius" if self.shape == "ball" else "halfwidth"
        out = {"shape": self.shape, key: self.size, "n": self.n,
               "epsilon": self.epsilon, "spacing": self.spacing}
        if any(self.center):
            out["center"] = list(self.center)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> DomainSpec:
        return cls.from_dict(json.loads(text))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Membership in the open domain."""
        z = np.atleast_2d(pts) - np.asarray(self.center)
        slack = _GEOM_TOL * max(1.0, self.size)
        if self.shape == "ball":
            return np.linalg.norm(z, axis=1) < self.size - slack
        return np.all(np.abs(z) < self.size - slack, axis=1)

    def distance(self, pts: np.ndarray) -> np.ndarray:
        """Euclidean distance to the closed domain (zero inside)."""
        z = np.atleast_2d(pts) - np.asarray(self.center)
        if self.shape == "ball":
            return np.maximum(np.linalg.norm(z, axis=1) - self.size, 0.0)
        return np.linalg.norm(np.maximum(np.abs(z) - self.size, 0.0), axis=1)


def ball_offsets(n: int, ratio: float) -> np.ndarray:
    """Integer offsets ``k`` with ``|k| < ratio`` in lexicographic order.

    Ties ``|k| == ratio`` are excluded (open ball) even when ``ratio`` carries
    floating-point noise.
    """
    kmax = int(math.ceil(ratio))
    r2 = ratio * ratio * (1.0 - _GEOM_TOL)
    ax = np.arange(-kmax, kmax + 1)
    grid = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)
    keep = np.sum(grid.astype(np.int64) ** 2, axis=1) < r2
    return grid[keep]  # meshgrid with "ij" already enumerates lexicographically


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Immutable lattice discretization of a domain plus its epsilon-strip.

    ``nodes`` holds all retained lattice points (interior first, then strip,
    each block in lexicographic order).  ``neighbors[i]`` lists the node
    indices of the open epsilon-ball around interior node ``i``.
    """

    spec: DomainSpec
    nodes: np.ndarray
    n_interior: int
    offsets: np.ndarray
    neighbors: np.ndarray
    _lattice: np.ndarray = field(repr=False)
    _origin: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def spacing(self) -> float:
        return self.spec.spacing

    @property
    def epsilon(self) -> float:
        return self.spec.epsilon

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def interior_nodes(self) -> np.ndarray:
        return self.nodes[: self.n_interior]

    @property
    def strip_nodes(self) -> np.ndarray:
        return self.nodes[self.n_interior:]

    @property
    def interior_index(self) -> np.ndarray:
        return np.arange(self.n_interior)

    @property
    def strip_index(self) -> np.ndarray:
        return np.arange(self.n_interior, self.n_nodes)

    @property
    def weight(self) -> float:
        return 1.0 / self.offsets.shape[0]

    def is_interior(self, idx) -> np.ndarray:
        return np.asarray(idx) < self.n_interior

    def locate(self, x) -> int:
        """Index of the node at lattice point ``x`` (-1 if not retained)."""
        k = np.rint(np.asarray(x, dtype=float) / self.spacing).astype(np.int64)
        if k.shape != (self.n,):
            raise ValueError(f"expected a point in R^{self.n}")
        if not np.allclose(k * self.spacing, x, atol=1e-9 * max(1.0, self.spacing)):
            return -1
        j = k - self._origin
        if np.any(j < 0) or np.any(j >= self._lattice.shape):
            return -1
        return int(self._lattice[tuple(j)])


def build_grid(spec: DomainSpec) -> GridDomain:
    eps, h = spec.epsilon, spec.spacing
    if h <= 0 or eps <= 0:
        raise ValueError("spacing and epsilon must be positive")
    if h > eps / 4 * (1 + _GEOM_TOL):
        raise SpacingTooCoarse(f"spacing {h} exceeds epsilon/4 = {eps / 4}")
    min_size = 2 * eps if spec.shape == "ball" else eps
    if spec.size <= min_size:
        raise DegenerateDomain(f"{spec.shape} of size {spec.size} too small for epsilon={eps}")

    c = np.asarray(spec.center)
    lo = np.floor((c - spec.size - eps) / h).astype(np.int64) - 1
    hi = np.ceil((c + spec.size + eps) / h).astype(np.int64) + 1
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    k = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.n)
    pts = k * h
    inside = spec.contains(pts)
    strip = ~inside & (spec.distance(pts) <= eps * (1 + _GEOM_TOL))
    order = np.concatenate([np.flatnonzero(inside), np.flatnonzero(strip)])

    lattice = np.full(tuple(b - a + 1 for a, b in zip(lo, hi)), -1, dtype=np.int64)
    lattice.reshape(-1)[order] = np.arange(order.size)

    offsets = ball_offsets(spec.n, eps / h)
    n_int = int(inside.sum())
    kin = k[order[:n_int]] - lo
    nb = lattice[tuple((kin[:, None, :] + offsets[None, :, :]).transpose(2, 0, 1))]
    if n_int == 0:
        raise DegenerateDomain("domain contains no lattice nodes")
    if np.any(nb < 0):  # cannot happen for convex domains; guards the invariant
        raise DegenerateDomain("neighborhood leaves the retained node set")

    nodes = pts[order]
    for arr in (nodes, offsets, nb, lattice):
        arr.setflags(write=False)
    return GridDomain(spec=spec, nodes=nodes, n_interior=n_int, offsets=offsets,
                      neighbors=nb, _lattice=lattice, _origin=lo)


def ball_neighborhood(domain: GridDomain, x) -> tuple[np.ndarray, float]:
    """Node indices strictly inside ``B_eps(x)`` and their common weight.

    ``x`` may be a node index or a lattice point.
    """
    idx = int(x) if np.ndim(x) == 0 else domain.locate(x)
    if idx < 0:
        raise NotInterior(f"{x!r} is not a retained lattice node")
    if idx >= domain.n_interior:
        raise NotInterior(f"node {idx} lies in the boundary strip")
    return domain.neighbors[idx], domain.weight
