"""Averaging rules for the uniform measure on a continuum ball ``B_eps(0)``.

Three rules share one signature, ``rule(n, eps, m) -> (points, weights)`` with
weights summing to one:

* ``spherical_rule``: tensor product in hyperspherical coordinates, Gauss-Legendre
  in the radius and polar angles, trapezoid in the azimuth.  Spectrally accurate
  for smooth integrands; exact for quadratics once ``m >= 2``.
* ``cartesian_rule``: midpoint cells of an ``m^n`` grid on the bounding cube,
  keeping cells whose centres lie in the open ball (first-order accurate).
* ``monte_carlo_rule``: seeded uniform samples.
"""

from __future__ import annotations

import numpy as np


def spherical_rule(n: int, eps: float, m: int = 64) -> tuple[np.ndarray, np.ndarray]:
    if n == 1:
        t, w = np.polynomial.legendre.leggauss(m)
        return (eps * t)[:, None], w / w.sum()

    t, wt = np.polynomial.legendre.leggauss(m)
    rho = 0.5 * eps * (t + 1.0)
    w_rho = wt * rho ** (n - 1)

    # polar angles phi_1..phi_{n-2} in [0, pi], weight sin^{n-1-k}(phi_k)
    phi = 0.5 * np.pi * (t + 1.0)
    polar = [(phi, wt * np.sin(phi) ** (n - 1 - k)) for k in range(1, n - 1)]
    theta = 2 * np.pi * np.arange(m) / m
    w_theta = np.full(m, 1.0 / m)

    axes = [rho] + [a for a, _ in polar] + [theta]
    wax = [w_rho] + [w for _, w in polar] + [w_theta]
    mesh = np.meshgrid(*axes, indexing="ij")
    wmesh = np.meshgrid(*wax, indexing="ij")
    weights = np.prod([w.ravel() for w in wmesh], axis=0)

    r = mesh[0].ravel()
    angles = [a.ravel() for a in mesh[1:]]
    pts = np.empty((r.size, n))
    sin_prod = np.ones_like(r)
    for k in range(n - 2):
        pts[:, k] = r * sin_prod * np.cos(angles[k])
        sin_prod = sin_prod * np.sin(angles[k])
    pts[:, n - 2] = r * sin_prod * np.cos(angles[-1])
    pts[:, n - 1] = r * sin_prod * np.sin(angles[-1])
    return pts, weights / weights.sum()


def cartesian_rule(n: int, eps: float, m: int = 128) -> tuple[np.ndarray, np.ndarray]:
    c = eps * ((np.arange(m) + 0.5) * 2.0 / m - 1.0)
    pts = np.stack(np.meshgrid(*([c] * n), indexing="ij"), axis=-1).reshape(-1, n)
    pts = pts[np.sum(pts**2, axis=1) < eps * eps]
    return pts, np.full(pts.shape[0], 1.0 / pts.shape[0])


def sample_ball(rng: np.random.Generator, n: int, eps: float, size: int) -> np.ndarray:
    g = rng.standard_normal((size, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * (eps * rng.random(size) ** (1.0 / n))[:, None]


def monte_carlo_rule(n: int, eps: float, m: int = 100_000, seed: int = 0):
    pts = sample_ball(np.random.default_rng(seed), n, eps, m)
    return pts, np.full(m, 1.0 / m)


RULES = {"spherical": spherical_rule, "cartesian": cartesian_rule, "mc": monte_carlo_rule}


def ball_average(fn, center, eps: float, rule: str = "spherical", m: int = 64, **kw) -> float:
    """Average of ``fn`` over ``B_eps(center)``; ``fn`` maps ``(k, n)`` points to ``(k,)``."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    pts, w = RULES[rule](center.size, eps, m, **kw)
    return float(w @ fn(center + pts))
