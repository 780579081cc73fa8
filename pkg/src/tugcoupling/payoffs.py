"""Built-in payoff functions.  Each maps an ``(k, n)`` array of points to ``(k,)``."""

from __future__ import annotations

import json
import math
from typing import Callable

import numpy as np

Payoff = Callable[[np.ndarray], np.ndarray]


def coordinate(axis: int = 0, scale: float = 1.0, shift: float = 0.0) -> Payoff:
    return lambda z: scale * np.atleast_2d(z)[:, axis] + shift


def quadratic() -> Payoff:
    return lambda z: np.sum(np.atleast_2d(z) ** 2, axis=1)


def radial_pharmonic(p: float, n: int) -> Payoff:
    """``|z|^((p-n)/(p-1))``, a radial solution of the normalized p-Laplacian off 0."""
    k = (p - n) / (p - 1) if not math.isinf(p) else 1.0
    return lambda z: np.linalg.norm(np.atleast_2d(z), axis=1) ** k


def step(axis: int = 0, threshold: float = 0.0) -> Payoff:
    """1 beyond ``threshold`` along ``axis``, 0 elsewhere."""
    return lambda z: (np.atleast_2d(z)[:, axis] > threshold).astype(float)


def saddle(slope: float = 0.5) -> Payoff:
    """``z1^2 - z2^2 + slope*z1``: Lipschitz on bounded sets, harmonic plus a tilt."""
    def f(z):
        z = np.atleast_2d(z)
        out = slope * z[:, 0] + z[:, 0] ** 2
        if z.shape[1] > 1:
            out = out - z[:, 1] ** 2
        return out
    return f


def from_spec(spec: dict, *, p: float, n: int) -> Payoff | np.ndarray:
    """Build a payoff from a config entry ``{"name": ..., **kwargs}``.

    ``custom_table`` returns an array of strip values instead of a function;
    it accepts either ``values`` inline or a JSON ``path``.
    """
    name = spec["name"]
    kw = {k: v for k, v in spec.items() if k != "name"}
    if name == "coordinate":
        return coordinate(**kw)
    if name == "quadratic":
        return quadratic()
    if name == "radial_pharmonic":
        return radial_pharmonic(kw.get("p", p), kw.get("n", n))
    if name == "step":
        return step(**kw)
    if name == "saddle":
        return saddle(**kw)
    if name == "custom_table":
        if "values" in kw:
            return np.asarray(kw["values"], dtype=float)
        with open(kw["path"]) as fh:
            return np.asarray(json.load(fh)["values"], dtype=float)
    raise KeyError(f"unknown payoff {name!r}")


BUILTIN_NAMES = ("coordinate", "quadratic", "radial_pharmonic", "step", "saddle", "custom_table")
