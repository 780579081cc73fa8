from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tugcoupling.errors import BadExponent, DegenerateDomain, NotInterior, SpacingTooCoarse
from tugcoupling.geometry import (DomainSpec, GameParams, alpha_beta, ball_neighborhood,
                                  ball_offsets, build_grid)


@pytest.fixture(scope="module")
def disc():
    return build_grid(DomainSpec.ball(2, 1.0, epsilon=0.2, spacing=0.05))


def test_interval_classification():
    g = build_grid(DomainSpec.ball(1, 1.0, epsilon=0.2, spacing=0.05))
    inner = g.interior_nodes[:, 0]
    strip = g.strip_nodes[:, 0]
    assert np.all(np.abs(inner) < 1)
    assert inner.size == 39  # -0.95 .. 0.95
    assert np.all((np.abs(strip) >= 1 - 1e-12) & (np.abs(strip) <= 1.2 + 1e-12))
    assert strip.size == 10  # +-1.0 .. +-1.2


def test_disc_neighborhood_size(disc):
    K = disc.neighbors.shape[1]
    target = math.pi * 0.2**2 / 0.05**2
    assert abs(K - target) <= 0.2 * target


def test_coarse_spacing_rejected():
    with pytest.raises(SpacingTooCoarse):
        build_grid(DomainSpec.ball(2, 1.0, epsilon=0.2, spacing=0.1))


def test_degenerate_domain():
    with pytest.raises(DegenerateDomain):
        build_grid(DomainSpec.ball(2, 0.3, epsilon=0.2, spacing=0.05))


def test_one_dimensional_neighborhood():
    g = build_grid(DomainSpec.ball(1, 1.0, epsilon=0.2, spacing=0.05))
    idx, w = ball_neighborhood(g, [0.0])
    np.testing.assert_allclose(np.sort(g.nodes[idx, 0]), np.arange(-3, 4) * 0.05, atol=1e-12)
    assert w == pytest.approx(1 / 7)


def test_disc_count_matches_enumeration(disc):
    brute = sum(1 for i in range(-5, 6) for j in range(-5, 6) if i * i + j * j < 16)
    idx, w = ball_neighborhood(disc, [0.0, 0.0])
    assert idx.size == brute
    assert w == pytest.approx(1 / brute)


def test_strip_node_not_interior(disc):
    with pytest.raises(NotInterior):
        ball_neighborhood(disc, [1.1, 0.0])


def test_translation_invariance(disc):
    a, b = disc.locate([0.1, 0.0]), disc.locate([-0.2, 0.15])
    pa = disc.nodes[disc.neighbors[a]] - disc.nodes[a]
    pb = disc.nodes[disc.neighbors[b]] - disc.nodes[b]
    np.testing.assert_allclose(pa, pb, atol=1e-12)


def test_neighborhood_symmetry(disc):
    nb = disc.neighbors
    for i in range(0, disc.n_interior, 97):
        for j in nb[i]:
            if j < disc.n_interior:
                assert i in nb[j]


def test_invariants(disc):
    pts = disc.nodes
    d = np.linalg.norm(pts[disc.neighbors] - pts[: disc.n_interior, None, :], axis=-1)
    assert np.all(d < disc.epsilon)
    assert np.all(disc.spec.distance(disc.strip_nodes) <= disc.epsilon * (1 + 1e-12))
    assert not np.any(disc.spec.contains(disc.strip_nodes))


def test_excluded_exterior_nodes_far():
    spec = DomainSpec.ball(2, 1.0, epsilon=0.2, spacing=0.05)
    g = build_grid(spec)
    k = np.arange(-30, 31)
    pts = np.stack(np.meshgrid(k, k, indexing="ij"), -1).reshape(-1, 2) * 0.05
    kept = {tuple(np.rint(p / 0.05).astype(int)) for p in g.nodes}
    dropped = np.array([p for p in pts if tuple(np.rint(p / 0.05).astype(int)) not in kept])
    assert np.all(spec.distance(dropped) > 0.2)


def test_affine_mean_is_exact(disc):
    a, b = np.array([0.7, -1.3]), 0.4
    vals = disc.nodes @ a + b
    means = vals[disc.neighbors].mean(axis=1)
    np.testing.assert_allclose(means, vals[: disc.n_interior], atol=1e-13)


def test_quadratic_mean_converges():
    # discrete mean of |z|^2 minus the center value -> n eps^2 / (n+2)
    eps = 0.2
    errs = []
    for h in (0.05, 0.025, 0.0125):
        off = ball_offsets(2, eps / h) * h
        errs.append(abs(np.mean(np.sum(off**2, axis=1)) - 2 * eps**2 / 4))
    assert errs[-1] < errs[0]
    assert errs[-1] < 2e-3


def test_box_and_json_roundtrip():
    spec = DomainSpec.box(2, 0.5, epsilon=0.1, spacing=0.025, center=(0.5, 0.5))
    assert DomainSpec.from_json(spec.to_json()) == spec
    g = build_grid(spec)
    assert np.all(np.abs(g.interior_nodes - 0.5) < 0.5)


def test_alpha_beta_examples():
    assert alpha_beta(4, 2) == pytest.approx((1 / 3, 2 / 3))
    assert alpha_beta(10, 2) == pytest.approx((2 / 3, 1 / 3))
    a, b = alpha_beta(2 + 1e-9, 2)
    assert a == pytest.approx(0, abs=1e-9) and b == pytest.approx(1)
    for p in (2, 1.5, math.inf):
        with pytest.raises(BadExponent):
            alpha_beta(p, 2)


def test_game_params_endpoints():
    assert (GameParams.from_p(2, 2, 0.1).alpha, GameParams.from_p(2, 2, 0.1).beta) == (0.0, 1.0)
    inf = GameParams.from_p(2, math.inf, 0.1)
    assert (inf.alpha, inf.beta) == (1.0, 0.0)


@given(st.floats(2.001, 1e4), st.integers(1, 10))
def test_alpha_beta_partition(p, n):
    a, b = alpha_beta(p, n)
    assert abs(a + b - 1) < 1e-12
    assert 0 < a < 1 and 0 < b < 1


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.floats(1.5, 8.0))
def test_offsets_open_and_symmetric(n, ratio):
    off = ball_offsets(n, ratio)
    assert np.all(np.sum(off**2, axis=1) < ratio**2)
    assert {tuple(o) for o in off} == {tuple(-o) for o in off}
