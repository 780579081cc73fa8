from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tugcoupling import payoffs
from tugcoupling.dpp import ValueField, dpp_solve
from tugcoupling.errors import BadExponent, CoincidentPoints, EmptyRegion, NoBracket
from tugcoupling.geometry import DomainSpec, GameParams, build_grid
from tugcoupling.matrixlab import ComparisonFn
from tugcoupling.regularity import (Region, calibrate_C, comparison_gap_search, holder_seminorm,
                                    ishii_lions_certificate, minimal_general_C, normalization_gap,
                                    random_walk_threshold)


@pytest.fixture(scope="module")
def disc():
    return build_grid(DomainSpec.ball(2, 1.0, epsilon=0.1, spacing=0.025))


def field_of(dom, fn):
    return ValueField(dom, np.asarray(fn(dom.nodes), dtype=float))


def brute_seminorm(pts, vals, delta):
    best = 0.0
    for i, j in itertools.combinations(range(len(pts)), 2):
        d = np.linalg.norm(pts[i] - pts[j])
        best = max(best, abs(vals[i] - vals[j]) / d**delta)
    return best


def test_coordinate_seminorm(disc):
    u = field_of(disc, payoffs.coordinate())
    rep = holder_seminorm(u, 0.5, Region.ball(0.25))
    assert rep.exact
    assert 0 < rep.seminorm <= math.sqrt(0.5)
    # the best pair sits on opposite ends of a horizontal diameter
    (x, y) = rep.pair
    assert abs(abs(x[0] - y[0]) - np.linalg.norm(np.subtract(x, y))) < 1e-12


def test_constant_seminorm(disc):
    u = ValueField(disc, np.full(disc.n_nodes, 3.0))
    assert holder_seminorm(u, 0.5, Region.ball(0.25)).seminorm == 0


def test_empty_region(disc):
    u = ValueField(disc, np.zeros(disc.n_nodes))
    with pytest.raises(EmptyRegion):
        holder_seminorm(u, 0.5, Region.ball(0.01, (0.0123, 0.0)))


def test_ramp_seminorm_brute_force():
    dom = build_grid(DomainSpec.box(1, 0.5, epsilon=0.1, spacing=0.025, center=(0.5,)))
    u = dpp_solve(dom, lambda z: (z[:, 0] > 0.5).astype(float), GameParams.from_p(1, 2, 0.1), tol=1e-11)
    region = Region.ball(0.5, (0.5,))
    idx = region.select(u)
    want = brute_seminorm(dom.nodes[idx], u.values[idx], 0.5)
    assert holder_seminorm(u, 0.5, region).seminorm == pytest.approx(want, rel=1e-13)


def test_sampled_scan_is_lower_bound(disc):
    u = field_of(disc, payoffs.saddle())
    full = holder_seminorm(u, 0.5, Region.ball(0.5))
    part = holder_seminorm(u, 0.5, Region.ball(0.5), pair_budget=20_000, seed=7)
    assert not part.exact and part.seminorm <= full.seminorm
    again = holder_seminorm(u, 0.5, Region.ball(0.5), pair_budget=20_000, seed=7)
    assert again.seminorm == part.seminorm


def test_gap_search_examples(disc):
    u = field_of(disc, payoffs.coordinate())
    region = Region.ball(0.25)
    s = holder_seminorm(u, 0.5, region).seminorm
    assert comparison_gap_search(u, ComparisonFn(s, 0.5), region).theta <= 0
    assert comparison_gap_search(u, ComparisonFn(2.0, 0.5, z0=(0.0, 0.0)), region).theta <= 0
    g = comparison_gap_search(u, ComparisonFn(0.0, 0.5), region)
    vals = u.values[region.select(u)]
    assert g.theta == pytest.approx(vals.max() - vals.min())
    assert g.x0[0] == pytest.approx(vals.max()) and g.y0[0] == pytest.approx(vals.min())


def test_gap_search_matches_brute_force():
    dom = build_grid(DomainSpec.ball(2, 1.0, epsilon=0.2, spacing=0.05))
    u = field_of(dom, payoffs.saddle())
    region = Region.ball(0.3)
    cf = ComparisonFn(0.4, 0.5, z0=(0.05, 0.0))
    idx = region.select(u)
    pts, vals = dom.nodes[idx], u.values[idx]
    want = max(vals[i] - vals[j] - float(cf(pts[i], pts[j])[0])
               for i in range(len(idx)) for j in range(len(idx)))
    assert comparison_gap_search(u, cf, region).theta == pytest.approx(want, rel=1e-12)


def test_calibrate_examples(disc):
    region = Region.ball(0.25)
    assert calibrate_C(ValueField(disc, np.ones(disc.n_nodes)), 0.5, region) == 0.0
    u = field_of(disc, payoffs.coordinate())
    assert calibrate_C(u, 1.0, region) == pytest.approx(1.0, rel=2e-6)
    # |x-y|^0.5 >= |x-y|^0.9 for distances <= 1, so the 0.5 ratio is the smaller one
    assert calibrate_C(u, 0.5, region) <= calibrate_C(u, 0.9, region)


def test_calibrate_no_bracket(disc):
    u = field_of(disc, payoffs.step())
    with pytest.raises(NoBracket):
        calibrate_C(u, 0.5, Region.ball(0.25), c_max=0.1)


def test_random_walk_threshold():
    C_star = 8 / (3 * 0.5 * 2**-1.5 * 0.5)
    assert random_walk_threshold(2, 0.5) == pytest.approx(C_star, rel=1e-14)
    above = ishii_lions_certificate(2, 2, C_star + 1, 0.5, [0.5, 0.0], [0.0, 0.0])
    below = ishii_lions_certificate(2, 2, C_star - 1, 0.5, [0.5, 0.0], [0.0, 0.0])
    assert above.passed and not below.passed
    assert above.info["C_min"] == pytest.approx(C_star, abs=1e-6 * C_star)


def test_t1_margin_equality():
    rep = ishii_lions_certificate(2, 4, 50.0, 0.5, [0.5, 0.0], [0.0, 0.0])
    chk = rep.check("T1_closed_vs_bound")
    assert abs(chk.margin) <= 1e-12 * max(1.0, abs(chk.bound))


@pytest.mark.parametrize("p", [1.5, 3.0, 10.0, math.inf])
def test_general_certificate(p):
    C = minimal_general_C(2, p, 0.5)
    assert math.isfinite(C)
    rep = ishii_lions_certificate(2, p, 1.01 * C, 0.5, [0.4, 0.1], [0.1, -0.1], z0=[0.0, 0.0])
    assert rep.passed, rep.as_dict()
    assert not ishii_lions_certificate(2, p, 0.99 * C, 0.5, [0.5, 0.0], [-0.5, 0.0]).passed


def test_certificate_errors():
    with pytest.raises(BadExponent):
        ishii_lions_certificate(2, 1.0, 1.0, 0.5, [0.5, 0.0], [0.0, 0.0])
    with pytest.raises(CoincidentPoints):
        ishii_lions_certificate(2, 3.0, 1.0, 0.5, [0.5, 0.0], [0.5, 0.0])


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.lists(st.floats(-10, 10), min_size=n, max_size=n),
    st.lists(st.floats(-10, 10), min_size=n, max_size=n))))
def test_normalization_lemma(ab):
    a, b = map(np.array, ab)
    if np.linalg.norm(a) < 1e-6 or np.linalg.norm(b) < 1e-6:
        return
    lhs, rhs = normalization_gap(a, b)
    assert lhs <= rhs * (1 + 1e-12) + 1e-15


@settings(max_examples=30, deadline=None)
@given(st.floats(1.1, 50), st.floats(0.05, 0.95), st.integers(1, 3))
def test_certificate_threshold_always_bracketed(p, delta, n):
    try:
        C = minimal_general_C(n, p, delta)
    except NoBracket:
        pytest.fail("no admissible C below C_max")
    assert 0 < C < 1e6
