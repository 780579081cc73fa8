from __future__ import annotations

import numpy as np
import pytest

from tugcoupling import payoffs
from tugcoupling.dpp import ValueField, dpp_solve
from tugcoupling.errors import DegenerateReflection, NonTerminating, NotInterior
from tugcoupling.geometry import DomainSpec, GameParams, build_grid
from tugcoupling.simulate import (CoupledState, CouplingRule, Status, coupled_step,
                                  coupling_bound_estimate, gamblers_ruin_probability,
                                  greedy_strategies_from_value, path_rng, reflection_hit_probability,
                                  simulate_game)


@pytest.fixture(scope="module")
def line():
    return build_grid(DomainSpec.box(1, 0.5, epsilon=0.1, spacing=0.025, center=(0.5,)))


@pytest.fixture(scope="module")
def disc():
    return build_grid(DomainSpec.ball(2, 1.0, epsilon=0.1, spacing=0.025))


def ramp_data(z):
    return (z[:, 0] > 0.5).astype(float)


def test_constant_payoff(disc):
    rep = simulate_game([0.3, -0.2], disc, GameParams.from_p(2, 2, 0.1), lambda z: np.full(len(z), 0.7),
                        rng_seed=4, n_samples=500)
    assert rep.estimate == 0.7 and rep.stderr == 0.0 and rep.discarded_paths == 0


def test_symmetric_exit(line):
    rep = simulate_game([0.5], line, GameParams.from_p(1, 2, 0.1), ramp_data, rng_seed=11,
                        n_samples=6000)
    assert abs(rep.estimate - 0.5) <= 3 * rep.stderr


def test_greedy_game_matches_dpp(disc):
    params = GameParams.from_p(2, 4, disc.epsilon)
    F = payoffs.saddle()
    u = dpp_solve(disc, F, params, tol=1e-10, method="policy")
    smax, smin = greedy_strategies_from_value(u)
    rep = simulate_game([0.25, 0.0], disc, params, F, smax, smin, rng_seed=5, n_samples=4000)
    assert abs(rep.estimate - u.at([0.25, 0.0])) <= 3 * rep.stderr + disc.epsilon


def test_not_interior(disc):
    with pytest.raises(NotInterior):
        simulate_game([1.05, 0.0], disc, GameParams.from_p(2, 2, 0.1), payoffs.coordinate())


def test_step_cap_discards(line):
    params = GameParams.from_p(1, 2, 0.1)
    rep = simulate_game([0.9], line, params, ramp_data, rng_seed=2, n_samples=400, step_cap=3)
    assert rep.discarded_paths > 0 and rep.n_samples + rep.discarded_paths == 400
    with pytest.raises(NonTerminating):
        simulate_game([0.9], line, params, ramp_data, rng_seed=2, n_samples=400, step_cap=3, strict=True)
    with pytest.raises(NonTerminating):
        simulate_game([0.5], line, params, ramp_data, rng_seed=2, n_samples=50, step_cap=1)


def test_greedy_examples(line, disc):
    u = ValueField(disc, disc.nodes[:, 0].copy())
    smax, smin = greedy_strategies_from_value(u)
    for i in (0, 100, 2000):
        j = smax(i)
        assert disc.nodes[j, 0] >= disc.nodes[disc.neighbors[i], 0].max()
        assert disc.nodes[smin(i), 0] <= disc.nodes[disc.neighbors[i], 0].min()
    c = ValueField(disc, np.zeros(disc.n_nodes))
    cmax, cmin = greedy_strategies_from_value(c)
    assert cmax(7) == disc.neighbors[7, 0] == cmin(7)
    ramp = dpp_solve(line, ramp_data, GameParams.from_p(1, 2, 0.1), tol=1e-11)
    rmax, _ = greedy_strategies_from_value(ramp)
    i = line.locate([0.5])
    assert line.nodes[rmax(i), 0] == pytest.approx(0.5 + 0.1 - 0.025)


def draws(n, t=0.3):
    # U[0] < beta = 1 selects the noise step; G fixes the direction, U[1] the radius
    return np.array([0.0, t]), np.eye(n)[-1]


def test_identity_step_keeps_difference():
    s = CoupledState.start([0.2, 0.1], [-0.1, 0.0], diag_tol=0.1)
    rng = np.random.default_rng(0)
    for _ in range(20):
        if s.status is not Status.RUNNING:
            break
        s2 = coupled_step(s, CouplingRule.identity(), GameParams.from_p(2, 2, 0.05), rng=rng)
        assert np.linalg.norm(s2.x - s2.y) == pytest.approx(np.linalg.norm(s.x - s.y), abs=1e-15)
        s = s2


def test_reflection_one_dimensional():
    s = CoupledState.start([0.2], [-0.2], diag_tol=0.1)
    s2 = coupled_step(s, CouplingRule.reflection(), GameParams.from_p(1, 2, 0.05),
                      draws=(np.array([0.0, 0.5]), np.array([1.0])))
    hx, hy = s2.x - s.x, s2.y - s.y
    np.testing.assert_allclose(hy, -hx)
    assert (s2.x - s2.y)[0] - 0.4 == pytest.approx(2 * hx[0])


def test_reflection_fixes_orthogonal_steps():
    s = CoupledState.start([0.2, 0.0], [-0.2, 0.0], diag_tol=0.1)
    s2 = coupled_step(s, CouplingRule.reflection(), GameParams.from_p(2, 2, 0.05), draws=draws(2))
    np.testing.assert_allclose(s2.x - s.x, s2.y - s.y)
    assert abs((s2.x - s.x)[0]) < 1e-15


def test_reflection_on_diagonal_raises():
    s = CoupledState(np.array([0.1, 0.0]), np.array([0.1, 0.0]))
    with pytest.raises(DegenerateReflection):
        coupled_step(s, CouplingRule.reflection(), GameParams.from_p(2, 2, 0.05), diag_tol=0.0)


def test_orthogonal_rule_is_isometry():
    th = 0.7
    Q = [[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]]
    h = np.random.default_rng(1).standard_normal((50, 2))
    for rule in (CouplingRule.orthogonal(Q), CouplingRule.reflection(), CouplingRule.identity()):
        x = np.tile([0.3, 0.1], (50, 1))
        y = np.tile([-0.2, 0.2], (50, 1))
        np.testing.assert_allclose(np.linalg.norm(rule.apply(h, x, y), axis=1), np.linalg.norm(h, axis=1))


def test_coincident_start():
    P = GameParams.from_p(2, 2, 0.05)
    rep = coupling_bound_estimate([0.1, 0.1], [0.1, 0.1], CouplingRule.reflection(), P, 1.0,
                                  n_samples=100)
    assert rep.estimate == 0 and rep.p_hit_diagonal == 1
    assert all(r.steps == 0 for r in rep.paths)


def test_identity_never_hits():
    P = GameParams.from_p(2, 2, 0.05)
    rep = coupling_bound_estimate([0.15, 0.0], [-0.15, 0.0], CouplingRule.identity(), P, 1.0,
                                  n_samples=300, rng_seed=3)
    assert rep.p_hit_diagonal == 0.0 and rep.estimate == 1.0


def test_one_dimensional_reflection_matches_ruin():
    eps = 0.05
    P = GameParams.from_p(1, 2, eps)
    rep = coupling_bound_estimate([0.15], [-0.15], CouplingRule.reflection(), P, 1.0,
                                  n_samples=20_000, rng_seed=1)
    # exit when |x| >= 1, i.e. d >= 2 for a centred pair; Richardson over the lattice spacing
    ruin = [gamblers_ruin_probability(0.3, eps, spacing=eps / k, diag_tol=2 * eps, upper=2.0)
            for k in (16, 32)]
    oracle = 2 * ruin[1] - ruin[0]
    se = np.sqrt(oracle * (1 - oracle) / rep.n_samples)
    assert abs(rep.p_hit_diagonal - oracle) <= 3 * se
    assert reflection_hit_probability([0.15], [-0.15], eps, spacing=eps / 32) == pytest.approx(ruin[0], abs=1e-12)


def test_seeded_determinism_and_threads(monkeypatch):
    from tugcoupling import simulate
    monkeypatch.setattr(simulate, "BATCH", 300)  # several batches, so threads actually split work
    P = GameParams.from_p(2, 4, 0.05)
    kw = dict(n_samples=2000, rng_seed=9)
    a = coupling_bound_estimate([0.2, 0.1], [-0.1, 0.0], CouplingRule.reflection(), P, 1.0, threads=1, **kw)
    b = coupling_bound_estimate([0.2, 0.1], [-0.1, 0.0], CouplingRule.reflection(), P, 1.0, threads=4, **kw)
    assert a.as_dict() == b.as_dict() and a.paths_csv() == b.paths_csv()


def test_path_streams_are_independent_of_order():
    a = path_rng(5, 3).standard_normal(10)
    path_rng(5, 2).standard_normal(100)
    np.testing.assert_array_equal(a, path_rng(5, 3).standard_normal(10))
    assert not np.array_equal(a, path_rng(5, 4).standard_normal(10))
