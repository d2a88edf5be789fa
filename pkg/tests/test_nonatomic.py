import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from epscongestion import nonatomic as N
from epscongestion.atomic import Facility, ValidationError
from epscongestion.instances import nonatomic_poa_lb, pigou, routing_poa_lb
from epscongestion.nonatomic import Commodity, Flow, NonatomicGame
from epscongestion.random_games import random_nonatomic_game


def pigou_game(eps):
    return pigou(eps).game


@st.composite
def game_and_flows(draw):
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    g = random_nonatomic_game(rng)
    return g, N.random_flow(g, rng), N.random_flow(g, rng), rng


def test_validation():
    with pytest.raises(ValidationError, match="rate"):
        NonatomicGame((Facility(0, 1, 0),), (Commodity(0.0, ((0,),)),))
    with pytest.raises(ValidationError, match="b="):
        NonatomicGame((Facility(0, 1, -1),), (Commodity(1.0, ((0,),)),))
    with pytest.raises(ValidationError, match="no strategies"):
        NonatomicGame((Facility(0, 1, 0),), (Commodity(1.0, ()),))


def test_infeasible_flow_names_commodity():
    g = pigou_game(0.0)
    with pytest.raises(ValidationError, match="commodity 0"):
        N.facility_flows(g, Flow(((0.5, 0.4),)))
    with pytest.raises(ValidationError, match="commodity 0"):
        N.facility_flows(g, Flow(((1.5, -0.5),)))


def test_pigou_values():
    eps = 0.4
    g = pigou_game(eps)
    lower = Flow(((1.0, 0.0),))
    assert N.facility_flows(g, lower) == {0: 1.0, 1: 0.0}
    assert N.strategy_latency(g, lower, 0, 0) == 1.0
    assert N.strategy_latency(g, lower, 0, 1) == pytest.approx(1 + eps)
    assert N.social_cost(g, lower) == 1.0
    x = (1 + eps) / 2
    assert N.social_cost(g, Flow(((x, 1 - x),))) == pytest.approx((1 + eps) * (3 - eps) / 4, abs=1e-15)
    assert N.flow_epsilon(g, lower).epsilon_star == 0.0
    assert N.social_cost(pigou_game(0.0), Flow(((0.5, 0.5),))) == 0.75


@pytest.mark.parametrize("x", [0.0, 0.3, 0.7, 1.0])
@pytest.mark.parametrize("eps", [0.0, 0.5, 0.9])
def test_pigou_potential_one_dimensional(x, eps):
    g = pigou_game(eps)
    assert N.potential(g, Flow(((x, 1 - x),)), eps) == pytest.approx(0.5 * x * x + (1 - x), abs=1e-15)


def test_single_strategy_commodity():
    g = NonatomicGame((Facility(0, 2, 1), Facility(1, 0, 3)), (Commodity(2.0, ((0, 1),)),))
    f = Flow(((2.0,),))
    assert N.facility_flows(g, f) == {0: 2.0, 1: 2.0}
    assert N.flow_epsilon(g, f).epsilon_star == 0.0
    # constant facility latency does not depend on flow
    assert N.strategy_latency(g, f, 0, 0) == 5.0 + 3.0


def test_zero_flow_potential_is_zero():
    g = NonatomicGame((Facility(0, 2, 1),), (Commodity(1.0, ((0,),)),))
    fe = g.incidence @ np.zeros(1)
    assert float(np.dot(0.5 * g.a * fe + g.b, fe)) == 0.0


def test_ring_instance_latencies_at_zero():
    b = nonatomic_poa_lb(0.0)
    lat = N.strategy_latencies(b.game, b.equilibrium)
    for used, alt in lat:
        assert alt == pytest.approx(4.0) and used == pytest.approx(4.0)
    n = N.facility_flows(b.game, b.equilibrium)
    m = b.metadata["commodities"]
    assert [n[i] for i in range(m)] == [2.0] * m


def test_ring_instance_epsilon_half():
    b = nonatomic_poa_lb(0.5)
    assert b.metadata["z"] == 1
    assert N.flow_epsilon(b.game, b.equilibrium).epsilon_star == pytest.approx(0.5, abs=1e-12)


def test_infinite_epsilon_when_min_latency_zero():
    g = NonatomicGame((Facility(0, 1, 0), Facility(1, 0, 0)), (Commodity(1.0, ((0,), (1,))),))
    assert math.isinf(N.flow_epsilon(g, Flow(((1.0, 0.0),))).epsilon_star)


def test_used_threshold_is_relative_to_rate():
    g = NonatomicGame((Facility(0, 0, 1), Facility(1, 0, 3)), (Commodity(1000.0, ((0,), (1,))),))
    dust = Flow(((1000.0 - 1e-7, 1e-7),))
    assert N.flow_epsilon(g, dust).epsilon_star == 0.0
    assert N.flow_epsilon(g, dust, used_threshold=0.0).epsilon_star == pytest.approx(2.0)


@settings(max_examples=150, deadline=None)
@given(game_and_flows())
def test_cost_identities_and_oracle(gf):
    g, f, _, _ = gf
    assert N.social_cost(g, f) == pytest.approx(N.path_social_cost(g, f), rel=1e-12, abs=1e-12)
    ref = oracles.path_costs(g, f.weights)
    got = N.strategy_latencies(g, f)
    for r, s in zip(ref, got):
        assert s == pytest.approx(r, rel=1e-12, abs=1e-12)
    want = oracles.flow_epsilon(g, f.weights)
    have = N.flow_epsilon(g, f).epsilon_star
    assert have == want or have == pytest.approx(want, rel=1e-10)


@settings(max_examples=150, deadline=None)
@given(game_and_flows(), st.floats(0, 1), st.floats(0, 3))
def test_potential_convex(gf, t, eps):
    g, f, h, _ = gf
    mix = Flow.from_vector(g, t * f.vector() + (1 - t) * h.vector())
    lhs = N.potential(g, mix, eps)
    rhs = t * N.potential(g, f, eps) + (1 - t) * N.potential(g, h, eps)
    assert lhs <= rhs + 1e-9


@settings(max_examples=100, deadline=None)
@given(game_and_flows(), st.floats(0, 2))
def test_identical_flows(gf, eps):
    g, f, _, _ = gf
    bmw = N.bmw_check(g, f, f, eps)
    assert bmw.holds and bmw.slack == pytest.approx(eps * N.social_cost(g, f), rel=1e-9, abs=1e-12)
    var = N.variational_check(g, f, f, eps)
    assert var.holds and var.slack == 0.0


def test_pigou_inequalities():
    g = pigou_game(0.0)
    lower = Flow(((1.0, 0.0),))
    opt = Flow(((0.5, 0.5),))
    bmw = N.bmw_check(g, lower, opt, 0.0)
    assert bmw.holds and bmw.lhs == 1.0 and bmw.rhs == pytest.approx(1.0)
    assert N.variational_check(g, lower, opt, 0.0).holds


@pytest.mark.parametrize("make", [lambda: nonatomic_poa_lb(0.0), lambda: nonatomic_poa_lb(0.7),
                                  lambda: routing_poa_lb(0.3), lambda: nonatomic_poa_lb(2.0)])
def test_bmw_on_designated_equilibria(make):
    b = make()
    eps = b.expected_epsilon
    res = N.bmw_check(b.game, b.equilibrium, b.optimum, eps)
    # the construction makes the inequality tight, so allow rounding
    assert res.holds and res.slack >= -1e-9


@settings(max_examples=50, deadline=None)
@given(game_and_flows(), st.floats(0.1, 10))
def test_scaled_rates(gf, s):
    g, f, _, _ = gf
    scaled = NonatomicGame(g.facilities, tuple(Commodity(c.rate * s, c.strategies) for c in g.commodities))
    fs = Flow(tuple(tuple(w * s for w in ws) for ws in f.weights))
    fe, fse = N.facility_flows(g, f), N.facility_flows(scaled, fs)
    for k in fe:
        assert fse[k] == pytest.approx(s * fe[k], rel=1e-9, abs=1e-12)
    c, cs = N.social_cost(g, f), N.social_cost(scaled, fs)
    lo, hi = sorted((s * c, s * s * c))
    assert lo - 1e-9 * max(1, hi) <= cs <= hi + 1e-9 * max(1, hi)
