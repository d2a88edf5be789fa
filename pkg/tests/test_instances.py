import math
from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pytest

import oracles
from epscongestion import atomic as A
from epscongestion import instances as I
from epscongestion import nonatomic as N
from epscongestion import atomic_solvers as S
from epscongestion.bounds import DomainError, atomic_poa_bound, nonatomic_poa_bound, nonatomic_pos_bound

GRID = [round(k / 10, 10) for k in range(31)]


# --- atomic PoA --------------------------------------------------------------


def test_atomic_ring_at_zero():
    b = I.atomic_poa_lb(0.0)
    assert b.metadata["gamma_exact"] == "1/1" and b.metadata["z"] == 1
    assert b.costs() == (15.0, 6.0)
    assert b.measured_ratio() == 2.5


def test_atomic_ring_at_one():
    b = I.atomic_poa_lb(1.0)
    assert b.metadata["z"] == 2 and b.metadata["players"] == 4
    assert b.metadata["expected_ratio_exact"] == "22/3"
    assert b.measured_ratio() == pytest.approx(22 / 3, abs=1e-12)


@pytest.mark.parametrize("eps", GRID)
def test_atomic_ring_tight_on_grid(eps):
    b = I.atomic_poa_lb(eps)
    assert b.measured_ratio() == pytest.approx(atomic_poa_bound(eps), abs=1e-9)
    assert b.measured_epsilon() == pytest.approx(eps, abs=1e-9)


@pytest.mark.parametrize("eps", [Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(5, 4), Fraction(2)])
def test_atomic_ring_exact_oracle(eps):
    # exact arithmetic on the same facilities with the exact gamma
    b = I.atomic_poa_lb(float(eps))
    z = b.metadata["z"]
    gamma = Fraction(b.metadata["gamma_exact"])
    facs = [SimpleNamespace(id=f.id, a=Fraction(1) if f.id < z + 2 else gamma, b=Fraction(0))
            for f in b.game.facilities]
    g = SimpleNamespace(facilities=facs, players=b.game.players)
    eq, opt = b.equilibrium.choices, b.optimum.choices
    assert oracles.epsilon_star(g, eq) == eps
    ratio = oracles.social(g, eq) / oracles.social(g, opt)
    assert ratio == Fraction(b.metadata["expected_ratio_exact"])


@pytest.mark.parametrize("eps", [1 / 3, 0.33333333333333337, 1.25, 1.2500000000000002])
def test_atomic_ring_at_z_boundaries(eps):
    b = I.atomic_poa_lb(eps)
    assert b.metadata["z_fallback"]
    assert b.measured_ratio() == pytest.approx(atomic_poa_bound(eps), rel=1e-9)


def test_atomic_ring_brute_force_worst():
    b = I.atomic_poa_lb(0.5)
    es = S.brute_force(b.game, 0.5)
    assert es.poa == pytest.approx(b.expected_ratio, rel=1e-12)


def test_tampered_gamma_rejected(monkeypatch):
    monkeypatch.setattr(I, "atomic_poa_gamma", lambda z, e: Fraction(11, 10))
    with pytest.raises(I.ConstructionError, match="atomic-poa"):
        I.atomic_poa_lb(0.0)


def test_negative_epsilon():
    for fn in (I.atomic_poa_lb, I.nonatomic_poa_lb, I.pigou, I.routing_poa_lb):
        with pytest.raises(DomainError):
            fn(-0.5)
    with pytest.raises(DomainError):
        I.atomic_poa_lb(math.nan)


# --- non-atomic PoA ----------------------------------------------------------


def test_nonatomic_ring_at_zero():
    b = I.nonatomic_poa_lb(0.0)
    assert b.metadata["gamma_exact"] == "2/1" and b.metadata["commodities"] == 3
    lat = N.strategy_latencies(b.game, b.equilibrium)
    assert all(l == pytest.approx(4.0) for ls in lat for l in ls)
    assert b.measured_ratio() == pytest.approx(4 / 3, abs=1e-12)


@pytest.mark.parametrize("eps,ratio", [(1.0, 4.0), (2.0, 9.0), (3.0, 16.0)])
def test_nonatomic_integral_fallback(eps, ratio):
    b = I.nonatomic_poa_lb(eps)
    assert b.measured_ratio() == pytest.approx(ratio, abs=1e-9)
    assert b.measured_ratio() == pytest.approx(nonatomic_poa_bound(eps), abs=1e-9)


@pytest.mark.parametrize("eps", [k / 10 for k in range(11)])
def test_nonatomic_small_regime_tight(eps):
    b = I.nonatomic_poa_lb(eps)
    assert b.metadata["regime"] == "small"
    assert b.measured_ratio() == pytest.approx(4 * (1 + eps) / (3 - eps), abs=1e-9)
    assert b.measured_epsilon() == pytest.approx(eps, abs=1e-9)


@pytest.mark.parametrize("eps", [1.25, 1.5])
def test_nonatomic_large_gap(eps):
    b = I.nonatomic_poa_lb(eps)
    z = math.floor(1 + eps)
    assert b.measured_ratio() == pytest.approx((1 + eps) * z * (z + 1) / (2 * z - eps), abs=1e-9)
    assert b.measured_ratio() < nonatomic_poa_bound(eps)
    assert 0 < b.metadata["gap_to_upper_bound"] < 1


@pytest.mark.parametrize("eps", [0.0, 0.5, 1.0])
def test_routing_matches_ring(eps):
    r, b = I.routing_poa_lb(eps), I.nonatomic_poa_lb(eps)
    assert r.measured_ratio() == pytest.approx(b.measured_ratio(), abs=1e-9)
    assert r.measured_epsilon() == pytest.approx(eps, abs=1e-9)
    assert r.metadata["network"]


def test_routing_rejects_large_epsilon():
    with pytest.raises(DomainError):
        I.routing_poa_lb(1.5)


# --- PoS ---------------------------------------------------------------------


@pytest.mark.parametrize("eps", [k / 10 for k in range(10)])
def test_pigou_tight(eps):
    b = I.pigou(eps)
    assert b.measured_ratio() == pytest.approx(4 / ((3 - eps) * (1 + eps)), abs=1e-9)
    assert b.measured_ratio() == pytest.approx(nonatomic_pos_bound(eps), abs=1e-9)


def test_pigou_values():
    assert I.pigou(0.0).measured_ratio() == pytest.approx(4 / 3, abs=1e-12)
    assert I.pigou(0.5).metadata["opt_cost_exact"] == "15/16"
    assert I.pigou(0.999).measured_ratio() == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(DomainError):
        I.pigou(1.0)


def test_dominant_costs_formula():
    n, lam = 4, 2
    alpha, beta = I.dominant_parameters(Fraction(1, 2), n, lam)
    b = I.atomic_pos_lb(0.5, n, lam, delta=0.0)
    g = b.game
    for k in range(n + 1):
        ca, cp = I.dominant_costs(alpha, beta, n, lam, k)
        choices = (0,) * k + (1,) * (n - k) + (0,) * lam
        costs = A.player_costs(g, A.Profile(choices))
        if k:
            assert costs[0] == pytest.approx(float(ca), rel=1e-12)
        if k < n:
            assert costs[n - 1] == pytest.approx(float(cp), rel=1e-12)


@pytest.mark.parametrize("eps,n,lam", [(0.0, 5, 3), (0.3, 7, 2), (0.9, 4, 0)])
def test_dominant_closed_form(eps, n, lam):
    assert I.dominant_ratio(eps, n, lam) == pytest.approx(I.dominant_ratio_closed_form(eps, n, lam), rel=1e-12)


def test_dominant_unique_equilibrium_small():
    b = I.atomic_pos_lb(0.0, 3, 1, 1e-6)
    es = S.brute_force(b.game, 0.0)
    assert es.equilibria == [b.equilibrium]
    assert b.measured_ratio() == pytest.approx(1.46153812, abs=1e-6)


def test_dominant_converges():
    target = 1 + math.sqrt(3) / 3
    gaps = [abs(I.atomic_pos_lb(0.0, n).measured_ratio() - target) for n in (100, 200, 400)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[1] / target <= 0.02


@pytest.mark.parametrize("n", [3, 5, 10])
def test_two_links(n):
    b = I.two_links(n, 0.5)
    assert b.measured_epsilon() == pytest.approx(1 - 1.5 / n, abs=1e-9)
    es = S.brute_force(b.game, 10.0)
    assert es.opt_cost == pytest.approx(b.metadata["opt_cost"])
    assert A.social_cost(b.game, b.optimum) == es.opt_cost


def test_two_links_errors():
    with pytest.raises(DomainError):
        I.two_links(1, 0.5)
    with pytest.raises(DomainError):
        I.two_links(3, 1.0)


def test_generate_dispatch():
    assert I.generate("atomic-poa", 0.0).family == "atomic-poa"
    assert I.generate("nonatomic-poa", 0.5, network=True).metadata["network"]
    assert I.generate("two-links", n=3).metadata["n"] == 3
    with pytest.raises(DomainError, match="unknown family"):
        I.generate("braess")


def test_validate_catches_wrong_target():
    b = I.pigou(0.2)
    b.expected_ratio += 1e-6
    with pytest.raises(I.ConstructionError, match="pigou"):
        b.validate()
