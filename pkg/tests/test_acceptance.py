"""The eleven acceptance criteria, each at its stated tolerance.

Every test prints its own pass/fail line and the terminal summary lists all
of them.  Checks call the library directly; exact oracles cross-check a
subsample where a full exact run would be slow.
"""

import math

import numpy as np
import pytest

import oracles
from epscongestion import atomic as A
from epscongestion import atomic_solvers as S
from epscongestion import bounds as B
from epscongestion import instances as I
from epscongestion import nonatomic as N
from epscongestion import nonatomic_solvers as NS
from epscongestion.random_games import DEFAULT_SEED, random_atomic_game, random_profile
from epscongestion.reproduce import grid, nonatomic_bundles

TARGET_POS = 1 + math.sqrt(3) / 3


def report(n, failures):
    print(f"criterion {n:2d}: {'pass' if not failures else 'FAIL'}"
          + ("" if not failures else f" ({len(failures)} failures, first {failures[0]})"))
    assert not failures


@pytest.fixture(scope="module")
def bundles():
    return nonatomic_bundles()


def test_criterion_01_atomic_poa_tightness(criterion):
    criterion(1, "atomic PoA tightness")
    bad = []
    for e in grid(0, 3, 0.1):
        b = I.atomic_poa_lb(e)
        if abs(b.measured_ratio() - B.atomic_poa_bound(e)) > 1e-9:
            bad.append(("ratio", e, b.measured_ratio()))
        if abs(b.measured_epsilon() - e) > 1e-9:
            bad.append(("epsilon", e, b.measured_epsilon()))
    if I.atomic_poa_lb(0.0).measured_ratio() != 2.5:
        bad.append(("eps=0 not 5/2",))
    report(1, bad)


def test_criterion_02_atomic_poa_ceiling(criterion):
    criterion(2, "atomic PoA upper bound over 1000 random games")
    rng = np.random.default_rng(DEFAULT_SEED)
    games = [random_atomic_game(rng, max_players=3, max_strategies=3, max_facilities=6, max_coef=3)
             for _ in range(1000)]
    bad = []
    for k, g in enumerate(games):
        table = S.profile_table(g)
        for e in (0.0, 0.25, 0.5, 1.0):
            poa = S.summarize(table, e).poa
            if poa > B.atomic_poa_bound(e) + 1e-9:
                bad.append((k, e, poa))
    # exact cross-check of the enumeration on a subsample
    for g in games[:50]:
        opt, eq = oracles.enumerate_equilibria(g, 0.5)
        if opt > 0 and float(max(c for _, c in eq) / opt) > B.atomic_poa_bound(0.5) + 1e-9:
            bad.append(("oracle", g))
    report(2, bad)


def test_criterion_03_nonatomic_poa(criterion):
    criterion(3, "non-atomic PoA tightness and large-epsilon gap")
    bad = []
    for e in grid(0, 1, 0.1):
        r = I.nonatomic_poa_lb(e).measured_ratio()
        if abs(r - 4 * (1 + e) / (3 - e)) > 1e-9:
            bad.append((e, r))
    for e in (1.0, 2.0, 3.0):
        r = I.nonatomic_poa_lb(e).measured_ratio()
        if abs(r - (1 + e) ** 2) > 1e-9:
            bad.append((e, r))
    for e in (1.25, 1.5):
        b = I.nonatomic_poa_lb(e)
        print(f"  eps={e}: ratio {b.measured_ratio():.6f} < bound {B.nonatomic_poa_bound(e):.6f}")
        if not b.measured_ratio() < B.nonatomic_poa_bound(e):
            bad.append(("gap", e))
    report(3, bad)


def test_criterion_04_atomic_potential_soundness(criterion):
    criterion(4, "atomic epsilon-potential descent soundness")
    rng = np.random.default_rng(DEFAULT_SEED)
    eps_grid = grid(0, 2, 0.05)
    bad = []
    for k in range(1000):
        g = random_atomic_game(rng)
        start = random_profile(g, rng)
        e = float(rng.choice(eps_grid))
        term, trace = S.potential_descent(g, start, e)
        if not trace.converged or A.profile_epsilon(g, term).epsilon_star > e + 1e-9:
            bad.append((k, e))
        elif k < 200 and float(oracles.epsilon_star(g, term.choices)) > e + 1e-9:
            bad.append(("oracle", k, e))
    report(4, bad)


def test_criterion_05_nonatomic_potential_soundness(criterion, bundles):
    criterion(5, "non-atomic epsilon-potential minimizer soundness")
    bad = []
    for b in bundles:
        for e in grid(0, 1, 0.1):
            res = NS.minimize(b.game, "potential", e, tol=1e-8)
            if not res.converged:
                bad.append(("unconverged", b.family, e))
            elif N.flow_epsilon(b.game, res.flow).epsilon_star > e + 1e-6:
                bad.append((b.family, b.metadata["epsilon"], e))
            elif float(oracles.flow_epsilon(b.game, res.flow.weights)) > e + 1e-6:
                bad.append(("oracle", b.family, e))
    report(5, bad)


def test_criterion_06_selfish_pos(criterion):
    criterion(6, "Pigou price of stability")
    bad = []
    for e in grid(0, 0.9, 0.1):
        want = 4 / ((3 - e) * (1 + e))
        b = I.pigou(e)
        if abs(b.measured_ratio() - want) > 1e-9:
            bad.append(("ratio", e))
        if abs(NS.pos_certificate(b.game, e).ratio - want) > 1e-6:
            bad.append(("certificate", e))
    if abs(I.pigou(0.0).measured_ratio() - 4 / 3) > 1e-9:
        bad.append(("4/3",))
    report(6, bad)


def test_criterion_07_atomic_pos_sandwich(criterion):
    criterion(7, "atomic PoS bounds")
    bad = []
    for e in grid(0, 1, 0.1):
        p = B.atomic_pos_bounds(e)
        if not p["lower"] <= p["upper"] <= 2 / (1 + e) + 1e-12:
            bad.append((e, p))
    p0 = B.atomic_pos_bounds(0.0)
    if abs(p0["lower"] - TARGET_POS) > 1e-9 or abs(p0["upper"] - TARGET_POS) > 1e-9:
        bad.append(("eps=0", p0))
    if B.atomic_pos_bounds(1.0)["upper"] != 1:
        bad.append(("eps=1",))
    report(7, bad)


def test_criterion_08_dominant_family(criterion):
    criterion(8, "dominant-strategy PoS family")
    bad = []
    b = I.atomic_pos_lb(0.0, 200, None, 1e-9)
    r = b.measured_ratio()
    print(f"  n=200 lambda={b.metadata['lambda']}: ratio {r:.6f}, target {TARGET_POS:.6f}")
    if abs(r - TARGET_POS) / TARGET_POS > 0.02:
        bad.append(("n=200", r))
    gaps = {n: abs(I.atomic_pos_lb(0.0, n, None, 1e-9).measured_ratio() - TARGET_POS) for n in (100, 400)}
    if not gaps[400] < gaps[100]:
        bad.append(("monotone", gaps))
    b3 = I.atomic_pos_lb(0.0, 3, 1, 1e-6)
    es = S.brute_force(b3.game, 0.0)
    if es.equilibria != [b3.equilibrium]:
        bad.append(("unique", es.equilibria))
    _, eq = oracles.enumerate_equilibria(b3.game, 0)
    if [p for p, _ in eq] != [b3.equilibrium.choices]:
        bad.append(("oracle unique", eq))
    report(8, bad)


def test_criterion_09_two_links(criterion):
    criterion(9, "two-links approximate optimum")
    bad = []
    for n in (3, 5, 10):
        b = I.two_links(n, 0.5)
        if abs(b.measured_epsilon() - (1 - 1.5 / n)) > 1e-9:
            bad.append(("epsilon", n, b.measured_epsilon()))
        costs = [I.two_links_cost(n, 0.5, k) for k in range(n + 1)]
        if A.social_cost(b.game, b.optimum) > min(costs) + 1e-9:
            bad.append(("k", n))
        if abs(S.brute_force(b.game, 1.0).opt_cost - A.social_cost(b.game, b.optimum)) > 1e-9:
            bad.append(("enumerated", n))
    report(9, bad)


def test_criterion_10_lemmas(criterion):
    criterion(10, "lemma suites")
    bad = []
    for z in range(1, 13):
        for a in range(41):
            for b in range(41):
                if not B.lemma_check("L3_1", alpha=a, beta=b, z=z):
                    bad.append(("L3_1", a, b, z))
    rng = np.random.default_rng(DEFAULT_SEED)
    n = 100_000
    al, be, lam = rng.uniform(-100, 100, n), rng.uniform(-100, 100, n), rng.uniform(1e-3, 50, n)
    for x, y, l in zip(al, be, lam):
        if not B.lemma_check("L4_1", alpha=float(x), beta=float(y), lam=float(l)):
            bad.append(("L4_1", x, y, l))
    for e in grid(0, 1, 0.05):
        for a in range(26):
            for b in range(26):
                if not B.lemma_check("L5_3", alpha=a, beta=b, epsilon=e):
                    bad.append(("L5_3", a, b, e))
    al, be, ep = rng.uniform(-100, 100, n), rng.uniform(-100, 100, n), rng.uniform(0, 1, n)
    for x, y, e in zip(al, be, ep):
        if not B.lemma_check("INEQ_POS", alpha=float(x), beta=float(y), epsilon=float(e)):
            bad.append(("INEQ_POS", x, y, e))
    report(10, bad)


def test_criterion_11_inequalities(criterion, bundles):
    criterion(11, "BMW and variational inequalities")
    rng = np.random.default_rng(DEFAULT_SEED)
    bad = []
    for b in bundles:
        e = float(b.metadata["epsilon"])
        minimizer = NS.minimize(b.game, "potential", e).flow
        for _ in range(100):
            alt = N.random_flow(b.game, rng)
            for name, flow in (("equilibrium", b.equilibrium), ("minimizer", minimizer)):
                if N.bmw_check(b.game, flow, alt, e).slack < -1e-6:
                    bad.append(("bmw", name, b.family, e))
                if name == "minimizer" and N.variational_check(b.game, flow, alt, e).slack < -1e-6:
                    bad.append(("variational", b.family, e))
    report(11, bad)
