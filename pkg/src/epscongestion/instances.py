"""Generators for the tight lower-bound instances.

Every generator returns an :class:`InstanceBundle` holding the game, a
designated equilibrium and optimum, and the epsilon and cost ratio they are
built to realize.  Bundles are checked on construction; a generator whose
output misses its own targets raises :class:`ConstructionError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from . import atomic, nonatomic
from .atomic import AtomicGame, Facility, Profile
from .bounds import DomainError, z_of_epsilon
from .network import CommoditySpec, Edge, Graph, expand
from .nonatomic import Commodity, Flow, NonatomicGame

BUNDLE_TOL = 1e-9
FAMILIES = ("atomic-poa", "nonatomic-poa", "pigou", "atomic-pos", "two-links")


class ConstructionError(RuntimeError):
    pass


@dataclass
class InstanceBundle:
    family: str
    game: Union[AtomicGame, NonatomicGame]
    equilibrium: Union[Profile, Flow]
    optimum: Union[Profile, Flow]
    expected_epsilon: float
    expected_ratio: float
    metadata: dict = field(default_factory=dict)

    @property
    def atomic(self) -> bool:
        return isinstance(self.game, AtomicGame)

    def measured_epsilon(self) -> float:
        if self.atomic:
            return atomic.profile_epsilon(self.game, self.equilibrium).epsilon_star
        return nonatomic.flow_epsilon(self.game, self.equilibrium).epsilon_star

    def costs(self) -> tuple:
        mod = atomic if self.atomic else nonatomic
        return mod.social_cost(self.game, self.equilibrium), mod.social_cost(self.game, self.optimum)

    def measured_ratio(self) -> float:
        eq, opt = self.costs()
        return eq / opt

    def validate(self, tol: float = BUNDLE_TOL) -> "InstanceBundle":
        eps = self.measured_epsilon()
        if not abs(eps - self.expected_epsilon) <= tol * max(1.0, abs(self.expected_epsilon)):
            raise ConstructionError(
                f"{self.family}: equilibrium epsilon {eps!r} != expected {self.expected_epsilon!r}"
            )
        ratio = self.measured_ratio()
        if not abs(ratio - self.expected_ratio) <= tol * max(1.0, abs(self.expected_ratio)):
            raise ConstructionError(
                f"{self.family}: cost ratio {ratio!r} != expected {self.expected_ratio!r}"
            )
        return self


def _exact(x) -> Fraction:
    # decimal literals such as 0.1 become 1/10 rather than the binary float value
    return Fraction(repr(float(x))) if not isinstance(x, Fraction) else x


def _frac_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _check_eps(epsilon) -> float:
    epsilon = float(epsilon)
    if not (epsilon >= 0 and math.isfinite(epsilon)):
        raise DomainError(f"epsilon must be a finite real >= 0, got {epsilon}")
    return epsilon


def _ring_instance(z: int, gamma: float, beta_constant: bool, window: int = None):
    """Facilities and the two strategies per player of the cyclic construction.

    ``z + 2`` players; alpha facilities ``0..z+1`` with latency ``x``; beta
    facilities ``z+2..2z+3`` with latency ``gamma * x`` (or constant ``gamma``
    when ``beta_constant``).  Strategy 0 is ``{alpha_i, beta_i}``; strategy 1
    is every alpha but ``alpha_i`` plus the ``window`` (default ``z``) betas
    following ``beta_i``.
    """
    m = z + 2
    if window is None:
        window = z
    facilities = [Facility(i, 1.0, 0.0) for i in range(m)]
    if beta_constant:
        facilities += [Facility(m + i, 0.0, gamma) for i in range(m)]
    else:
        facilities += [Facility(m + i, gamma, 0.0) for i in range(m)]
    strategies = []
    for i in range(m):
        s1 = (i, m + i)
        s2 = tuple(j for j in range(m) if j != i) + tuple(
            m + (i + 1 + k) % m for k in range(window)
        )
        strategies.append((s1, s2))
    return facilities, strategies


def atomic_poa_gamma(z: int, epsilon) -> Fraction:
    e = _exact(epsilon)
    return (Fraction((z + 1) ** 2) - (1 + e) * (z + 2)) / ((1 + e) * (z + 1) - z * z)


def atomic_poa_lb(epsilon: float) -> InstanceBundle:
    """Atomic PoA lower bound: ``z+2`` players, ``2z+4`` facilities.

    Everyone on strategy 1 is an epsilon-Nash profile with deviation ratio
    exactly ``1 + epsilon``; everyone on strategy 0 is optimal.  When
    ``epsilon`` sits on a z boundary the gamma denominator vanishes and the
    instance for ``z - 1`` (same ratio) is built instead.
    """
    epsilon = _check_eps(epsilon)
    e = _exact(epsilon)
    z = z_of_epsilon(epsilon)
    fallback = False
    denom = (1 + e) * (z + 1) - z * z
    if denom <= 0 or float(denom) <= 1e-12:
        z -= 1
        fallback = True
        denom = (1 + e) * (z + 1) - z * z
        if z < 1 or denom <= 0:
            raise ConstructionError(f"no admissible z at epsilon={epsilon}")
    gamma_q = atomic_poa_gamma(z, e)
    if fallback and abs(gamma_q) <= Fraction(1, 10**12):
        # epsilon a hair above the boundary: the adjacent instance has gamma exactly 0
        gamma_q = Fraction(0)
    if gamma_q < 0:
        raise ConstructionError(f"negative gamma {gamma_q} at epsilon={epsilon}")
    gamma = float(gamma_q)
    facilities, strategies = _ring_instance(z, gamma, beta_constant=False)
    game = AtomicGame(tuple(facilities), tuple(strategies))
    m = z + 2
    ratio_q = (1 + e) * (z * z + 3 * z + 1) / (2 * z - e)
    bundle = InstanceBundle(
        family="atomic-poa",
        game=game,
        equilibrium=Profile((1,) * m),
        optimum=Profile((0,) * m),
        expected_epsilon=epsilon,
        expected_ratio=float(ratio_q),
        metadata={
            "epsilon": epsilon,
            "z": z,
            "z_fallback": fallback,
            "gamma": gamma,
            "gamma_exact": _frac_str(gamma_q),
            "expected_ratio_exact": _frac_str(ratio_q),
            "players": m,
            "facilities": 2 * m,
        },
    )
    return bundle.validate()


def nonatomic_poa_gamma(z: int, epsilon) -> Fraction:
    e = _exact(epsilon)
    return (Fraction((z + 1) ** 2) - (1 + e) * (z + 1)) / ((1 + e) * z - z * z)


def nonatomic_poa_lb(epsilon: float) -> InstanceBundle:
    """Non-atomic PoA lower bound with unit-rate commodities.

    For ``epsilon <= 1``: three commodities, alpha facilities with latency
    ``x`` and beta facilities with constant latency ``2(1-eps)/(1+eps)``.
    For ``epsilon > 1``: ``z + 2`` commodities with ``z = floor(1 + eps)``
    and beta latency ``gamma * x``; at integral ``1 + eps`` the construction
    for ``z - 1`` is used (gamma 0, ratio ``(1+eps)^2``).
    """
    epsilon = _check_eps(epsilon)
    e = _exact(epsilon)
    meta = {"epsilon": epsilon}
    if e <= 1:
        z = 1
        gamma_q = 2 * (1 - e) / (1 + e)
        ratio_q = 4 * (1 + e) / (3 - e)
        beta_constant, window = True, 0
        meta["regime"] = "small"
    else:
        z = math.floor(1 + e)
        fallback = (1 + e) == z
        if fallback:
            z -= 1
        gamma_q = nonatomic_poa_gamma(z, e)
        ratio_q = (1 + e) * z * (z + 1) / (2 * z - e) if not fallback else (1 + e) ** 2
        beta_constant, window = False, z
        meta.update(regime="large", z_fallback=fallback)
    gamma = float(gamma_q)
    facilities, strategies = _ring_instance(z, gamma, beta_constant, window)
    game = NonatomicGame(
        tuple(facilities), tuple(Commodity(1.0, s) for s in strategies)
    )
    m = z + 2
    meta.update(
        z=z,
        gamma=gamma,
        gamma_exact=_frac_str(gamma_q),
        expected_ratio_exact=_frac_str(ratio_q),
        commodities=m,
    )
    if meta["regime"] == "large":
        meta["upper_bound"] = (1.0 + epsilon) ** 2
        meta["gap_to_upper_bound"] = float(ratio_q) / (1.0 + epsilon) ** 2
    bundle = InstanceBundle(
        family="nonatomic-poa",
        game=game,
        equilibrium=nonatomic.vertex_flow(game, [1] * m),
        optimum=nonatomic.vertex_flow(game, [0] * m),
        expected_epsilon=epsilon,
        expected_ratio=float(ratio_q),
        metadata=meta,
    )
    return bundle.validate()


def routing_graph(gamma: float) -> Graph:
    """Three-commodity routing network realizing the small-epsilon PoA instance.

    Row ``r`` has source ``r``, sink ``r'`` and middle nodes ``u_r -> v_r``
    joined by a latency-``x`` edge; ``v_r -> r'`` has constant latency
    ``gamma``.  Zero-latency connectors ``r -> u_{r+1}``, ``v_{r+1} -> u_{r+2}``
    and ``v_{r+2} -> r'`` route commodity ``r`` through the other two
    latency-``x`` edges.
    """
    rows = (1, 2, 3)
    nodes = [str(r) for r in rows] + [f"u{r}" for r in rows] + [f"v{r}" for r in rows] + [
        f"{r}'" for r in rows
    ]
    nxt = lambda r, k: (r - 1 + k) % 3 + 1  # noqa: E731
    edges = []
    for r in rows:
        edges.append(dict(tail=f"u{r}", head=f"v{r}", a=1.0, b=0.0))
    for r in rows:
        edges.append(dict(tail=f"v{r}", head=f"{r}'", a=0.0, b=gamma))
    for r in rows:
        edges += [
            dict(tail=str(r), head=f"u{r}", a=0.0, b=0.0),
            dict(tail=str(r), head=f"u{nxt(r, 1)}", a=0.0, b=0.0),
            dict(tail=f"v{nxt(r, 1)}", head=f"u{nxt(r, 2)}", a=0.0, b=0.0),
            dict(tail=f"v{nxt(r, 2)}", head=f"{r}'", a=0.0, b=0.0),
        ]
    return Graph(tuple(nodes), tuple(Edge(id=k, **e) for k, e in enumerate(edges)))


def routing_poa_lb(epsilon: float) -> InstanceBundle:
    """Network version of :func:`nonatomic_poa_lb` for ``epsilon <= 1``.

    The game is the path expansion of :func:`routing_graph`; besides the two
    designated paths per commodity it contains incidental simple paths,
    which carry no flow in either designated flow.
    """
    epsilon = _check_eps(epsilon)
    if epsilon > 1:
        raise DomainError("the routing network is tight only for epsilon <= 1")
    e = _exact(epsilon)
    gamma_q = 2 * (1 - e) / (1 + e)
    ratio_q = 4 * (1 + e) / (3 - e)
    graph = routing_graph(float(gamma_q))
    commodities = [CommoditySpec(str(r), f"{r}'", 1.0) for r in (1, 2, 3)]
    game = expand(graph, commodities)
    edge = {(ed.tail, ed.head): ed.id for ed in graph.edges}
    nxt = lambda r, k: (r - 1 + k) % 3 + 1  # noqa: E731
    eq_choice, opt_choice = [], []
    for k, r in enumerate((1, 2, 3)):
        direct = tuple(sorted((edge[(str(r), f"u{r}")], edge[(f"u{r}", f"v{r}")], edge[(f"v{r}", f"{r}'")])))
        p, q = nxt(r, 1), nxt(r, 2)
        detour = tuple(
            sorted(
                (
                    edge[(str(r), f"u{p}")],
                    edge[(f"u{p}", f"v{p}")],
                    edge[(f"v{p}", f"u{q}")],
                    edge[(f"u{q}", f"v{q}")],
                    edge[(f"v{q}", f"{r}'")],
                )
            )
        )
        strategies = game.commodities[k].strategies
        if direct not in strategies or detour not in strategies:
            raise ConstructionError(f"designated paths missing for commodity {r}")
        opt_choice.append(strategies.index(direct))
        eq_choice.append(strategies.index(detour))
    bundle = InstanceBundle(
        family="nonatomic-poa",
        game=game,
        equilibrium=nonatomic.vertex_flow(game, eq_choice),
        optimum=nonatomic.vertex_flow(game, opt_choice),
        expected_epsilon=epsilon,
        expected_ratio=float(ratio_q),
        metadata={
            "epsilon": epsilon,
            "regime": "small",
            "network": True,
            "gamma": float(gamma_q),
            "gamma_exact": _frac_str(gamma_q),
            "expected_ratio_exact": _frac_str(ratio_q),
            "paths_per_commodity": [len(c.strategies) for c in game.commodities],
            "graph": graph,
            "commodity_specs": commodities,
        },
    )
    return bundle.validate()


def pigou(epsilon: float, grid: int = 1000) -> InstanceBundle:
    """Pigou network with constant edge ``1 + eps`` and linear edge ``x``, unit rate.

    Strategy 0 is the linear (lower) edge.  All flow on it is a 0-Wardrop
    flow; the optimum routes ``(1+eps)/2`` there.  The generator also checks
    on a grid that every flow with mass on the constant edge fails the
    epsilon-Wardrop test.
    """
    epsilon = _check_eps(epsilon)
    if epsilon >= 1:
        raise DomainError("pigou needs epsilon < 1; at epsilon >= 1 the price of stability is 1")
    e = _exact(epsilon)
    game = NonatomicGame(
        (Facility(0, 1.0, 0.0), Facility(1, 0.0, 1.0 + epsilon)),
        (Commodity(1.0, ((0,), (1,))),),
    )
    x = (1 + e) / 2
    ratio_q = 4 / ((3 - e) * (1 + e))
    uniqueness_violations = []
    for k in range(1, grid + 1):
        upper = k / grid
        rep = nonatomic.flow_epsilon(game, Flow(((1.0 - upper, upper),)))
        if rep.epsilon_star <= epsilon + BUNDLE_TOL:
            uniqueness_violations.append(upper)
    if uniqueness_violations:
        raise ConstructionError(
            f"pigou: flows with upper mass {uniqueness_violations[:3]} are epsilon-Wardrop"
        )
    bundle = InstanceBundle(
        family="pigou",
        game=game,
        equilibrium=Flow(((1.0, 0.0),)),
        optimum=Flow(((float(x), float(1 - x)),)),
        expected_epsilon=0.0,
        expected_ratio=float(ratio_q),
        metadata={
            "epsilon": epsilon,
            "opt_lower_share_exact": _frac_str(x),
            "opt_cost_exact": _frac_str((1 + e) * (3 - e) / 4),
            "expected_ratio_exact": _frac_str(ratio_q),
            "unique_wardrop_grid": grid,
        },
    )
    return bundle.validate()


def dominant_parameters(epsilon, n: int, lam: int, delta=0):
    """``(alpha, beta)`` making the A-profile a (1+eps)-dominant outcome (strict for delta > 0)."""
    e = _exact(epsilon)
    beta = (1 + e) / (2 + e)
    alpha = (1 + e) * (2 * n * e - e + e * lam + n + 2 * lam + 1) / (2 + e) + _exact(delta)
    return alpha, beta


def dominant_costs(alpha, beta, n: int, lam: int, k: int):
    """Per-player costs at the profile with ``k`` players on A: ``(cost_A(k), cost_P(k))``."""
    return (2 * n - k - 1) * beta + (lam + k), alpha + (n + k - 1) * beta


def dominant_ratio(epsilon, n: int, lam: int, delta=0.0) -> float:
    alpha, beta = dominant_parameters(epsilon, n, lam, delta)
    cost_a, _ = dominant_costs(alpha, beta, n, lam, n)
    _, cost_p = dominant_costs(alpha, beta, n, lam, 0)
    return float((n * cost_a + lam * (lam + n)) / (n * cost_p + lam * lam))


def dominant_ratio_closed_form(epsilon: float, n: int, lam: int) -> float:
    """The simplified rational expression in ``n``, ``lambda``, ``epsilon`` (delta = 0)."""
    e, l = float(epsilon), float(lam)
    num = 3 * n**2 + 2 * n**2 * e - n - n * e + 4 * n * l + 2 * n * l * e + 2 * l**2 + e * l**2
    den = (
        4 * n**2 * e - n * e + 3 * n * l * e + 2 * n**2 + 2 * n * l + 2 * n**2 * e**2
        - n * e**2 + n * e**2 * l + 2 * l**2 + e * l**2
    )
    return num / den


def best_lambda(epsilon: float, n: int, delta: float = 0.0) -> int:
    """Integer ``lambda`` in ``0..5n`` maximizing the family's cost ratio."""
    best, arg = -math.inf, 0
    for lam in range(5 * n + 1):
        r = dominant_ratio(epsilon, n, lam, delta)
        if r > best:
            best, arg = r, lam
    return arg


def atomic_pos_lb(epsilon: float, n: int, lam: int = None, delta: float = 1e-9) -> InstanceBundle:
    """Dominant-strategy family: ``n`` flexible players plus ``lam`` fixed ones.

    Facility ``alpha_i`` (cost ``alpha x``) lies only in ``P_i``; ``beta_ij``
    (cost ``beta x``) lies in ``A_i`` and ``P_j``; ``f_lambda`` (cost ``x``)
    lies in every ``A_i`` and is the only option of the fixed players.
    Strategy 0 is ``A``, strategy 1 is ``P``.  With ``delta > 0`` the
    all-A profile is the unique epsilon-Nash equilibrium; all-P is the
    designated optimum.  ``lam=None`` picks the ratio-maximizing lambda.
    """
    epsilon = _check_eps(epsilon)
    if n < 2:
        raise DomainError("n must be >= 2")
    if lam is None:
        lam = best_lambda(epsilon, n, delta)
    if lam < 0:
        raise DomainError("lambda must be >= 0")
    if delta < 0:
        raise DomainError("delta must be >= 0")
    alpha_q, beta_q = dominant_parameters(epsilon, n, lam, delta)
    alpha, beta = float(alpha_q), float(beta_q)
    facilities = [Facility(i, alpha, 0.0) for i in range(n)]
    beta_id = {}
    for i in range(n):
        for j in range(n):
            if i != j:
                beta_id[i, j] = len(facilities)
                facilities.append(Facility(len(facilities), beta, 0.0))
    f_lam = len(facilities)
    facilities.append(Facility(f_lam, 1.0, 0.0))
    players = []
    for i in range(n):
        a_i = tuple(beta_id[i, j] for j in range(n) if j != i) + (f_lam,)
        p_i = (i,) + tuple(beta_id[j, i] for j in range(n) if j != i)
        players.append((a_i, p_i))
    players += [((f_lam,),)] * lam
    game = AtomicGame(tuple(facilities), tuple(players))
    cost_a_n, _ = dominant_costs(alpha_q, beta_q, n, lam, n)
    _, cost_p_0 = dominant_costs(alpha_q, beta_q, n, lam, 0)
    ratio_q = (n * cost_a_n + lam * (lam + n)) / (n * cost_p_0 + lam * lam)
    # all-A is an exact Nash profile: each A player would pay (1+eps) times more on P
    dev = dominant_costs(alpha_q, beta_q, n, lam, n - 1)[1]
    eps_q = max(Fraction(0), cost_a_n / dev - 1)
    bundle = InstanceBundle(
        family="atomic-pos",
        game=game,
        equilibrium=Profile((0,) * (n + lam)),
        optimum=Profile((1,) * n + (0,) * lam),
        expected_epsilon=float(eps_q),
        expected_ratio=float(ratio_q),
        metadata={
            "epsilon": epsilon,
            "n": n,
            "lambda": lam,
            "delta": delta,
            "alpha": alpha,
            "beta": beta,
            "beta_exact": _frac_str(beta_q),
            "closed_form_ratio_delta0": dominant_ratio_closed_form(epsilon, n, lam),
        },
    )
    return bundle.validate()


def two_links_cost(n: int, gamma: float, k: int) -> float:
    """Social cost with ``k`` players on link 1 and ``n - k`` on link 2."""
    return (2 * n - 1 - gamma) * k * k + (n - k) ** 2


def two_links(n: int, gamma: float) -> InstanceBundle:
    """Two parallel links ``(2n-1)x - gamma`` and ``x`` with ``n`` players.

    The optimum (one player on link 1) is only a ``1 - (1+gamma)/n``
    approximate equilibrium.  The bundle's equilibrium is the optimum itself,
    so the expected ratio is 1.
    """
    if n < 2:
        raise DomainError("n must be >= 2")
    gamma = float(gamma)
    if not 0 < gamma < 1:
        raise DomainError("gamma must lie in (0, 1)")
    game = AtomicGame(
        (Facility(0, 2 * n - 1, -gamma), Facility(1, 1.0, 0.0)),
        tuple((((0,), (1,))) for _ in range(n)),
    )
    opt = Profile((0,) + (1,) * (n - 1))
    costs = [two_links_cost(n, gamma, k) for k in range(n + 1)]
    k_best = min(range(n + 1), key=lambda k: costs[k])
    if k_best != 1:
        raise ConstructionError(f"two-links: k={k_best} beats the designated optimum")
    expected = 1.0 - (1.0 + gamma) / n
    bundle = InstanceBundle(
        family="two-links",
        game=game,
        equilibrium=opt,
        optimum=opt,
        expected_epsilon=expected,
        expected_ratio=1.0,
        metadata={
            "n": n,
            "gamma": gamma,
            "opt_cost": 2 * n - 1 - gamma + (n - 1) ** 2,
            "cost_by_k": costs,
        },
    )
    return bundle.validate()


def generate(family: str, epsilon: float = 0.0, **kw) -> InstanceBundle:
    if family == "atomic-poa":
        return atomic_poa_lb(epsilon)
    if family == "nonatomic-poa":
        if kw.get("network"):
            return routing_poa_lb(epsilon)
        return nonatomic_poa_lb(epsilon)
    if family == "pigou":
        return pigou(epsilon)
    if family == "atomic-pos":
        return atomic_pos_lb(epsilon, kw.get("n") or 3, kw.get("lam"), kw.get("delta", 1e-9))
    if family == "two-links":
        return two_links(kw.get("n") or 4, kw.get("gamma", 0.5))
    raise DomainError(f"unknown family {family!r}; choose from {FAMILIES}")
