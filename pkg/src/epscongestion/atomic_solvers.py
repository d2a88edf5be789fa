"""Exhaustive enumeration and improvement dynamics for small atomic games."""

from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .atomic import (
    TOL,
    AtomicGame,
    Profile,
    _check_epsilon,
    _deviation_cost,
    _load_list,
    _potential_delta,
    _strategy_cost,
    check_profile,
    potential,
    profile_epsilon,
    social_cost,
)

DEFAULT_CAP = 10**7
DESCENT_THRESHOLD = 1e-12
IMPROVE_SLACK = 1e-12


class EnumerationTooLarge(ValueError):
    pass


def cost_ratio(cost: float, opt: float) -> float:
    """``cost / opt`` with 0/0 read as 1."""
    if opt == 0.0:
        return 1.0 if cost == 0.0 else math.inf
    return cost / opt


def decode_profile(game: AtomicGame, index: int) -> Profile:
    """Profile at position ``index`` of the lexicographic enumeration (player 0 slowest)."""
    choices = []
    for strategies in reversed(game.players):
        index, c = divmod(index, len(strategies))
        choices.append(c)
    return Profile(tuple(reversed(choices)))


def _scan(game: AtomicGame, start: int, stop: int):
    ranges = [range(len(s)) for s in game.players]
    it = itertools.islice(itertools.product(*ranges), start, stop)
    costs = []
    eps = []
    for choices in it:
        p = Profile(choices)
        costs.append(social_cost(game, p))
        eps.append(profile_epsilon(game, p).epsilon_star)
    return costs, eps


@dataclass
class ProfileTable:
    """Social cost and epsilon-star of every profile, in lexicographic order."""

    game: AtomicGame
    costs: np.ndarray
    epsilons: np.ndarray

    @property
    def opt_index(self) -> int:
        return int(np.argmin(self.costs))

    @property
    def opt_cost(self) -> float:
        return float(self.costs.min())

    def equilibrium_indices(self, epsilon: float, tol: float = TOL) -> np.ndarray:
        return np.flatnonzero(self.epsilons <= epsilon + tol)


def profile_table(game: AtomicGame, cap: int = DEFAULT_CAP, jobs: int = 1) -> ProfileTable:
    total = game.n_profiles()
    if total > cap:
        raise EnumerationTooLarge(
            f"{total} profiles exceed the enumeration cap of {cap}"
        )
    if jobs <= 1 or total < 2 * jobs:
        costs, eps = _scan(game, 0, total)
    else:
        bounds = np.linspace(0, total, jobs + 1).astype(int)
        costs, eps = [], []
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_scan, game, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:])
            ]
            # chunks are concatenated in index order, so the result is job-count independent
            for fut in futures:
                c, e = fut.result()
                costs.extend(c)
                eps.extend(e)
    return ProfileTable(game, np.asarray(costs, dtype=float), np.asarray(eps, dtype=float))


@dataclass
class EquilibriumSet:
    epsilon: float
    equilibria: list
    optimum: Profile
    opt_cost: float
    poa: float
    pos: float
    worst: Profile
    best: Profile
    n_profiles: int
    pos_descent_upper: float = math.nan
    descent_terminal: Optional[Profile] = None


def summarize(table: ProfileTable, epsilon: float, with_descent: bool = True) -> EquilibriumSet:
    game = table.game
    idx = table.equilibrium_indices(epsilon)
    if idx.size == 0:
        # the global minimum of the epsilon-potential is always an epsilon-Nash profile
        raise RuntimeError("internal error: no epsilon-Nash profile found")
    eq_costs = table.costs[idx]
    # argmax/argmin return the first hit, i.e. the lexicographically smallest witness
    worst = int(idx[int(np.argmax(eq_costs))])
    best = int(idx[int(np.argmin(eq_costs))])
    opt = table.opt_cost
    result = EquilibriumSet(
        epsilon=epsilon,
        equilibria=[decode_profile(game, int(k)) for k in idx],
        optimum=decode_profile(game, table.opt_index),
        opt_cost=opt,
        poa=cost_ratio(float(table.costs[worst]), opt),
        pos=cost_ratio(float(table.costs[best]), opt),
        worst=decode_profile(game, worst),
        best=decode_profile(game, best),
        n_profiles=len(table.costs),
    )
    if with_descent:
        term, _ = potential_descent(game, result.optimum, epsilon)
        result.descent_terminal = term
        result.pos_descent_upper = cost_ratio(social_cost(game, term), opt)
    return result


def brute_force(
    game: AtomicGame, epsilon: float, cap: int = DEFAULT_CAP, jobs: int = 1
) -> EquilibriumSet:
    """Enumerate every pure profile; exact PoA, PoS and optimum at ``epsilon``.

    PoS is also bounded from above by running potential descent from the
    optimum (``pos_descent_upper``).
    """
    epsilon = _check_epsilon(epsilon)
    return summarize(profile_table(game, cap=cap, jobs=jobs), epsilon)


@dataclass(frozen=True)
class Step:
    mover: int
    old: int
    new: int
    delta: float
    potential: float


@dataclass
class DynamicsTrace:
    rule: str
    epsilon: float
    start: Profile
    steps: list = field(default_factory=list)
    terminal: Optional[Profile] = None
    converged: bool = False

    def __len__(self):
        return len(self.steps)

    def to_csv(self, fh) -> None:
        writer = csv.writer(fh)
        writer.writerow(["step", "mover", "old", "new", "delta", "potential"])
        for k, s in enumerate(self.steps, start=1):
            writer.writerow([k, s.mover, s.old, s.new, repr(s.delta), repr(s.potential)])


def _best_deviation(game, choices, counts, i):
    strategies = game.players[i]
    current = strategies[choices[i]]
    best, best_k = math.inf, None
    for k, alt in enumerate(strategies):
        if k == choices[i]:
            continue
        d = _deviation_cost(game, current, alt, counts)
        if d < best:
            best, best_k = d, k
    return _strategy_cost(game, current, counts), best, best_k


def _wants_to_move(cost, best, epsilon) -> bool:
    if math.isinf(best):
        return False
    return cost > (1.0 + epsilon) * best * (1.0 + IMPROVE_SLACK)


BR_RULES = ("round-robin", "max-ratio")


def epsilon_best_response(
    game: AtomicGame,
    start,
    epsilon: float,
    order: str = "round-robin",
    max_steps: int = 10_000,
):
    """Epsilon-best-response dynamics.

    A player moves to a best response only when its cost exceeds ``1 + epsilon``
    times the best deviation cost.  ``order`` selects who moves: the next
    unhappy player after the last mover (``"round-robin"``) or the unhappy
    player with the largest cost ratio (``"max-ratio"``).

    Returns the terminal profile and the trace; ``trace.converged`` is False
    when ``max_steps`` ran out before an epsilon-Nash profile was reached.
    """
    epsilon = _check_epsilon(epsilon)
    if order not in BR_RULES:
        raise ValueError(f"unknown move rule {order!r}; choose from {BR_RULES}")
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    start = check_profile(game, start)
    choices = list(start.choices)
    n = game.n_players
    trace = DynamicsTrace(rule=f"best-response/{order}", epsilon=epsilon, start=start)
    last = -1
    while True:
        counts = _load_list(game, choices)
        mover = None
        if order == "round-robin":
            for off in range(1, n + 1):
                i = (last + off) % n
                cost, best, k = _best_deviation(game, choices, counts, i)
                if _wants_to_move(cost, best, epsilon):
                    mover = (i, k)
                    break
        else:
            top = -math.inf
            for i in range(n):
                cost, best, k = _best_deviation(game, choices, counts, i)
                if _wants_to_move(cost, best, epsilon):
                    r = math.inf if best <= 0 else cost / best
                    if r > top:
                        top, mover = r, (i, k)
        if mover is None:
            trace.converged = True
            break
        if len(trace.steps) >= max_steps:
            break
        i, k = mover
        delta = _potential_delta(game, choices, counts, i, k, epsilon)
        old = choices[i]
        choices[i] = k
        phi = potential(game, Profile(tuple(choices)), epsilon)
        trace.steps.append(Step(i, old, k, delta, phi))
        last = i
    trace.terminal = Profile(tuple(choices))
    return trace.terminal, trace


def steepest_move(game: AtomicGame, choices, epsilon: float, counts=None):
    """Most potential-decreasing unilateral move as ``(delta, player, strategy)`` or None."""
    if counts is None:
        counts = _load_list(game, choices)
    best = None
    for i, strategies in enumerate(game.players):
        for k in range(len(strategies)):
            if k == choices[i]:
                continue
            d = _potential_delta(game, choices, counts, i, k, epsilon)
            # strict comparison keeps the lowest (player, strategy) among ties
            if d < -DESCENT_THRESHOLD and (best is None or d < best[0]):
                best = (d, i, k)
    return best


def is_local_minimum(game: AtomicGame, profile, epsilon: float) -> bool:
    profile = check_profile(game, profile)
    return steepest_move(game, profile.choices, _check_epsilon(epsilon)) is None


def potential_descent(game: AtomicGame, start, epsilon: float, max_steps: int = 100_000):
    """Steepest descent on the epsilon-potential over unilateral moves.

    Every terminal profile is a local minimum of the potential and hence an
    epsilon-Nash equilibrium.  ``trace.converged`` is False if ``max_steps``
    was hit first.
    """
    epsilon = _check_epsilon(epsilon)
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    start = check_profile(game, start)
    choices = list(start.choices)
    trace = DynamicsTrace(rule="potential-descent", epsilon=epsilon, start=start)
    phi = potential(game, start, epsilon)
    while True:
        move = steepest_move(game, choices, epsilon)
        if move is None:
            trace.converged = True
            break
        if len(trace.steps) >= max_steps:
            break
        d, i, k = move
        old = choices[i]
        choices[i] = k
        # recompute rather than accumulate so the trace carries exact values
        phi = potential(game, Profile(tuple(choices)), epsilon)
        trace.steps.append(Step(i, old, k, d, phi))
    trace.terminal = Profile(tuple(choices))
    return trace.terminal, trace
