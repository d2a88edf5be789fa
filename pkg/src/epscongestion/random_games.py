"""Seeded random small games for randomized test suites."""

from __future__ import annotations

import numpy as np

from .atomic import AtomicGame, Facility, Profile
from .nonatomic import Commodity, NonatomicGame

DEFAULT_SEED = 42


def _strategy(rng, n_facilities):
    size = int(rng.integers(1, n_facilities + 1))
    return tuple(int(x) for x in rng.choice(n_facilities, size=size, replace=False))


def random_atomic_game(
    rng: np.random.Generator,
    max_players: int = 3,
    max_strategies: int = 3,
    max_facilities: int = 6,
    max_coef: int = 3,
) -> AtomicGame:
    """Game with integer ``a, b`` in ``0..max_coef``; sizes drawn uniformly up to the maxima."""
    n_fac = int(rng.integers(1, max_facilities + 1))
    facilities = tuple(
        Facility(j, int(rng.integers(0, max_coef + 1)), int(rng.integers(0, max_coef + 1)))
        for j in range(n_fac)
    )
    n_players = int(rng.integers(1, max_players + 1))
    players = []
    for _ in range(n_players):
        k = int(rng.integers(1, max_strategies + 1))
        players.append(tuple(_strategy(rng, n_fac) for _ in range(k)))
    return AtomicGame(facilities, tuple(players))


def random_profile(game: AtomicGame, rng: np.random.Generator) -> Profile:
    return Profile(tuple(int(rng.integers(0, len(s))) for s in game.players))


def random_nonatomic_game(
    rng: np.random.Generator,
    max_commodities: int = 3,
    max_strategies: int = 4,
    max_facilities: int = 8,
    max_coef: int = 3,
) -> NonatomicGame:
    n_fac = int(rng.integers(1, max_facilities + 1))
    facilities = tuple(
        Facility(j, int(rng.integers(0, max_coef + 1)), int(rng.integers(0, max_coef + 1)))
        for j in range(n_fac)
    )
    comms = []
    for _ in range(int(rng.integers(1, max_commodities + 1))):
        k = int(rng.integers(1, max_strategies + 1))
        rate = float(rng.uniform(0.5, 2.0))
        comms.append(Commodity(rate, tuple(_strategy(rng, n_fac) for _ in range(k))))
    return NonatomicGame(facilities, tuple(comms))


def atomic_suite(n: int, seed: int = DEFAULT_SEED, **kw):
    """``n`` random atomic games from one seeded stream."""
    rng = np.random.default_rng(seed)
    return [random_atomic_game(rng, **kw) for _ in range(n)]
