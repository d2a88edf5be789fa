"""Atomic linear congestion games: data model, costs, epsilon-Nash check, epsilon-potential.

Latencies are linear, ``l_e(x) = a_e * x + b_e``.  A profile picks one strategy
(a set of facility ids) per player; ``n_e`` is the number of players whose
chosen strategy contains facility ``e``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

TOL = 1e-9


class ValidationError(ValueError):
    """Raised when a game, profile or flow violates its invariants."""


@dataclass(frozen=True)
class Facility:
    id: int
    a: float
    b: float

    def __post_init__(self):
        if not isinstance(self.id, int) or isinstance(self.id, bool):
            raise ValidationError(f"facility id must be an integer, got {self.id!r}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValidationError(f"facility {self.id}: coefficients must be finite")
        if self.a < 0:
            raise ValidationError(f"facility {self.id}: a={self.a} must be >= 0")

    def latency(self, x: float) -> float:
        return self.a * x + self.b


def _canonical_strategy(strategy: Iterable[int], known: dict, where: str) -> tuple:
    ids = []
    for fid in strategy:
        if isinstance(fid, bool) or not isinstance(fid, int):
            raise ValidationError(f"{where}: facility id {fid!r} is not an integer")
        if fid not in known:
            raise ValidationError(f"{where}: unknown facility id {fid}")
        ids.append(fid)
    if not ids:
        raise ValidationError(f"{where}: strategy is empty")
    return tuple(sorted(set(ids)))


def _index_facilities(facilities: Sequence[Facility]) -> dict:
    index = {}
    for pos, fac in enumerate(facilities):
        if fac.id in index:
            raise ValidationError(f"duplicate facility id {fac.id}")
        index[fac.id] = pos
    return index


@dataclass(frozen=True)
class AtomicGame:
    """Finite atomic congestion game with linear latencies.

    ``players[i]`` is the ordered strategy list of player ``i``; each strategy
    is stored as a sorted tuple of distinct facility ids.  Constant terms may be
    negative as long as every facility has nonnegative latency at load one
    (``a + b >= 0``); loads of used facilities are always at least one.
    """

    facilities: tuple
    players: tuple
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        facs = tuple(f if isinstance(f, Facility) else Facility(*f) for f in self.facilities)
        index = _index_facilities(facs)
        for f in facs:
            if f.a + f.b < -TOL:
                raise ValidationError(
                    f"facility {f.id}: latency at load 1 is {f.a + f.b} < 0"
                )
        if not self.players:
            raise ValidationError("game has no players")
        players = []
        for i, strategies in enumerate(self.players):
            strategies = list(strategies)
            if not strategies:
                raise ValidationError(f"player {i} has no strategies")
            players.append(
                tuple(
                    _canonical_strategy(s, index, f"player {i} strategy {k}")
                    for k, s in enumerate(strategies)
                )
            )
        object.__setattr__(self, "facilities", facs)
        object.__setattr__(self, "players", tuple(players))
        object.__setattr__(self, "_index", index)

    @property
    def n_players(self) -> int:
        return len(self.players)

    def position(self, facility_id: int) -> int:
        return self._index[facility_id]

    def n_profiles(self) -> int:
        return math.prod(len(s) for s in self.players)

    def facility(self, facility_id: int) -> Facility:
        return self.facilities[self._index[facility_id]]


@dataclass(frozen=True)
class Profile:
    choices: tuple

    def __post_init__(self):
        object.__setattr__(self, "choices", tuple(int(c) for c in self.choices))

    def __len__(self):
        return len(self.choices)

    def replace(self, player: int, strategy: int) -> "Profile":
        choices = list(self.choices)
        choices[player] = strategy
        return Profile(tuple(choices))


@dataclass(frozen=True)
class EpsilonReport:
    """Smallest epsilon for which a profile is an epsilon-Nash equilibrium.

    ``witness`` is ``(player, strategy index)`` of the deviation attaining the
    maximum cost ratio, or ``None`` when no player has an alternative.
    ``epsilon_star`` is ``math.inf`` when some deviation costs zero while the
    deviating player currently pays a positive cost.
    """

    epsilon_star: float
    witness: Optional[tuple]
    current_cost: float = 0.0
    deviation_cost: float = 0.0

    def is_epsilon_nash(self, epsilon: float, tol: float = TOL) -> bool:
        return self.epsilon_star <= epsilon + tol


def check_profile(game: AtomicGame, profile) -> Profile:
    if not isinstance(profile, Profile):
        profile = Profile(tuple(profile))
    if len(profile.choices) != game.n_players:
        raise ValidationError(
            f"profile has {len(profile.choices)} choices for {game.n_players} players"
        )
    for i, c in enumerate(profile.choices):
        if not 0 <= c < len(game.players[i]):
            raise ValidationError(
                f"player {i}: strategy index {c} out of range 0..{len(game.players[i]) - 1}"
            )
    return profile


def _load_list(game: AtomicGame, choices: Sequence[int]) -> list:
    counts = [0] * len(game.facilities)
    index = game._index
    for strategies, c in zip(game.players, choices):
        for fid in strategies[c]:
            counts[index[fid]] += 1
    return counts


def loads(game: AtomicGame, profile) -> dict:
    """Number of players on each facility, keyed by facility id."""
    profile = check_profile(game, profile)
    counts = _load_list(game, profile.choices)
    return {f.id: n for f, n in zip(game.facilities, counts)}


def _strategy_cost(game, strategy, counts) -> float:
    total = 0.0
    for fid in strategy:
        pos = game._index[fid]
        fac = game.facilities[pos]
        total += fac.a * counts[pos] + fac.b
    return total


def _deviation_cost(game, current, alternative, counts) -> float:
    # loads seen by the mover after switching from `current` to `alternative`
    cur = set(current)
    total = 0.0
    for fid in alternative:
        pos = game._index[fid]
        fac = game.facilities[pos]
        n = counts[pos] if fid in cur else counts[pos] + 1
        total += fac.a * n + fac.b
    return total


def player_cost(game: AtomicGame, profile, i: int) -> float:
    profile = check_profile(game, profile)
    counts = _load_list(game, profile.choices)
    return _strategy_cost(game, game.players[i][profile.choices[i]], counts)


def player_costs(game: AtomicGame, profile) -> list:
    profile = check_profile(game, profile)
    counts = _load_list(game, profile.choices)
    return [
        _strategy_cost(game, game.players[i][c], counts)
        for i, c in enumerate(profile.choices)
    ]


def social_cost(game: AtomicGame, profile) -> float:
    """Total cost, computed facility-wise as sum of n_e * l_e(n_e)."""
    profile = check_profile(game, profile)
    counts = _load_list(game, profile.choices)
    return sum(f.a * n * n + f.b * n for f, n in zip(game.facilities, counts) if n)


def profile_epsilon(game: AtomicGame, profile) -> EpsilonReport:
    """Minimal epsilon making ``profile`` an epsilon-Nash equilibrium.

    For every player the current cost is compared to the cheapest unilateral
    deviation; the answer is the largest ratio minus one, clamped at zero.
    Ties go to the lowest player index, then the lowest strategy index.
    """
    profile = check_profile(game, profile)
    counts = _load_list(game, profile.choices)
    best_ratio = -math.inf
    witness = None
    cur_at, dev_at = 0.0, 0.0
    for i, c in enumerate(profile.choices):
        strategies = game.players[i]
        if len(strategies) == 1:
            continue
        current = strategies[c]
        cost = _strategy_cost(game, current, counts)
        dev_cost, dev_idx = math.inf, None
        for k, alt in enumerate(strategies):
            if k == c:
                continue
            d = _deviation_cost(game, current, alt, counts)
            if d < dev_cost:
                dev_cost, dev_idx = d, k
        if dev_cost <= 0.0:
            ratio = math.inf if cost > 0.0 else 1.0
        else:
            ratio = cost / dev_cost
        if ratio > best_ratio:
            best_ratio = ratio
            witness = (i, dev_idx)
            cur_at, dev_at = cost, dev_cost
    eps = max(0.0, best_ratio - 1.0) if witness is not None else 0.0
    return EpsilonReport(eps, witness, cur_at, dev_at)


def is_epsilon_nash(game: AtomicGame, profile, epsilon: float, tol: float = TOL) -> bool:
    return profile_epsilon(game, profile).is_epsilon_nash(epsilon, tol)


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not epsilon >= 0:
        raise ValidationError(f"epsilon must be >= 0, got {epsilon}")
    return epsilon


def potential(game: AtomicGame, profile, epsilon: float) -> float:
    """Epsilon-potential of a profile.

    ``0.5 * sum_e (a_e n_e + b_e) n_e + 0.5 * (1-eps)/(1+eps) * sum_e (a_e + b_e) n_e``.
    At ``epsilon = 0`` this is Rosenthal's potential.
    """
    epsilon = _check_epsilon(epsilon)
    profile = check_profile(game, profile)
    counts = _load_list(game, profile.choices)
    coef = (1.0 - epsilon) / (1.0 + epsilon)
    quad = 0.0
    lin = 0.0
    for f, n in zip(game.facilities, counts):
        if n:
            quad += (f.a * n + f.b) * n
            lin += (f.a + f.b) * n
    return 0.5 * quad + 0.5 * coef * lin


def rosenthal_potential(game: AtomicGame, profile) -> float:
    profile = check_profile(game, profile)
    counts = _load_list(game, profile.choices)
    return sum(
        sum(f.a * k + f.b for k in range(1, n + 1))
        for f, n in zip(game.facilities, counts)
    )


def _potential_delta(game, choices, counts, i, alt, epsilon) -> float:
    if alt == choices[i]:
        return 0.0
    current = game.players[i][choices[i]]
    target = game.players[i][alt]
    inv = 1.0 / (1.0 + epsilon)
    cur = set(current)
    delta = 0.0
    for fid in target:
        pos = game._index[fid]
        f = game.facilities[pos]
        delta += f.a * counts[pos] + (f.a + f.b) * inv
        if fid in cur:
            delta -= f.a
    for fid in current:
        pos = game._index[fid]
        f = game.facilities[pos]
        delta -= f.a * counts[pos] + (f.b - f.a * epsilon) * inv
    return delta


def potential_delta(game: AtomicGame, profile, i: int, alt: int, epsilon: float) -> float:
    """Change of the epsilon-potential when player ``i`` switches to strategy ``alt``.

    Closed form; agrees with ``potential(after) - potential(before)``.
    """
    epsilon = _check_epsilon(epsilon)
    profile = check_profile(game, profile)
    if not 0 <= alt < len(game.players[i]):
        raise ValidationError(f"player {i}: strategy index {alt} out of range")
    counts = _load_list(game, profile.choices)
    return _potential_delta(game, profile.choices, counts, i, alt, epsilon)
