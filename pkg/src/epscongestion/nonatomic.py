"""Non-atomic congestion games: commodities, strategy flows, epsilon-Wardrop check.

Facility flows are ``f_e = sum of f_P over strategies P containing e``; a
strategy's latency is the sum of its facility latencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .atomic import (
    TOL,
    Facility,
    ValidationError,
    _canonical_strategy,
    _check_epsilon,
    _index_facilities,
)

USED_THRESHOLD = 1e-9


@dataclass(frozen=True)
class Commodity:
    rate: float
    strategies: tuple


@dataclass(frozen=True)
class NonatomicGame:
    facilities: tuple
    commodities: tuple
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        facs = tuple(f if isinstance(f, Facility) else Facility(*f) for f in self.facilities)
        index = _index_facilities(facs)
        for f in facs:
            if f.b < 0:
                raise ValidationError(f"facility {f.id}: b={f.b} must be >= 0")
        if not self.commodities:
            raise ValidationError("game has no commodities")
        comms = []
        for i, c in enumerate(self.commodities):
            if not isinstance(c, Commodity):
                c = Commodity(c["rate"], c["strategies"]) if isinstance(c, dict) else Commodity(*c)
            rate = float(c.rate)
            if not (math.isfinite(rate) and rate > 0):
                raise ValidationError(f"commodity {i}: rate must be positive, got {c.rate}")
            strategies = list(c.strategies)
            if not strategies:
                raise ValidationError(f"commodity {i} has no strategies")
            comms.append(
                Commodity(
                    rate,
                    tuple(
                        _canonical_strategy(s, index, f"commodity {i} strategy {k}")
                        for k, s in enumerate(strategies)
                    ),
                )
            )
        object.__setattr__(self, "facilities", facs)
        object.__setattr__(self, "commodities", tuple(comms))
        object.__setattr__(self, "_index", index)

    @property
    def rates(self) -> np.ndarray:
        return np.array([c.rate for c in self.commodities])

    @cached_property
    def a(self) -> np.ndarray:
        return np.array([f.a for f in self.facilities])

    @cached_property
    def b(self) -> np.ndarray:
        return np.array([f.b for f in self.facilities])

    @cached_property
    def offsets(self) -> np.ndarray:
        sizes = [len(c.strategies) for c in self.commodities]
        return np.concatenate([[0], np.cumsum(sizes)]).astype(int)

    @cached_property
    def incidence(self) -> np.ndarray:
        """Facility-by-strategy 0/1 matrix; columns follow commodity order."""
        m = np.zeros((len(self.facilities), int(self.offsets[-1])))
        col = 0
        for c in self.commodities:
            for s in c.strategies:
                for fid in s:
                    m[self._index[fid], col] = 1.0
                col += 1
        return m

    def has_flat_facility(self) -> bool:
        """True if a facility on some strategy has ``a == 0`` (minimizer may be non-unique)."""
        used = self.incidence.sum(axis=1) > 0
        return bool(np.any(self.a[used] == 0.0))


@dataclass(frozen=True)
class Flow:
    weights: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "weights", tuple(tuple(float(w) for w in ws) for ws in self.weights)
        )

    def vector(self) -> np.ndarray:
        return np.array([w for ws in self.weights for w in ws], dtype=float)

    @classmethod
    def from_vector(cls, game: NonatomicGame, x: np.ndarray) -> "Flow":
        off = game.offsets
        return cls(tuple(tuple(x[off[k]:off[k + 1]]) for k in range(len(game.commodities))))


def check_flow(game: NonatomicGame, flow, tol: float = TOL) -> Flow:
    if not isinstance(flow, Flow):
        flow = Flow(flow)
    if len(flow.weights) != len(game.commodities):
        raise ValidationError(
            f"flow has {len(flow.weights)} commodities, game has {len(game.commodities)}"
        )
    for i, (ws, c) in enumerate(zip(flow.weights, game.commodities)):
        if len(ws) != len(c.strategies):
            raise ValidationError(
                f"commodity {i}: {len(ws)} weights for {len(c.strategies)} strategies"
            )
        if any(not math.isfinite(w) or w < -tol for w in ws):
            raise ValidationError(f"commodity {i}: weights must be finite and nonnegative")
        if abs(sum(ws) - c.rate) > tol * max(1.0, c.rate):
            raise ValidationError(
                f"commodity {i}: weights sum to {sum(ws)!r}, rate is {c.rate!r}"
            )
    return flow


def facility_flows(game: NonatomicGame, flow) -> dict:
    flow = check_flow(game, flow)
    fe = game.incidence @ flow.vector()
    return {f.id: float(v) for f, v in zip(game.facilities, fe)}


def _facility_vector(game, flow) -> np.ndarray:
    return game.incidence @ check_flow(game, flow).vector()


def _latencies(game, fe) -> np.ndarray:
    return game.a * fe + game.b


def strategy_latencies(game: NonatomicGame, flow) -> list:
    """Latency of every strategy, grouped per commodity."""
    fe = _facility_vector(game, flow)
    per = game.incidence.T @ _latencies(game, fe)
    off = game.offsets
    return [per[off[k]:off[k + 1]].tolist() for k in range(len(game.commodities))]


def strategy_latency(game: NonatomicGame, flow, commodity: int, s: int) -> float:
    fe = _facility_vector(game, flow)
    lat = _latencies(game, fe)
    return float(sum(lat[game._index[fid]] for fid in game.commodities[commodity].strategies[s]))


def social_cost(game: NonatomicGame, flow) -> float:
    """Total latency ``sum_e l_e(f_e) f_e``."""
    fe = _facility_vector(game, flow)
    return float(np.dot(_latencies(game, fe), fe))


def path_social_cost(game: NonatomicGame, flow) -> float:
    """Same quantity summed over strategies, ``sum_P l_P(f) f_P``."""
    flow = check_flow(game, flow)
    lat = strategy_latencies(game, flow)
    return float(sum(l * w for ls, ws in zip(lat, flow.weights) for l, w in zip(ls, ws)))


@dataclass(frozen=True)
class WardropReport:
    """Smallest epsilon for which a flow is epsilon-Wardrop.

    ``witness`` is ``(commodity, used strategy, cheapest strategy)``.  A
    strategy counts as used when its weight exceeds ``used_threshold`` times
    the commodity rate.
    """

    epsilon_star: float
    witness: Optional[tuple]
    used_threshold: float

    def is_epsilon_wardrop(self, epsilon: float, tol: float = TOL) -> bool:
        return self.epsilon_star <= epsilon + tol


def flow_epsilon(game: NonatomicGame, flow, used_threshold: float = USED_THRESHOLD) -> WardropReport:
    if used_threshold < 0:
        raise ValidationError("used_threshold must be >= 0")
    flow = check_flow(game, flow)
    lat = strategy_latencies(game, flow)
    best_ratio = -math.inf
    witness = None
    for k, (ls, ws, c) in enumerate(zip(lat, flow.weights, game.commodities)):
        j_min = int(np.argmin(ls))
        lo = ls[j_min]
        for j, (l, w) in enumerate(zip(ls, ws)):
            if w <= used_threshold * c.rate:
                continue
            if lo <= 0.0:
                ratio = math.inf if l > 0.0 else 1.0
            else:
                ratio = l / lo
            if ratio > best_ratio:
                best_ratio, witness = ratio, (k, j, j_min)
    eps = max(0.0, best_ratio - 1.0) if witness is not None else 0.0
    return WardropReport(eps, witness, used_threshold)


def potential(game: NonatomicGame, flow, epsilon: float) -> float:
    """``sum_e (a_e f_e^2 / 2 + b_e f_e / (1 + eps))``."""
    epsilon = _check_epsilon(epsilon)
    fe = _facility_vector(game, flow)
    return float(np.dot(0.5 * game.a * fe + game.b / (1.0 + epsilon), fe))


class InequalityCheck(NamedTuple):
    holds: bool
    slack: float
    lhs: float
    rhs: float


def bmw_check(game: NonatomicGame, f, f_alt, epsilon: float, tol: float = TOL) -> InequalityCheck:
    """``sum_e l_e(f_e) f_e <= (1+eps) sum_e l_e(f_e) f_alt_e`` for an epsilon-Wardrop ``f``."""
    epsilon = _check_epsilon(epsilon)
    fe = _facility_vector(game, f)
    ge = _facility_vector(game, f_alt)
    lat = _latencies(game, fe)
    lhs = float(np.dot(lat, fe))
    rhs = (1.0 + epsilon) * float(np.dot(lat, ge))
    slack = rhs - lhs
    return InequalityCheck(slack >= -tol, slack, lhs, rhs)


def variational_check(game: NonatomicGame, f_min, f_alt, epsilon: float, tol: float = TOL) -> InequalityCheck:
    """First-order optimality of a potential minimizer against another flow.

    ``sum_e (a f^2 + b f/(1+eps)) <= sum_e (a f f' + b f'/(1+eps))``.
    """
    epsilon = _check_epsilon(epsilon)
    fe = _facility_vector(game, f_min)
    ge = _facility_vector(game, f_alt)
    grad = game.a * fe + game.b / (1.0 + epsilon)
    lhs = float(np.dot(grad, fe))
    rhs = float(np.dot(grad, ge))
    slack = rhs - lhs
    return InequalityCheck(slack >= -tol, slack, lhs, rhs)


def random_flow(game: NonatomicGame, rng: np.random.Generator) -> Flow:
    """Feasible flow with Dirichlet-distributed splits per commodity."""
    weights = []
    for c in game.commodities:
        k = len(c.strategies)
        w = rng.dirichlet(np.ones(k)) * c.rate if k > 1 else np.array([c.rate])
        weights.append(tuple(w))
    return Flow(tuple(weights))


def vertex_flow(game: NonatomicGame, choice: Sequence[int]) -> Flow:
    """All of commodity ``k``'s rate on strategy ``choice[k]``."""
    weights = []
    for c, j in zip(game.commodities, choice):
        ws = [0.0] * len(c.strategies)
        ws[j] = c.rate
        weights.append(tuple(ws))
    return Flow(tuple(weights))
