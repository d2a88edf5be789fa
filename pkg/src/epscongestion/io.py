"""JSON reading and writing for games, profiles, flows, bundles and results.

Game files are recognized by their keys: ``players`` marks an atomic game,
``commodities`` holding ``strategies`` a non-atomic one, and ``nodes`` a
routing network (expanded into its path game on load).  A bundle file may be
given wherever a game or a profile/flow is expected.

Games and flows are written at full double precision so that files read
back bit-identically; derived report values are rounded to 12 significant
digits.
"""

from __future__ import annotations

import json
import math
from typing import Any, Union

from .atomic import AtomicGame, Facility, Profile, ValidationError
from .network import CommoditySpec, Edge, Graph, expand
from .nonatomic import Commodity, Flow, NonatomicGame

REPORT_DIGITS = 12


class SchemaError(ValueError):
    """File contents do not match any known schema, or do not match each other."""


def report_number(x: Any) -> Any:
    """Round a float to 12 significant digits; infinities become strings."""
    if isinstance(x, bool) or x is None or isinstance(x, int):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.{REPORT_DIGITS}g}")


def read_number(x: Any) -> float:
    if isinstance(x, str):
        return float(x)
    return float(x)


def _clean(obj):
    """Recursively make metadata JSON-safe (graphs, fractions, tuples, inf)."""
    if isinstance(obj, Graph):
        return graph_to_dict(obj)
    if isinstance(obj, CommoditySpec):
        return {"source": obj.source, "sink": obj.sink, "rate": obj.rate}
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return report_number(obj)
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return str(obj)


# --- games -------------------------------------------------------------------


def _facility_dict(f: Facility) -> dict:
    return {"id": f.id, "a": f.a, "b": f.b}


def _facilities(raw) -> tuple:
    try:
        return tuple(Facility(int(f["id"]), read_number(f["a"]), read_number(f["b"])) for f in raw)
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed facility entry: {exc}") from exc


def game_to_dict(game: Union[AtomicGame, NonatomicGame]) -> dict:
    facs = [_facility_dict(f) for f in game.facilities]
    if isinstance(game, AtomicGame):
        return {"facilities": facs, "players": [[list(s) for s in p] for p in game.players]}
    return {
        "facilities": facs,
        "commodities": [
            {"rate": c.rate, "strategies": [list(s) for s in c.strategies]} for c in game.commodities
        ],
    }


def graph_to_dict(graph: Graph, commodities=()) -> dict:
    out = {
        "nodes": list(graph.nodes),
        "edges": [
            {"id": e.id, "tail": e.tail, "head": e.head, "a": e.a, "b": e.b} for e in graph.edges
        ],
    }
    if commodities:
        out["commodities"] = [
            {"source": c.source, "sink": c.sink, "rate": c.rate} for c in commodities
        ]
    return out


def graph_from_dict(d: dict):
    try:
        graph = Graph(
            tuple(d["nodes"]),
            tuple(
                Edge(int(e["id"]), e["tail"], e["head"], read_number(e.get("a", 0)), read_number(e.get("b", 0)))
                for e in d["edges"]
            ),
        )
        comms = tuple(
            CommoditySpec(c["source"], c["sink"], read_number(c["rate"])) for c in d.get("commodities", [])
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed network: {exc}") from exc
    return graph, comms


def game_kind(d: dict) -> str:
    if not isinstance(d, dict):
        raise SchemaError("expected a JSON object")
    if "game" in d and "family" in d:
        return "bundle"
    if "players" in d:
        return "atomic"
    if "nodes" in d:
        return "network"
    if "commodities" in d:
        return "nonatomic"
    raise SchemaError("not a game: expected 'players', 'commodities' or 'nodes'")


def game_from_dict(d: dict) -> Union[AtomicGame, NonatomicGame]:
    kind = game_kind(d)
    if kind == "bundle":
        return game_from_dict(d["game"])
    if kind == "network":
        graph, comms = graph_from_dict(d)
        if not comms:
            raise SchemaError("network file lists no commodities")
        return expand(graph, comms)
    facs = _facilities(d.get("facilities", []))
    if kind == "atomic":
        players = d["players"]
        if not isinstance(players, list):
            raise SchemaError("'players' must be a list")
        return AtomicGame(facs, tuple(tuple(tuple(s) for s in p) for p in players))
    try:
        comms = tuple(
            Commodity(read_number(c["rate"]), tuple(tuple(s) for s in c["strategies"]))
            for c in d["commodities"]
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed commodity entry: {exc}") from exc
    return NonatomicGame(facs, comms)


# --- profiles and flows ------------------------------------------------------


def state_to_dict(state: Union[Profile, Flow]) -> dict:
    if isinstance(state, Profile):
        return {"choices": list(state.choices)}
    return {"weights": [list(map(float, w)) for w in state.weights]}


def state_from_dict(d: dict, game=None, role: str = "equilibrium") -> Union[Profile, Flow]:
    """Read a profile or flow; for a bundle file, take its ``role`` entry."""
    if not isinstance(d, dict):
        raise SchemaError("expected a JSON object")
    if "game" in d and "family" in d:
        if role not in d:
            raise SchemaError(f"bundle has no {role!r}")
        d = d[role]
    if "choices" in d:
        state = Profile(tuple(d["choices"]))
        if game is not None and not isinstance(game, AtomicGame):
            raise SchemaError("profile given for a non-atomic game")
        return state
    if "weights" in d:
        state = Flow(tuple(tuple(read_number(x) for x in w) for w in d["weights"]))
        if game is not None and isinstance(game, AtomicGame):
            raise SchemaError("flow given for an atomic game")
        return state
    raise SchemaError("expected 'choices' (profile) or 'weights' (flow)")


# --- bundles -----------------------------------------------------------------


def bundle_to_dict(bundle) -> dict:
    return {
        "family": bundle.family,
        "game": game_to_dict(bundle.game),
        "equilibrium": state_to_dict(bundle.equilibrium),
        "optimum": state_to_dict(bundle.optimum),
        "expected_epsilon": bundle.expected_epsilon,
        "expected_ratio": bundle.expected_ratio,
        "metadata": _clean(bundle.metadata),
    }


def bundle_from_dict(d: dict):
    from .instances import InstanceBundle

    if game_kind(d) != "bundle":
        raise SchemaError("not an instance bundle")
    game = game_from_dict(d["game"])
    return InstanceBundle(
        family=d["family"],
        game=game,
        equilibrium=state_from_dict(d["equilibrium"], game),
        optimum=state_from_dict(d["optimum"], game),
        expected_epsilon=read_number(d["expected_epsilon"]),
        expected_ratio=read_number(d["expected_ratio"]),
        metadata=d.get("metadata", {}),
    )


# --- results -----------------------------------------------------------------


def equilibrium_set_to_dict(es, include_all: bool = True) -> dict:
    out = {
        "kind": "equilibrium_set",
        "epsilon": report_number(es.epsilon),
        "n_profiles": es.n_profiles,
        "n_equilibria": len(es.equilibria),
        "optimum": list(es.optimum.choices),
        "opt_cost": report_number(es.opt_cost),
        "poa": report_number(es.poa),
        "pos": report_number(es.pos),
        "worst": list(es.worst.choices),
        "best": list(es.best.choices),
        "pos_descent_upper": report_number(es.pos_descent_upper),
        "descent_terminal": None if es.descent_terminal is None else list(es.descent_terminal.choices),
    }
    if include_all:
        out["equilibria"] = [list(p.choices) for p in es.equilibria]
    return out


def trace_to_dict(trace, report=None) -> dict:
    out = {
        "kind": "dynamics",
        "rule": trace.rule,
        "epsilon": report_number(trace.epsilon),
        "start": list(trace.start.choices),
        "terminal": list(trace.terminal.choices),
        "choices": list(trace.terminal.choices),
        "converged": trace.converged,
        "steps": [
            {
                "mover": s.mover,
                "old": s.old,
                "new": s.new,
                "delta": report_number(s.delta),
                "potential": report_number(s.potential),
            }
            for s in trace.steps
        ],
    }
    if report is not None:
        out["epsilon_star"] = report_number(report.epsilon_star)
    return out


def solve_result_to_dict(res, game=None) -> dict:
    out = {
        "kind": "solve_result",
        "objective_name": res.objective_name,
        "epsilon": report_number(res.epsilon),
        "method": res.method,
        "objective": report_number(res.objective),
        "duality_gap": report_number(res.duality_gap),
        "iterations": res.iterations,
        "converged": res.converged,
        # full precision: the flow is meant to be fed back to `verify`
        "weights": [list(map(float, w)) for w in res.flow.weights],
        "notes": list(res.notes),
    }
    if game is not None:
        from .nonatomic import social_cost

        out["social_cost"] = report_number(social_cost(game, res.flow))
    if res.gap_trace:
        out["gap_trace"] = [report_number(g) for g in res.gap_trace]
    return out


# --- files -------------------------------------------------------------------


def load_json(path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc


def dump_json(obj, path=None, fh=None) -> str:
    text = json.dumps(obj, indent=2, allow_nan=False)
    if path is not None:
        with open(path, "w") as out:
            out.write(text + "\n")
    elif fh is not None:
        fh.write(text + "\n")
    return text


def load_game(path):
    return game_from_dict(load_json(path))


def load_state(path, game=None, role: str = "equilibrium"):
    return state_from_dict(load_json(path), game, role)


def load_bundle(path):
    return bundle_from_dict(load_json(path))


__all__ = [
    "SchemaError",
    "ValidationError",
    "report_number",
    "game_to_dict",
    "game_from_dict",
    "game_kind",
    "graph_to_dict",
    "graph_from_dict",
    "state_to_dict",
    "state_from_dict",
    "bundle_to_dict",
    "bundle_from_dict",
    "equilibrium_set_to_dict",
    "trace_to_dict",
    "solve_result_to_dict",
    "load_json",
    "dump_json",
    "load_game",
    "load_state",
    "load_bundle",
]
