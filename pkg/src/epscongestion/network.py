"""Directed routing networks compiled into strategies-as-sets non-atomic games."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

from .atomic import Facility, ValidationError
from .nonatomic import Commodity, NonatomicGame

DEFAULT_PATH_CAP = 10_000


class PathEnumerationError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    id: int
    tail: Hashable
    head: Hashable
    a: float = 0.0
    b: float = 0.0


@dataclass(frozen=True)
class CommoditySpec:
    source: Hashable
    sink: Hashable
    rate: float


@dataclass(frozen=True)
class Graph:
    nodes: tuple
    edges: tuple

    def __post_init__(self):
        nodes = tuple(self.nodes)
        if len(set(nodes)) != len(nodes):
            raise ValidationError("duplicate node ids")
        edges = tuple(e if isinstance(e, Edge) else Edge(**e) for e in self.edges)
        known = set(nodes)
        seen = set()
        for e in edges:
            if e.id in seen:
                raise ValidationError(f"duplicate edge id {e.id}")
            seen.add(e.id)
            if e.tail not in known or e.head not in known:
                raise ValidationError(f"edge {e.id}: endpoint not among the nodes")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    def out_edges(self) -> dict:
        out = {v: [] for v in self.nodes}
        for e in sorted(self.edges, key=lambda e: e.id):
            out[e.tail].append(e)
        return out


def enumerate_paths(graph: Graph, source, sink, cap: int = DEFAULT_PATH_CAP) -> list:
    """All simple directed ``source -> sink`` paths as tuples of edge ids.

    Paths come out in lexicographic order of their edge-id sequences.  Raises
    ``PathEnumerationError`` if there is no path or more than ``cap``.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if source == sink:
        raise ValidationError("source and sink must differ")
    for v in (source, sink):
        if v not in graph.nodes:
            raise ValidationError(f"unknown node {v!r}")
    out = graph.out_edges()
    paths = []
    on_path = {source}
    stack = []

    def visit(v):
        for e in out[v]:
            if e.head in on_path:
                continue
            stack.append(e.id)
            if e.head == sink:
                paths.append(tuple(stack))
                if len(paths) > cap:
                    raise PathEnumerationError(
                        f"more than {cap} simple paths from {source!r} to {sink!r}"
                    )
            else:
                on_path.add(e.head)
                visit(e.head)
                on_path.discard(e.head)
            stack.pop()

    visit(source)
    if not paths:
        raise PathEnumerationError(f"no path from {source!r} to {sink!r}")
    return paths


def expand(graph: Graph, commodities: Sequence[CommoditySpec], cap: int = DEFAULT_PATH_CAP) -> NonatomicGame:
    """Non-atomic game whose facilities are the edges and strategies the simple paths."""
    facilities = tuple(Facility(e.id, e.a, e.b) for e in graph.edges)
    comms = []
    for c in commodities:
        if not c.rate > 0:
            raise ValidationError(f"commodity {c.source!r}->{c.sink!r}: rate must be positive")
        comms.append(Commodity(c.rate, tuple(enumerate_paths(graph, c.source, c.sink, cap))))
    return NonatomicGame(facilities, tuple(comms))


def path_nodes(graph: Graph, path: Sequence[int]) -> list:
    """Node sequence visited by a path given as edge ids in travel order."""
    by_id = {e.id: e for e in graph.edges}
    first = by_id[path[0]]
    nodes = [first.tail]
    for eid in path:
        e = by_id[eid]
        if e.tail != nodes[-1]:
            raise ValidationError(f"edge {eid} does not continue the path")
        nodes.append(e.head)
    return nodes
