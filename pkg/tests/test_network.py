import networkx as nx
import numpy as np
import pytest

from epscongestion import nonatomic as N
from epscongestion.atomic import ValidationError
from epscongestion.instances import routing_graph, routing_poa_lb
from epscongestion.network import (
    CommoditySpec,
    Edge,
    Graph,
    PathEnumerationError,
    enumerate_paths,
    expand,
    path_nodes,
)


def pigou_graph():
    return Graph(("s", "t"), (Edge(0, "s", "t", 1, 0), Edge(1, "s", "t", 0, 1)))


def nx_paths(graph, s, t):
    g = nx.MultiDiGraph()
    g.add_nodes_from(graph.nodes)
    for e in graph.edges:
        g.add_edge(e.tail, e.head, key=e.id)
    return sorted(tuple(k for _, _, k in p) for p in nx.all_simple_edge_paths(g, s, t))


def random_dag(rng, n=6, p=0.5):
    nodes = tuple(range(n))
    edges = []
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < p:
                edges.append(Edge(len(edges), u, v, float(rng.integers(0, 3)), float(rng.integers(0, 3))))
    return Graph(nodes, tuple(edges))


def test_pigou_paths_and_expansion():
    g = pigou_graph()
    assert enumerate_paths(g, "s", "t") == [(0,), (1,)]
    game = expand(g, [CommoditySpec("s", "t", 1.0)])
    assert len(game.commodities) == 1 and game.commodities[0].strategies == ((0,), (1,))


def test_single_edge():
    g = Graph(("s", "t"), (Edge(0, "s", "t"),))
    assert enumerate_paths(g, "s", "t") == [(0,)]


def test_errors():
    g = pigou_graph()
    with pytest.raises(PathEnumerationError, match="no path"):
        enumerate_paths(g, "t", "s")
    with pytest.raises(PathEnumerationError, match="more than 1"):
        enumerate_paths(g, "s", "t", cap=1)
    with pytest.raises(ValueError):
        enumerate_paths(g, "s", "t", cap=0)
    with pytest.raises(ValidationError):
        enumerate_paths(g, "s", "s")
    with pytest.raises(ValidationError):
        Graph(("s",), (Edge(0, "s", "x"),))
    with pytest.raises(ValidationError):
        Graph(("s", "t"), (Edge(0, "s", "t"), Edge(0, "t", "s")))
    with pytest.raises(ValidationError):
        expand(g, [CommoditySpec("s", "t", 0.0)])


@pytest.mark.parametrize("seed", range(25))
def test_paths_match_networkx(seed):
    rng = np.random.default_rng(seed)
    g = random_dag(rng)
    try:
        ours = enumerate_paths(g, 0, 5)
    except PathEnumerationError:
        assert nx_paths(g, 0, 5) == []
        return
    assert ours == sorted(ours)
    assert ours == nx_paths(g, 0, 5)
    for p in ours:
        nodes = path_nodes(g, p)
        assert len(nodes) == len(set(nodes)) and nodes[0] == 0 and nodes[-1] == 5


@pytest.mark.parametrize("seed", range(10))
def test_expanded_costs_match_edge_costs(seed):
    rng = np.random.default_rng(seed)
    g = random_dag(rng, p=0.6)
    try:
        game = expand(g, [CommoditySpec(0, 5, 1.5), CommoditySpec(1, 4, 0.5)])
    except PathEnumerationError:
        pytest.skip("no path for this draw")
    f = N.random_flow(game, rng)
    edge_flow = {e.id: 0.0 for e in g.edges}
    for com, ws in zip(game.commodities, f.weights):
        for p, w in zip(com.strategies, ws):
            for eid in p:
                edge_flow[eid] += w
    by_id = {e.id: e for e in g.edges}
    edge_cost = sum((by_id[i].a * x + by_id[i].b) * x for i, x in edge_flow.items())
    assert N.social_cost(game, f) == pytest.approx(edge_cost, rel=1e-12, abs=1e-12)
    lat = N.strategy_latencies(game, f)
    for com, ls in zip(game.commodities, lat):
        for p, l in zip(com.strategies, ls):
            direct = sum(by_id[i].a * edge_flow[i] + by_id[i].b for i in p)
            assert l == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_routing_graph_contains_designated_paths():
    b = routing_poa_lb(0.5)
    g = b.metadata["graph"]
    for r, com in zip((1, 2, 3), b.game.commodities):
        assert enumerate_paths(g, str(r), f"{r}'") == nx_paths(g, str(r), f"{r}'")
        assert len(com.strategies) >= 2
    # all-S2 flow loads every alpha edge with 2
    fe = N.facility_flows(b.game, b.equilibrium)
    alpha = [e.id for e in g.edges if e.tail.startswith("u") and e.head.startswith("v")]
    assert [fe[i] for i in alpha] == [2.0, 2.0, 2.0]


def test_zero_latency_edges_carried():
    g = routing_graph(1.0)
    zero = [e for e in g.edges if e.a == 0 and e.b == 0]
    assert zero
    game = expand(g, [CommoditySpec("1", "1'", 1.0)])
    assert {f.id for f in game.facilities} == {e.id for e in g.edges}
