import random
from collections import Counter

import pytest

from kdst.errors import PathBlowupError, TerminalUnreachableError
from kdst.graph import KdstInstance
from kdst.paths import (
    build_gst_tree,
    enumerate_paths,
    find_disjoint_paths,
    map_tree_edges_to_graph,
)

from desk import diamond, path_instance


def dfs_paths(inst: KdstInstance):
    """Every simple rooted path of length <= D as a tuple of edge ids (naive recursion)."""
    g, out = inst.graph, [()]

    def go(v, seen, edges):
        if len(edges) == inst.depth_bound:
            return
        for e in range(g.edge_count):
            u, w, _ = g.edges[e]
            if u == v and w not in seen:
                out.append(edges + (e,))
                go(w, seen | {w}, edges + (e,))

    go(inst.root, {inst.root}, ())
    return out


def random_instance(seed, n=8, D=3, p=0.35):
    rng = random.Random(seed)
    edges = [(u, v, float(rng.randint(1, 9))) for u in range(n) for v in range(1, n) if u != v and rng.random() < p]
    return KdstInstance.build(n, edges, 0, [n - 1], 1, D)


def test_path_graph_paths():
    ps = enumerate_paths(path_instance())
    assert len(ps) == 3
    assert [ps.vertices_of(p) for p in range(3)] == [(0,), (0, 1), (0, 1, 2)]


def test_diamond_paths():
    ps = enumerate_paths(diamond())
    assert [ps.vertices_of(p) for p in range(len(ps))] == [(0,), (0, 1), (0, 2), (0, 1, 3), (0, 2, 3)]
    assert ps.ancestors(3) == [3, 1]
    assert ps.is_prefix(1, 3) and ps.is_prefix(3, 3) and not ps.is_prefix(2, 3)
    assert ps.index_of([1, 3]) == 4


@pytest.mark.parametrize("seed", range(50))
def test_counts_match_dfs_oracle(seed):
    inst = random_instance(seed, n=random.Random(seed).randint(5, 10))
    ps = enumerate_paths(inst)
    oracle = dfs_paths(inst)
    assert sorted(ps.edges_of(p) for p in range(len(ps))) == sorted(oracle)
    for e in range(inst.graph.edge_count):
        for ell in range(1, inst.depth_bound + 1):
            expect = sum(1 for q in oracle if q and q[-1] == e and len(q) <= ell)
            assert len(ps.ending_at_edge(e, ell)) == expect
    by_vertex = Counter(inst.graph.edges[q[-1]][1] for q in oracle if q)
    for v in range(1, inst.graph.vertex_count):
        assert len(ps.ending_at_vertex(v)) == by_vertex[v]


def test_bfs_order_and_child_ordering():
    inst = random_instance(3)
    ps = enumerate_paths(inst)
    lengths = [ps.length[p] for p in range(len(ps))]
    assert lengths == sorted(lengths)
    keys = [(ps.parent[p], ps.end_vertex[p], ps.last_edge[p]) for p in range(1, len(ps))]
    assert keys == sorted(keys)


def test_path_cap_names_count():
    inst = random_instance(1, n=10, p=0.8)
    with pytest.raises(PathBlowupError, match="10"):
        enumerate_paths(inst, cap=10)


def test_diamond_tree():
    inst = diamond()
    tree = build_gst_tree(enumerate_paths(inst), inst)
    assert tree.node_count == 5 and tree.edge_count == 4
    assert [sorted(tree.paths.vertices_of(int(p)) for p in g) for g in tree.groups] == [[(0, 1, 3), (0, 2, 3)]]
    assert "digraph" in tree.to_dot()


def test_unreachable_terminal():
    inst = path_instance(D=1)
    with pytest.raises(TerminalUnreachableError, match="unreachable within 1 hop"):
        build_gst_tree(enumerate_paths(inst), inst)


@pytest.mark.parametrize("seed", range(10))
def test_group_sizes_and_tree_costs(seed):
    inst = random_instance(seed)
    ps = enumerate_paths(inst)
    try:
        tree = build_gst_tree(ps, inst)
    except TerminalUnreachableError:
        pytest.skip("terminal unreachable for this seed")
    oracle = dfs_paths(inst)
    t = inst.terminals[0]
    assert len(tree.groups[0]) == sum(1 for q in oracle if q and inst.graph.edges[q[-1]][1] == t)
    assert tree.edge_count == len(ps) - 1
    for node in range(1, tree.node_count):
        tree_cost = sum(tree.edge_cost[j] for j in tree.path_edges(node))
        graph_cost = sum(inst.graph.edges[e][2] for e in ps.edges_of(node))
        assert tree_cost == pytest.approx(graph_cost)
        assert [tree.edge_origin[j] for j in tree.path_edges(node)] == list(ps.edges_of(node))


def test_map_tree_edges():
    inst = diamond()
    tree = build_gst_tree(enumerate_paths(inst), inst)
    into_group = [j for j in range(tree.edge_count) if tree.edge_depth[j] == 2]
    assert map_tree_edges_to_graph([], tree) == frozenset()
    assert map_tree_edges_to_graph(into_group, tree) == {inst.graph.edge_id(1, 3), inst.graph.edge_id(2, 3)}
    assert map_tree_edges_to_graph(range(4), tree) == frozenset(range(4))


def test_find_disjoint_paths():
    cands = [(0, 1), (0, 2), (3, 4)]
    assert find_disjoint_paths(cands, 2) in ([0, 2], [1, 2])
    assert find_disjoint_paths(cands, 3) is None
