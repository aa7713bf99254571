import json
import math

import numpy as np
import pytest

from kdst.errors import RestartsExhaustedError
from kdst.generators import layered_dag, strongly_connected
from kdst.graph import DirectedGraph, KdstInstance, cost
from kdst.oracle import exact_opt, max_flow_value, verify
from kdst.paths import build_gst_tree, enumerate_paths
from kdst.rounding import (
    RoundingConfig,
    dst_iteration_count,
    gkr_round,
    iteration_count,
    monotonize,
    prepare,
    run_algorithm_dst,
    run_algorithm_kdst,
    run_rounding,
    run_steiner_subgraph,
)

from desk import diamond, path_instance


def tree_of(inst):
    return build_gst_tree(enumerate_paths(inst), inst)


def test_all_ones_and_all_zeros():
    tree = tree_of(path_instance(costs=(1, 1, 1), D=3))
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert list(gkr_round(tree, np.ones(tree.edge_count), rng)) == [0, 1, 2]
        assert len(gkr_round(tree, np.zeros(tree.edge_count), rng)) == 0


def test_diamond_half_marginals():
    tree = tree_of(diamond())
    x = np.full(tree.edge_count, 0.5)
    rng = np.random.default_rng(1)
    hits = np.zeros(tree.edge_count)
    trials = 10_000
    for _ in range(trials):
        hits[gkr_round(tree, x, rng)] += 1
    # depth-2 edges are marked with probability 1 below a marked parent
    assert np.allclose(hits / trials, 0.5, atol=0.02)


def test_monotonize():
    tree = tree_of(diamond())
    mono = np.array([0.5, 0.4, 0.3, 0.2])
    assert np.array_equal(monotonize(tree, mono), mono)
    x = np.array([0.4, 0.4, 0.9, 0.1])
    assert monotonize(tree, x).tolist() == [0.4, 0.4, 0.4, 0.1]


def test_zero_parent_gives_zero_child():
    tree = tree_of(diamond())
    x = monotonize(tree, np.array([0.0, 1.0, 1.0, 1.0]))
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert not set(gkr_round(tree, x, rng)) & {0, 2}


def test_iteration_counts():
    assert iteration_count(2, 2, 2, 4) == 16
    assert iteration_count(2, 3, 2, 10) == math.ceil(12 * math.log2(10))
    assert dst_iteration_count(2, 2, 1) == 4


def test_path_instance_end_to_end():
    H, tr = run_algorithm_kdst(path_instance())
    assert H == frozenset({0, 1}) and tr.final.union_cost == 5 and tr.restarts == 0


def test_diamond_end_to_end():
    H, tr = run_algorithm_kdst(diamond())
    assert H == frozenset(range(4)) and tr.iterations == 16
    assert all(set(z) == set(range(4)) for z in tr.final.graph_edges)


def test_dst_single_path_and_star():
    H, _ = run_algorithm_dst(path_instance())
    assert cost(H, path_instance().graph) == 5
    star = KdstInstance.build(5, [(0, 1, 1.0), (1, 2, 1.0), (0, 3, 2.0), (3, 4, 2.0)], 0, [2, 4], 1, 2)
    H, _ = run_algorithm_dst(star)
    assert H == frozenset(range(4))
    with pytest.raises(ValueError):
        run_algorithm_dst(diamond())


@pytest.mark.parametrize("seed", range(10))
def test_layered_seeds_cost_bound(seed):
    inst = layered_dag(n=10, D=3, p=0.3, k=2, h=2, seed=seed)
    H, tr = run_algorithm_kdst(inst, RoundingConfig(rng_seed=seed))
    assert verify(H, inst).feasible
    bound = tr.iterations * inst.k ** (inst.depth_bound - 2) * tr.lp_value
    assert cost(H, inst.graph) <= bound * (1 + 1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_dst_cost_against_oracle(seed):
    inst = layered_dag(n=9, D=3, p=0.3, k=1, h=3, seed=seed)
    H, _ = run_algorithm_dst(inst, RoundingConfig(rng_seed=seed))
    ratio = cost(H, inst.graph) / exact_opt(inst).cost
    assert ratio <= 4 * inst.depth_bound * math.log2(inst.h + 1)


def test_restart_exhaustion_and_transcript():
    # fractional LP point with a single round: the union is often infeasible
    inst = KdstInstance.build(
        7,
        [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 4, 0.0), (1, 5, 0.0), (2, 5, 0.0),
         (2, 6, 0.0), (3, 4, 0.0), (3, 6, 0.0)],
        0, [4, 5, 6], 1, 2)
    prep = prepare(inst)
    assert prep.lp_value == pytest.approx(1.5)
    cfg = RoundingConfig(rng_seed=0, max_restarts=1)
    with pytest.raises(RestartsExhaustedError) as err:
        for seed in range(50):
            run_rounding(prep, 1, RoundingConfig(rng_seed=seed, max_restarts=1))
    assert err.value.exit_code == 3
    _, tr = run_rounding(prep, 1, cfg, raise_on_failure=False)
    data = json.loads(json.dumps(tr.to_json(), default=float))
    assert data["iterations"] == 1 and len(data["attempts"]) == tr.restarts + 1


def test_parallel_rounds_match_serial():
    inst = layered_dag(n=10, D=3, p=0.3, k=2, h=2, seed=4)
    a = run_algorithm_kdst(inst, RoundingConfig(rng_seed=9, threads=1))[1].to_json()
    b = run_algorithm_kdst(inst, RoundingConfig(rng_seed=9, threads=4))[1].to_json()
    assert a == b


def test_subgraph_two_cycles():
    # a=0, b=1; routes a->2->b and b->3->a
    g = DirectedGraph.from_edges(4, [(0, 2, 1.0), (1, 3, 1.0), (2, 1, 1.0), (3, 0, 1.0)])
    res = run_steiner_subgraph(g, [0, 1], 1, 2)
    pairs = [(g.edges[e][0], g.edges[e][1]) for e in res.edges]
    assert res.edges == frozenset(range(4)) and cost(res.edges, g) == 4
    assert max_flow_value(4, pairs, 0, 1) == 1 and max_flow_value(4, pairs, 1, 0) == 1


def test_subgraph_bidirected_star():
    edges = sorted([(0, v, 1.0) for v in (1, 2, 3)] + [(v, 0, 1.0) for v in (1, 2, 3)])
    g = DirectedGraph.from_edges(4, edges)
    res = run_steiner_subgraph(g, [1, 2, 3], 1, 2)
    assert res.edges == frozenset(range(6))


@pytest.mark.parametrize("seed", range(5))
def test_subgraph_random_strongly_connected(seed):
    g, terms, k, D = strongly_connected(n=8, k=2, h=3, D=3, seed=seed)
    res = run_steiner_subgraph(g, terms, k, D, RoundingConfig(rng_seed=seed))
    pairs = [(g.edges[e][0], g.edges[e][1]) for e in res.edges]
    for s in terms:
        for t in terms:
            if s != t:
                assert max_flow_value(g.vertex_count, pairs, s, t) >= k


def _reaches(pairs, root, t):
    adj = {}
    for u, v in pairs:
        adj.setdefault(u, []).append(v)
    seen, stack = {root}, [root]
    while stack:
        u = stack.pop()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return t in seen


@pytest.mark.parametrize("seed", [0, 4])
def test_single_edge_resilience(seed):
    from kdst.generators import cover_dag
    from kdst.paths import map_tree_edges_to_graph

    inst = cover_dag(k=2, D=3, seed=seed)
    prep = prepare(inst)
    rng = np.random.default_rng(seed)
    rounds = [map_tree_edges_to_graph(gkr_round(prep.tree, prep.xhat, rng), prep.tree) for _ in range(10_000)]
    g = inst.graph
    floor = 1 / (8 * inst.depth_bound)
    for F in range(g.edge_count):
        for t in inst.terminals:
            hits = sum(_reaches([g.edges[e][:2] for e in z if e != F], inst.root, t) for z in rounds)
            assert hits / len(rounds) >= floor
