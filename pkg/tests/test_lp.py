import itertools
import random

import numpy as np
import pytest

from kdst.generators import layered_dag
from kdst.graph import KdstInstance
from kdst.lp import (
    aggregation_factor,
    build_lp_gst,
    build_lp_kdst,
    build_lp_kdst_star,
    embed_solution,
    flow_avoiding,
    integral_witness,
    restrict_solution,
    split_gst_values,
)
from kdst.oracle import exact_opt, is_feasible, minimalize
from kdst.paths import build_gst_tree, enumerate_paths
from kdst.rounding import monotonize
from kdst.simplex import solve

from desk import diamond, path_instance


def solved(inst):
    ps = enumerate_paths(inst)
    tree = build_gst_tree(ps, inst)
    lp = build_lp_kdst_star(inst, ps)
    sol = solve(lp)
    assert sol.status == "optimal"
    return ps, tree, lp, sol


def eight_vertex_seeds(k=2, count=10):
    out = []
    for seed in range(count):
        out.append(layered_dag(n=8, D=3, p=0.3, k=k, h=2, seed=seed))
    return out


def test_diamond_star_objective():
    assert solve(build_lp_kdst_star(diamond(), enumerate_paths(diamond()))).objective_value == pytest.approx(4)


def test_path_objective():
    inst = path_instance()
    assert solve(build_lp_kdst_star(inst, enumerate_paths(inst))).objective_value == pytest.approx(5)


def test_plain_diamond_objective():
    assert solve(build_lp_kdst(diamond(), enumerate_paths(diamond()))).objective_value == pytest.approx(4)


def test_variable_and_row_names():
    lp = build_lp_kdst_star(diamond(), enumerate_paths(diamond()))
    assert lp.var_names[:4] == ["x_0", "x_1", "x_2", "x_3"]
    assert {"f_0_3", "f_0_4", "y_1", "y_4"} <= set(lp.var_names)
    assert "y_0" not in lp.var_names
    assert np.all(lp.lower == 0)
    assert np.all(lp.upper[[lp.name_index[f"x_{e}"] for e in range(4)]] == 1)
    assert np.all(lp.upper[[lp.name_index[f"y_{p}"] for p in range(1, 5)]] == 1)
    # length-1 rows exist only for root edges; depth-2 edges get only the l=2 row
    assert "c4_0_1" in lp.row_names and "c4_2_1" not in lp.row_names and "c4_2_2" in lp.row_names
    # C3 is emitted for q = p too
    assert "c3_3_0" in lp.row_names


def test_aggregation_factor():
    assert [aggregation_factor(3, ell) for ell in (1, 2, 3, 4)] == [1, 1, 3, 9]


@pytest.mark.parametrize("inst", eight_vertex_seeds(), ids=lambda i: f"m{i.graph.edge_count}")
def test_plain_below_star_below_opt(inst):
    ps = enumerate_paths(inst)
    star = solve(build_lp_kdst_star(inst, ps)).objective_value
    plain = solve(build_lp_kdst(inst, ps)).objective_value
    opt = exact_opt(inst).cost
    assert plain <= star + 1e-9 * max(1, star)
    assert star <= opt * (1 + 1e-6)


def test_gst_diamond():
    inst = diamond()
    tree = build_gst_tree(enumerate_paths(inst), inst)
    lp = build_lp_gst(tree)
    assert solve(lp).objective_value == pytest.approx(2)
    # hand point: one unit of flow split over the two group nodes
    x = np.array([0.5, 0.5, 0.5, 0.5])
    point = np.concatenate([x, [0.5, 0.5]])
    assert lp.max_violation(point) <= 1e-12 and lp.evaluate(point) == pytest.approx(2)


def test_gst_single_path_and_root_child_group():
    inst = path_instance(costs=(2.0, 3.0, 4.0), D=3)
    tree = build_gst_tree(enumerate_paths(inst), inst)
    assert solve(build_lp_gst(tree)).objective_value == pytest.approx(9)
    star = KdstInstance.build(3, [(0, 1, 7.0), (0, 2, 1.0)], 0, [1], 1, 1)
    tree = build_gst_tree(enumerate_paths(star), star)
    assert solve(build_lp_gst(tree)).objective_value == pytest.approx(7)


def test_embed_integral_diamond():
    ps, tree, lp, sol = solved(diamond())
    emb = embed_solution(sol, lp, tree)
    xhat, fhat = split_gst_values(emb.values, tree)
    assert np.allclose(xhat, 1) and np.allclose(fhat[0], 1)


@pytest.mark.parametrize("inst", eight_vertex_seeds(), ids=lambda i: f"m{i.graph.edge_count}")
def test_embedded_and_monotonized_points_feasible_for_gst(inst):
    ps, tree, lp, sol = solved(inst)
    gst = build_lp_gst(tree)
    emb = embed_solution(sol, lp, tree)
    assert gst.max_violation(emb.values) <= 1e-6
    xhat, fhat = split_gst_values(emb.values, tree)
    mono = np.concatenate([monotonize(tree, xhat)] + fhat)
    assert gst.max_violation(mono) <= 1e-6
    # embedding cost bound
    bound = inst.k ** (inst.depth_bound - 2) * sol.objective_value
    assert float(tree.edge_cost @ xhat) <= bound * (1 + 1e-9)


def test_restrict_empty_is_identity():
    ps, tree, lp, sol = solved(diamond())
    emb = embed_solution(sol, lp, tree)
    assert np.array_equal(restrict_solution(emb, tree, []).values, emb.values)


def test_restrict_diamond_one_edge():
    inst = diamond()
    ps, tree, lp, sol = solved(inst)
    emb = embed_solution(sol, lp, tree)
    at = inst.graph.edge_id(1, 3)
    r = restrict_solution(emb, tree, [at])
    _, fr = split_gst_values(r.values, tree)
    grp = list(tree.groups[0])
    through = grp.index(ps.index_of([inst.graph.edge_id(0, 1), at]))
    assert fr[0][through] == 0 and fr[0].sum() >= 1 - 1e-9
    assert flow_avoiding(sol, lp, inst, ps, [at])[0] >= 1 - 1e-9


@pytest.mark.parametrize("seed", range(20))
def test_single_edge_restriction_keeps_unit_flow(seed):
    inst = layered_dag(n=8, D=3, p=0.3, k=2, h=2, seed=seed)
    ps, tree, lp, sol = solved(inst)
    emb = embed_solution(sol, lp, tree)
    for e in range(inst.graph.edge_count):
        _, fr = split_gst_values(restrict_solution(emb, tree, [e]).values, tree)
        assert all(f.sum() >= 1 - 1e-6 for f in fr)


def _instances_for_witness():
    rng = random.Random(5)
    for seed in range(12):
        n = rng.randint(5, 8)
        k = rng.choice([1, 2])
        yield layered_dag(n=n, D=rng.choice([2, 3]), p=0.4, k=k, h=min(2, n - 4), seed=seed)


@pytest.mark.parametrize("inst", list(_instances_for_witness()), ids=lambda i: f"n{i.graph.vertex_count}k{i.k}")
def test_integral_witness_of_minimal_solutions(inst):
    ps = enumerate_paths(inst)
    lp = build_lp_kdst_star(inst, ps)
    m = inst.graph.edge_count
    checked = 0
    for size in range(m + 1):
        for H in itertools.combinations(range(m), size):
            if not is_feasible(inst, H) or minimalize(H, inst) != frozenset(H):
                continue
            w = integral_witness(H, inst, ps, lp)
            assert w is not None
            assert lp.max_violation(w) <= 1e-9, lp.violated_rows(w)
            checked += 1
            if checked >= 40:
                return
    assert checked > 0


def test_row_cap():
    from kdst.errors import ResourceCapError

    with pytest.raises(ResourceCapError):
        build_lp_kdst_star(diamond(), enumerate_paths(diamond()), max_rows=3)
