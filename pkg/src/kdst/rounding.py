"""Randomized tree rounding on the suffix tree and the repeated-union
algorithm for k-DST, DST and the rootless k-edge-connected subgraph."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import InfeasibleError, RestartsExhaustedError
from .graph import DirectedGraph, KdstInstance, cost as edge_cost
from .lp import LpSolution, build_lp_kdst_star, embed_solution, split_gst_values
from .oracle import is_feasible
from .paths import DEFAULT_PATH_CAP, GstTree, build_gst_tree, enumerate_paths, map_tree_edges_to_graph
from .simplex import SolverConfig, solve


@dataclass(frozen=True)
class RoundingConfig:
    rng_seed: int = 0
    iteration_override: int | None = None
    repeat_constant: float = 2.0
    max_restarts: int = 20
    threads: int = 1
    path_cap: int = DEFAULT_PATH_CAP

    def __post_init__(self):
        if self.repeat_constant <= 0:
            raise ValueError("repeat constant must be positive")
        if self.max_restarts < 1:
            raise ValueError("max_restarts must be at least 1")


@dataclass
class Attempt:
    tree_edges: list[list[int]]
    graph_edges: list[list[int]]
    round_costs: list[float]
    union: list[int]
    union_cost: float
    feasible: bool


@dataclass
class RoundingTranscript:
    seed: int
    iterations: int
    lp_value: float
    xhat_cost: float
    attempts: list[Attempt] = field(default_factory=list)

    @property
    def restarts(self) -> int:
        return max(len(self.attempts) - 1, 0)

    @property
    def final(self) -> Attempt:
        return self.attempts[-1]

    @property
    def feasible(self) -> bool:
        return bool(self.attempts) and self.final.feasible

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "iterations": self.iterations,
            "lp_value": self.lp_value,
            "xhat_cost": self.xhat_cost,
            "restarts": self.restarts,
            "feasible": self.feasible,
            "union_cost": self.final.union_cost if self.attempts else None,
            "attempts": [asdict(a) for a in self.attempts],
        }


def monotonize(tree: GstTree, xhat: np.ndarray) -> np.ndarray:
    """Clip every tree edge value to the (already clipped) value of its parent edge."""
    out = np.array(xhat, dtype=float, copy=True)
    parent = tree.parent_edge
    for level in tree.levels[1:]:
        out[level] = np.minimum(out[level], out[parent[level]])
    return out


def marking_probabilities(tree: GstTree, xhat: np.ndarray) -> np.ndarray:
    parent = tree.parent_edge
    above = np.where(parent >= 0, xhat[np.maximum(parent, 0)], 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(above > 0, xhat / np.where(above > 0, above, 1.0), 0.0)
    return np.clip(p, 0.0, 1.0)


def gkr_round(tree: GstTree, xhat: np.ndarray, rng: np.random.Generator,
              probs: np.ndarray | None = None) -> np.ndarray:
    """One rounding pass; returns the selected tree edge ids (sorted).

    Every edge is marked independently with probability x_e / x_parent(e);
    an edge is kept when it and all of its ancestors are marked.
    """
    if probs is None:
        probs = marking_probabilities(tree, xhat)
    marked = rng.random(tree.edge_count) < probs
    keep = marked.copy()
    parent = tree.parent_edge
    for level in tree.levels[1:]:
        keep[level] &= keep[parent[level]]
    return np.flatnonzero(keep)


def iteration_count(c: float, D: int, k: int, n: int) -> int:
    return max(1, math.ceil(c * D * k * math.log2(n))) if n > 1 else 1


def dst_iteration_count(c: float, D: int, h: int) -> int:
    return max(1, math.ceil(c * D * math.log2(h + 1)))


def _round_stream(seed: int, attempt: int, i: int) -> np.random.Generator:
    return np.random.default_rng([seed, attempt, i])


@dataclass
class PreparedInstance:
    """LP solution and embedding shared by every rounding attempt."""

    instance: KdstInstance
    tree: GstTree
    lp_solution: LpSolution
    xhat_raw: np.ndarray
    xhat: np.ndarray

    @property
    def lp_value(self) -> float:
        return self.lp_solution.objective_value


def prepare(instance: KdstInstance, config: RoundingConfig = RoundingConfig(),
            solver: SolverConfig | None = None) -> PreparedInstance:
    paths = enumerate_paths(instance, cap=config.path_cap)
    tree = build_gst_tree(paths, instance)
    lp = build_lp_kdst_star(instance, paths)
    sol = solve(lp, solver)
    if sol.status != "optimal":
        raise InfeasibleError(f"strengthened LP is {sol.status}")
    emb = embed_solution(sol, lp, tree)
    xhat_raw, _ = split_gst_values(emb.values, tree)
    return PreparedInstance(instance, tree, sol, xhat_raw, monotonize(tree, xhat_raw))


def prepared_from_values(instance: KdstInstance, values: dict[str, float],
                         config: RoundingConfig = RoundingConfig()) -> PreparedInstance:
    """Rebuild the embedding from a saved LP solution (variable name -> value)."""
    paths = enumerate_paths(instance, cap=config.path_cap)
    tree = build_gst_tree(paths, instance)
    lp = build_lp_kdst_star(instance, paths)
    vec = np.zeros(lp.num_vars)
    for name, val in values.items():
        if name in lp.name_index:
            vec[lp.name_index[name]] = float(val)
    sol = LpSolution(vec, lp.evaluate(vec), "optimal")
    emb = embed_solution(sol, lp, tree)
    xhat_raw, _ = split_gst_values(emb.values, tree)
    return PreparedInstance(instance, tree, sol, xhat_raw, monotonize(tree, xhat_raw))


def round_union(prep: PreparedInstance, N: int, config: RoundingConfig, attempt: int = 0) -> Attempt:
    tree, inst = prep.tree, prep.instance
    probs = marking_probabilities(tree, prep.xhat)

    def one(i: int):
        sel = gkr_round(tree, prep.xhat, _round_stream(config.rng_seed, attempt, i), probs)
        mapped = sorted(map_tree_edges_to_graph(sel, tree))
        return sel.tolist(), mapped

    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            rounds = list(pool.map(one, range(N)))
    else:
        rounds = [one(i) for i in range(N)]
    union = sorted(set().union(*(set(m) for _, m in rounds)))
    return Attempt(
        tree_edges=[t for t, _ in rounds],
        graph_edges=[m for _, m in rounds],
        round_costs=[edge_cost(m, inst.graph) for _, m in rounds],
        union=union,
        union_cost=edge_cost(union, inst.graph),
        feasible=is_feasible(inst, union),
    )


def run_rounding(prep: PreparedInstance, N: int, config: RoundingConfig,
                 raise_on_failure: bool = True) -> tuple[frozenset[int], RoundingTranscript]:
    tr = RoundingTranscript(
        seed=config.rng_seed,
        iterations=N,
        lp_value=prep.lp_value,
        xhat_cost=float(prep.tree.edge_cost @ prep.xhat),
    )
    for attempt in range(config.max_restarts + 1):
        a = round_union(prep, N, config, attempt)
        tr.attempts.append(a)
        if a.feasible:
            return frozenset(a.union), tr
    if raise_on_failure:
        raise RestartsExhaustedError(len(tr.attempts), tr)
    return frozenset(tr.final.union), tr


def run_algorithm_kdst(instance: KdstInstance, config: RoundingConfig = RoundingConfig(),
                       solver: SolverConfig | None = None) -> tuple[frozenset[int], RoundingTranscript]:
    prep = prepare(instance, config, solver)
    N = config.iteration_override or iteration_count(
        config.repeat_constant, instance.depth_bound, instance.k, instance.graph.vertex_count
    )
    return run_rounding(prep, N, config)


def run_algorithm_dst(instance: KdstInstance, config: RoundingConfig = RoundingConfig(),
                      solver: SolverConfig | None = None) -> tuple[frozenset[int], RoundingTranscript]:
    if instance.k != 1:
        raise ValueError("the DST specialization needs k = 1")
    prep = prepare(instance, config, solver)
    N = config.iteration_override or dst_iteration_count(config.repeat_constant, instance.depth_bound, instance.h)
    return run_rounding(prep, N, config)


@dataclass
class SubgraphResult:
    edges: frozenset[int]
    hub: int
    out_transcript: RoundingTranscript
    in_transcript: RoundingTranscript


def run_steiner_subgraph(
    graph: DirectedGraph,
    terminals: Sequence[int],
    k: int,
    depth_bound: int,
    config: RoundingConfig = RoundingConfig(),
    solver: SolverConfig | None = None,
) -> SubgraphResult:
    """k-edge-connect a terminal set through the first terminal as hub.

    One rooted run reaches every other terminal from the hub; a second run on
    the reversed graph reaches the hub from every terminal. Edge connectivity
    is transitive, so the union connects every ordered pair.
    """
    if len(terminals) < 2:
        raise ValueError("need at least two terminals")
    hub, rest = terminals[0], list(terminals[1:])
    n = graph.vertex_count

    out_inst = KdstInstance.build(n, graph.edges, hub, rest, k, depth_bound)
    out_edges, out_tr = run_algorithm_kdst(out_inst, config, solver)
    rev = graph.reversed()
    in_inst = KdstInstance.build(n, rev.edges, hub, rest, k, depth_bound)
    in_edges, in_tr = run_algorithm_kdst(in_inst, config, solver)

    result = set()
    for e in out_edges:
        u, v, _ = out_inst.graph.edges[e]
        result.add(graph.edge_id(u, v))
    for e in in_edges:
        u, v, _ = in_inst.graph.edges[e]
        result.add(graph.edge_id(v, u))
    return SubgraphResult(frozenset(result), hub, out_tr, in_tr)
