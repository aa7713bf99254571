"""Deterministic desk-scale instance families."""

from __future__ import annotations

import random
from typing import Callable

from .errors import ConfigError
from .graph import DirectedGraph, KdstInstance


def diamond_family(width: int = 2, k: int = 2, cost: float = 1.0, seed: int | None = None) -> KdstInstance:
    """Root 0, middle vertices 1..width, terminal width+1; every edge costs ``cost``."""
    if width < 1 or k < 1:
        raise ConfigError("diamond-family needs width >= 1 and k >= 1")
    t = width + 1
    edges = [(0, a, cost) for a in range(1, width + 1)] + [(a, t, cost) for a in range(1, width + 1)]
    return KdstInstance.build(width + 2, edges, 0, [t], k, 2)


def path_family(length: int = 2, costs: list[float] | None = None, k: int = 1, seed: int | None = None) -> KdstInstance:
    """r = 0 -> 1 -> ... -> length, terminal at the end."""
    if length < 1:
        raise ConfigError("path-family needs length >= 1")
    costs = costs or [1.0] * length
    if len(costs) != length:
        raise ConfigError("path-family: len(costs) must equal length")
    edges = [(i, i + 1, float(c)) for i, c in enumerate(costs)]
    return KdstInstance.build(length + 1, edges, 0, [length], k, length)


def _draw_cost(rng: random.Random, lo: float, hi: float, integer: bool) -> float:
    return float(rng.randint(int(lo), int(hi))) if integer else round(rng.uniform(lo, hi), 6)


def _layer_sizes(n: int, D: int, k: int, rng: random.Random) -> list[int]:
    rest = n - 1
    if rest < D or (D > 1 and rest < k * (D - 1) + 1):
        raise ConfigError(f"layered-dag: n={n} too small for D={D}, k={k}")
    sizes = [k] * (D - 1) + [1]
    for _ in range(rest - sum(sizes)):
        sizes[rng.randrange(D)] += 1
    return sizes


def layered_dag(
    n: int = 10,
    D: int = 3,
    p: float = 0.3,
    k: int = 2,
    h: int = 2,
    cost_lo: float = 1,
    cost_hi: float = 10,
    integer_costs: bool = True,
    seed: int = 0,
) -> KdstInstance:
    """Layered DAG (root in layer 0, edges only between consecutive layers).

    For every terminal, k vertex-disjoint root paths are planted through
    the intermediate layers before random edges are added with probability
    ``p``, so every terminal has k edge-disjoint paths of length <= D.
    """
    if not 0 <= p <= 1:
        raise ConfigError("edge probability must lie in [0, 1]")
    if D < 1 or k < 1 or h < 1:
        raise ConfigError("layered-dag needs D, k, h >= 1")
    if k > 1 and D < 2:
        raise ConfigError("k >= 2 needs D >= 2 in a simple layered graph")
    rng = random.Random(seed)
    sizes = _layer_sizes(n, D, k, rng)
    layers: list[list[int]] = [[0]]
    nxt = 1
    for s in sizes:
        layers.append(list(range(nxt, nxt + s)))
        nxt += s

    min_layer = 1 if k == 1 else 2
    pool = [v for lv in range(min_layer, D + 1) for v in layers[lv]]
    if len(pool) < h:
        raise ConfigError(f"layered-dag: only {len(pool)} candidate terminals for h={h}")
    terminals = sorted(rng.sample(pool, h))
    layer_of = {v: i for i, lv in enumerate(layers) for v in lv}

    pairs: set[tuple[int, int]] = set()
    for t in terminals:
        L = layer_of[t]
        picks = [rng.sample(layers[i], k) for i in range(1, L)]
        for j in range(k):
            walk = [0] + [picks[i][j] for i in range(L - 1)] + [t]
            pairs.update(zip(walk, walk[1:]))
    for i in range(D):
        for u in layers[i]:
            for v in layers[i + 1]:
                if rng.random() < p:
                    pairs.add((u, v))
    edges = [(u, v, _draw_cost(rng, cost_lo, cost_hi, integer_costs)) for u, v in sorted(pairs)]
    return KdstInstance.build(n, edges, 0, terminals, k, D)


def strongly_connected(
    n: int = 8,
    k: int = 2,
    h: int = 3,
    D: int = 3,
    p: float = 0.15,
    cost_lo: float = 1,
    cost_hi: float = 10,
    integer_costs: bool = True,
    seed: int = 0,
) -> tuple[DirectedGraph, list[int], int, int]:
    """Rootless instance for the k-edge-connected Steiner subgraph problem.

    k hub vertices are joined to every terminal in both directions, so each
    ordered terminal pair has k edge-disjoint two-hop paths; a Hamiltonian
    cycle makes the whole graph strongly connected. Returns
    (graph, terminals, k, D).
    """
    if n < k + h:
        raise ConfigError(f"strongly-connected: n={n} too small for k={k}, h={h}")
    if D < 2:
        raise ConfigError("strongly-connected needs D >= 2")
    rng = random.Random(seed)
    verts = list(range(n))
    rng.shuffle(verts)
    hubs, terminals = verts[:k], sorted(verts[k:k + h])
    pairs: set[tuple[int, int]] = set()
    for t in terminals:
        for x in hubs:
            pairs.add((t, x))
            pairs.add((x, t))
    cyc = verts[:]
    rng.shuffle(cyc)
    pairs.update(zip(cyc, cyc[1:] + cyc[:1]))
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < p:
                pairs.add((u, v))
    edges = [(u, v, _draw_cost(rng, cost_lo, cost_hi, integer_costs)) for u, v in sorted(pairs)]
    return DirectedGraph.from_edges(n, edges), terminals, k, D


def random_digraph(n: int = 8, p: float = 0.3, seed: int = 0,
                   cost_lo: float = 1, cost_hi: float = 10) -> DirectedGraph:
    rng = random.Random(seed)
    edges = [
        (u, v, float(rng.randint(int(cost_lo), int(cost_hi))))
        for u in range(n)
        for v in range(n)
        if u != v and rng.random() < p
    ]
    return DirectedGraph.from_edges(n, edges)


GENERATORS: dict[str, Callable] = {
    "diamond-family": diamond_family,
    "path-family": path_family,
    "layered-dag": layered_dag,
}


def generate(generator: str, params: dict, seed: int) -> KdstInstance:
    try:
        fn = GENERATORS[generator]
    except KeyError:
        raise ConfigError(f"unknown generator {generator!r}; choose from {sorted(GENERATORS)}") from None
    try:
        return fn(**params, seed=seed)
    except TypeError as exc:
        raise ConfigError(f"{generator}: bad parameters: {exc}") from None


def cover_dag(
    n_mid: int = 5,
    h: int = 3,
    k: int = 1,
    degree: int = 3,
    D: int = 2,
    n_gate: int = 3,
    integer_costs: bool = True,
    seed: int = 0,
) -> KdstInstance:
    """Set-cover-shaped layered DAG: expensive edges near the root, cheap
    edges into the terminals. These are the instances where the LP tends to
    be fractional.

    D = 2: root -> middles -> terminals. D = 3 adds a gateway layer between
    the root and the middles. Each terminal is fed by ``degree`` middles;
    k of them are wired to distinct gateways so k edge-disjoint paths exist.
    """
    if D not in (2, 3):
        raise ConfigError("cover-dag supports D in {2, 3}")
    if not k <= degree <= n_mid:
        raise ConfigError("cover-dag needs k <= degree <= n_mid")
    if D == 3 and n_gate < k:
        raise ConfigError("cover-dag needs n_gate >= k when D = 3")
    rng = random.Random(seed)
    gates = list(range(1, 1 + n_gate)) if D == 3 else []
    first_mid = 1 + len(gates)
    mids = list(range(first_mid, first_mid + n_mid))
    terms = list(range(first_mid + n_mid, first_mid + n_mid + h))
    n = terms[-1] + 1

    def c(lo, hi):
        return _draw_cost(rng, lo, hi, integer_costs)

    edges: dict[tuple[int, int], float] = {}
    for t in terms:
        feeders = rng.sample(mids, degree)
        for m_ in feeders:
            edges[(m_, t)] = c(0, 2)
        if D == 3:
            for m_, g in zip(feeders[:k], rng.sample(gates, k)):
                edges.setdefault((g, m_), c(2, 6))
    if D == 2:
        for m_ in mids:
            edges[(0, m_)] = c(5, 10)
    else:
        for g in gates:
            edges[(0, g)] = c(5, 10)
        for m_ in mids:
            if not any(v == m_ for (_, v) in edges):
                edges[(rng.choice(gates), m_)] = c(2, 6)
    return KdstInstance.build(n, [(u, v, w) for (u, v), w in sorted(edges.items())], 0, terms, k, D)


GENERATORS["cover-dag"] = cover_dag
