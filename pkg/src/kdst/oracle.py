"""Ground truth for the approximation pipeline.

Unit-capacity max flow (Dinic), connectivity verification, minimalization,
checkers for the structural properties of minimal solutions, an exact
branch-and-bound optimum and the per-terminal min-cost-flow baseline.
"""

from __future__ import annotations

import heapq
import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InfeasibleError, ResourceCapError
from .graph import KdstInstance, cost as edge_cost
from .paths import enumerate_paths, find_disjoint_paths

# -- max flow ----------------------------------------------------------------


class _Dinic:
    def __init__(self, n: int):
        self.n = n
        self.head: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add(self, u: int, v: int, c: int = 1) -> int:
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(c)
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0)
        return len(self.to) - 2

    def _bfs(self, s: int, t: int) -> list[int] | None:
        level = [-1] * self.n
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for a in self.head[u]:
                if self.cap[a] > 0 and level[self.to[a]] < 0:
                    level[self.to[a]] = level[u] + 1
                    q.append(self.to[a])
        return level if level[t] >= 0 else None

    def _dfs(self, s: int, t: int, level: list[int], it: list[int]) -> int:
        # iterative augmenting-path search on the level graph; unit pushes suffice
        stack = [s]
        arcs: list[int] = []
        while stack:
            u = stack[-1]
            if u == t:
                for a in arcs:
                    self.cap[a] -= 1
                    self.cap[a ^ 1] += 1
                return 1
            advanced = False
            while it[u] < len(self.head[u]):
                a = self.head[u][it[u]]
                v = self.to[a]
                if self.cap[a] > 0 and level[v] == level[u] + 1:
                    stack.append(v)
                    arcs.append(a)
                    advanced = True
                    break
                it[u] += 1
            if not advanced:
                stack.pop()
                if arcs:
                    arcs.pop()
                    it[stack[-1]] += 1
        return 0

    def max_flow(self, s: int, t: int, limit: int | None = None) -> int:
        flow = 0
        while limit is None or flow < limit:
            level = self._bfs(s, t)
            if level is None:
                break
            it = [0] * self.n
            while limit is None or flow < limit:
                pushed = self._dfs(s, t, level, it)
                if not pushed:
                    break
                flow += pushed
        return flow


def max_flow_value(
    vertex_count: int,
    edges: Iterable[tuple[int, int]],
    source: int,
    sink: int,
    limit: int | None = None,
) -> int:
    """Maximum number of edge-disjoint source->sink paths (unit capacities).

    With ``limit`` the search stops once that many paths are found.
    """
    if source == sink:
        raise ValueError("source and sink must differ")
    net = _Dinic(vertex_count)
    for u, v in edges:
        net.add(u, v)
    return net.max_flow(source, sink, limit)


def min_cut_bruteforce(vertex_count: int, edges: Sequence[tuple[int, int]], source: int, sink: int) -> int:
    """Minimum number of edges leaving a vertex set containing source but not sink."""
    others = [v for v in range(vertex_count) if v not in (source, sink)]
    best = len(edges)
    for mask in range(1 << len(others)):
        side = {source}
        side.update(v for j, v in enumerate(others) if mask >> j & 1)
        cut = sum(1 for u, v in edges if u in side and v not in side)
        best = min(best, cut)
    return best


# -- verification --------------------------------------------------------------


@dataclass
class VerificationReport:
    connectivity: dict[int, int]
    k: int
    cost: float
    lp_ratio: float | None = None
    opt_ratio: float | None = None

    @property
    def feasible(self) -> bool:
        return min(self.connectivity.values()) >= self.k

    def as_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "k": self.k,
            "cost": self.cost,
            "connectivity": {str(t): lam for t, lam in self.connectivity.items()},
            "lp_ratio": self.lp_ratio,
            "opt_ratio": self.opt_ratio,
        }


def _pairs(instance: KdstInstance, solution: Iterable[int]) -> list[tuple[int, int]]:
    g = instance.graph
    return [(g.edges[e][0], g.edges[e][1]) for e in solution]


def connectivity(instance: KdstInstance, solution: Iterable[int], limit: int | None = None) -> dict[int, int]:
    pairs = _pairs(instance, solution)
    n = instance.graph.vertex_count
    return {t: max_flow_value(n, pairs, instance.root, t, limit) for t in instance.terminals}


def is_feasible(instance: KdstInstance, solution: Iterable[int]) -> bool:
    pairs = _pairs(instance, solution)
    n = instance.graph.vertex_count
    return all(max_flow_value(n, pairs, instance.root, t, instance.k) >= instance.k for t in instance.terminals)


def verify(
    solution: Iterable[int],
    instance: KdstInstance,
    lp_value: float | None = None,
    opt_value: float | None = None,
) -> VerificationReport:
    solution = frozenset(solution)
    c = edge_cost(solution, instance.graph)
    rep = VerificationReport(connectivity(instance, solution), instance.k, c)
    if lp_value:
        rep.lp_ratio = c / lp_value
    if opt_value:
        rep.opt_ratio = c / opt_value
    return rep


def minimalize(solution: Iterable[int], instance: KdstInstance, rng: random.Random | None = None) -> frozenset[int]:
    """Inclusion-minimal feasible subset, scanning edges in random order.

    One pass is enough: an edge that is needed in some feasible superset is
    still needed after further removals.
    """
    current = set(solution)
    if not is_feasible(instance, current):
        raise InfeasibleError("cannot minimalize an infeasible solution")
    order = sorted(current)
    (rng or random.Random(0)).shuffle(order)
    for e in order:
        current.discard(e)
        if not is_feasible(instance, current):
            current.add(e)
    return frozenset(current)


# -- structural properties of minimal solutions --------------------------------


@dataclass
class LemmaReport:
    violations: list[str] = field(default_factory=list)
    vertices_checked: int = 0
    path_bounds_checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def check_minimal_lemmas(H: Iterable[int], instance: KdstInstance) -> LemmaReport:
    """Check connectivity/indegree/path-count properties on a minimal solution.

    For every non-root vertex v touched by H: lambda_H(r, v) <= k, the
    indegree of v equals lambda_H(r, v) and is at most k. For every edge e of H
    and 2 <= l <= D: at most k^(l-2) simple rooted paths of length <= l inside
    H end with e.
    """
    H = frozenset(H)
    g = instance.graph
    k, r = instance.k, instance.root
    rep = LemmaReport()
    pairs = _pairs(instance, H)
    indeg: dict[int, int] = {}
    touched = set()
    for u, v in pairs:
        indeg[v] = indeg.get(v, 0) + 1
        touched.update((u, v))
    for v in sorted(touched - {r}):
        lam = max_flow_value(g.vertex_count, pairs, r, v)
        d = indeg.get(v, 0)
        rep.vertices_checked += 1
        if lam > k:
            rep.violations.append(f"vertex {v}: lambda {lam} > k={k}")
        if d != lam:
            rep.violations.append(f"vertex {v}: indegree {d} != lambda {lam}")
        if d > k:
            rep.violations.append(f"vertex {v}: indegree {d} > k={k}")

    sub = KdstInstance(
        graph=type(g).from_edges(g.vertex_count, [g.edges[e] for e in sorted(H)]),
        root=r,
        terminals=instance.terminals,
        k=k,
        depth_bound=instance.depth_bound,
    )
    ps = enumerate_paths(sub)
    for e_sub in range(sub.graph.edge_count):
        for ell in range(2, instance.depth_bound + 1):
            count = len(ps.ending_at_edge(e_sub, ell))
            rep.path_bounds_checked += 1
            if count > k ** (ell - 2):
                u, v, _ = sub.graph.edges[e_sub]
                rep.violations.append(f"edge {u}->{v}: {count} rooted paths of length <= {ell} > k^{ell - 2}")
    return rep


def is_d_shallow(solution: Iterable[int], instance: KdstInstance, max_edges: int = 16) -> bool:
    """Exponential check that every terminal has k edge-disjoint paths of
    length at most D inside the solution."""
    H = sorted(frozenset(solution))
    if len(H) > max_edges:
        raise ResourceCapError(f"D-shallow check limited to {max_edges} edges, got {len(H)}")
    g = instance.graph
    sub = KdstInstance(
        graph=type(g).from_edges(g.vertex_count, [g.edges[e] for e in H]),
        root=instance.root,
        terminals=instance.terminals,
        k=instance.k,
        depth_bound=instance.depth_bound,
    )
    ps = enumerate_paths(sub)
    for t in instance.terminals:
        cands = [ps.edges_of(int(p)) for p in ps.ending_at_vertex(t)]
        if find_disjoint_paths(cands, instance.k) is None:
            return False
    return True


# -- min-cost flow -------------------------------------------------------------


def min_cost_flow(
    vertex_count: int,
    arcs: Sequence[tuple[int, int, float]],
    source: int,
    sink: int,
    amount: int,
) -> tuple[float, list[int]] | None:
    """Cheapest integral ``amount`` units from source to sink on unit-capacity arcs.

    Successive shortest augmenting paths with Dijkstra on reduced costs.
    Costs must be nonnegative. Returns (cost, indices of arcs carrying flow)
    or None when fewer than ``amount`` edge-disjoint paths exist.
    """
    n = vertex_count
    head: list[list[int]] = [[] for _ in range(n)]
    to, cap, w = [], [], []
    for u, v, c in arcs:
        head[u].append(len(to)); to.append(v); cap.append(1); w.append(c)
        head[v].append(len(to)); to.append(u); cap.append(0); w.append(-c)
    pot = [0.0] * n
    total = 0.0
    for _ in range(amount):
        dist = [float("inf")] * n
        prev = [-1] * n
        dist[source] = 0.0
        heap = [(0.0, source)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for a in head[u]:
                if cap[a] <= 0:
                    continue
                v = to[a]
                nd = d + w[a] + pot[u] - pot[v]
                if nd < dist[v] - 1e-12:
                    dist[v] = nd
                    prev[v] = a
                    heapq.heappush(heap, (nd, v))
        if dist[sink] == float("inf"):
            return None
        for v in range(n):
            if dist[v] < float("inf"):
                pot[v] += dist[v]
        v = sink
        while v != source:
            a = prev[v]
            cap[a] -= 1
            cap[a ^ 1] += 1
            total += w[a]
            v = to[a ^ 1]
    used = [i for i in range(len(arcs)) if cap[2 * i] == 0]
    return total, used


def baseline_t_approx(instance: KdstInstance) -> frozenset[int]:
    """Union over terminals of a min-cost k-flow from the root."""
    g = instance.graph
    arcs = list(g.edges)
    out: set[int] = set()
    for t in instance.terminals:
        res = min_cost_flow(g.vertex_count, arcs, instance.root, t, instance.k)
        if res is None:
            raise InfeasibleError(f"terminal {t} has fewer than {instance.k} edge-disjoint paths from the root")
        out.update(res[1])
    return frozenset(out)


# -- exact optimum ---------------------------------------------------------------


@dataclass
class ExactResult:
    edges: frozenset[int]
    cost: float
    nodes: int


def exact_opt(instance: KdstInstance, budget: int = 200_000, max_edges: int = 24) -> ExactResult | None:
    """Minimum-cost feasible edge set by branch and bound.

    Each node fixes some edges in or out. The bound is the cost of the
    included edges plus the largest per-terminal min-cost k-flow in which
    included edges are free and excluded edges are absent; a node whose
    bound flow does not exist is pruned as infeasible. Among optima the
    result minimizes (cost, edge count, sorted edge ids).

    Returns None when ``budget`` nodes are exhausted.
    """
    g = instance.graph
    m = g.edge_count
    if m > max_edges:
        raise ResourceCapError(f"exact_opt limited to {max_edges} edges, instance has {m}")
    if not is_feasible(instance, range(m)):
        raise InfeasibleError("instance infeasible: some terminal lacks k edge-disjoint paths")

    tol = 1e-9 * max(1.0, float(g.costs.sum()))
    seed = baseline_t_approx(instance)
    best_key = (edge_cost(seed, g), len(seed), tuple(sorted(seed)))
    best = frozenset(seed)
    nodes = 0

    def better(c: float, s: frozenset[int]) -> bool:
        bc, bl, bt = best_key
        if c < bc - tol:
            return True
        if c > bc + tol:
            return False
        return (len(s), tuple(sorted(s))) < (bl, bt)

    def bound(included: frozenset[int], excluded: frozenset[int]):
        arcs, ids = [], []
        for e in range(m):
            if e in excluded:
                continue
            u, v, c = g.edges[e]
            arcs.append((u, v, 0.0 if e in included else c))
            ids.append(e)
        worst, worst_used, all_used = 0.0, [], []
        for t in instance.terminals:
            res = min_cost_flow(g.vertex_count, arcs, instance.root, t, instance.k)
            if res is None:
                return None
            used = [ids[i] for i in res[1] if ids[i] not in included]
            all_used.append(used)
            if res[0] > worst or not worst_used:
                worst, worst_used = res[0], used
        return worst, worst_used, all_used

    stack = [(frozenset(), frozenset())]
    while stack:
        included, excluded = stack.pop()
        nodes += 1
        if nodes > budget:
            return None
        inc_cost = edge_cost(included, g)
        if inc_cost > best_key[0] + tol:
            continue
        if is_feasible(instance, included):
            if better(inc_cost, included):
                best, best_key = included, (inc_cost, len(included), tuple(sorted(included)))
            continue
        res = bound(included, excluded)
        if res is None:
            continue
        lb, worst_used, all_used = res
        if inc_cost + lb > best_key[0] + tol:
            continue
        pick = worst_used or next(u for u in all_used if u)
        e = min(pick, key=lambda x: (-g.edges[x][2], x))
        # LIFO: push exclude first so include is explored first
        stack.append((included, excluded | {e}))
        stack.append((included | {e}, excluded))
    return ExactResult(best, best_key[0], nodes)


def exact_opt_bruteforce(instance: KdstInstance) -> tuple[frozenset[int], float]:
    """Enumerate all 2^|E| subsets; test-only cross-check for exact_opt."""
    g = instance.graph
    best = None
    for size in range(g.edge_count + 1):
        for combo in itertools.combinations(range(g.edge_count), size):
            c = edge_cost(combo, g)
            if best is not None and c >= best[1] - 1e-12:
                continue
            if is_feasible(instance, combo):
                best = (frozenset(combo), c)
    if best is None:
        raise InfeasibleError("no feasible subset")
    return best
