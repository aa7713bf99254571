"""Directed-graph instances: model, text format, layering and metric completion."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidConnectivityError,
    MalformedInstanceError,
    NegativeCostError,
    ParallelEdgeError,
    RootTerminalError,
)

MAGIC = "kdst"
FORMAT_VERSION = 1

Edge = tuple[int, int, float]


@dataclass(frozen=True)
class DirectedGraph:
    """Simple directed graph with nonnegative edge costs.

    Edges are kept sorted by ``(tail, head)``; an edge id is its position in
    that order.
    """

    vertex_count: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        if self.vertex_count < 1:
            raise MalformedInstanceError("vertex count must be positive")
        seen = set()
        for u, v, c in self.edges:
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise MalformedInstanceError(f"edge {u}->{v} references a vertex outside 0..{self.vertex_count - 1}")
            if u == v:
                raise MalformedInstanceError(f"self-loop at vertex {u}")
            if not c >= 0 or math.isinf(c):
                raise NegativeCostError(f"edge {u}->{v} has invalid cost {c}")
            if (u, v) in seen:
                raise ParallelEdgeError(f"parallel edge {u}->{v}")
            seen.add((u, v))
        if list(self.edges) != sorted(self.edges, key=lambda e: (e[0], e[1])):
            raise MalformedInstanceError("edges must be sorted by (tail, head); use DirectedGraph.from_edges")

    @classmethod
    def from_edges(cls, vertex_count: int, edges: Iterable[Sequence]) -> "DirectedGraph":
        es = sorted(((int(u), int(v), float(c)) for u, v, c in edges), key=lambda e: (e[0], e[1]))
        return cls(vertex_count, tuple(es))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def tails(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=np.int64)

    @cached_property
    def heads(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=np.int64)

    @cached_property
    def costs(self) -> np.ndarray:
        return np.array([e[2] for e in self.edges], dtype=float)

    @cached_property
    def out_edges(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for i, (u, _, _) in enumerate(self.edges):
            out[u].append(i)
        return tuple(tuple(x) for x in out)

    @cached_property
    def in_edges(self) -> tuple[tuple[int, ...], ...]:
        inc: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for i, (_, v, _) in enumerate(self.edges):
            inc[v].append(i)
        return tuple(tuple(x) for x in inc)

    @cached_property
    def _pair_index(self) -> dict[tuple[int, int], int]:
        return {(u, v): i for i, (u, v, _) in enumerate(self.edges)}

    def edge_id(self, tail: int, head: int) -> int:
        return self._pair_index[(tail, head)]

    def has_edge(self, tail: int, head: int) -> bool:
        return (tail, head) in self._pair_index

    def reversed(self) -> "DirectedGraph":
        return DirectedGraph.from_edges(self.vertex_count, ((v, u, c) for u, v, c in self.edges))


@dataclass(frozen=True)
class KdstInstance:
    graph: DirectedGraph
    root: int
    terminals: tuple[int, ...]
    k: int
    depth_bound: int
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        n = self.graph.vertex_count
        if not 0 <= self.root < n:
            raise MalformedInstanceError(f"root {self.root} outside 0..{n - 1}")
        if self.k < 1:
            raise InvalidConnectivityError(f"connectivity k must be >= 1, got {self.k}")
        if self.depth_bound < 1:
            raise MalformedInstanceError(f"depth bound D must be >= 1, got {self.depth_bound}")
        if not self.terminals:
            raise MalformedInstanceError("terminal list is empty")
        if self.root in self.terminals:
            raise RootTerminalError(f"root {self.root} is listed as a terminal")
        if len(set(self.terminals)) != len(self.terminals):
            raise MalformedInstanceError("terminals must be distinct")
        for t in self.terminals:
            if not 0 <= t < n:
                raise MalformedInstanceError(f"terminal {t} outside 0..{n - 1}")
        if self.graph.in_edges[self.root]:
            raise MalformedInstanceError("root has incoming edges; build through KdstInstance.build")

    @classmethod
    def build(
        cls,
        vertex_count: int,
        edges: Iterable[Sequence],
        root: int,
        terminals: Sequence[int],
        k: int,
        depth_bound: int,
        parallel: str = "reject",
    ) -> "KdstInstance":
        """Normalize raw edges into a validated instance.

        ``parallel`` selects how repeated (tail, head) pairs are handled:
        ``"reject"`` raises, ``"collapse"`` keeps the cheapest copy and
        ``"split"`` subdivides each extra copy through a fresh vertex whose
        second half costs 0.
        """
        if k < 1:
            raise InvalidConnectivityError(f"connectivity k must be >= 1, got {k}")
        if root in terminals:
            raise RootTerminalError(f"root {root} is listed as a terminal")
        warnings: list[str] = []
        raw: list[Edge] = []
        for e in edges:
            u, v, c = int(e[0]), int(e[1]), float(e[2])
            if not c >= 0:
                raise NegativeCostError(f"edge {u}->{v} has negative cost {c}")
            if v == root:
                warnings.append(f"dropped edge {u}->{v} entering the root")
                continue
            raw.append((u, v, c))

        by_pair: dict[tuple[int, int], list[float]] = {}
        for u, v, c in raw:
            by_pair.setdefault((u, v), []).append(c)

        n = vertex_count
        final: list[Edge] = []
        for (u, v), cs in by_pair.items():
            if len(cs) == 1:
                final.append((u, v, cs[0]))
                continue
            if parallel == "reject":
                raise ParallelEdgeError(f"parallel edges {u}->{v} (use collapse or split mode)")
            if parallel == "collapse":
                final.append((u, v, min(cs)))
                warnings.extend(f"collapsed parallel edge {u}->{v} of cost {c}" for c in sorted(cs)[1:])
            elif parallel == "split":
                cs = sorted(cs)
                final.append((u, v, cs[0]))
                for c in cs[1:]:
                    final.append((u, n, c))
                    final.append((n, v, 0.0))
                    warnings.append(f"split parallel edge {u}->{v} through new vertex {n}")
                    n += 1
            else:
                raise MalformedInstanceError(f"unknown parallel-edge mode {parallel!r}")
        if n > vertex_count:
            # a split copy is one hop longer than the edge it replaces
            depth_bound += 1
            warnings.append(f"depth bound raised to {depth_bound} by parallel-edge splitting")
        graph = DirectedGraph.from_edges(n, final)
        return cls(graph, int(root), tuple(int(t) for t in terminals), int(k), int(depth_bound), tuple(warnings))

    @property
    def h(self) -> int:
        return len(self.terminals)

    def with_root(self, root: int, terminals: Sequence[int]) -> "KdstInstance":
        """Same graph re-rooted; in-edges of the new root are dropped."""
        return KdstInstance.build(
            self.graph.vertex_count, self.graph.edges, root, terminals, self.k, self.depth_bound
        )


def cost(solution: Iterable[int], graph: DirectedGraph) -> float:
    return float(sum(graph.edges[e][2] for e in solution))


def validate_edge_set(solution: Iterable[int], graph: DirectedGraph) -> frozenset[int]:
    s = frozenset(int(e) for e in solution)
    for e in s:
        if not 0 <= e < graph.edge_count:
            raise MalformedInstanceError(f"edge id {e} not in graph with {graph.edge_count} edges")
    return s


# -- text format -------------------------------------------------------------

def _fail(lineno: int, msg: str):
    raise MalformedInstanceError(f"line {lineno}: {msg}")


def parse_instance(text: str | bytes, parallel: str = "reject") -> KdstInstance:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        lines.append((lineno, s.split()))
    if len(lines) < 3:
        raise MalformedInstanceError("instance needs a header, a parameter line and a terminal line")

    lineno, toks = lines[0]
    if toks[0] != MAGIC or len(toks) != 2:
        _fail(lineno, f"expected '{MAGIC} {FORMAT_VERSION}'")
    if toks[1] != str(FORMAT_VERSION):
        _fail(lineno, f"unsupported format version {toks[1]}")

    lineno, toks = lines[1]
    if len(toks) != 8 or toks[0::2] != ["n", "r", "k", "D"]:
        _fail(lineno, "expected 'n <count> r <root> k <k> D <depth>'")
    try:
        n, root, k, depth = (int(t) for t in toks[1::2])
    except ValueError:
        _fail(lineno, "non-integer parameter")

    lineno, toks = lines[2]
    if toks[0] != "T" or len(toks) < 2:
        _fail(lineno, "expected 'T <t1> ... <th>'")
    try:
        terminals = [int(t) for t in toks[1:]]
    except ValueError:
        _fail(lineno, "non-integer terminal")

    edges = []
    for lineno, toks in lines[3:]:
        if toks[0] != "e" or len(toks) != 4:
            _fail(lineno, "expected 'e <tail> <head> <cost>'")
        try:
            u, v, c = int(toks[1]), int(toks[2]), float(toks[3])
        except ValueError:
            _fail(lineno, "bad edge fields")
        if not (0 <= u < n and 0 <= v < n):
            _fail(lineno, f"edge {u}->{v} references a vertex outside 0..{n - 1}")
        if u == v:
            _fail(lineno, f"self-loop at vertex {u}")
        if math.isnan(c) or math.isinf(c):
            _fail(lineno, f"non-finite cost {toks[3]}")
        if c < 0:
            raise NegativeCostError(f"line {lineno}: edge {u}->{v} has negative cost {c}")
        edges.append((u, v, c))
    if k < 1:
        raise InvalidConnectivityError(f"connectivity k must be >= 1, got {k}")
    return KdstInstance.build(n, edges, root, terminals, k, depth, parallel=parallel)


def serialize_instance(instance: KdstInstance) -> str:
    g = instance.graph
    out = [
        f"{MAGIC} {FORMAT_VERSION}",
        f"n {g.vertex_count} r {instance.root} k {instance.k} D {instance.depth_bound}",
        "T " + " ".join(str(t) for t in instance.terminals),
    ]
    out.extend(f"e {u} {v} {c!r}" for u, v, c in g.edges)
    return "\n".join(out) + "\n"


def read_instance(path, parallel: str = "reject") -> KdstInstance:
    with open(path, "rb") as fh:
        return parse_instance(fh.read(), parallel=parallel)


def write_instance(instance: KdstInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_instance(instance))


# -- structure ---------------------------------------------------------------

def is_layered_dag(instance: KdstInstance) -> dict[int, int] | None:
    """Strict layering (every edge goes from layer i to i+1, root at 0) or None.

    Edges that skip a layer disqualify the graph even though all its rooted
    paths may be short. Vertices without edges are omitted from the map; a
    component not touching the root is placed starting at layer 1.
    """
    g = instance.graph
    nbrs: list[list[tuple[int, int]]] = [[] for _ in range(g.vertex_count)]
    for u, v, _ in g.edges:
        nbrs[u].append((v, 1))
        nbrs[v].append((u, -1))

    layer: dict[int, int] = {}
    starts = [instance.root] + [v for v in range(g.vertex_count) if v != instance.root]
    for s in starts:
        if s in layer or (s != instance.root and not nbrs[s]):
            continue
        comp = {s: 0}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w, step in nbrs[u]:
                want = comp[u] + step
                if w not in comp:
                    comp[w] = want
                    queue.append(w)
                elif comp[w] != want:
                    return None
        if s == instance.root:
            if min(comp.values()) < 0:
                return None
            shift = 0
        else:
            if instance.root in comp:
                return None
            shift = 1 - min(comp.values())
        for v, lv in comp.items():
            layer[v] = lv + shift
    if max(layer.values()) > instance.depth_bound:
        return None
    return layer


def shortest_path_matrix(graph: DirectedGraph) -> np.ndarray:
    n = graph.vertex_count
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for u, v, c in graph.edges:
        dist[u, v] = min(dist[u, v], c)
    for m in range(n):
        dist = np.minimum(dist, dist[:, m, None] + dist[None, m, :])
    return dist


def metric_completion(graph: DirectedGraph) -> DirectedGraph:
    dist = shortest_path_matrix(graph)
    n = graph.vertex_count
    edges = [
        (u, v, float(dist[u, v]))
        for u in range(n)
        for v in range(n)
        if u != v and np.isfinite(dist[u, v])
    ]
    return DirectedGraph.from_edges(n, edges)


def complete_instance(instance: KdstInstance) -> KdstInstance:
    """Instance on the metric completion, root in-edges dropped again."""
    g = metric_completion(instance.graph)
    return KdstInstance.build(
        g.vertex_count, g.edges, instance.root, instance.terminals, instance.k, instance.depth_bound
    )
