"""Bounded rooted-path enumeration and the suffix tree of paths used as a
group Steiner tree host."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import PathBlowupError, TerminalUnreachableError
from .graph import KdstInstance

DEFAULT_PATH_CAP = 2_000_000


@dataclass(frozen=True, eq=False)
class PathSpace:
    """All simple root-anchored paths with at most ``depth_bound`` edges.

    Path 0 is the trivial path ``(r)``. Paths are listed breadth-first by
    length, so ``parent[p] < p`` and the paths of length at most l form a
    prefix of every ``by_end_*`` list.
    """

    depth_bound: int
    root: int
    parent: np.ndarray      # -1 for the trivial path
    last_edge: np.ndarray   # -1 for the trivial path
    end_vertex: np.ndarray
    length: np.ndarray
    by_end_vertex: dict[int, np.ndarray]
    by_end_edge: dict[int, np.ndarray]

    def __len__(self) -> int:
        return len(self.parent)

    def edges_of(self, p: int) -> tuple[int, ...]:
        out = []
        while p > 0:
            out.append(int(self.last_edge[p]))
            p = int(self.parent[p])
        return tuple(reversed(out))

    def vertices_of(self, p: int) -> tuple[int, ...]:
        out = []
        while p >= 0:
            out.append(int(self.end_vertex[p]))
            p = int(self.parent[p])
        return tuple(reversed(out))

    def ending_at_vertex(self, v: int, max_len: int | None = None) -> np.ndarray:
        idx = self.by_end_vertex.get(v, np.empty(0, dtype=np.int64))
        if max_len is None:
            return idx
        return idx[self.length[idx] <= max_len]

    def ending_at_edge(self, e: int, max_len: int | None = None) -> np.ndarray:
        """Q_l(e): paths of length at most ``max_len`` whose last edge is e."""
        idx = self.by_end_edge.get(e, np.empty(0, dtype=np.int64))
        if max_len is None:
            return idx
        return idx[self.length[idx] <= max_len]

    def is_prefix(self, q: int, p: int) -> bool:
        """True when q equals the first |q| edges of p (q == p included)."""
        while self.length[p] > self.length[q]:
            p = int(self.parent[p])
        return p == q

    def ancestors(self, p: int) -> list[int]:
        """Nonempty prefixes of p, p itself first."""
        out = []
        while p > 0:
            out.append(p)
            p = int(self.parent[p])
        return out

    def index_of(self, edges: Iterable[int]) -> int:
        return self._index[tuple(edges)]

    @cached_property
    def _index(self) -> dict[tuple[int, ...], int]:
        return {self.edges_of(p): p for p in range(len(self))}


def enumerate_paths(instance: KdstInstance, cap: int = DEFAULT_PATH_CAP) -> PathSpace:
    g = instance.graph
    D = instance.depth_bound
    parent = [-1]
    last_edge = [-1]
    end_vertex = [instance.root]
    length = [0]
    on_path: list[frozenset[int]] = [frozenset([instance.root])]

    frontier = [0]
    for depth in range(1, D + 1):
        nxt = []
        for p in frontier:
            u = end_vertex[p]
            # out_edges are sorted by head, so children come out in (head, edge id) order
            for e in g.out_edges[u]:
                v = g.edges[e][1]
                if v in on_path[p]:
                    continue
                if len(parent) >= cap:
                    raise PathBlowupError(len(parent) + 1, cap)
                parent.append(p)
                last_edge.append(e)
                end_vertex.append(v)
                length.append(depth)
                on_path.append(on_path[p] | {v})
                nxt.append(len(parent) - 1)
        frontier = nxt
        if not frontier:
            break

    end_arr = np.array(end_vertex, dtype=np.int64)
    last_arr = np.array(last_edge, dtype=np.int64)
    by_v: dict[int, list[int]] = {}
    by_e: dict[int, list[int]] = {}
    for p in range(len(parent)):
        by_v.setdefault(end_vertex[p], []).append(p)
        if p > 0:
            by_e.setdefault(last_edge[p], []).append(p)
    return PathSpace(
        depth_bound=D,
        root=instance.root,
        parent=np.array(parent, dtype=np.int64),
        last_edge=last_arr,
        end_vertex=end_arr,
        length=np.array(length, dtype=np.int64),
        by_end_vertex={v: np.array(ix, dtype=np.int64) for v, ix in by_v.items()},
        by_end_edge={e: np.array(ix, dtype=np.int64) for e, ix in by_e.items()},
    )


@dataclass(frozen=True, eq=False)
class GstTree:
    """Suffix tree of a PathSpace.

    Nodes are path indices (node 0 is the root path). Tree edge ``j`` joins
    node ``j + 1`` to its parent, so arrays over tree edges have length
    ``node_count - 1``.
    """

    paths: PathSpace
    edge_cost: np.ndarray
    edge_origin: np.ndarray
    groups: tuple[np.ndarray, ...]

    @property
    def node_count(self) -> int:
        return len(self.paths)

    @property
    def edge_count(self) -> int:
        return len(self.paths) - 1

    @staticmethod
    def node_of_edge(j):
        return j + 1

    @staticmethod
    def edge_into(node):
        return node - 1

    @cached_property
    def parent_edge(self) -> np.ndarray:
        """rho(j): tree edge above tree edge j, or -1 for edges leaving the root."""
        return self.paths.parent[1:] - 1

    @cached_property
    def edge_depth(self) -> np.ndarray:
        return self.paths.length[1:]

    @cached_property
    def levels(self) -> list[np.ndarray]:
        """Tree edge ids grouped by depth 1..D."""
        d = self.edge_depth
        return [np.flatnonzero(d == l) for l in range(1, int(d.max(initial=0)) + 1)]

    def path_edges(self, node: int) -> list[int]:
        """Tree edges on the root-to-node path."""
        return [q - 1 for q in reversed(self.paths.ancestors(node))]

    def subtree_members(self, node: int, candidates: np.ndarray) -> np.ndarray:
        return np.array([c for c in candidates if self.paths.is_prefix(node, int(c))], dtype=np.int64)

    def to_dot(self) -> str:
        ps = self.paths
        group_of: dict[int, list[int]] = {}
        for i, grp in enumerate(self.groups):
            for v in grp:
                group_of.setdefault(int(v), []).append(i)
        lines = ["digraph gst {"]
        for p in range(self.node_count):
            label = "-".join(str(v) for v in ps.vertices_of(p))
            extra = ""
            if p in group_of:
                label += " [T" + ",".join(str(i) for i in group_of[p]) + "]"
                extra = ", shape=box"
            lines.append(f'  n{p} [label="{label}"{extra}];')
        for j in range(self.edge_count):
            lines.append(
                f'  n{ps.parent[j + 1]} -> n{j + 1} [label="e{self.edge_origin[j]} c={self.edge_cost[j]:g}"];'
            )
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_gst_tree(paths: PathSpace, instance: KdstInstance) -> GstTree:
    groups = []
    for t in instance.terminals:
        grp = paths.ending_at_vertex(t)
        if len(grp) == 0:
            raise TerminalUnreachableError(
                f"terminal {t} unreachable within {instance.depth_bound} hops"
            )
        groups.append(grp)
    origin = paths.last_edge[1:].copy()
    return GstTree(
        paths=paths,
        edge_cost=instance.graph.costs[origin] if len(origin) else np.empty(0),
        edge_origin=origin,
        groups=tuple(groups),
    )


def map_tree_edges_to_graph(tree_edges: Iterable[int], tree: GstTree) -> frozenset[int]:
    return frozenset(int(tree.edge_origin[j]) for j in tree_edges)


def find_disjoint_paths(candidates: Sequence[Sequence[int]], k: int) -> list[int] | None:
    """Indices of k pairwise edge-disjoint candidates, or None.

    Exhaustive backtracking; meant for the short path lists of desk-scale
    instances.
    """
    sets = [frozenset(c) for c in candidates]
    chosen: list[int] = []

    def search(start: int, used: frozenset) -> bool:
        if len(chosen) == k:
            return True
        for j in range(start, len(sets)):
            if len(sets) - j < k - len(chosen):
                return False
            if used.isdisjoint(sets[j]):
                chosen.append(j)
                if search(j + 1, used | sets[j]):
                    return True
                chosen.pop()
        return False

    return list(chosen) if search(0, frozenset()) else None
