"""Explicit sparse linear programs over the enumerated path space.

Three formulations are built here: the plain path LP for k-DST, the
strengthened LP with prefix variables ``y`` (subflow-capacity and
aggregating-flow rows), and the group Steiner tree LP on the suffix tree.
Embedding and F-restriction maps between them live here as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix

from .errors import ResourceCapError, TerminalUnreachableError
from .graph import KdstInstance
from .paths import GstTree, PathSpace, find_disjoint_paths

SENSES = ("L", "G", "E")


@dataclass(eq=False)
class LinearProgram:
    """min c.x  s.t.  A x (<=|>=|=) b,  lower <= x <= upper."""

    name: str
    var_names: list[str]
    var_tags: list[tuple]
    objective: np.ndarray
    upper: np.ndarray
    A: csr_matrix
    senses: np.ndarray
    rhs: np.ndarray
    row_names: list[str]
    lower: np.ndarray = None

    def __post_init__(self):
        if self.lower is None:
            self.lower = np.zeros(len(self.var_names))
        if not np.all(np.isfinite(self.A.data)):
            raise ValueError("constraint coefficients must be finite")

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    @property
    def num_rows(self) -> int:
        return len(self.row_names)

    @property
    def index(self) -> dict:
        idx = getattr(self, "_index", None)
        if idx is None:
            idx = {t: i for i, t in enumerate(self.var_tags)}
            self._index = idx
        return idx

    @property
    def name_index(self) -> dict[str, int]:
        idx = getattr(self, "_name_index", None)
        if idx is None:
            idx = {n: i for i, n in enumerate(self.var_names)}
            self._name_index = idx
        return idx

    def evaluate(self, values: np.ndarray) -> float:
        return float(self.objective @ values)

    def row_violations(self, values: np.ndarray) -> np.ndarray:
        act = self.A @ values
        viol = np.zeros(self.num_rows)
        le = self.senses == "L"
        ge = self.senses == "G"
        eq = self.senses == "E"
        viol[le] = np.maximum(act[le] - self.rhs[le], 0)
        viol[ge] = np.maximum(self.rhs[ge] - act[ge], 0)
        viol[eq] = np.abs(act[eq] - self.rhs[eq])
        return viol

    def max_violation(self, values: np.ndarray) -> float:
        """Largest absolute violation over rows and bounds."""
        v = np.asarray(values, dtype=float)
        worst = 0.0
        if self.num_rows:
            worst = float(self.row_violations(v).max())
        worst = max(worst, float(np.max(self.lower - v, initial=0.0)))
        finite = np.isfinite(self.upper)
        worst = max(worst, float(np.max(v[finite] - self.upper[finite], initial=0.0)))
        return worst

    def violated_rows(self, values: np.ndarray, tol: float = 1e-6) -> list[str]:
        viol = self.row_violations(np.asarray(values, dtype=float))
        return [self.row_names[i] for i in np.flatnonzero(viol > tol)]


@dataclass
class LpSolution:
    values: np.ndarray
    objective_value: float
    status: str  # optimal | infeasible | unbounded
    iterations: int = 0
    objective_trace: list[float] | None = field(default=None, repr=False)

    def as_dict(self, lp: LinearProgram) -> dict[str, float]:
        return {n: float(v) for n, v in zip(lp.var_names, self.values)}


class _Builder:
    def __init__(self, name: str, max_rows: int | None = None):
        self.name = name
        self.max_rows = max_rows
        self.names: list[str] = []
        self.tags: list[tuple] = []
        self.cost: list[float] = []
        self.ub: list[float] = []
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[float] = []
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self.row_names: list[str] = []

    def var(self, name: str, tag: tuple, cost: float = 0.0, ub: float = np.inf) -> int:
        self.names.append(name)
        self.tags.append(tag)
        self.cost.append(cost)
        self.ub.append(ub)
        return len(self.names) - 1

    def row(self, name: str, terms: Iterable[tuple[int, float]], sense: str, rhs: float) -> None:
        r = len(self.row_names)
        if self.max_rows is not None and r >= self.max_rows:
            raise ResourceCapError(f"{self.name}: constraint count exceeds cap {self.max_rows}")
        for c, v in terms:
            self.rows.append(r)
            self.cols.append(c)
            self.vals.append(v)
        self.senses.append(sense)
        self.rhs.append(rhs)
        self.row_names.append(name)

    def build(self) -> LinearProgram:
        A = csr_matrix(
            (self.vals, (self.rows, self.cols)), shape=(len(self.row_names), len(self.names))
        )
        A.sum_duplicates()
        return LinearProgram(
            name=self.name,
            var_names=self.names,
            var_tags=self.tags,
            objective=np.array(self.cost, dtype=float),
            upper=np.array(self.ub, dtype=float),
            A=A,
            senses=np.array(self.senses, dtype="<U1"),
            rhs=np.array(self.rhs, dtype=float),
            row_names=self.row_names,
        )


def _groups(instance: KdstInstance, paths: PathSpace) -> list[np.ndarray]:
    out = []
    for t in instance.terminals:
        grp = paths.ending_at_vertex(t)
        if len(grp) == 0:
            raise TerminalUnreachableError(f"terminal {t} unreachable within {instance.depth_bound} hops")
        out.append(grp)
    return out


def _flow_rows(b: _Builder, instance: KdstInstance, paths: PathSpace, groups):
    g = instance.graph
    x = [b.var(f"x_{e}", ("x", e), cost=g.edges[e][2], ub=1.0) for e in range(g.edge_count)]
    f = []
    for i, grp in enumerate(groups):
        f.append({int(p): b.var(f"f_{i}_{p}", ("f", i, int(p))) for p in grp})

    # capacity: flow of terminal i through e is at most x_e
    through: list[dict[int, list[int]]] = []
    for grp in groups:
        by_edge: dict[int, list[int]] = {}
        for p in grp:
            for e in paths.edges_of(int(p)):
                by_edge.setdefault(e, []).append(int(p))
        through.append(by_edge)
    for e in range(g.edge_count):
        for i in range(len(groups)):
            if e in through[i]:
                terms = [(f[i][p], 1.0) for p in through[i][e]]
                b.row(f"c1_{e}_{i}", terms + [(x[e], -1.0)], "L", 0.0)
    for i, grp in enumerate(groups):
        b.row(f"c2_{i}", [(f[i][int(p)], 1.0) for p in grp], "G", float(instance.k))
    return x, f


def build_lp_kdst(instance: KdstInstance, paths: PathSpace, max_rows: int | None = None) -> LinearProgram:
    groups = _groups(instance, paths)
    b = _Builder("lp_kdst", max_rows)
    _flow_rows(b, instance, paths, groups)
    return b.build()


def aggregation_factor(k: int, ell: int) -> float:
    """max{1, k^(ell-2)}."""
    return float(max(1.0, float(k) ** (ell - 2)))


def build_lp_kdst_star(
    instance: KdstInstance,
    paths: PathSpace,
    cap_y: bool = True,
    max_rows: int | None = None,
) -> LinearProgram:
    """Strengthened LP. ``cap_y`` adds the bounds y_p <= 1 used by the embedding."""
    groups = _groups(instance, paths)
    b = _Builder("lp_kdst_star", max_rows)
    x, f = _flow_rows(b, instance, paths, groups)
    y = {p: b.var(f"y_{p}", ("y", p), ub=1.0 if cap_y else np.inf) for p in range(1, len(paths))}

    # subflow capacity: flow of terminal i on extensions of q is at most y_q
    for i, grp in enumerate(groups):
        below: dict[int, list[int]] = {}
        for p in grp:
            for q in paths.ancestors(int(p)):
                below.setdefault(q, []).append(int(p))
        for q in sorted(below):
            terms = [(f[i][p], 1.0) for p in below[q]]
            b.row(f"c3_{q}_{i}", terms + [(y[q], -1.0)], "L", 0.0)

    # aggregating k-flow
    for e in range(instance.graph.edge_count):
        for ell in range(1, instance.depth_bound + 1):
            q_ell = paths.ending_at_edge(e, ell)
            if len(q_ell) == 0:
                continue
            terms = [(y[int(p)], 1.0) for p in q_ell]
            b.row(f"c4_{e}_{ell}", terms + [(x[e], -aggregation_factor(instance.k, ell))], "L", 0.0)
    return b.build()


def build_lp_gst(tree: GstTree) -> LinearProgram:
    """Group Steiner LP on the suffix tree with per-node flow variables.

    Variable layout: all x-hat (one per tree edge) first, then the f-hat of
    each group in group order.
    """
    b = _Builder("lp_gst")
    ps = tree.paths
    xh = [b.var(f"xh_{j}", ("xh", j), cost=float(tree.edge_cost[j]), ub=1.0) for j in range(tree.edge_count)]
    fh = []
    for i, grp in enumerate(tree.groups):
        fh.append({int(v): b.var(f"fh_{i}_{v}", ("fh", i, int(v))) for v in grp})
    for i, grp in enumerate(tree.groups):
        below: dict[int, list[int]] = {}
        for v in grp:
            for q in ps.ancestors(int(v)):
                below.setdefault(q, []).append(int(v))
        for q in sorted(below):
            j = q - 1
            b.row(f"g1_{j}_{i}", [(fh[i][v], 1.0) for v in below[q]] + [(xh[j], -1.0)], "L", 0.0)
    for i, grp in enumerate(tree.groups):
        b.row(f"g2_{i}", [(fh[i][int(v)], 1.0) for v in grp], "G", 1.0)
    return b.build()


def split_gst_values(values: np.ndarray, tree: GstTree) -> tuple[np.ndarray, list[np.ndarray]]:
    """(x-hat over tree edges, [f-hat over group i nodes in group order])."""
    m = tree.edge_count
    xhat = np.asarray(values[:m], dtype=float)
    out, pos = [], m
    for grp in tree.groups:
        out.append(np.asarray(values[pos:pos + len(grp)], dtype=float))
        pos += len(grp)
    return xhat, out


def _join_gst(xhat: np.ndarray, fhat: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([xhat] + list(fhat)) if len(fhat) else xhat.copy()


def embed_solution(sol: LpSolution, lp: LinearProgram, tree: GstTree) -> LpSolution:
    """Map a strengthened-LP point onto the suffix tree.

    x-hat on the tree edge into node p+e takes y_{p+e}; f-hat at a group node
    keeps the raw path flow (its group sum is at least k, not 1).
    """
    idx = lp.index
    v = sol.values
    nodes = np.arange(1, tree.node_count)
    ycols = np.array([idx[("y", int(p))] for p in nodes], dtype=np.int64)
    xhat = np.clip(v[ycols], 0.0, 1.0) if len(ycols) else np.empty(0)
    fhat = [np.array([v[idx[("f", i, int(p))]] for p in grp]) for i, grp in enumerate(tree.groups)]
    return LpSolution(_join_gst(xhat, fhat), float(tree.edge_cost @ xhat), "optimal")


def edges_hit_by(tree: GstTree, F: Iterable[int]) -> np.ndarray:
    """Boolean per tree node: does the root path of the node use an edge of F?"""
    F = set(int(e) for e in F)
    ps = tree.paths
    hit = np.zeros(tree.node_count, dtype=bool)
    for p in range(1, tree.node_count):
        hit[p] = hit[ps.parent[p]] or int(ps.last_edge[p]) in F
    return hit


def restrict_solution(embedded: LpSolution, tree: GstTree, F: Iterable[int]) -> LpSolution:
    """Zero out tree edges mapped from F and group flow on paths through F."""
    F = set(int(e) for e in F)
    xhat, fhat = split_gst_values(embedded.values, tree)
    xr = xhat.copy()
    if len(xr):
        xr[np.isin(tree.edge_origin, list(F))] = 0.0
    hit = edges_hit_by(tree, F)
    fr = [np.where(hit[grp], 0.0, fh) for grp, fh in zip(tree.groups, fhat)]
    return LpSolution(_join_gst(xr, fr), float(tree.edge_cost @ xr), embedded.status)


def flow_avoiding(sol: LpSolution, lp: LinearProgram, instance: KdstInstance, paths: PathSpace,
                  F: Iterable[int]) -> np.ndarray:
    """Per terminal: total path flow on paths that use no edge of F."""
    F = set(int(e) for e in F)
    idx = lp.index
    out = np.zeros(instance.h)
    for i, t in enumerate(instance.terminals):
        for p in paths.ending_at_vertex(t):
            if not F.intersection(paths.edges_of(int(p))):
                out[i] += sol.values[idx[("f", i, int(p))]]
    return out


def integral_witness(H: Iterable[int], instance: KdstInstance, paths: PathSpace,
                     lp: LinearProgram) -> np.ndarray | None:
    """0/1 point of ``lp`` induced by a feasible D-shallow solution H.

    x marks H, y marks every nonempty path inside H, and f marks k
    edge-disjoint paths inside H per terminal. Returns None when some terminal
    lacks k edge-disjoint paths of length at most D inside H.
    """
    H = frozenset(int(e) for e in H)
    idx = lp.index
    vals = np.zeros(lp.num_vars)
    for e in H:
        vals[idx[("x", e)]] = 1.0
    inside = np.zeros(len(paths), dtype=bool)
    inside[0] = True
    for p in range(1, len(paths)):
        inside[p] = inside[paths.parent[p]] and int(paths.last_edge[p]) in H
        if inside[p] and ("y", p) in idx:
            vals[idx[("y", p)]] = 1.0
    for i, t in enumerate(instance.terminals):
        cands = [int(p) for p in paths.ending_at_vertex(t) if inside[p]]
        chosen = find_disjoint_paths([paths.edges_of(p) for p in cands], instance.k)
        if chosen is None:
            return None
        for c in chosen:
            vals[idx[("f", i, cands[c])]] = 1.0
    return vals
