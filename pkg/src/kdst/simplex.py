"""Two-phase bounded-variable revised primal simplex.

The basis is held as a sparse LU factorization (SuperLU) plus a product-form
eta file that is rebuilt every ``refactor_every`` pivots. Pricing is Dantzig
by default and falls back to Bland's rule after a run of degenerate pivots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csc_matrix, hstack, identity
from scipy.sparse.linalg import splu

from .errors import SolverNonConvergenceError
from .lp import LinearProgram, LpSolution

_PIVOT_TOL = 1e-9
_DEGENERATE_STEP = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    feasibility_tolerance: float = 1e-7
    optimality_tolerance: float = 1e-7
    max_iterations: int = 200_000
    anti_cycling: bool = True
    bland_after: int | None = None  # degenerate pivots in a row; None means 10 * rows
    refactor_every: int = 100
    record_trace: bool = False
    backend: str = "simplex"  # simplex | highs

    def __post_init__(self):
        if self.feasibility_tolerance <= 0 or self.optimality_tolerance <= 0:
            raise ValueError("tolerances must be positive")


class _Basis:
    def __init__(self, M: csc_matrix, basis: np.ndarray):
        self.M = M
        self.basis = basis
        self.refactor()

    def refactor(self):
        B = self.M[:, self.basis].tocsc()
        self.lu = splu(B, permc_spec="COLAMD")
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, a: np.ndarray) -> np.ndarray:
        y = self.lu.solve(a)
        for r, w in self.etas:
            yr = y[r] / w[r]
            y -= w * yr
            y[r] = yr
        return y

    def btran(self, c: np.ndarray) -> np.ndarray:
        c = c.copy()
        for r, w in reversed(self.etas):
            c[r] = (c[r] - (w @ c - w[r] * c[r])) / w[r]
        return self.lu.solve(c, trans="T")

    def replace(self, r: int, q: int, w: np.ndarray):
        self.basis[r] = q
        self.etas.append((r, w.copy()))


class _Simplex:
    """State for one solve. Column layout: structural | slack | artificial."""

    def __init__(self, lp: LinearProgram, cfg: SolverConfig):
        self.cfg = cfg
        m, n = lp.num_rows, lp.num_vars
        self.m, self.n = m, n
        A = lp.A.tocsc().astype(float)
        b = lp.rhs.astype(float).copy()

        lower = lp.lower.astype(float)
        if np.any(lower != 0):
            if np.any(~np.isfinite(lower)):
                raise ValueError("free or unbounded-below variables are not supported")
            # shift x = x' + lower
            b = b - A @ lower
        self.shift = lower
        upper = lp.upper.astype(float) - lower

        slack_sign = np.where(lp.senses == "L", 1.0, np.where(lp.senses == "G", -1.0, 0.0))
        has_slack = slack_sign != 0
        slack_rows = np.flatnonzero(has_slack)
        S = csc_matrix(
            (slack_sign[slack_rows], (slack_rows, np.arange(len(slack_rows)))),
            shape=(m, len(slack_rows)),
        )
        flip = np.where(b < 0, -1.0, 1.0)
        b = b * flip
        Dflip = csc_matrix((flip, (np.arange(m), np.arange(m))), shape=(m, m))
        A = (Dflip @ A).tocsc()
        S = (Dflip @ S).tocsc()
        n_s = len(slack_rows)

        # rows whose (flipped) slack has coefficient +1 start with the slack basic
        slack_pos = np.full(m, -1)
        slack_pos[slack_rows] = np.arange(n_s)
        slack_coef = slack_sign * flip
        need_art = np.array([not (has_slack[i] and slack_coef[i] > 0) for i in range(m)], dtype=bool)
        art_rows = np.flatnonzero(need_art)
        n_a = len(art_rows)
        Art = csc_matrix((np.ones(n_a), (art_rows, np.arange(n_a))), shape=(m, n_a))

        self.M = hstack([A, S, Art], format="csc")
        self.MT = self.M.T.tocsr()
        self.N = n + n_s + n_a
        self.b = b
        self.ub = np.concatenate([upper, np.full(n_s, np.inf), np.full(n_a, np.inf)])
        self.c2 = np.concatenate([lp.objective.astype(float), np.zeros(n_s + n_a)])
        self.c1 = np.concatenate([np.zeros(n + n_s), np.ones(n_a)])
        self.art_start = n + n_s

        basis = np.empty(m, dtype=np.int64)
        art_of_row = np.full(m, -1)
        art_of_row[art_rows] = np.arange(n_a)
        for i in range(m):
            basis[i] = n + slack_pos[i] if not need_art[i] else self.art_start + art_of_row[i]
        self.at_upper = np.zeros(self.N, dtype=bool)
        self.is_basic = np.zeros(self.N, dtype=bool)
        self.is_basic[basis] = True
        self.B = _Basis(self.M, basis) if m else None
        self.iterations = 0
        self.trace: list[float] = []
        self._recompute_xb()

    # -- helpers ---------------------------------------------------------
    def _nonbasic_values(self) -> np.ndarray:
        x = np.zeros(self.N)
        x[self.at_upper] = self.ub[self.at_upper]
        x[self.is_basic] = 0.0
        return x

    def _recompute_xb(self):
        if not self.m:
            self.xb = np.zeros(0)
            return
        xn = self._nonbasic_values()
        self.xb = self.B.ftran(self.b - self.M @ xn)

    def full_x(self) -> np.ndarray:
        x = self._nonbasic_values()
        if self.m:
            x[self.B.basis] = self.xb
        return x

    # -- main loop ---------------------------------------------------------
    def run(self, cost: np.ndarray, record: bool) -> str:
        cfg = self.cfg
        m = self.m
        opt_tol = cfg.optimality_tolerance
        bland_after = cfg.bland_after if cfg.bland_after is not None else 10 * max(m, 1)
        degenerate_run = 0
        since_refactor = 0
        if m == 0:
            x = self.full_x()
            return "unbounded" if np.any((cost < -opt_tol) & ~np.isfinite(self.ub)) else "optimal"

        while True:
            if self.iterations >= cfg.max_iterations:
                raise SolverNonConvergenceError(
                    f"simplex did not converge within {cfg.max_iterations} iterations"
                )
            basis = self.B.basis
            pi = self.B.btran(cost[basis])
            d = cost - self.MT @ pi
            d[self.is_basic] = 0.0
            movable = self.ub > 0
            cand_up = (~self.at_upper) & movable & (d < -opt_tol)
            cand_dn = self.at_upper & (d > opt_tol)
            eligible = cand_up | cand_dn
            if not eligible.any():
                return "optimal"
            use_bland = cfg.anti_cycling and degenerate_run >= bland_after
            if use_bland:
                q = int(np.flatnonzero(eligible)[0])
            else:
                score = np.where(eligible, np.abs(d), -1.0)
                q = int(np.argmax(score))
            direction = 1.0 if cand_up[q] else -1.0

            col = np.zeros(m)
            lo, hi = self.M.indptr[q], self.M.indptr[q + 1]
            col[self.M.indices[lo:hi]] = self.M.data[lo:hi]
            w = self.B.ftran(col)
            delta = -direction * w  # rate of change of basic variables
            ubB = self.ub[basis]

            dec = delta < -_PIVOT_TOL
            inc = (delta > _PIVOT_TOL) & np.isfinite(ubB)
            ratios = np.full(m, np.inf)
            ratios[dec] = np.maximum(self.xb[dec], 0.0) / -delta[dec]
            ratios[inc] = np.maximum(ubB[inc] - self.xb[inc], 0.0) / delta[inc]
            theta_row = ratios.min() if m else np.inf
            theta_flip = self.ub[q]

            if not np.isfinite(theta_row) and not np.isfinite(theta_flip):
                return "unbounded"

            if theta_flip <= theta_row:
                theta = theta_flip
                self.xb += delta * theta
                self.at_upper[q] = not self.at_upper[q]
            else:
                # among near-ties prefer the largest |delta| (or lowest index under Bland)
                tie = np.flatnonzero(ratios <= theta_row + 1e-12)
                if use_bland:
                    r = int(tie[np.argmin(basis[tie])])
                else:
                    r = int(tie[np.argmax(np.abs(delta[tie]))])
                theta = ratios[r]
                leaving = basis[r]
                leaves_upper = delta[r] > 0
                enter_val = (self.ub[q] if self.at_upper[q] else 0.0) + direction * theta
                self.xb += delta * theta
                self.xb[r] = enter_val
                self.is_basic[leaving] = False
                self.at_upper[leaving] = bool(leaves_upper)
                self.is_basic[q] = True
                self.at_upper[q] = False
                self.B.replace(r, q, w)
                since_refactor += 1
                if since_refactor >= cfg.refactor_every:
                    self.B.refactor()
                    self._recompute_xb()
                    since_refactor = 0
            degenerate_run = degenerate_run + 1 if theta <= _DEGENERATE_STEP else 0
            self.iterations += 1
            if record:
                self.trace.append(float(cost @ self.full_x()))

    def drive_out_artificials(self):
        """After phase 1: fix artificials at zero so they can never grow again."""
        self.ub[self.art_start:] = 0.0
        self.at_upper[self.art_start:] = False


def solve(lp: LinearProgram, config: SolverConfig | None = None) -> LpSolution:
    cfg = config or SolverConfig()
    if cfg.backend == "highs":
        return _solve_highs(lp, cfg)
    if cfg.backend != "simplex":
        raise ValueError(f"unknown backend {cfg.backend!r}")

    s = _Simplex(lp, cfg)
    n = lp.num_vars
    if s.N > s.art_start:
        status = s.run(s.c1, record=False)
        infeas = float(s.full_x()[s.art_start:].sum())
        if infeas > cfg.feasibility_tolerance * max(1.0, float(np.abs(s.b).max(initial=0.0))):
            return LpSolution(np.full(n, np.nan), np.nan, "infeasible", s.iterations)
        s.drive_out_artificials()
        s.B.refactor()
        s._recompute_xb()

    status = s.run(s.c2, record=cfg.record_trace)
    if status == "unbounded":
        return LpSolution(np.full(n, np.nan), -np.inf, "unbounded", s.iterations)

    # clean up drift, then one more pricing pass from a fresh factorization
    if s.m:
        s.B.refactor()
        s._recompute_xb()
        status = s.run(s.c2, record=cfg.record_trace)
    x = s.full_x()[:n]
    x = np.clip(x, 0.0, s.ub[:n])
    x = x + s.shift
    viol = lp.max_violation(x)
    if viol > cfg.feasibility_tolerance * 10:
        raise SolverNonConvergenceError(f"simplex finished with residual violation {viol:.3g}")
    return LpSolution(x, lp.evaluate(x), "optimal", s.iterations,
                      s.trace if cfg.record_trace else None)


def _solve_highs(lp: LinearProgram, cfg: SolverConfig) -> LpSolution:
    from scipy.optimize import linprog

    A = lp.A.tocsr()
    le = lp.senses == "L"
    ge = lp.senses == "G"
    eq = lp.senses == "E"
    from scipy.sparse import vstack

    A_ub = vstack([A[le], -A[ge]]) if (le.any() or ge.any()) else None
    b_ub = np.concatenate([lp.rhs[le], -lp.rhs[ge]]) if A_ub is not None else None
    A_eq = A[eq] if eq.any() else None
    b_eq = lp.rhs[eq] if eq.any() else None
    bounds = list(zip(lp.lower, [None if not np.isfinite(u) else u for u in lp.upper]))
    res = linprog(lp.objective, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs", options={"primal_feasibility_tolerance": cfg.feasibility_tolerance,
                                           "dual_feasibility_tolerance": cfg.optimality_tolerance})
    n = lp.num_vars
    if res.status == 2:
        return LpSolution(np.full(n, np.nan), np.nan, "infeasible", res.nit)
    if res.status == 3:
        return LpSolution(np.full(n, np.nan), -np.inf, "unbounded", res.nit)
    if res.status != 0:
        raise SolverNonConvergenceError(f"HiGHS failed: {res.message}")
    return LpSolution(res.x, float(res.fun), "optimal", int(res.nit))
