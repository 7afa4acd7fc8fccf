"""Revised simplex for linear programs with bounded variables.

Solves ``min c @ x`` subject to ``A x (<=, =) b`` and ``lb <= x <= ub``.
Slack variables turn rows into equalities, so a basis is a set of m columns;
the basis inverse is held explicitly (dense) and refreshed by product-form
pivot updates, with periodic refactorization to control drift.

Infeasible starts go through a phase-1 minimization of artificial variables;
a positive phase-1 optimum yields the row certificate of infeasibility.
Pricing is Dantzig's rule with a switch to Bland's rule after a stall, which
guards against cycling on degenerate vertices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .._kernels import pivot_update
from .result import SolveResult, Status

LE, EQ = 0, 1
BASIC, AT_LB, AT_UB, NB_FREE = 0, 1, 2, 3

_PIVOT_TOL = 1e-10
_HARRIS_TOL = 1e-9


@dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    A: sparse.csc_matrix
    sense: np.ndarray   # per row: LE or EQ
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[0]


def dense_lp(c, A, sense, b, lb, ub) -> LinearProgram:
    """Convenience constructor from dense arrays."""
    c = np.asarray(c, dtype=float)
    A = sparse.csc_matrix(np.atleast_2d(np.asarray(A, dtype=float)))
    return LinearProgram(c, A, np.asarray(sense, dtype=int),
                         np.asarray(b, dtype=float),
                         np.asarray(lb, dtype=float), np.asarray(ub, dtype=float))


class _Simplex:
    def __init__(self, lp: LinearProgram, feas_tol: float, opt_tol: float,
                 refactor_every: int):
        self.lp = lp
        m, ns = lp.m, lp.n
        self.m, self.ns = m, ns
        slack_ub = np.where(lp.sense == LE, np.inf, 0.0)
        self.full = sparse.hstack(
            [lp.A, sparse.identity(m, format="csc")], format="csc")
        self.lb = np.concatenate([lp.lb, np.zeros(m)])
        self.ub = np.concatenate([lp.ub, slack_ub])
        self.n_art = 0
        self.cost = np.concatenate([lp.c, np.zeros(m)])
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol * (1.0 + float(np.max(np.abs(lp.c), initial=0.0)))
        self.refactor_every = refactor_every
        self.iterations = 0
        self.bland = False
        self._stall = 0

        self.vstat = np.empty(ns + m, dtype=np.int8)
        for j in range(ns):
            if np.isfinite(self.lb[j]):
                self.vstat[j] = AT_LB
            elif np.isfinite(self.ub[j]):
                self.vstat[j] = AT_UB
            else:
                self.vstat[j] = NB_FREE
        self.vstat[ns:] = BASIC
        self.basis = np.arange(ns, ns + m)
        self.binv = np.eye(m)
        self.xb = self._basic_values()

    # -- helpers ----------------------------------------------------------

    def _nonbasic_values(self) -> np.ndarray:
        v = np.where(self.vstat == AT_UB, self.ub, self.lb)
        v[self.vstat == NB_FREE] = 0.0
        v[self.vstat == BASIC] = 0.0
        v[~np.isfinite(v)] = 0.0
        return v

    def _basic_values(self) -> np.ndarray:
        contrib = self.full @ self._nonbasic_values()
        return self.binv @ (self.lp.b - contrib)

    def _refactor(self):
        bdense = self.full[:, self.basis].toarray()
        self.binv = np.linalg.inv(bdense)
        self.xb = self._basic_values()

    def full_solution(self) -> np.ndarray:
        x = self._nonbasic_values()
        x[self.basis] = self.xb
        return x

    def duals(self) -> np.ndarray:
        return self.cost[self.basis] @ self.binv

    def add_artificials(self):
        """Replace basic slacks that violate their bounds by artificials."""
        resid = self.xb.copy()
        bad_lo = resid < self.lb[self.basis] - self.feas_tol
        bad_hi = resid > self.ub[self.basis] + self.feas_tol
        bad = np.flatnonzero(bad_lo | bad_hi)
        if bad.size == 0:
            return False
        signs = np.where(bad_lo[bad], -1.0, 1.0)
        cols = sparse.csc_matrix(
            (signs, (bad, np.arange(bad.size))), shape=(self.m, bad.size))
        self.full = sparse.hstack([self.full, cols], format="csc")
        self.n_art = bad.size
        self.lb = np.concatenate([self.lb, np.zeros(bad.size)])
        self.ub = np.concatenate([self.ub, np.full(bad.size, np.inf)])
        self.cost = np.concatenate([np.zeros(self.ns + self.m), np.ones(bad.size)])
        self.vstat = np.concatenate([self.vstat, np.full(bad.size, BASIC, dtype=np.int8)])
        for k, r in enumerate(bad):
            old = self.basis[r]
            self.vstat[old] = AT_LB if np.isfinite(self.lb[old]) else NB_FREE
            self.basis[r] = self.ns + self.m + k
        self._refactor()
        return True

    def drop_artificials(self):
        """Pin artificials to zero and restore the phase-2 objective."""
        nsm = self.ns + self.m
        self.ub[nsm:] = 0.0
        self.cost = np.concatenate([self.lp.c, np.zeros(self.m + self.n_art)])

    # -- core loop --------------------------------------------------------

    def price(self):
        y = self.duals()
        rc = self.cost - self.full.T @ y
        movable = (self.vstat != BASIC) & (self.ub - self.lb > 0)
        viol = np.zeros_like(rc)
        lo = movable & (self.vstat == AT_LB)
        hi = movable & (self.vstat == AT_UB)
        fr = movable & (self.vstat == NB_FREE)
        viol[lo] = -rc[lo]
        viol[hi] = rc[hi]
        viol[fr] = np.abs(rc[fr])
        if self.bland:
            idx = np.flatnonzero(viol > self.opt_tol)
            if idx.size == 0:
                return None, rc
            return int(idx[0]), rc
        q = int(np.argmax(viol))
        if viol[q] <= self.opt_tol:
            return None, rc
        return q, rc

    def ratio_test(self, q: int, sigma: float, d: np.ndarray):
        """Largest step for entering q; returns (step, leaving_row, hit)."""
        sd = sigma * d
        lbb = self.lb[self.basis]
        ubb = self.ub[self.basis]
        ratios = np.full(self.m, np.inf)
        pos = sd > _PIVOT_TOL
        neg = sd < -_PIVOT_TOL
        with np.errstate(invalid="ignore"):
            ratios[pos] = (self.xb[pos] - lbb[pos]) / sd[pos]
            ratios[neg] = (self.xb[neg] - ubb[neg]) / sd[neg]
        ratios[~np.isfinite(ratios)] = np.inf
        np.maximum(ratios, 0.0, out=ratios)

        flip = self.ub[q] - self.lb[q]  # may be inf
        min_ratio = float(ratios.min(initial=np.inf))
        if min(min_ratio, flip) == np.inf:
            return np.inf, -1, "none"
        if flip < min_ratio:
            return float(flip), -1, "flip"
        cand = np.flatnonzero(ratios <= min_ratio + _HARRIS_TOL)
        if self.bland:
            r = int(cand[np.argmin(self.basis[cand])])
        else:
            r = int(cand[np.argmax(np.abs(sd[cand]))])
        hit = "lower" if sd[r] > 0 else "upper"
        return float(max(ratios[r], 0.0)), r, hit

    def column(self, q: int) -> np.ndarray:
        sl = slice(self.full.indptr[q], self.full.indptr[q + 1])
        rows = self.full.indices[sl]
        vals = self.full.data[sl]
        return self.binv[:, rows] @ vals

    def iterate(self, max_iter: int):
        """Runs pivots until optimal; returns a Status."""
        since_refactor = 0
        while True:
            if self.iterations >= max_iter:
                return Status.ITER_LIMIT
            q, rc = self.price()
            if q is None:
                return Status.OPTIMAL
            if self.vstat[q] == AT_LB:
                sigma = 1.0
            elif self.vstat[q] == AT_UB:
                sigma = -1.0
            else:
                sigma = 1.0 if rc[q] < 0 else -1.0
            d = self.column(q)
            step, r, hit = self.ratio_test(q, sigma, d)
            if hit == "none":
                self._ray = (q, sigma, d)
                return Status.UNBOUNDED
            self.iterations += 1
            self._stall = self._stall + 1 if step * abs(rc[q]) < 1e-12 else 0
            if self._stall > 200:
                self.bland = True
            elif self.bland and self._stall == 0:
                self.bland = False

            if hit == "flip":
                self.xb -= (sigma * step) * d
                self.vstat[q] = AT_UB if self.vstat[q] == AT_LB else AT_LB
                continue

            enter_from = {AT_LB: self.lb[q], AT_UB: self.ub[q], NB_FREE: 0.0}[self.vstat[q]]
            self.xb -= (sigma * step) * d
            leaving = self.basis[r]
            self.vstat[leaving] = AT_LB if hit == "lower" else AT_UB
            if not np.isfinite(self.lb[leaving]) and hit == "lower":
                self.vstat[leaving] = NB_FREE
            self.basis[r] = q
            self.vstat[q] = BASIC
            self.xb[r] = enter_from + sigma * step
            pivot_update(self.binv, d, r)
            since_refactor += 1
            if since_refactor >= self.refactor_every:
                self._refactor()
                since_refactor = 0

    # -- reporting --------------------------------------------------------

    def residuals(self, x_full: np.ndarray, rc: np.ndarray):
        row = self.full @ x_full - self.lp.b
        pr = float(np.max(np.abs(row), initial=0.0)) / (1.0 + float(np.max(np.abs(self.lp.b), initial=0.0)))
        lo = np.max(self.lb - x_full, initial=0.0)
        hi_mask = np.isfinite(self.ub)
        hi = np.max((x_full - self.ub)[hi_mask], initial=0.0)
        pr = max(pr, float(lo), float(hi))
        dviol = np.zeros_like(rc)
        at_lb = self.vstat == AT_LB
        at_ub = self.vstat == AT_UB
        free = self.vstat == NB_FREE
        basic = self.vstat == BASIC
        dviol[at_lb] = np.maximum(-rc[at_lb], 0.0)
        dviol[at_ub] = np.maximum(rc[at_ub], 0.0)
        dviol[free | basic] = np.abs(rc[free | basic])
        fixed = self.ub - self.lb <= 0
        dviol[fixed & ~basic] = 0.0
        dr = float(np.max(dviol, initial=0.0)) / (1.0 + float(np.max(np.abs(self.lp.c), initial=0.0)))
        return pr, dr


def solve_lp(lp: LinearProgram, *, feas_tol: float = 1e-9, opt_tol: float = 1e-9,
             max_iter: int | None = None, refactor_every: int = 800) -> SolveResult:
    """Two-phase revised simplex; returns primal/dual data and certificates."""
    m, ns = lp.m, lp.n
    if max_iter is None:
        max_iter = 20_000 + 60 * (m + ns)
    if np.any(lp.lb > lp.ub):
        return SolveResult(Status.INFEASIBLE, None, None, 0,
                           info={"reason": "crossing bounds"})
    sx = _Simplex(lp, feas_tol, opt_tol, refactor_every)

    if sx.add_artificials():
        status = sx.iterate(max_iter)
        sx._refactor()
        phase1_obj = float(sx.cost[sx.basis] @ sx.xb)
        if status is not Status.OPTIMAL:
            return SolveResult(Status.ITER_LIMIT, None, None, sx.iterations,
                               info={"phase": 1, "phase1_objective": phase1_obj})
        scale = 1.0 + float(np.max(np.abs(lp.b), initial=0.0))
        if phase1_obj > 1e-7 * scale:
            y = sx.duals()
            return SolveResult(Status.INFEASIBLE, None, None, sx.iterations,
                               farkas=y, info={"phase1_objective": phase1_obj})
        sx.drop_artificials()

    while True:
        status = sx.iterate(max_iter)
        if status is not Status.OPTIMAL:
            break
        # Verify optimality against a freshly factorized basis before
        # accepting it: product-form updates drift.
        sx._refactor()
        q, _ = sx.price()
        if q is None:
            break
    x_full = sx.full_solution()
    y = sx.duals()
    rc = sx.cost - sx.full.T @ y
    x = x_full[:ns]
    obj = float(lp.c @ x)

    if status is Status.UNBOUNDED:
        q, sigma, d = sx._ray
        ray_full = np.zeros(sx.full.shape[1])
        ray_full[q] = sigma
        ray_full[sx.basis] -= sigma * d
        return SolveResult(Status.UNBOUNDED, x, None, sx.iterations,
                           ray=ray_full[:ns])

    pr, dr = sx.residuals(x_full, rc)
    dual_obj = _dual_objective(lp, sx, y, rc)
    res = SolveResult(status, x, obj, sx.iterations, pr, dr,
                      duals=y, reduced_costs=rc[:ns],
                      info={"dual_objective": dual_obj})
    return res


def _dual_objective(lp: LinearProgram, sx: _Simplex, y: np.ndarray,
                    rc: np.ndarray) -> float:
    """y @ b plus the bound terms of nonbasic variables (strong-duality check)."""
    val = float(y @ lp.b)
    v = sx._nonbasic_values()
    nb = sx.vstat != BASIC
    val += float(rc[nb] @ v[nb])
    return val


def farkas_gap(lp: LinearProgram, y: np.ndarray) -> float:
    """Positive gap certifies infeasibility of the system.

    For any feasible (x, s): y @ (A x + s) = y @ b, so the supremum of the
    left side over the variable bounds must reach y @ b; the certificate
    makes the gap ``y @ b - sup`` strictly positive.  Returns -inf when y is
    not a valid certificate (an unbounded supremum).
    """
    if np.any((lp.sense == LE) & (y > 1e-12)):
        return -np.inf  # sup over the slack s_i >= 0 would be +inf
    w = lp.A.T @ y
    terms = np.where(w > 0, w * lp.ub, w * lp.lb)
    terms[w == 0] = 0.0
    if np.any(~np.isfinite(terms)):
        return -np.inf
    return float(y @ lp.b) - float(terms.sum())
