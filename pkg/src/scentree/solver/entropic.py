"""Projected-gradient solver for entropic (log-sum-exp) tree objectives.

Minimizes ``rho^-1 log sum_k p_k exp(rho * (W x)_k)`` over a box intersected
with inequality rows.  The gradient is ``W' softmax(log p + rho W x)``; steps
use Armijo backtracking against the local quadratic model, so the objective
decreases monotonically, and convergence is certified by the unit-step
gradient mapping ``||x - P(x - grad)||``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .qp import project_scaled
from .result import SolveResult, Status


@dataclass(frozen=True)
class EntropicProgram:
    """min rho^-1 log E exp(rho * path_cost) over box + inequality rows."""

    rho: float
    leaf_probs: np.ndarray            # (K,)
    W: sparse.csr_matrix              # (K, n): path-cost coefficients
    lb: np.ndarray
    ub: np.ndarray
    G: sparse.csr_matrix | None = None  # (mG, n) rows G x <= h
    h: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.lb.shape[0]

    def objective(self, x: np.ndarray) -> float:
        z = self.log_weights(x)
        m = float(np.max(z))
        return (m + float(np.log(np.sum(np.exp(z - m))))) / self.rho

    def log_weights(self, x: np.ndarray) -> np.ndarray:
        return np.log(self.leaf_probs) + self.rho * (self.W @ x)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        z = self.log_weights(x)
        z -= np.max(z)
        w = np.exp(z)
        w /= w.sum()
        return self.W.T @ w


def _project(prog: EntropicProgram, v: np.ndarray) -> np.ndarray:
    if prog.G is None or prog.G.shape[0] == 0:
        return np.clip(v, prog.lb, prog.ub)
    res = project_scaled(v, 1.0, lb=prog.lb, ub=prog.ub,
                         G=prog.G.toarray() if prog.G.shape[0] < 50 else prog.G,
                         h=prog.h)
    if res.x is None:
        raise RuntimeError("projection onto the feasible set failed")
    return res.x


def solve_entropic(prog: EntropicProgram, *, grad_tol: float = 1e-6,
                   feas_tol: float = 1e-9, max_iter: int = 50_000,
                   x0: np.ndarray | None = None) -> SolveResult:
    """Projected gradient with Armijo backtracking; ITER_LIMIT keeps the
    best iterate."""
    if prog.rho <= 0:
        raise ValueError("rho must be > 0 (use the LP path for rho = 0)")
    x = _project(prog, np.zeros(prog.n) if x0 is None else np.asarray(x0, float))
    f = prog.objective(x)
    step = 1.0
    it = 0
    pg_norm = np.inf
    check_every = 10
    while it < max_iter:
        g = prog.gradient(x)
        accepted = False
        moved = 0.0
        for _ in range(60):
            xt = _project(prog, x - step * g)
            dx = xt - x
            dx_norm2 = float(dx @ dx)
            if dx_norm2 <= 1e-32:
                accepted = True
                ft = f
                break
            ft = prog.objective(xt)
            if ft <= f + float(g @ dx) + dx_norm2 / (2.0 * step) + 1e-15:
                accepted = True
                moved = float(np.max(np.abs(dx)))
                break
            step *= 0.5
        it += 1
        if not accepted:
            break
        x, f = xt, min(ft, f)
        step = min(step * 1.25, 1e6)
        if moved <= 1e-14 or it % check_every == 0:
            pg = x - _project(prog, x - prog.gradient(x))
            pg_norm = float(np.linalg.norm(pg))
            if pg_norm < grad_tol:
                return _result(prog, x, f, it, pg_norm, feas_tol, Status.OPTIMAL)
            if moved <= 1e-14:
                step = max(step, 1.0)  # too-small step stalled the iterate
    pg = x - _project(prog, x - prog.gradient(x))
    pg_norm = float(np.linalg.norm(pg))
    status = Status.OPTIMAL if pg_norm < grad_tol else Status.ITER_LIMIT
    return _result(prog, x, f, it, pg_norm, feas_tol, status)


def _feas_residual(prog: EntropicProgram, x: np.ndarray) -> float:
    out = float(np.max(prog.lb - x, initial=0.0))
    fin = np.isfinite(prog.ub)
    if fin.any():
        out = max(out, float(np.max((x - prog.ub)[fin], initial=0.0)))
    if prog.G is not None and prog.G.shape[0]:
        out = max(out, float(np.max(prog.G @ x - prog.h, initial=0.0)))
    return out


def _result(prog, x, f, it, pg_norm, feas_tol, status):
    feas = _feas_residual(prog, x)
    if feas > feas_tol and status is Status.OPTIMAL:
        status = Status.ITER_LIMIT
    return SolveResult(status, x, float(prog.objective(x)), it,
                       primal_residual=feas, dual_residual=pg_norm,
                       info={"gradient_mapping_norm": pg_norm})
