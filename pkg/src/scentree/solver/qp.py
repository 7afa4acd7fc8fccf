"""Scaled projection onto polyhedra.

``project_scaled`` computes ``argmin (x - lam)' diag(1/scale) (x - lam)``
over a polyhedron given as box bounds plus linear rows.  Three strategies:

* box only -- componentwise clamp (the scaling cancels),
* inequality rows with many variables -- semismooth Newton on the row
  multipliers, where the primal iterate is always the clamped point
  ``clip(lam - scale * G' mu)``; for a single row this is the classic
  waterfill,
* general small problems (or equality rows) -- a primal active-set method
  with bounds treated as rows.

Infeasible polyhedra are detected with a phase-1 run of the LP solver.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .lp import LE, EQ, LinearProgram, solve_lp
from .result import SolveResult, Status

SCALE_FLOOR = 1e-9


def _as_2d(a, n):
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros((0, n))
    return np.atleast_2d(a)


def project_scaled(lam: np.ndarray, scale: np.ndarray | float, *,
                   lb: np.ndarray | None = None, ub: np.ndarray | None = None,
                   G=None, h=None, E=None, d=None,
                   kkt_tol: float = 1e-8, max_iter: int = 2000) -> SolveResult:
    """Weighted projection of ``lam`` onto the polyhedron.

    ``scale`` is the positive diagonal of the weighting (floored at 1e-9);
    rows are ``G x <= h`` and ``E x = d``.  Returns an OPTIMAL result with the
    KKT residual in ``info`` or INFEASIBLE when the set is empty.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[0]
    scale = np.maximum(np.broadcast_to(np.asarray(scale, dtype=float), (n,)),
                       SCALE_FLOOR).astype(float)
    lb = np.full(n, -np.inf) if lb is None else np.asarray(lb, dtype=float)
    ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float)
    G = _as_2d(G if G is not None else np.zeros((0, n)), n)
    h = np.asarray(h, dtype=float) if h is not None else np.zeros(0)
    E = _as_2d(E if E is not None else np.zeros((0, n)), n)
    d = np.asarray(d, dtype=float) if d is not None else np.zeros(0)

    if np.any(lb > ub + 1e-12):
        return SolveResult(Status.INFEASIBLE, None, None, 0,
                           info={"reason": "crossing bounds"})

    if G.shape[0] == 0 and E.shape[0] == 0:
        x = np.clip(lam, lb, ub)
        return _finish(x, lam, scale, G, h, E, d, lb, ub, 0, kkt_tol)

    if E.shape[0] == 0:
        res = _dual_newton(lam, scale, G, h, lb, ub, kkt_tol, max_iter)
        if res is not None:
            return res
    return _active_set(lam, scale, G, h, E, d, lb, ub, kkt_tol, max_iter)


def _objective(x, lam, scale):
    r = x - lam
    return float(r @ (r / scale))


def _kkt_residual(x, lam, scale, G, h, E, d, lb, ub, mu, nu):
    """Stationarity / feasibility / complementarity residual.

    Multipliers follow the parameterization x = lam - scale * (A' mu), i.e.
    the Lagrangian carries 2 mu' (G x - h), hence the factor below.
    """
    grad = 2.0 * (x - lam) / scale
    if G.shape[0]:
        grad = grad + 2.0 * (G.T @ mu)
    if E.shape[0]:
        grad = grad + 2.0 * (E.T @ nu)
    # Bound multipliers absorb the gradient where the bound is active.
    res = np.abs(grad)
    at_lb = x <= lb + 1e-11
    at_ub = x >= ub - 1e-11
    res[at_lb] = np.maximum(-grad[at_lb], 0.0)  # multiplier must be >= 0
    res[at_ub & ~at_lb] = np.maximum(grad[at_ub & ~at_lb], 0.0)
    out = float(np.max(res, initial=0.0))
    if G.shape[0]:
        viol = G @ x - h
        out = max(out, float(np.max(viol, initial=0.0)))
        out = max(out, float(np.max(np.abs(mu * viol), initial=0.0)))
        out = max(out, float(np.max(-mu, initial=0.0)))
    if E.shape[0]:
        out = max(out, float(np.max(np.abs(E @ x - d), initial=0.0)))
    out = max(out, float(np.max(lb - x, initial=0.0)))
    fin = np.isfinite(ub)
    if fin.any():
        out = max(out, float(np.max((x - ub)[fin], initial=0.0)))
    return out


def _finish(x, lam, scale, G, h, E, d, lb, ub, iters, kkt_tol,
            mu=None, nu=None):
    mu = np.zeros(G.shape[0]) if mu is None else mu
    nu = np.zeros(E.shape[0]) if nu is None else nu
    res = _kkt_residual(x, lam, scale, G, h, E, d, lb, ub, mu, nu)
    status = Status.OPTIMAL if res <= kkt_tol else Status.ITER_LIMIT
    return SolveResult(status, x, _objective(x, lam, scale), iters,
                       primal_residual=res, dual_residual=res,
                       duals=mu, info={"kkt_residual": res})


# -- dual semismooth Newton over inequality multipliers ---------------------

def _dual_newton(lam, scale, G, h, lb, ub, kkt_tol, max_iter):
    """Multiplier iteration x(mu) = clip(lam - scale * G' mu).

    Returns None when it fails to converge (caller falls back to the primal
    active-set method).
    """
    mG = G.shape[0]
    Gs = sparse.csr_matrix(G)
    mu = np.zeros(mG)

    def primal(mu):
        return np.clip(lam - scale * (Gs.T @ mu), lb, ub)

    x = primal(mu)
    for it in range(max_iter):
        r = Gs @ x - h
        act = (mu > 0) | (r > 0)
        kkt = max(float(np.max(r, initial=0.0)),
                  float(np.max(np.abs(mu * r), initial=0.0)))
        if kkt <= 0.25 * kkt_tol:
            return _finish(x, lam, scale, G, h,
                           np.zeros((0, lam.size)), np.zeros(0),
                           lb, ub, it, kkt_tol, mu=mu)
        if not np.any(act):
            mu[:] = 0.0
            x = primal(mu)
            continue
        idx = np.flatnonzero(act)
        free = (lam - scale * (Gs.T @ mu) > lb) & (lam - scale * (Gs.T @ mu) < ub)
        Ga = Gs[idx]
        M = (Ga.multiply(scale * free)) @ Ga.T
        M = M.toarray() + 1e-12 * np.eye(idx.size)
        try:
            delta = np.linalg.solve(M, r[idx])
        except np.linalg.LinAlgError:
            return None
        # Damped update with projection onto mu >= 0.
        step = 1.0
        base = np.linalg.norm(np.minimum(-r, mu))
        for _ in range(30):
            trial = mu.copy()
            trial[idx] += step * delta
            np.maximum(trial, 0.0, out=trial)
            xt = primal(trial)
            rt = Gs @ xt - h
            if np.linalg.norm(np.minimum(-rt, trial)) <= (1 - 1e-4 * step) * base + 1e-16:
                mu, x = trial, xt
                break
            step *= 0.5
        else:
            return None
    return None


# -- primal active-set method ------------------------------------------------

def _feasible_start(lam, G, h, E, d, lb, ub):
    x = np.clip(lam, lb, ub)
    ok = True
    if G.shape[0] and np.max(G @ x - h, initial=0.0) > 1e-10:
        ok = False
    if E.shape[0] and np.max(np.abs(E @ x - d), initial=0.0) > 1e-10:
        ok = False
    if ok:
        return x, None
    n = lam.shape[0]
    A = sparse.csc_matrix(np.vstack([G, E])) if (G.shape[0] or E.shape[0]) else \
        sparse.csc_matrix((0, n))
    sense = np.concatenate([np.full(G.shape[0], LE), np.full(E.shape[0], EQ)])
    lp = LinearProgram(np.zeros(n), A, sense.astype(int),
                       np.concatenate([h, d]), lb, ub)
    res = solve_lp(lp)
    if res.status is not Status.OPTIMAL:
        return None, res
    return res.x, None


def _active_set(lam, scale, G, h, E, d, lb, ub, kkt_tol, max_iter):
    n = lam.shape[0]
    # Bounds become rows so the working-set logic is uniform.
    rows = [G]
    rhs = [h]
    fin_lb = np.isfinite(lb)
    fin_ub = np.isfinite(ub)
    if fin_lb.any():
        B = -np.eye(n)[fin_lb]
        rows.append(B)
        rhs.append(-lb[fin_lb])
    if fin_ub.any():
        B = np.eye(n)[fin_ub]
        rows.append(B)
        rhs.append(ub[fin_ub])
    Gall = np.vstack(rows)
    hall = np.concatenate(rhs)
    mG = Gall.shape[0]
    mE = E.shape[0]

    x, fail = _feasible_start(lam, Gall, hall, E, d,
                              np.full(n, -np.inf), np.full(n, np.inf))
    if x is None:
        return SolveResult(Status.INFEASIBLE, None, None, 0,
                           farkas=fail.farkas, info=dict(fail.info))

    work = list(np.flatnonzero(np.abs(Gall @ x - hall) <= 1e-11))
    for it in range(max_iter):
        A = np.vstack([E, Gall[work]]) if (mE or work) else np.zeros((0, n))
        bW = np.concatenate([d, hall[work]])
        # EQP: x* = lam - scale * A' mu with A x* = bW.
        if A.shape[0]:
            M = (A * scale) @ A.T
            rhs_v = A @ lam - bW
            try:
                mu = np.linalg.solve(M + 1e-13 * np.eye(A.shape[0]), rhs_v)
            except np.linalg.LinAlgError:
                mu = np.linalg.lstsq(M, rhs_v, rcond=None)[0]
            xstar = lam - scale * (A.T @ mu)
        else:
            mu = np.zeros(0)
            xstar = lam.copy()

        p = xstar - x
        if float(np.max(np.abs(p), initial=0.0)) <= 1e-12:
            ineq_mu = mu[mE:]
            if ineq_mu.size == 0 or np.min(ineq_mu, initial=0.0) >= -1e-10:
                mu_full = np.zeros(mG)
                mu_full[work] = np.maximum(ineq_mu, 0.0)
                nu = mu[:mE]
                res = _kkt_residual(x, lam, scale, Gall, hall, E, d,
                                    np.full(n, -np.inf), np.full(n, np.inf),
                                    mu_full, nu)
                status = Status.OPTIMAL if res <= kkt_tol else Status.ITER_LIMIT
                out = SolveResult(status, x, _objective(x, lam, scale), it,
                                  primal_residual=res, dual_residual=res,
                                  info={"kkt_residual": res,
                                        "active": list(work)})
                return out
            drop = int(np.argmin(ineq_mu))
            work.pop(drop)
            continue

        others = np.setdiff1d(np.arange(mG), np.asarray(work, dtype=int),
                              assume_unique=False)
        gp = Gall[others] @ p
        slack = hall[others] - Gall[others] @ x
        blocking = gp > 1e-13
        alpha = 1.0
        add = None
        if np.any(blocking):
            ratios = slack[blocking] / gp[blocking]
            k = int(np.argmin(ratios))
            if ratios[k] < alpha:
                alpha = max(float(ratios[k]), 0.0)
                add = int(others[np.flatnonzero(blocking)[k]])
        x = x + alpha * p
        if add is not None:
            work.append(add)
    return SolveResult(Status.ITER_LIMIT, x, _objective(x, lam, scale),
                       max_iter, info={"kkt_residual": np.inf})
