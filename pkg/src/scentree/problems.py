"""Concrete multistage convex problems behind a common abstraction.

A problem exposes, per stage ``t`` and observed history ``xi_[t]``:

* ``cost(t, hist)`` -- linear stage cost vector ``c_t`` (costs are minimized;
  revenue appears as negative cost),
* ``stage_rows(t, hist)`` -- local linear rows ``a_prev @ x_{t-1} +
  a_cur @ x_t (<=, =) rhs`` linking consecutive decisions,
* ``bounds(t, hist)`` -- box bounds on ``x_t`` (may depend on the history),
* ``budget_rows`` -- cumulative rows ``sum_{tau<=T} x_{tau, coord} <= rhs``
  spanning the whole horizon (used by the swing budget).

Two objective modes exist: expectation of the additive cost, and the entropic
functional ``rho^-1 log E exp(rho * total_cost)`` for risk aversion
``rho > 0`` (``rho = 0`` dispatches to the expectation mode).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .process import ProcessModel, geom_price, iid_std_normal

LE, EQ = 0, 1


class ObjectiveMode(Enum):
    RISK_NEUTRAL = "risk_neutral"
    ENTROPIC = "entropic"


@dataclass(frozen=True)
class LocalRows:
    """Rows a_prev @ x_prev + a_cur @ x_cur (sense) rhs for one stage."""

    a_prev: np.ndarray
    a_cur: np.ndarray
    sense: np.ndarray
    rhs: np.ndarray

    @property
    def m(self) -> int:
        return self.rhs.shape[0]


@dataclass(frozen=True)
class BudgetRow:
    """Cumulative constraint sum_t x_{t, coord} <= rhs over the horizon."""

    coord: int
    rhs: float


@dataclass(frozen=True)
class StageSet:
    """Stage-t feasible set with the previous decision folded into the rhs.

    Rows ``G x <= h`` and ``E x = d`` plus box bounds; this is what the
    feasibility restorers and the per-stage validator consume.
    """

    G: np.ndarray
    h: np.ndarray
    E: np.ndarray
    d: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    @property
    def n(self) -> int:
        return self.lb.shape[0]

    def max_violation(self, x: np.ndarray) -> float:
        v = 0.0
        if self.G.shape[0]:
            v = max(v, float(np.max(self.G @ x - self.h, initial=0.0)))
        if self.E.shape[0]:
            v = max(v, float(np.max(np.abs(self.E @ x - self.d), initial=0.0)))
        v = max(v, float(np.max(self.lb - x, initial=0.0)))
        finite = np.isfinite(self.ub)
        if finite.any():
            v = max(v, float(np.max((x - self.ub)[finite], initial=0.0)))
        return v


def _empty_rows(n_prev: int, n_cur: int) -> LocalRows:
    return LocalRows(np.zeros((0, n_prev)), np.zeros((0, n_cur)),
                     np.zeros(0, dtype=int), np.zeros(0))


class ProblemSpec:
    """Base class; concrete problems fill in the generators."""

    name: str = "problem"
    T: int
    dims: tuple[int, ...]
    mode: ObjectiveMode = ObjectiveMode.RISK_NEUTRAL
    rho: float = 0.0
    process: ProcessModel
    budget_rows: tuple[BudgetRow, ...] = ()

    def cost(self, t: int, hist: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def stage_rows(self, t: int, hist: np.ndarray) -> LocalRows:
        raise NotImplementedError

    def bounds(self, t: int, hist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def decision_override(self, t: int):
        """Closed-form stage decision ``f(hist, x_prev, budget_used) -> x_t``.

        Returns None when the stage has no closed form.
        """
        return None

    def stage_set(self, t: int, hist: np.ndarray, x_prev: np.ndarray | None,
                  budget_used: np.ndarray | None = None) -> StageSet:
        """Feasible set of stage t given the realized past."""
        rows = self.stage_rows(t, hist)
        lb, ub = self.bounds(t, hist)
        lb, ub = lb.copy(), ub.copy()
        if rows.m:
            shift = rows.rhs - (rows.a_prev @ x_prev if t > 1 else 0.0)
            le = rows.sense == LE
            G, h = rows.a_cur[le], shift[le]
            E, d = rows.a_cur[~le], shift[~le]
        else:
            n = self.dims[t - 1]
            G = np.zeros((0, n)); h = np.zeros(0)
            E = np.zeros((0, n)); d = np.zeros(0)
        for i, br in enumerate(self.budget_rows):
            used = 0.0 if budget_used is None else float(budget_used[i])
            ub[br.coord] = min(ub[br.coord], br.rhs - used)
        return StageSet(G, h, E, d, lb, ub)

    def trajectory_cost(self, xs: list[np.ndarray], path: np.ndarray) -> float:
        """Total additive cost of one realized trajectory."""
        return float(sum(self.cost(t, path[:t]) @ xs[t - 1] for t in range(1, self.T + 1)))

    def trajectory_violation(self, xs: list[np.ndarray], path: np.ndarray) -> float:
        """Largest constraint violation along a trajectory."""
        worst = 0.0
        used = np.zeros(len(self.budget_rows))
        for t in range(1, self.T + 1):
            ss = self.stage_set(t, path[:t], xs[t - 2] if t > 1 else None, used)
            worst = max(worst, ss.max_violation(xs[t - 1]))
            for i, br in enumerate(self.budget_rows):
                used[i] += xs[t - 1][br.coord]
        return worst

    def default_feature_map(self):
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Four-stage assembly problem
# ---------------------------------------------------------------------------

C1 = np.array([0.25, 1.363, 0.8093, 0.7284, 0.25, 0.535,
               0.25, 0.25, 0.25, 0.4484, 0.25, 0.25])
C2_Q = np.array([2.5, 2.5, 2.5, 2.5, 13.22, 2.5, 3.904, 2.5])
C3_Q = np.array([3.255, 2.5, 2.5, 8.418, 2.5])
C4 = -np.array([21.87, 98.16, 31.99, 10.0, 10.0])
B_DEMAND = np.array([
    [13.9, 9.708, 2.14, 4.12],
    [12.86, 9.901, 6.435, 7.446],
    [18.21, 7.889, 3.2, 2.679],
    [10.14, 4.387, 9.601, 4.399],
    [17.21, 4.983, 7.266, 9.334],
])
A2 = np.array([
    [0.4572, 0, 4.048, 0, 0, 0, 0.8243, 11.37],
    [0, 0, 0.7674, 0.5473, 0.3776, 0, 0, 0],
    [0.4794, 0, 0.4861, 1.223, 0, 1.475, 0, 0],
    [0, 0, 0, 0, 0.5114, 0.3139, 0, 0],
    [0, 12.29, 1.378, 0, 0.3748, 0.4554, 0, 0],
    [0.7878, 0, 0.293, 1.721, 0, 0, 0, 0],
    [1.504, 0.4696, 0.248, 0, 0.1852, 0, 0.3486, 0],
    [0, 1.204, 0, 0.7598, 0.452, 0, 0, 0],
    [0, 0, 0.2515, 0.3753, 0.6249, 0, 1.248, 0],
    [1.545, 0, 0, 0, 0, 0, 0.2732, 0],
    [0, 0, 0, 0.6597, 0, 2.525, 0, 0],
    [0, 0, 1.595, 0, 0, 1.51, 1.041, 0.9847],
])
A3 = np.array([
    [0, 1.223, 0.6367, 0, 0],
    [0, 0, 0, 1.111, 0],
    [0, 0, 0.4579, 0, 0],
    [0, 0.1693, 0.6589, 0, 0],
    [0.5085, 2.643, 0, 0, 0],
    [0.4017, 0, 0, 0, 0],
    [0, 0.7852, 85.48, 0, 0],
    [0, 0, 0, 0.806, 0.5825],
])


@dataclass(frozen=True)
class AssemblyData:
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    c4: np.ndarray
    b: np.ndarray
    a2: np.ndarray
    a3: np.ndarray

    def __post_init__(self):
        assert self.a2.shape == (12, 8) and self.a3.shape == (8, 5)
        assert np.all(self.a2 >= 0) and np.all(self.a3 >= 0)
        assert np.all(self.c4 < 0)


ASSEMBLY_DATA = AssemblyData(C1, C2_Q, C3_Q, C4, B_DEMAND, A2, A3)


def demand(hist4: np.ndarray, data: AssemblyData = ASSEMBLY_DATA) -> np.ndarray:
    """End-product demand at the final stage: max(0, <b_i, xi_[4]>)."""
    return np.maximum(0.0, data.b @ np.asarray(hist4, dtype=float))


def _allocation_rows(a: np.ndarray, n_prev: int) -> LocalRows:
    """Rows of an allocation stage with composition matrix ``a`` (inv x out).

    Decision layout: [q (n_out), Y flat row-major (n_inv * n_out)].
    Rows: a[i,j] * q_j - Y_ij <= 0 for a[i,j] > 0, and
    sum_j Y_ij - prev_i <= 0 for every input product i (the inventory lives
    in the first ``n_inv`` coordinates of the previous decision).
    """
    n_inv, n_out = a.shape
    n_cur = n_out + n_inv * n_out
    rows_prev, rows_cur, rhs = [], [], []
    for i in range(n_inv):
        for j in range(n_out):
            if a[i, j] > 0:
                rp = np.zeros(n_prev)
                rc = np.zeros(n_cur)
                rc[j] = a[i, j]
                rc[n_out + i * n_out + j] = -1.0
                rows_prev.append(rp); rows_cur.append(rc); rhs.append(0.0)
    for i in range(n_inv):
        rp = np.zeros(n_prev)
        rp[i] = -1.0
        rc = np.zeros(n_cur)
        rc[n_out + i * n_out:n_out + (i + 1) * n_out] = 1.0
        rows_prev.append(rp); rows_cur.append(rc); rhs.append(0.0)
    return LocalRows(np.asarray(rows_prev), np.asarray(rows_cur),
                     np.zeros(len(rhs), dtype=int), np.asarray(rhs))


class AssemblyProblem(ProblemSpec):
    """Four-stage resource-allocation problem with demand revealed last.

    Stage decisions: initial resources x1 (12), component allocations
    (q2, Y2) (8 + 96) and (q3, Y3) (5 + 40), and final sales x4 (5) capped by
    both inventory and the realized demand.
    """

    name = "assembly"
    T = 4
    dims = (12, 104, 45, 5)
    mode = ObjectiveMode.RISK_NEUTRAL
    rho = 0.0

    def __init__(self, data: AssemblyData = ASSEMBLY_DATA):
        self.data = data
        self.process = iid_std_normal(4)
        self._costs = (
            data.c1,
            np.concatenate([data.c2, np.zeros(96)]),
            np.concatenate([data.c3, np.zeros(40)]),
            data.c4,
        )
        self._rows2 = _allocation_rows(data.a2, 12)
        self._rows3 = _allocation_rows(data.a3, 104)
        rows4_prev = np.zeros((5, 45))
        rows4_prev[:, :5] = -np.eye(5)
        self._rows4 = LocalRows(rows4_prev, np.eye(5),
                                np.zeros(5, dtype=int), np.zeros(5))

    def cost(self, t, hist):
        return self._costs[t - 1]

    def stage_rows(self, t, hist):
        if t == 1:
            return _empty_rows(0, 12)
        return (self._rows2, self._rows3, self._rows4)[t - 2]

    def bounds(self, t, hist):
        n = self.dims[t - 1]
        lb = np.zeros(n)
        ub = np.full(n, np.inf)
        if t == 4:
            ub = demand(hist, self.data)
        return lb, ub

    def decision_override(self, t):
        if t != 4:
            return None

        def closed_form(hist, x_prev, budget_used=None):
            # Sell as much as inventory and demand allow (revenue cost < 0).
            return np.minimum(x_prev[..., :5], demand(hist, self.data))

        return closed_form

    def heuristic_stage_data(self, t: int):
        """(composition matrix, q width) driving the greedy restorer."""
        if t == 2:
            return self.data.a2, 8
        if t == 3:
            return self.data.a3, 5
        return None

    def default_feature_map(self):
        from .learn import RawHistoryFeatures

        return RawHistoryFeatures()


def assembly_problem() -> AssemblyProblem:
    return AssemblyProblem()


# ---------------------------------------------------------------------------
# Two-stage counterpart of the assembly problem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoStageProgram:
    """Expanded LP of the two-stage model: x1..x3 shared, x4 per scenario."""

    c: np.ndarray
    a_rows: list            # sparse triplets (rows, cols, vals)
    sense: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    n_scenarios: int
    first_stage_width: int  # 12 + 104 + 45

    def to_lp(self):
        from scipy.sparse import coo_matrix

        from .solver.lp import LinearProgram

        rows, cols, vals = self.a_rows
        A = coo_matrix((vals, (rows, cols)),
                       shape=(self.b.shape[0], self.c.shape[0])).tocsc()
        return LinearProgram(self.c, A, self.sense, self.b, self.lb, self.ub)


def two_stage_assembly(xi_paths: np.ndarray, probs: np.ndarray,
                       problem: AssemblyProblem | None = None) -> TwoStageProgram:
    """Eq.-style two-stage relaxation on a weighted scenario sample.

    ``xi_paths`` has shape (K, 4) with first column identically 1; the recourse
    decision x4 gets one copy per scenario, everything earlier is shared.
    """
    problem = problem or AssemblyProblem()
    xi_paths = np.asarray(xi_paths, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if xi_paths.ndim != 2 or xi_paths.shape[0] == 0:
        raise ValueError("nonempty scenario sample required")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError("scenario probabilities must sum to 1")
    K = xi_paths.shape[0]
    d = problem.dims
    shared = d[0] + d[1] + d[2]
    n = shared + K * d[3]

    c = np.concatenate([problem.cost(1, None), problem.cost(2, None),
                        problem.cost(3, None),
                        np.repeat(probs, d[3]) * np.tile(problem.cost(4, None), K)])
    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    rows, cols, vals = [], [], []
    b, sense = [], []
    offs = (0, d[0], d[0] + d[1])

    def add_rows(local: LocalRows, prev_off: int, cur_off: int):
        for r in range(local.m):
            i = len(b)
            for jj in np.flatnonzero(local.a_prev[r]):
                rows.append(i); cols.append(prev_off + jj); vals.append(local.a_prev[r, jj])
            for jj in np.flatnonzero(local.a_cur[r]):
                rows.append(i); cols.append(cur_off + jj); vals.append(local.a_cur[r, jj])
            b.append(local.rhs[r]); sense.append(local.sense[r])

    add_rows(problem.stage_rows(2, None), offs[0], offs[1])
    add_rows(problem.stage_rows(3, None), offs[1], offs[2])
    rows4 = problem.stage_rows(4, None)
    for k in range(K):
        off4 = shared + k * d[3]
        add_rows(rows4, offs[2], off4)
        ub[off4:off4 + d[3]] = demand(xi_paths[k], problem.data)

    return TwoStageProgram(c, (np.asarray(rows), np.asarray(cols), np.asarray(vals)),
                           np.asarray(sense, dtype=int), np.asarray(b, dtype=float),
                           lb, ub, K, shared)


# ---------------------------------------------------------------------------
# Swing exercise problem over a long horizon
# ---------------------------------------------------------------------------

# Per-step log-price standard deviation of the weekly price model.  The
# benchmark values of the exercise policies pin this to 0.07 (so the per-step
# variance is 0.0049): with a per-step *variance* of 0.07 the same policies
# would be worth roughly three times more.
SWING_SIGMA = 0.07
SWING_KAPPA = 1.0


@dataclass(frozen=True)
class SwingData:
    rho: float
    eta: float
    T: int

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be >= 0")
        if self.eta <= 0:
            raise ValueError("eta must be > 0")


class SwingProblem(ProblemSpec):
    """Exercise up to ``eta`` units over T stages at observed price offsets.

    The per-stage payoff is xi_t * x_t with x_t in [0, 1]; risk aversion
    rho > 0 switches the objective to the entropic certainty equivalent.
    """

    name = "swing"
    budget_coord = 0

    def __init__(self, rho: float, eta: float, T: int,
                 sigma: float = SWING_SIGMA, kappa: float = SWING_KAPPA):
        self.swing = SwingData(rho, eta, T)
        self.T = T
        self.dims = tuple([1] * T)
        self.rho = float(rho)
        self.mode = ObjectiveMode.ENTROPIC if rho > 0 else ObjectiveMode.RISK_NEUTRAL
        self.process = geom_price(T, sigma2=sigma * sigma, kappa=kappa)
        self.budget_rows = (BudgetRow(coord=0, rhs=float(eta)),)

    @property
    def eta(self) -> float:
        return self.swing.eta

    def cost(self, t, hist):
        return np.array([-float(np.asarray(hist).reshape(-1)[t - 1])])

    def stage_rows(self, t, hist):
        return _empty_rows(1 if t > 1 else 0, 1)

    def bounds(self, t, hist):
        return np.zeros(1), np.ones(1)

    def default_feature_map(self):
        from .learn import SwingStateFeatures

        return SwingStateFeatures(eta=self.eta, kappa=self.process.kappa, T=self.T)


def swing_problem(rho: float, eta: float, T: int) -> SwingProblem:
    return SwingProblem(rho, eta, T)


def bang_bang_policy(eta: float, T: int):
    """Exercise one unit whenever the price offset is positive late enough
    (within the last ``eta`` stages), the optimal rule for rho = 0."""
    from .policies import BangBangPolicy

    return BangBangPolicy(eta=eta, T=T)
