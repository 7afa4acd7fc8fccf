"""Deterministic equivalent of a problem on a scenario tree.

One decision block is attached to every tree node, so decisions automatically
agree across scenarios that share a node (the tree form of the
nonanticipativity requirement).  The risk-neutral mode produces a single LP
whose objective weights each node block by the probability of reaching the
node; the entropic mode produces a smooth convex program over per-leaf path
costs.

Subproblems over a remaining horizon are supported through ``start_stage``,
``history_prefix`` and ``fixed_prev``: the tree then covers problem stages
``start_stage..T`` with the already-implemented decision folded into the
right-hand sides (used by the shrinking-horizon benchmark).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .problems import EQ, LE, ObjectiveMode, ProblemSpec
from .solver.entropic import EntropicProgram, solve_entropic
from .solver.lp import LinearProgram, solve_lp
from .solver.result import SolveResult
from .tree import ScenarioTree


@dataclass
class TreeProgram:
    problem: ProblemSpec
    tree: ScenarioTree
    mode: ObjectiveMode
    offsets: np.ndarray          # (n_nodes,) start of each node's block
    widths: np.ndarray           # (n_nodes,)
    start_stage: int
    lp: LinearProgram | None = None
    ent: EntropicProgram | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_var(self) -> int:
        return int(self.offsets[-1] + self.widths[-1])

    def solve(self, **kwargs) -> SolveResult:
        if self.mode is ObjectiveMode.RISK_NEUTRAL:
            return solve_lp(self.lp, **kwargs)
        return solve_entropic(self.ent, **kwargs)

    def objective_at(self, x: np.ndarray) -> float:
        if self.mode is ObjectiveMode.RISK_NEUTRAL:
            return float(self.lp.c @ x)
        return self.ent.objective(x)

    def node_decision(self, x: np.ndarray, node: int) -> np.ndarray:
        o, w = self.offsets[node], self.widths[node]
        return x[o:o + w]


def build_tree_program(problem: ProblemSpec, tree: ScenarioTree, *,
                       start_stage: int = 1,
                       history_prefix: np.ndarray | None = None,
                       fixed_prev: np.ndarray | None = None,
                       budget_used: np.ndarray | None = None) -> TreeProgram:
    """Assemble the node-indexed convex program for ``tree``.

    The tree's stages 1..L map to problem stages ``start_stage..T``; for a
    subproblem (``start_stage > 1``) the realized ``history_prefix`` (stages
    1..start_stage-1) and the implemented ``fixed_prev`` decision are folded
    into costs, bounds and right-hand sides.
    """
    T = problem.T
    L = tree.horizon
    if start_stage + L - 1 != T:
        raise ValueError(f"tree depth {L} does not span stages "
                         f"{start_stage}..{T} of the problem")
    if start_stage > 1:
        history_prefix = np.asarray(history_prefix, dtype=float)
        if history_prefix.shape[0] != start_stage - 1:
            raise ValueError("history_prefix must cover stages 1..start_stage-1")
        if fixed_prev is None:
            raise ValueError("fixed_prev required for a mid-horizon subproblem")
    else:
        history_prefix = np.zeros(0)

    n_nodes = tree.n_nodes
    stages = tree.stage + (start_stage - 1)
    widths = np.asarray([problem.dims[t - 1] for t in stages], dtype=int)
    offsets = np.concatenate([[0], np.cumsum(widths)[:-1]]).astype(int)
    n_var = int(widths.sum())
    reach = tree.node_reach_prob()

    hist_cache: list[np.ndarray | None] = [None] * n_nodes
    for j in range(n_nodes):
        p = tree.parent[j]
        prev_hist = history_prefix if p < 0 else hist_cache[p]
        hist_cache[j] = np.concatenate([prev_hist, [tree.xi[j]]])

    c = np.zeros(n_var)
    lb = np.empty(n_var)
    ub = np.empty(n_var)
    rows, cols, vals, rhs, senses = [], [], [], [], []
    node_costs: list[np.ndarray] = [None] * n_nodes

    for j in range(n_nodes):
        t = int(stages[j])
        hist = hist_cache[j]
        o, w = offsets[j], widths[j]
        cost_j = np.asarray(problem.cost(t, hist), dtype=float)
        node_costs[j] = cost_j
        c[o:o + w] = reach[j] * cost_j
        blo, bhi = problem.bounds(t, hist)
        lb[o:o + w] = blo
        ub[o:o + w] = bhi
        local = problem.stage_rows(t, hist)
        if local.m == 0:
            continue
        p = tree.parent[j]
        shift = np.zeros(local.m)
        if t > 1 and p < 0 and fixed_prev is not None:
            shift = local.a_prev @ fixed_prev
        for r in range(local.m):
            i = len(rhs)
            if p >= 0:
                po, pw = offsets[p], widths[p]
                for jj in np.flatnonzero(local.a_prev[r]):
                    rows.append(i); cols.append(po + jj)
                    vals.append(local.a_prev[r, jj])
                del pw
            for jj in np.flatnonzero(local.a_cur[r]):
                rows.append(i); cols.append(o + jj)
                vals.append(local.a_cur[r, jj])
            rhs.append(local.rhs[r] - shift[r])
            senses.append(local.sense[r])

    # Cumulative (budget) rows: one per leaf and budget constraint.
    leaves = tree.leaves()
    for bi, br in enumerate(problem.budget_rows):
        used = 0.0 if budget_used is None else float(np.asarray(budget_used)[bi])
        for leaf in leaves:
            i = len(rhs)
            node = int(leaf)
            while node >= 0:
                rows.append(i); cols.append(int(offsets[node]) + br.coord)
                vals.append(1.0)
                node = int(tree.parent[node])
            rhs.append(br.rhs - used)
            senses.append(LE)

    A = sparse.coo_matrix((vals, (rows, cols)), shape=(len(rhs), n_var)).tocsc()
    sense_arr = np.asarray(senses, dtype=int)
    rhs_arr = np.asarray(rhs, dtype=float)

    prog = TreeProgram(problem, tree, problem.mode, offsets, widths, start_stage,
                       meta={"n_rows": len(rhs), "n_var": n_var})
    if problem.mode is ObjectiveMode.RISK_NEUTRAL:
        prog.lp = LinearProgram(c, A, sense_arr, rhs_arr, lb, ub)
        return prog

    if np.any(sense_arr == EQ):
        raise NotImplementedError("entropic mode supports inequality rows only")
    K = leaves.size
    wr, wc, wv = [], [], []
    for k, leaf in enumerate(leaves):
        node = int(leaf)
        while node >= 0:
            o, w = offsets[node], widths[node]
            cj = node_costs[node]
            for jj in range(w):
                if cj[jj] != 0.0:
                    wr.append(k); wc.append(o + jj); wv.append(cj[jj])
            node = int(tree.parent[node])
    W = sparse.coo_matrix((wv, (wr, wc)), shape=(K, n_var)).tocsr()
    prog.ent = EntropicProgram(
        rho=problem.rho, leaf_probs=reach[leaves], W=W, lb=lb, ub=ub,
        G=sparse.csr_matrix(A), h=rhs_arr,
        meta={"leaves": leaves.tolist()})
    return prog


def node_solutions(prog: TreeProgram, x: np.ndarray) -> list[np.ndarray]:
    """Per-node decision vectors of a solved program."""
    return [prog.node_decision(x, j) for j in range(prog.tree.n_nodes)]


def extract_node_solution(prog: TreeProgram, result: SolveResult,
                          stage: int) -> dict[int, np.ndarray]:
    """Map node id -> decision for one (tree) stage of a solved program."""
    if result.x is None:
        raise ValueError(f"program not solved: status {result.status.value}")
    out = {}
    for j in np.flatnonzero(prog.tree.stage == stage):
        out[int(j)] = prog.node_decision(result.x, int(j))
    return out


def reevaluate_objective(prog: TreeProgram, x: np.ndarray) -> float:
    """Recompute the objective scenario-by-scenario (round-trip check)."""
    from .tree import enumerate_scenarios

    if prog.start_stage > 1:
        raise NotImplementedError("round-trip check is for full-horizon programs")
    xi_paths, probs, node_paths = enumerate_scenarios(prog.tree)
    costs = np.empty(probs.shape[0])
    for k in range(probs.shape[0]):
        total = 0.0
        for depth, node in enumerate(node_paths[k]):
            t = depth + 1
            hist = xi_paths[k, :t]
            total += float(prog.problem.cost(t, hist) @ prog.node_decision(x, int(node)))
        costs[k] = total
    if prog.mode is ObjectiveMode.RISK_NEUTRAL:
        return float(probs @ costs)
    rho = prog.problem.rho
    z = np.log(probs) + rho * costs
    m = float(np.max(z))
    return (m + float(np.log(np.exp(z - m).sum()))) / rho


def dump_text(prog: TreeProgram) -> str:
    """Fixed-format text dump (OBJECTIVE / ROWS / BOUNDS sections)."""
    if prog.lp is None:
        raise ValueError("text dump is defined for the linear mode")
    lp = prog.lp
    lines = ["OBJECTIVE"]
    lines += [f"  x{j} {lp.c[j]!r}" for j in range(lp.n) if lp.c[j] != 0.0]
    lines.append("ROWS")
    A = lp.A.tocsr()
    for i in range(lp.m):
        sl = slice(A.indptr[i], A.indptr[i + 1])
        terms = " + ".join(f"{A.data[k]!r} x{A.indices[k]}" for k in range(sl.start, sl.stop))
        op = "<=" if lp.sense[i] == LE else "=="
        lines.append(f"  r{i}: {terms} {op} {lp.b[i]!r}")
    lines.append("BOUNDS")
    for j in range(lp.n):
        lines.append(f"  {lp.lb[j]!r} <= x{j} <= {lp.ub[j]!r}")
    return "\n".join(lines) + "\n"
