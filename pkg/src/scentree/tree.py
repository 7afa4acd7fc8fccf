"""Scenario trees and branching-structure generation.

A :class:`ScenarioTree` is stored in parent-array form: node ids are
depth-ordered integers, the root is node 0 at stage 1, and every node carries
the noise value observed on arrival and the transition probability of its
incoming arc.  Each root-to-leaf path is one scenario; its probability is the
product of arc probabilities along the path.

Random structures come from a self-adjusting branching process: walking depth
by depth, every node independently receives two children with probability
``r_t = (N - 1) / (T * nu_t)`` (``nu_t`` = realized node count at the current
depth) and one child otherwise, which makes the expected leaf count equal to
the target ``N``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .process import ProcessKind, ProcessModel, Quantizer, quantize_std_normal

MAX_SCENARIOS_DEFAULT = 10 ** 7


@dataclass(frozen=True)
class ScenarioTree:
    parent: np.ndarray          # (n,) int, -1 for the root
    stage: np.ndarray           # (n,) int, 1..T
    xi: np.ndarray              # (n,) float, noise value at the node
    prob: np.ndarray            # (n,) float, arc probability from the parent
    meta: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.parent.shape[0]

    @property
    def horizon(self) -> int:
        return int(self.stage.max())

    def children(self) -> list[np.ndarray]:
        """Adjacency: children[j] = ids of the children of node j."""
        order = np.argsort(self.parent[1:], kind="stable")
        ids = np.arange(1, self.n_nodes)[order]
        pts = self.parent[ids]
        out: list[np.ndarray] = [np.empty(0, dtype=int) for _ in range(self.n_nodes)]
        if ids.size:
            starts = np.searchsorted(pts, np.arange(self.n_nodes), side="left")
            ends = np.searchsorted(pts, np.arange(self.n_nodes), side="right")
            for j in range(self.n_nodes):
                out[j] = ids[starts[j]:ends[j]]
        return out

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.stage == self.horizon)

    def n_scenarios(self) -> int:
        return int(self.leaves().size)

    def stage_nodes(self, t: int) -> np.ndarray:
        return np.flatnonzero(self.stage == t)

    def node_reach_prob(self) -> np.ndarray:
        """Probability of reaching each node (product of arcs from the root)."""
        out = np.empty(self.n_nodes)
        out[0] = 1.0
        for j in range(1, self.n_nodes):  # parents precede children (depth order)
            out[j] = out[self.parent[j]] * self.prob[j]
        return out

    def path_to(self, node: int) -> np.ndarray:
        path = []
        j = int(node)
        while j >= 0:
            path.append(j)
            j = int(self.parent[j])
        return np.asarray(path[::-1], dtype=int)

    def history(self, node: int) -> np.ndarray:
        """Noise values observed on the path from the root to ``node``."""
        return self.xi[self.path_to(node)]

    def to_records(self) -> list[dict]:
        return [
            {"id": int(j), "parent": int(self.parent[j]), "stage": int(self.stage[j]),
             "xi": float(self.xi[j]), "prob": float(self.prob[j])}
            for j in range(self.n_nodes)
        ]

    @staticmethod
    def from_records(records: list[dict], meta: dict | None = None) -> "ScenarioTree":
        records = sorted(records, key=lambda r: r["id"])
        parent = np.asarray([r["parent"] for r in records], dtype=int)
        stage = np.asarray([r["stage"] for r in records], dtype=int)
        xi = np.asarray([r["xi"] for r in records], dtype=float)
        prob = np.asarray([r["prob"] for r in records], dtype=float)
        return ScenarioTree(parent, stage, xi, prob, meta or {})


class TreeValidationError(ValueError):
    pass


def validate(tree: ScenarioTree) -> None:
    """Check the structural invariants; raises TreeValidationError."""
    n = tree.n_nodes
    if n == 0:
        raise TreeValidationError("empty tree")
    if tree.parent[0] != -1 or tree.stage[0] != 1:
        raise TreeValidationError("node 0 must be the root at stage 1")
    if np.count_nonzero(tree.parent == -1) != 1:
        raise TreeValidationError("exactly one root expected")
    if n > 1:
        ps = tree.parent[1:]
        if np.any(ps < 0) or np.any(ps >= np.arange(1, n)):
            raise TreeValidationError("parents must precede children")
        if np.any(tree.stage[1:] != tree.stage[ps] + 1):
            raise TreeValidationError("child stage must be parent stage + 1")
    T = tree.horizon
    children = tree.children()
    for j in range(n):
        kids = children[j]
        if kids.size == 0:
            if tree.stage[j] != T:
                raise TreeValidationError(f"leaf {j} not at final stage")
        else:
            s = tree.prob[kids].sum()
            if abs(s - 1.0) > 1e-12:
                raise TreeValidationError(f"child probabilities of node {j} sum to {s}")
    total = tree.node_reach_prob()[tree.leaves()].sum()
    if abs(total - 1.0) > 1e-10:
        raise TreeValidationError(f"scenario probabilities sum to {total}")


def enumerate_scenarios(tree: ScenarioTree) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All scenarios: noise paths (K, T), probabilities (K,), node paths (K, T)."""
    T = tree.horizon
    leaves = tree.leaves()
    K = leaves.size
    node_paths = np.empty((K, T), dtype=int)
    for k, leaf in enumerate(leaves):
        node_paths[k] = tree.path_to(int(leaf))
    xi_paths = tree.xi[node_paths]
    probs = tree.node_reach_prob()[leaves]
    return xi_paths, probs, node_paths


@dataclass(frozen=True)
class BranchingPlan:
    """Pure branching structure: per depth, the child count of every node."""

    child_counts: tuple[tuple[int, ...], ...]

    @property
    def transitions(self) -> int:
        return len(self.child_counts)

    def node_counts(self) -> list[int]:
        counts = [1]
        for level in self.child_counts:
            if len(level) != counts[-1]:
                raise ValueError("level width inconsistent with previous child counts")
            counts.append(int(sum(level)))
        return counts

    def n_leaves(self) -> int:
        return self.node_counts()[-1]


def random_branching_plan(transitions: int, target_scenarios: int,
                          rng: np.random.Generator | int) -> BranchingPlan:
    """Self-adjusting branching process over ``transitions`` depth levels.

    At depth t with ``nu`` nodes, each node gets two children when a uniform
    draw falls below ``r_t = (N - 1) / (transitions * nu)`` (values above 1
    mean certain binary branching), one child otherwise.  The expected leaf
    count is the target ``N``.
    """
    if transitions < 1:
        raise ValueError("transitions must be >= 1")
    if target_scenarios < 1:
        raise ValueError("target_scenarios must be >= 1")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    levels = []
    nu = 1
    for _ in range(transitions):
        r = (target_scenarios - 1) / (transitions * nu)
        z = rng.uniform(size=nu)
        counts = np.where(z <= r, 2, 1)
        levels.append(tuple(int(c) for c in counts))
        nu = int(counts.sum())
    return BranchingPlan(tuple(levels))


def uniform_plan(transitions: int, b: int) -> BranchingPlan:
    levels = []
    nu = 1
    for _ in range(transitions):
        levels.append(tuple([b] * nu))
        nu *= b
    return BranchingPlan(tuple(levels))


def _degenerate_root_value(model: ProcessModel) -> float:
    """Stage-1 value at the root.

    The base i.i.d. model has the constant 1.  For processes whose first
    observation is stochastic the root carries the one-point quantization of
    the stage-1 law (the zero-innovation value), since a single root cannot
    branch on the first observation.
    """
    if model.kind is ProcessKind.IID_STD_NORMAL:
        return 1.0 if model.trivial_first else 0.0
    return model.s0 * float(np.exp(-0.5 * model.sigma2)) - model.kappa


def _child_values(model: ProcessModel, parent_price: float | None,
                  z: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    """Noise values of children given standard-normal (quantized) draws ``z``."""
    if model.kind is ProcessKind.IID_STD_NORMAL:
        return np.asarray(z, dtype=float), None
    prices = parent_price * np.exp(model.sigma * np.asarray(z) - 0.5 * model.sigma2)
    return prices - model.kappa, prices


def build_uniform_tree(model: ProcessModel, b: int,
                       quantizer_source=quantize_std_normal,
                       max_scenarios: int = MAX_SCENARIOS_DEFAULT,
                       root_value: float | None = None) -> ScenarioTree:
    """Uniform-branching tree: every stage uses the b-point quantizer.

    ``root_value`` overrides the stage-1 value (used by conditional trees
    rooted at an observed state).  Refuses trees with more than
    ``max_scenarios`` leaves.
    """
    if b < 1:
        raise ValueError("b must be >= 1")
    T = model.horizon
    if b ** (T - 1) > max_scenarios:
        raise ValueError(f"b={b}, T={T} would create {b ** (T - 1)} scenarios "
                         f"(cap {max_scenarios})")
    quant = quantizer_source(b)
    z = quant.points
    pz = quant.probs

    root_xi = _degenerate_root_value(model) if root_value is None else float(root_value)
    parent = [-1]
    stage = [1]
    xi = [root_xi]
    prob = [1.0]
    price = [root_xi + model.kappa if model.kind is ProcessKind.GEOM_PRICE else None]

    frontier = [0]
    for t in range(1, T):
        nxt = []
        for j in frontier:
            vals, prices = _child_values(model, price[j], z)
            for i in range(b):
                parent.append(j)
                stage.append(t + 1)
                xi.append(float(vals[i]))
                prob.append(float(pz[i]))
                price.append(float(prices[i]) if prices is not None else None)
                nxt.append(len(parent) - 1)
        frontier = nxt

    return ScenarioTree(np.asarray(parent), np.asarray(stage), np.asarray(xi),
                        np.asarray(prob), {"generator": "uniform", "b": b})


def instantiate_plan(plan: BranchingPlan, model: ProcessModel,
                     rng: np.random.Generator | int,
                     seed_label=None) -> ScenarioTree:
    """Monte Carlo tree on a given structure.

    Arc noise values are sampled i.i.d. from the conditional law of the next
    observation; sibling arcs share the uniform probability 1/child-count.
    The root carries a sampled stage-1 value when the first observation is
    stochastic, the degenerate value otherwise.
    """
    if plan.transitions != model.horizon - 1:
        raise ValueError(f"plan has {plan.transitions} transitions, "
                         f"model horizon {model.horizon} needs {model.horizon - 1}")
    if isinstance(rng, (int, np.integer)):
        seed_label = int(rng) if seed_label is None else seed_label
        rng = np.random.default_rng(int(rng))

    geom = model.kind is ProcessKind.GEOM_PRICE
    if geom:
        root_price = model.s0 * float(np.exp(model.sigma * rng.standard_normal()
                                             - 0.5 * model.sigma2))
        root_xi = root_price - model.kappa
    elif model.trivial_first:
        root_xi, root_price = 1.0, None
    else:
        root_xi, root_price = float(rng.standard_normal()), None

    parent = [-1]
    stage = [1]
    xi = [root_xi]
    prob = [1.0]
    price = [root_price]
    frontier = [0]
    for t, level in enumerate(plan.child_counts, start=1):
        if len(level) != len(frontier):
            raise ValueError("plan level width does not match the frontier")
        nxt = []
        for j, n_kids in zip(frontier, level):
            z = rng.standard_normal(n_kids)
            vals, prices = _child_values(model, price[j], z)
            for i in range(n_kids):
                parent.append(j)
                stage.append(t + 1)
                xi.append(float(vals[i]))
                prob.append(1.0 / n_kids)
                price.append(float(prices[i]) if prices is not None else None)
                nxt.append(len(parent) - 1)
        frontier = nxt

    meta = {"generator": "random", "target": plan.n_leaves()}
    if seed_label is not None:
        meta["seed"] = seed_label
    return ScenarioTree(np.asarray(parent), np.asarray(stage), np.asarray(xi),
                        np.asarray(prob), meta)


def build_conditional_tree(model: ProcessModel, observed_prefix: np.ndarray, b: int,
                           quantizer_source=quantize_std_normal,
                           max_scenarios: int = MAX_SCENARIOS_DEFAULT) -> ScenarioTree:
    """Uniform-b tree over the remaining horizon, rooted at the observed state.

    The root is the last observed value (stage ``t`` of the original problem,
    relabelled stage 1); children quantize the conditional law of each later
    stage.  Used by the shrinking-horizon benchmark.
    """
    from .process import conditional_model  # local import to avoid cycle noise

    observed_prefix = np.atleast_1d(np.asarray(observed_prefix, dtype=float))
    remaining = conditional_model(model, observed_prefix)
    # Horizon of the subtree = current (observed) stage + remaining stages.
    sub = ProcessModel(model.kind, remaining.horizon + 1, sigma2=model.sigma2,
                       kappa=model.kappa,
                       s0=(observed_prefix[-1] + model.kappa) if
                       model.kind is ProcessKind.GEOM_PRICE else 0.0,
                       trivial_first=False if model.kind is ProcessKind.GEOM_PRICE
                       else model.trivial_first)
    tree = build_uniform_tree(sub, b, quantizer_source, max_scenarios,
                              root_value=float(observed_prefix[-1]))
    tree.meta.update({"generator": "conditional-uniform", "b": b})
    return tree
