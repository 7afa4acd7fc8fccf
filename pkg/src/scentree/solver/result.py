"""Common result type of the in-repo convex solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Status(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITER_LIMIT = "iter_limit"


@dataclass
class SolveResult:
    status: Status
    x: np.ndarray | None
    objective: float | None
    iterations: int
    primal_residual: float = np.inf
    dual_residual: float = np.inf
    duals: np.ndarray | None = None          # row multipliers y
    reduced_costs: np.ndarray | None = None  # structural reduced costs
    ray: np.ndarray | None = None            # improving direction (UNBOUNDED)
    farkas: np.ndarray | None = None         # row certificate (INFEASIBLE)
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "objective": None if self.objective is None else float(self.objective),
            "iterations": int(self.iterations),
            "primal_residual": float(self.primal_residual),
            "dual_residual": float(self.dual_residual),
        }
