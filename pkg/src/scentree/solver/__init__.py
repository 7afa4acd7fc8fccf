"""In-repo convex solvers: LP (revised simplex), scaled projection (QP),
and a projected-gradient method for entropic objectives."""

from .result import SolveResult, Status
from .lp import LinearProgram, dense_lp, solve_lp, farkas_gap
from .qp import project_scaled
from .entropic import solve_entropic

__all__ = ["SolveResult", "Status", "LinearProgram", "dense_lp", "solve_lp",
           "farkas_gap", "project_scaled", "solve_entropic"]
