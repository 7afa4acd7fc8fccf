"""Scenario-tree stochastic programming with learned decision policies.

Builds scenario-tree approximations of multistage convex problems, solves
their deterministic equivalents with in-repo solvers, learns Gaussian-process
policies from the optimized node decisions, restores decision feasibility,
and ranks policies by out-of-sample Monte Carlo simulation.
"""

__version__ = "0.1.0"
