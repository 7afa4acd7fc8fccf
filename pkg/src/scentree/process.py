"""Stochastic process models and optimal scalar quantization.

Two process kinds are supported:

* ``IID_STD_NORMAL`` -- the first observation is the constant 1 (a degenerate
  first stage), later observations are i.i.d. standard normal.
* ``GEOM_PRICE`` -- observations are price offsets ``xi_t = s_t - kappa`` of a
  driftless geometric price ``s_t = s_{t-1} * exp(sigma * eps_t - sigma^2/2)``
  started at ``s0`` (``eps_t`` i.i.d. standard normal, so ``E[s_t] = s0``).

``quantize_std_normal`` computes the distortion-minimizing b-point quantizer
of N(0, 1) by Lloyd iteration: each point is moved to the conditional mean of
its Voronoi cell until the fixed point is reached.  Cell probabilities are the
normal mass of the cells.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import normal


class ProcessKind(Enum):
    IID_STD_NORMAL = "iid_std_normal"
    GEOM_PRICE = "geom_price"


@dataclass(frozen=True)
class ProcessModel:
    """Noise process over ``horizon`` stages.

    ``trivial_first`` marks a degenerate first observation (the constant 1 of
    the base i.i.d. model).  Conditional laws obtained mid-horizon have no
    degenerate stage left, so :func:`conditional_model` clears the flag.
    """

    kind: ProcessKind
    horizon: int
    sigma2: float = 0.0   # per-step variance of the log-price increment
    kappa: float = 0.0    # strike level subtracted from the price
    s0: float = 0.0       # current price at the start of the horizon
    trivial_first: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.kind is ProcessKind.GEOM_PRICE:
            if self.sigma2 <= 0.0:
                raise ValueError("sigma2 must be > 0 for GEOM_PRICE")
            if self.s0 <= 0.0:
                raise ValueError("s0 must be > 0 for GEOM_PRICE")
            if self.trivial_first:
                raise ValueError("GEOM_PRICE has no degenerate first stage")

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))


def iid_std_normal(horizon: int) -> ProcessModel:
    return ProcessModel(ProcessKind.IID_STD_NORMAL, horizon, trivial_first=True)


def geom_price(horizon: int, sigma2: float, kappa: float, s0: float | None = None) -> ProcessModel:
    if s0 is None:
        s0 = kappa
    return ProcessModel(ProcessKind.GEOM_PRICE, horizon, sigma2=sigma2, kappa=kappa, s0=s0)


def sample_path(model: ProcessModel, rng: np.random.Generator | int) -> np.ndarray:
    """One path of the noise process; deterministic given the generator state."""
    return sample_paths(model, 1, rng)[0]


def sample_paths(model: ProcessModel, n: int, rng: np.random.Generator | int) -> np.ndarray:
    """``n`` independent paths, shape (n, horizon)."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    T = model.horizon
    if model.kind is ProcessKind.IID_STD_NORMAL:
        if not model.trivial_first:
            return rng.standard_normal((n, T))
        out = np.empty((n, T))
        out[:, 0] = 1.0
        if T > 1:
            out[:, 1:] = rng.standard_normal((n, T - 1))
        return out
    eps = rng.standard_normal((n, T))
    return geom_prices_from_eps(model, eps) - model.kappa


def geom_prices_from_eps(model: ProcessModel, eps: np.ndarray) -> np.ndarray:
    """Prices s_1..s_T driven by given standard-normal innovations (..., T)."""
    sigma = model.sigma
    log_inc = sigma * eps - 0.5 * model.sigma2
    return model.s0 * np.exp(np.cumsum(log_inc, axis=-1))


def conditional_model(model: ProcessModel, history: np.ndarray) -> ProcessModel:
    """Law of the remaining stages after observing the prefix ``history``.

    The i.i.d. model is unchanged apart from the shorter horizon (and no
    degenerate first stage remains); the geometric price restarts from the
    price implied by the last observed offset.
    """
    history = np.atleast_1d(np.asarray(history, dtype=float))
    t = history.shape[0]
    if not 1 <= t < model.horizon:
        raise ValueError(f"history length {t} must be in [1, horizon)")
    if model.kind is ProcessKind.IID_STD_NORMAL:
        return replace(model, horizon=model.horizon - t, trivial_first=False)
    s_t = history[-1] + model.kappa
    if s_t <= 0.0:
        raise ValueError("observed price must be positive")
    return replace(model, horizon=model.horizon - t, s0=s_t)


class QuantizerConvergenceError(RuntimeError):
    """Lloyd iteration hit the iteration cap; carries the last iterate."""

    def __init__(self, last: "Quantizer"):
        super().__init__(f"Lloyd iteration did not converge (b={last.b})")
        self.last = last


@dataclass(frozen=True)
class Quantizer:
    """Fixed point of the Lloyd iteration for N(0, 1)."""

    points: np.ndarray
    probs: np.ndarray
    distortion: float
    tol: float

    @property
    def b(self) -> int:
        return self.points.shape[0]

    def __post_init__(self):
        if self.b < 1:
            raise ValueError("b must be >= 1")
        if np.any(np.diff(self.points) <= 0.0):
            raise ValueError("points must be strictly increasing")
        if abs(self.probs.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "points": self.points.tolist(),
            "probs": self.probs.tolist(),
            "distortion": self.distortion,
            "tol": self.tol,
        }

    @staticmethod
    def from_dict(d: dict) -> "Quantizer":
        return Quantizer(np.asarray(d["points"], dtype=float),
                         np.asarray(d["probs"], dtype=float),
                         float(d["distortion"]), float(d["tol"]))


def _cells(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mids = 0.5 * (points[:-1] + points[1:])
    lo = np.concatenate(([-np.inf], mids))
    hi = np.concatenate((mids, [np.inf]))
    return lo, hi


def _distortion(points: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                probs: np.ndarray) -> float:
    m1 = normal.partial_mean(lo, hi)
    m2 = normal.partial_second_moment(lo, hi)
    return float(np.sum(m2 - 2.0 * points * m1 + points**2 * probs))


def quantize_std_normal(b: int, tol: float = 1e-10, max_iter: int = 10_000) -> Quantizer:
    """Optimal b-point quantizer of N(0, 1).

    Points start at the quantiles (i + 0.5)/b -- a symmetric initialization,
    so the (unique, symmetric) fixed point is preserved by every Lloyd step.
    Raises :class:`QuantizerConvergenceError` after ``max_iter`` sweeps.
    """
    if b < 1:
        raise ValueError("b must be >= 1")
    if tol <= 0.0:
        raise ValueError("tol must be > 0")
    points = normal.inv_cdf((np.arange(b) + 0.5) / b)
    if b == 1:
        points = np.zeros(1)
        return Quantizer(points, np.ones(1), 1.0, tol)

    for _ in range(max_iter):
        lo, hi = _cells(points)
        probs = normal.mass(lo, hi)
        centroids = normal.partial_mean(lo, hi) / probs
        move = float(np.max(np.abs(centroids - points)))
        points = centroids
        if move < tol:
            lo, hi = _cells(points)
            probs = normal.mass(lo, hi)
            return Quantizer(points, probs, _distortion(points, lo, hi, probs), tol)

    lo, hi = _cells(points)
    probs = normal.mass(lo, hi)
    raise QuantizerConvergenceError(
        Quantizer(points, probs, _distortion(points, lo, hi, probs), tol))
