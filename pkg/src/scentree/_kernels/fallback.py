"""Pure numpy implementations of the hot kernels.

Same signatures and semantics as the compiled versions in ``_speedups``;
selected at import time when the extension is unavailable (or forced via
``SCENTREE_PURE_PYTHON=1``).
"""

from __future__ import annotations

import numpy as np

COMPILED = False


def pivot_update(binv: np.ndarray, d: np.ndarray, r: int) -> None:
    """In-place product-form update of a basis inverse.

    Replaces column ``r`` of the basis: ``binv[r] /= d[r]`` and
    ``binv[i] -= d[i] * binv[r]`` for every other row ``i``.
    """
    pr = binv[r] / d[r]
    dd = d.copy()
    dd[r] = 0.0
    binv -= np.outer(dd, pr)
    binv[r] = pr


def rbf_cross(q: np.ndarray, x: np.ndarray, inv_two_theta2: float) -> np.ndarray:
    """Gaussian kernel block: out[i, j] = exp(-||q_i - x_j||^2 * inv_two_theta2)."""
    qq = np.einsum("ij,ij->i", q, q)
    xx = np.einsum("ij,ij->i", x, x)
    sq = qq[:, None] + xx[None, :] - 2.0 * (q @ x.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-inv_two_theta2 * sq)
