"""Central finite-difference derivatives used as independent oracles.

Steps are relative to each coordinate's magnitude. A floor keeps the step
usable near zero; pass floor=0 for coordinates that are strictly positive
and may be tiny, such as prizes.
"""

import logging
from collections.abc import Callable

import numpy as np

logger = logging.getLogger(__name__)

GRADIENT_STEP = 1e-6
HESSIAN_STEP = 1e-4


def _steps(x: np.ndarray, step: float, floor: float) -> np.ndarray:
    return step * np.maximum(np.abs(x), floor)


def central_gradient(
    func: Callable[[np.ndarray], float],
    x: np.ndarray,
    step: float = GRADIENT_STEP,
    floor: float = 1.0,
) -> np.ndarray:
    """Centered-difference gradient of a scalar function."""
    x0 = np.asarray(x, dtype=float)
    h = _steps(x0, step, floor)
    grad = np.zeros(len(x0))
    for j in range(len(x0)):
        shifted = x0.copy()
        shifted[j] = x0[j] + h[j]
        f_plus = func(shifted)
        shifted[j] = x0[j] - h[j]
        f_minus = func(shifted)
        grad[j] = (f_plus - f_minus) / (2.0 * h[j])
    return grad


def central_hessian(
    func: Callable[[np.ndarray], float],
    x: np.ndarray,
    step: float = HESSIAN_STEP,
    floor: float = 1.0,
) -> np.ndarray:
    """Centered-difference Hessian from function values only.

    Diagonal entries use the three-point second difference, off-diagonal
    entries the four-point cross difference.
    """
    x0 = np.asarray(x, dtype=float)
    n = len(x0)
    h = _steps(x0, step, floor)
    f0 = func(x0)
    hess = np.zeros((n, n))

    def at(offsets: dict[int, float]) -> float:
        shifted = x0.copy()
        for j, delta in offsets.items():
            shifted[j] += delta
        return func(shifted)

    for i in range(n):
        hess[i, i] = (at({i: h[i]}) - 2.0 * f0 + at({i: -h[i]})) / h[i] ** 2
        for j in range(i + 1, n):
            value = (
                at({i: h[i], j: h[j]})
                - at({i: h[i], j: -h[j]})
                - at({i: -h[i], j: h[j]})
                + at({i: -h[i], j: -h[j]})
            ) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = value
    logger.debug("Finite-difference Hessian over %d coordinates", n)
    return hess


def relative_error(approx: np.ndarray, exact: np.ndarray, floor: float = 0.0) -> float:
    """Largest entrywise error divided by max(max |exact|, floor)."""
    exact = np.asarray(exact, dtype=float)
    scale = max(float(np.max(np.abs(exact))), floor)
    if scale == 0:
        return float(np.max(np.abs(approx)))
    return float(np.max(np.abs(np.asarray(approx) - exact)) / scale)
