"""Conditional moments of battle outcomes and the log-Hessian of team A's objective.

This module provides:
- conditional_moments: exact moments of the outcome vector X given the
  majority event, by enumeration of all 2^(2N+1) outcomes
- log_hessian: the Hessian of log P(A wins) in team A's prizes together
  with the matrices M and M0 whose definiteness controls it
- m0_closed_form: M0 from elementary symmetric functions of the odds
  phi_t = (1 - p_t) / p_t, with no enumeration

Enumeration runs in chunks of at most 2^16 outcomes so memory stays flat.
"""

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from src.contest.domain import Allocation, ContestSpec
from src.contest.probability import BoundaryAllocationError, battle_probs
from src.utils.config import load_settings

logger = logging.getLogger(__name__)

MAX_ENUMERATION_BATTLES = 25
_CHUNK_BITS = 16


class EnumerationLimitError(Exception):
    """Exception raised when exact enumeration would exceed its budget.

    Attributes:
        message: Explanation of the error
        details: Requested and permitted battle counts
    """

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class ConditionalMoments:
    """Moments of the outcome vector conditional on team A's majority.

    Attributes:
        g: Uplift G_t = E[X_t | A] - p_t, nonnegative
        sigma_a: Conditional covariance Cov(X | A)
        d: Unconditional variances p_t (1 - p_t)
        prob_a: P(A)
    """

    g: np.ndarray
    sigma_a: np.ndarray
    d: np.ndarray
    prob_a: float

    def __post_init__(self) -> None:
        for name in ("g", "sigma_a", "d"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))


def conditional_moments(
    probs: np.ndarray | list[float], max_battles: int | None = None
) -> ConditionalMoments:
    """Exact conditional moments by enumerating every outcome vector.

    Args:
        probs: Team A's winning probability in each of 2N+1 battles
        max_battles: Enumeration budget in battles; defaults to the
            CONTEST_ENUMERATION_CAP setting

    Returns:
        ConditionalMoments for the majority event {sum X_t >= N+1}

    Raises:
        EnumerationLimitError: If there are more than ``max_battles`` battles
        ValueError: If probabilities leave [0, 1] or P(A) is zero

    Example:
        >>> conditional_moments([0.5, 0.5, 0.5]).g.tolist()
        [0.25, 0.25, 0.25]
    """
    p = np.asarray(probs, dtype=float)
    n = len(p)
    if max_battles is None:
        max_battles = load_settings().enumeration_cap
    if n > max_battles:
        msg = f"Exact enumeration over {n} battles exceeds the cap of {max_battles}"
        raise EnumerationLimitError(msg, {"battles": n, "cap": max_battles})
    if n < 3 or n % 2 == 0:
        msg = f"Majority event needs an odd battle count >= 3, got {n}"
        raise ValueError(msg)
    if np.any((p < 0) | (p > 1)):
        msg = f"Probabilities must lie in [0, 1], got {p.tolist()}"
        raise ValueError(msg)

    n_level = (n - 1) // 2
    bit_positions = np.arange(n, dtype=np.int64)
    total = 1 << n
    chunk = 1 << min(n, _CHUNK_BITS)

    prob_a = 0.0
    first = np.zeros(n)
    second = np.zeros((n, n))
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        outcomes = ((codes[:, None] >> bit_positions) & 1).astype(float)
        weights = np.prod(np.where(outcomes == 1.0, p, 1.0 - p), axis=1)
        weights = weights * (outcomes.sum(axis=1) > n_level)
        prob_a += float(weights.sum())
        first += weights @ outcomes
        second += outcomes.T @ (weights[:, None] * outcomes)

    if prob_a <= 0:
        msg = "Majority event has probability zero; conditional moments undefined"
        raise ValueError(msg)
    mean = first / prob_a
    sigma_a = second / prob_a - np.outer(mean, mean)
    sigma_a = 0.5 * (sigma_a + sigma_a.T)
    return ConditionalMoments(
        g=mean - p, sigma_a=sigma_a, d=p * (1.0 - p), prob_a=prob_a
    )


@dataclass(frozen=True)
class HessianReport:
    """Hessian of log P(A wins) in team A's prizes and its companion matrices.

    Attributes:
        h: Hessian in v_A
        m: D + diag(G / r) - Sigma_A, so that H = -(R V^-1) M (R V^-1)
        m0: D + diag(G) - Sigma_A
        max_eig_h: Largest eigenvalue of h
        min_eig_m: Smallest eigenvalue of m
        min_eig_m0: Smallest eigenvalue of m0
    """

    h: np.ndarray
    m: np.ndarray
    m0: np.ndarray
    max_eig_h: float
    min_eig_m: float
    min_eig_m0: float

    def __post_init__(self) -> None:
        for name in ("h", "m", "m0"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))


def _symmetric(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def log_hessian(
    alloc_a: Allocation,
    alloc_b: Allocation,
    spec: ContestSpec,
    max_battles: int | None = None,
) -> HessianReport:
    """Analytic Hessian of log P(A wins) in team A's prizes.

    H = (R V^-1)(Sigma_A - D)(R V^-1) - R V^-2 diag(G), where V and R are the
    diagonal matrices of team A's prizes and the battle powers.

    Raises:
        BoundaryAllocationError: If either allocation has a zero share
        EnumerationLimitError: If the contest is too large to enumerate
    """
    for allocation in (alloc_a, alloc_b):
        if not allocation.is_interior:
            msg = f"Hessian undefined: team {allocation.owner} has a zero share"
            raise BoundaryAllocationError(msg, {"team": str(allocation.owner)})

    moments = conditional_moments(battle_probs(alloc_a, alloc_b, spec), max_battles)
    r = spec.powers
    v = alloc_a.as_array()
    scale = r / v
    d = np.diag(moments.d)
    h = _symmetric(
        scale[:, None] * (moments.sigma_a - d) * scale[None, :]
        - np.diag(r * moments.g / v**2)
    )
    m = _symmetric(d + np.diag(moments.g / r) - moments.sigma_a)
    m0 = _symmetric(d + np.diag(moments.g) - moments.sigma_a)
    return HessianReport(
        h=h,
        m=m,
        m0=m0,
        max_eig_h=float(np.linalg.eigvalsh(h)[-1]),
        min_eig_m=float(np.linalg.eigvalsh(m)[0]),
        min_eig_m0=float(np.linalg.eigvalsh(m0)[0]),
    )


def elementary_symmetric(values: np.ndarray, max_degree: int) -> np.ndarray:
    """Numeric e_0..e_max_degree of a vector by the incremental product rule."""
    e = np.zeros(max_degree + 1)
    e[0] = 1.0
    for x in values:
        e[1:] = e[1:] + x * e[:-1]
    return e


def _phi_level(values: np.ndarray, m: int) -> float:
    if m < 0:
        return 0.0
    return float(elementary_symmetric(values, m).sum())


def m0_closed_form(probs: np.ndarray | list[float]) -> np.ndarray:
    """M0 evaluated from the odds phi_t = (1 - p_t) / p_t.

    Diagonal: phi_t e_N(phi_-t) (2 Phi_N + phi_t e_N(phi_-t)) / ((1+phi_t)^2 Phi_N^2).
    Off-diagonal: phi_t phi_s T_N(phi_-{t,s}) / Phi_N^2 with the Turan defect
    T_N = Phi_{N-1}^2 - Phi_{N-2} Phi_N.

    Raises:
        ValueError: If any probability is outside (0, 1]
    """
    p = np.asarray(probs, dtype=float)
    if np.any((p <= 0) | (p > 1)):
        msg = f"Odds need probabilities in (0, 1], got {p.tolist()}"
        raise ValueError(msg)
    n = len(p)
    n_level = (n - 1) // 2
    phi = (1.0 - p) / p
    phi_n = _phi_level(phi, n_level)

    m0 = np.empty((n, n))
    for t in range(n):
        others = np.delete(phi, t)
        e_n = elementary_symmetric(others, n_level)[n_level]
        numerator = phi[t] * e_n * (2.0 * phi_n + phi[t] * e_n)
        m0[t, t] = numerator / ((1.0 + phi[t]) ** 2 * phi_n**2)
        for s in range(t + 1, n):
            rest = np.delete(phi, [t, s])
            turan = _phi_level(rest, n_level - 1) ** 2 - _phi_level(
                rest, n_level - 2
            ) * _phi_level(rest, n_level)
            m0[t, s] = m0[s, t] = phi[t] * phi[s] * turan / phi_n**2
    return m0
