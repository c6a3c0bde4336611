"""Closed-form equilibrium of the two-team majoritarian contest.

This module provides:
- solve: equilibrium probabilities, pivotalities, saliences and allocations
- Per-battle efforts and the effort-cost / HHI decomposition
- Salience for any scale-invariant (HD-0) reduced-form success function,
  a scale-invariance check and a solver built on caller-supplied functions

Equilibrium probabilities depend only on primitives and the budget ratio,
so no fixed-point iteration is involved.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import expit, log_expit, softmax

from src.contest.domain import (
    Allocation,
    Battle,
    CheckResult,
    ContestSpec,
    Equilibrium,
    Team,
    tolerance_check,
    validate_spec,
)
from src.contest.probability import battle_win_prob, pivotality, team_win_prob

logger = logging.getLogger(__name__)

ReducedCSF = Callable[[float, float], float]

HD0_STEP = 1e-6


class EquilibriumError(Exception):
    """Exception raised when an equilibrium quantity cannot be computed.

    Attributes:
        message: Explanation of the error
        details: Offending inputs
    """

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


def _log_odds(spec: ContestSpec) -> np.ndarray:
    return spec.powers * (
        np.log(spec.costs_b) - np.log(spec.costs_a) - math.log(spec.budget_ratio)
    )


def equilibrium_probabilities(spec: ContestSpec) -> np.ndarray:
    """Team A's equilibrium battle probabilities c_t / (c_t + k^r_t).

    Evaluated as a logistic of r_t (ln c_Bt - ln c_At - ln k), so extreme
    cost ratios neither overflow nor lose the complementary probability.
    """
    return expit(_log_odds(spec))


def _log_pivotality(log_p: np.ndarray, log_q: np.ndarray) -> np.ndarray:
    # Poisson-binomial convolution over the other battles, carried in logs.
    n = len(log_p)
    n_level = (n - 1) // 2
    out = np.empty(n)
    for t in range(n):
        log_mass = np.zeros(1)
        for j in range(n):
            if j == t:
                continue
            extended = np.full(len(log_mass) + 1, -np.inf)
            extended[:-1] = log_mass + log_q[j]
            extended[1:] = np.logaddexp(extended[1:], log_mass + log_p[j])
            log_mass = extended
        out[t] = log_mass[n_level]
    return out


def _efforts(
    responsiveness: np.ndarray,
    theta: np.ndarray,
    shares: np.ndarray,
    costs: np.ndarray,
) -> np.ndarray:
    return responsiveness * theta * shares / costs


def solve(spec: ContestSpec) -> Equilibrium:
    """Solve a contest in closed form.

    Prize shares come from a max-shifted softmax of the log saliences, so a
    lopsided battle whose p_t (1 - p_t) or pivotality underflows still gets
    a positive share.

    Args:
        spec: Contest primitives; validated on entry

    Returns:
        Equilibrium with every derived quantity filled in

    Raises:
        SpecValidationError: If the contest violates an invariant
        EquilibriumError: If a salience share underflows to zero

    Example:
        >>> from src.contest.presets import worked_example_spec
        >>> [round(p, 4) for p in solve(worked_example_spec()).prob_a]
        [0.5, 0.8, 0.6667]
    """
    validate_spec(spec)
    k = spec.budget_ratio
    log_odds = _log_odds(spec)
    prob_a = expit(log_odds)
    log_p = log_expit(log_odds)
    log_q = log_expit(-log_odds)
    log_theta = _log_pivotality(log_p, log_q)
    log_salience = log_theta + np.log(spec.powers) + log_p + log_q
    weights = softmax(log_salience)
    if not np.all(np.isfinite(weights) & (weights > 0)):
        t = int(np.argmin(np.where(np.isfinite(weights), weights, 0.0)))
        msg = (
            f"Salience of battle {t + 1} is too small relative to the others "
            "to be represented in double precision"
        )
        raise EquilibriumError(msg, {"rule": "salience underflow", "battle": t + 1})
    cost_index = spec.cost_indices
    theta = np.exp(log_theta)
    responsiveness = spec.powers * np.exp(log_p + log_q)
    salience = theta * responsiveness
    shares_a = spec.budget_a * weights
    shares_b = spec.budget_b * weights

    efforts_a = _efforts(responsiveness, theta, shares_a, spec.costs_a)
    efforts_b = _efforts(responsiveness, theta, shares_b, spec.costs_b)
    hhi = float(np.sum(weights**2))
    total_cost = spec.total_budget * float(salience.sum()) * hhi

    logger.debug("Solved %d-battle contest with k=%.6g", spec.n_battles, k)
    return Equilibrium(
        k=k,
        cost_index=tuple(cost_index.tolist()),
        prob_a=tuple(prob_a.tolist()),
        pivotality=tuple(theta.tolist()),
        responsiveness=tuple(responsiveness.tolist()),
        salience=tuple(salience.tolist()),
        alloc_a=Allocation(shares=tuple(shares_a.tolist()), owner=Team.A),
        alloc_b=Allocation(shares=tuple(shares_b.tolist()), owner=Team.B),
        team_prob_a=team_win_prob(prob_a),
        efforts_a=tuple(efforts_a.tolist()),
        efforts_b=tuple(efforts_b.tolist()),
        total_effort_cost=total_cost,
        hhi=hhi,
    )


def battle_efforts(eq: Equilibrium, spec: ContestSpec) -> tuple[np.ndarray, np.ndarray]:
    """Equilibrium efforts e_it = r_t p_At p_Bt theta(t) v_it / c_it.

    Args:
        eq: Equilibrium produced by solve on ``spec``
        spec: The contest the equilibrium belongs to

    Returns:
        (efforts_a, efforts_b)
    """
    responsiveness = np.asarray(eq.responsiveness)
    theta = np.asarray(eq.pivotality)
    return (
        _efforts(responsiveness, theta, eq.alloc_a.as_array(), spec.costs_a),
        _efforts(responsiveness, theta, eq.alloc_b.as_array(), spec.costs_b),
    )


def total_effort_cost(eq: Equilibrium) -> tuple[float, float, float]:
    """Total effort cost and its two factors.

    E* = (W_A + W_B) * sum(S) * HHI(S), with HHI(S) the sum of squared
    salience shares.

    Returns:
        (E*, hhi, total_salience)
    """
    total_salience = float(np.sum(eq.salience))
    budget = eq.alloc_a.budget + eq.alloc_b.budget
    return budget * total_salience * eq.hhi, eq.hhi, total_salience


def tullock_csf(battle: Battle) -> ReducedCSF:
    """Reduced-form Tullock success function of a battle as a callable."""

    def csf(v_a: float, v_b: float) -> float:
        return battle_win_prob(v_a, v_b, battle)

    return csf


def salience_hd0(
    reduced_csf: ReducedCSF, pivotality: float, k: float, x: float
) -> float:
    """Salience theta * x * dp/dv_a at the proportional point (x, k x).

    The derivative is a central finite difference with step x * 1e-6. For a
    scale-invariant success function the result does not depend on x.

    Args:
        reduced_csf: Team A's winning probability as a function of (v_a, v_b)
        pivotality: theta(t) of the battle
        k: Budget ratio W_B / W_A
        x: Reference prize, positive

    Returns:
        Generalized salience of the battle

    Raises:
        ValueError: If x is not positive
        EquilibriumError: If the finite difference is not finite
    """
    if not x > 0:
        msg = f"Reference prize must be positive, got {x}"
        raise ValueError(msg)
    step = x * HD0_STEP
    derivative = (reduced_csf(x + step, k * x) - reduced_csf(x - step, k * x)) / (
        2.0 * step
    )
    if not math.isfinite(derivative):
        msg = f"Non-finite derivative of the success function at x={x}, k={k}"
        raise EquilibriumError(msg, {"x": x, "k": k})
    return pivotality * x * derivative


def check_hd0(
    reduced_csf: ReducedCSF,
    rng: np.random.Generator,
    n_points: int = 100,
    tol: float = 1e-12,
) -> CheckResult:
    """Check that a success function is invariant to common rescaling.

    Samples log-normal prize pairs and scale factors and reports the largest
    change in the winning probability.
    """
    v = rng.lognormal(mean=0.0, sigma=1.0, size=(n_points, 2))
    scales = rng.lognormal(mean=0.0, sigma=2.0, size=n_points)
    worst = 0.0
    for (v_a, v_b), scale in zip(v, scales, strict=True):
        base = reduced_csf(float(v_a), float(v_b))
        scaled = reduced_csf(float(scale * v_a), float(scale * v_b))
        worst = max(worst, abs(scaled - base))
    return tolerance_check("hd0_scale_invariance", worst, tol, {"points": n_points})


@dataclass(frozen=True)
class HD0Equilibrium:
    """Equilibrium built from caller-supplied HD-0 success functions."""

    k: float
    prob_a: tuple[float, ...]
    pivotality: tuple[float, ...]
    salience: tuple[float, ...]
    alloc_a: Allocation
    alloc_b: Allocation
    team_prob_a: float


def solve_hd0(
    csfs: Sequence[ReducedCSF], budget_a: float, budget_b: float
) -> HD0Equilibrium:
    """Proportional-prize equilibrium for general HD-0 success functions.

    Battle probabilities are csf_t(1, k), pivotalities follow from them, and
    budgets are split in proportion to the generalized saliences.

    Raises:
        ValueError: On an even battle count or nonpositive budgets
        EquilibriumError: If a salience is not positive
    """
    if budget_a <= 0 or budget_b <= 0:
        msg = f"Budgets must be positive, got ({budget_a}, {budget_b})"
        raise ValueError(msg)
    k = budget_b / budget_a
    probs = np.array([csf(1.0, k) for csf in csfs])
    theta = np.array([pivotality(probs, t) for t in range(len(csfs))])
    salience = np.array(
        [
            salience_hd0(csf, theta_t, k, 1.0)
            for csf, theta_t in zip(csfs, theta, strict=True)
        ]
    )
    if np.any(salience <= 0):
        t = int(np.argmin(salience)) + 1
        msg = f"Non-positive generalized salience at battle {t}"
        raise EquilibriumError(msg, {"battle": t, "salience": salience.tolist()})
    weights = salience / salience.sum()
    return HD0Equilibrium(
        k=k,
        prob_a=tuple(probs.tolist()),
        pivotality=tuple(theta.tolist()),
        salience=tuple(salience.tolist()),
        alloc_a=Allocation(shares=tuple((budget_a * weights).tolist()), owner=Team.A),
        alloc_b=Allocation(shares=tuple((budget_b * weights).tolist()), owner=Team.B),
        team_prob_a=team_win_prob(probs),
    )
