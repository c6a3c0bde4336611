"""Battle-level winning probabilities and majority-rule aggregation.

This module provides:
- The reduced-form Tullock winning probability of one battle and its partials
- The exact Poisson-binomial law of the number of battles won by team A
- Team-winning probability under simple majority, scalar and batched
- Pivotality of a battle and the pivotal first-order gradient

Battle outcomes are independent, so every aggregate is a convolution over
battles. Probabilities are always team A's unless a function says otherwise.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import expit

from src.contest.domain import Allocation, Battle, ContestSpec, Team


class BoundaryAllocationError(Exception):
    """Exception raised when a derivative is requested at a zero share.

    Attributes:
        message: Explanation of the error
        details: Team and battle number of the offending share
    """

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


def _from_log_odds(z: float) -> float:
    # The minority side is evaluated once so that p_A + p_B == 1 exactly.
    minority = float(expit(-abs(z)))
    return 1.0 - minority if z >= 0 else minority


def battle_win_prob(v_a: float, v_b: float, battle: Battle) -> float:
    """Probability that team A wins a battle given both prizes.

    Evaluates (c_B v_a)^r / ((c_B v_a)^r + (c_A v_b)^r) through its log-odds.
    Zero prizes follow the zero-effort convention: 1/2 when both are zero,
    otherwise the side with a positive prize wins surely.

    Args:
        v_a: Team A's prize for the battle
        v_b: Team B's prize for the battle
        battle: Battle primitives

    Returns:
        Winning probability of team A, in [0, 1]

    Raises:
        ValueError: If a prize is negative

    Example:
        >>> battle_win_prob(1.0, 1.0, Battle(cost_a=1.0, cost_b=4.0, power=1.0))
        0.8
    """
    if v_a < 0 or v_b < 0:
        msg = f"Prizes must be nonnegative, got ({v_a}, {v_b})"
        raise ValueError(msg)
    if v_a == 0 and v_b == 0:
        return 0.5
    if v_a == 0:
        return 0.0
    if v_b == 0:
        return 1.0
    z = battle.power * (
        math.log(battle.cost_b * v_a) - math.log(battle.cost_a * v_b)
    )
    return _from_log_odds(z)


def battle_win_prob_b(v_a: float, v_b: float, battle: Battle) -> float:
    """Team B's winning probability, computed by swapping the two roles."""
    swapped = Battle(cost_a=battle.cost_b, cost_b=battle.cost_a, power=battle.power)
    return battle_win_prob(v_b, v_a, swapped)


def battle_win_prob_array(
    v_a: np.ndarray, v_b: np.ndarray, battle: Battle
) -> np.ndarray:
    """Vectorized battle_win_prob over arrays of prizes."""
    v_a = np.asarray(v_a, dtype=float)
    v_b = np.asarray(v_b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = battle.power * (
            np.log(battle.cost_b * v_a) - np.log(battle.cost_a * v_b)
        )
        minority = expit(-np.abs(z))
        probs = np.where(z >= 0, 1.0 - minority, minority)
    return np.where((v_a == 0) & (v_b == 0), 0.5, probs)


def battle_win_prob_partials(
    v_a: float, v_b: float, battle: Battle
) -> tuple[float, float]:
    """Partial derivatives of team A's battle probability.

    Returns:
        (dp/dv_a, dp/dv_b) = (r p q / v_a, -r p q / v_b)

    Raises:
        BoundaryAllocationError: If either prize is zero
    """
    if v_a <= 0 or v_b <= 0:
        msg = f"Derivative undefined at a zero prize ({v_a}, {v_b})"
        raise BoundaryAllocationError(msg, {"v_a": v_a, "v_b": v_b})
    p = battle_win_prob(v_a, v_b, battle)
    slope = battle.power * p * (1.0 - p)
    return slope / v_a, -slope / v_b


def battle_probs(
    alloc_a: Allocation, alloc_b: Allocation, spec: ContestSpec
) -> np.ndarray:
    """Team A's winning probability in every battle under two allocations."""
    return np.array(
        [
            battle_win_prob(v_a, v_b, battle)
            for v_a, v_b, battle in zip(
                alloc_a.shares, alloc_b.shares, spec.battles, strict=True
            )
        ]
    )


@dataclass(frozen=True)
class WinDistribution:
    """Law of the number of battles won by team A over a battle subset.

    Attributes:
        mass: mass[k] is the probability of exactly k wins, k = 0..m
    """

    mass: np.ndarray

    def __post_init__(self) -> None:
        mass = np.array(self.mass, dtype=float)
        mass.flags.writeable = False
        object.__setattr__(self, "mass", mass)

    @property
    def n_battles(self) -> int:
        return len(self.mass) - 1

    def at_least(self, wins: int) -> float:
        """P(at least ``wins`` battles won)."""
        return float(self.mass[max(wins, 0) :].sum())

    def mean(self) -> float:
        return float(np.arange(len(self.mass)) @ self.mass)


def _check_probs(probs: Sequence[float]) -> np.ndarray:
    values = np.asarray(probs, dtype=float)
    if values.ndim != 1:
        msg = f"Expected a vector of probabilities, got shape {values.shape}"
        raise ValueError(msg)
    if np.any(~np.isfinite(values)) or np.any((values < 0) | (values > 1)):
        msg = f"Probabilities must lie in [0, 1], got {values.tolist()}"
        raise ValueError(msg)
    return values


def _majority_level(n_battles: int) -> int:
    if n_battles < 3 or n_battles % 2 == 0:
        msg = f"Majority rule needs an odd battle count >= 3, got {n_battles}"
        raise ValueError(msg)
    return (n_battles - 1) // 2


def win_distribution(probs: Sequence[float]) -> WinDistribution:
    """Exact Poisson-binomial law by one-battle-at-a-time convolution.

    Args:
        probs: Winning probability of each battle in the subset

    Returns:
        WinDistribution over 0..len(probs) wins

    Example:
        >>> win_distribution([0.5, 0.5, 0.5]).mass.tolist()
        [0.125, 0.375, 0.375, 0.125]
    """
    values = _check_probs(probs)
    mass = np.ones(1)
    for p in values:
        extended = np.zeros(len(mass) + 1)
        extended[:-1] = mass * (1.0 - p)
        extended[1:] += mass * p
        mass = extended
    return WinDistribution(mass=mass)


def team_win_prob(probs: Sequence[float]) -> float:
    """Probability that team A wins at least N+1 of 2N+1 battles.

    Example:
        >>> round(team_win_prob([0.5, 0.999, 0.5]), 6)
        0.7495
    """
    n_level = _majority_level(len(probs))
    return win_distribution(probs).at_least(n_level + 1)


def team_win_prob_batch(prob_matrix: np.ndarray) -> np.ndarray:
    """Row-wise team_win_prob for a (points, battles) matrix of probabilities."""
    probs = np.atleast_2d(np.asarray(prob_matrix, dtype=float))
    n_points, n_battles = probs.shape
    n_level = _majority_level(n_battles)
    mass = np.zeros((n_points, n_battles + 1))
    mass[:, 0] = 1.0
    for j in range(n_battles):
        p = probs[:, j : j + 1]
        updated = mass * (1.0 - p)
        updated[:, 1:] += mass[:, :-1] * p
        mass = updated
    return mass[:, n_level + 1 :].sum(axis=1)


def pivotality(probs: Sequence[float], t: int) -> float:
    """Probability that the other 2N battles split N-N.

    Args:
        probs: Team A's winning probabilities for all 2N+1 battles
        t: 0-based index of the battle of interest

    Returns:
        theta(t), identical for both teams
    """
    values = _check_probs(probs)
    n_level = _majority_level(len(values))
    if not 0 <= t < len(values):
        msg = f"Battle index {t} out of range for {len(values)} battles"
        raise ValueError(msg)
    return float(win_distribution(np.delete(values, t)).mass[n_level])


def majority_without(probs: Sequence[float], t: int) -> float:
    """P(A wins at least N+1 of the battles other than t)."""
    values = _check_probs(probs)
    n_level = _majority_level(len(values))
    return win_distribution(np.delete(values, t)).at_least(n_level + 1)


def contest_win_prob(
    alloc_a: Allocation, alloc_b: Allocation, spec: ContestSpec, side: Team = Team.A
) -> float:
    """Team-winning probability of ``side`` under two allocations."""
    probs = battle_probs(alloc_a, alloc_b, spec)
    if side is Team.B:
        return team_win_prob(1.0 - probs)
    return team_win_prob(probs)


def grad_team_win_prob(
    alloc_a: Allocation,
    alloc_b: Allocation,
    spec: ContestSpec,
    side: Team = Team.A,
) -> np.ndarray:
    """Gradient of a team's winning probability in its own prizes.

    Component t equals theta(t) times the derivative of that team's battle
    probability in its own prize, r_t p_t (1 - p_t) / v_it.

    Args:
        alloc_a: Team A's allocation, strictly interior
        alloc_b: Team B's allocation, strictly interior
        spec: Contest primitives
        side: Team whose objective is differentiated

    Returns:
        Gradient vector, one entry per battle

    Raises:
        BoundaryAllocationError: If any share of either team is zero
    """
    for allocation in (alloc_a, alloc_b):
        if not allocation.is_interior:
            t = next(i for i, s in enumerate(allocation.shares, start=1) if s <= 0)
            msg = (
                f"Gradient undefined: team {allocation.owner} "
                f"has zero share at battle {t}"
            )
            raise BoundaryAllocationError(
                msg, {"team": str(allocation.owner), "battle": t}
            )

    probs = battle_probs(alloc_a, alloc_b, spec)
    own = alloc_a.as_array() if side is Team.A else alloc_b.as_array()
    theta = np.array([pivotality(probs, t) for t in range(spec.n_battles)])
    return theta * spec.powers * probs * (1.0 - probs) / own
