"""Numerical oracles confirming that the closed form is a global equilibrium.

This module provides:
- best_response: multiplicative-weights ascent on a team's log winning
  probability over its simplex of prize allocations
- grid_best_response: exhaustive simplex grid search with local refinement
  for 3-battle contests
- verify_equilibrium: best-response, boundary, first-order and
  proportional-prize checks for one contest
- quasiconcavity_counterexample: the team-winning probability fails
  quasiconcavity in battle probabilities
- log_concavity_spot_checks / log_concavity_suite: random-point checks of
  the Hessian, M0, the segment inequality and the moment identities

Every check returns a CheckResult with its worst residual; nothing here
raises on a failed mathematical property.
"""

import logging
import time
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import expit

from src.contest.domain import (
    Allocation,
    CheckResult,
    ContestSpec,
    Team,
    VerificationReport,
    tolerance_check,
)
from src.contest.equilibrium import solve
from src.contest.presets import random_allocation, random_spec
from src.contest.probability import (
    BoundaryAllocationError,
    battle_probs,
    battle_win_prob_array,
    contest_win_prob,
    grad_team_win_prob,
    team_win_prob,
    team_win_prob_batch,
)
from src.utils.config import warn_if_slow
from src.utils.parallel import ordered_map
from src.verification.finite_diff import (
    central_gradient,
    central_hessian,
    relative_error,
)
from src.verification.moments import conditional_moments, log_hessian, m0_closed_form

logger = logging.getLogger(__name__)

ASCENT_TOL = 1e-10
ASCENT_MAX_ITER = 10_000
GRID_RESOLUTION = 0.002
GRID_AGREEMENT = 1e-5
EIGEN_RTOL = 1e-10
SEGMENT_TOL = 1e-12
LAMBDAS = tuple(i / 10 for i in range(1, 10))

_MIN_FRACTION = 1e-300
_ACTIVE_FRACTION = 1e-12
_MAX_STEP = 1e12


class ConvergenceError(Exception):
    """Exception raised when a best response fails to converge.

    Attributes:
        message: Explanation of the failure
        grad_norm: Projected-gradient norm when the search stopped
    """

    def __init__(self, message: str, grad_norm: float | None = None) -> None:
        self.message = message
        self.grad_norm = grad_norm
        super().__init__(self.message)


@dataclass(frozen=True)
class BestResponse:
    """Outcome of a best-response search.

    Attributes:
        allocation: Maximizing allocation of the responder
        value: Responder's winning probability at the maximizer
        iterations: Ascent iterations or grid points evaluated
        grad_norm: Final projected-gradient norm (NaN for grid search)
    """

    allocation: Allocation
    value: float
    iterations: int
    grad_norm: float


def _pair(own: Allocation, opponent: Allocation) -> tuple[Allocation, Allocation]:
    return (own, opponent) if own.owner is Team.A else (opponent, own)


def _log_value_and_gradient(
    fractions: np.ndarray, opponent: Allocation, spec: ContestSpec, side: Team
) -> tuple[float, np.ndarray]:
    budget = spec.budget(side)
    own = Allocation(shares=tuple(budget * fractions), owner=side)
    alloc_a, alloc_b = _pair(own, opponent)
    value = contest_win_prob(alloc_a, alloc_b, spec, side)
    grad = grad_team_win_prob(alloc_a, alloc_b, spec, side)
    return value, budget * grad / value


def projected_gradient_norm(fractions: np.ndarray, grad: np.ndarray) -> float:
    """KKT residual of a gradient on the probability simplex.

    Coordinates with a positive fraction contribute their deviation from the
    multiplier estimate x.g; coordinates at the boundary contribute only a
    positive deviation.
    """
    deviation = grad - fractions @ grad
    active = fractions > _ACTIVE_FRACTION
    residual = np.where(active, deviation, np.maximum(deviation, 0.0))
    return float(np.linalg.norm(residual))


def best_response(
    opponent: Allocation,
    spec: ContestSpec,
    side: Team | None = None,
    tol: float = ASCENT_TOL,
    max_iter: int = ASCENT_MAX_ITER,
    cross_check: bool = False,
) -> BestResponse:
    """Maximize a team's winning probability against a fixed opponent.

    Runs exponentiated-gradient ascent on log P over the responder's budget
    fractions, starting from the uniform split: x <- x * exp(eta * g),
    renormalized. Each battle carries its own step size rather than sharing
    one eta with Armijo backtracking: battles whose shares differ by orders
    of magnitude need steps that differ as much. A trial step is
    accepted only when the gradient at the trial point still points along
    the step, which by log-concavity guarantees the objective did not drop.
    Accepted steps grow the step size of battles whose gradient kept its
    sign and halve it where the sign flipped; rejected steps quarter every
    step size.

    Args:
        opponent: Opponent's strictly interior allocation
        spec: Contest primitives
        side: Responding team; defaults to the opponent's rival
        tol: Stop once the projected-gradient norm falls below this
        max_iter: Iteration cap, counting rejected trials
        cross_check: For 3-battle contests, also run grid_best_response and
            require agreement in value within 1e-5

    Returns:
        BestResponse with the maximizing allocation and its value

    Raises:
        BoundaryAllocationError: If the opponent has a zero share
        ConvergenceError: If the cap is reached or the grid disagrees
    """
    side = side if side is not None else opponent.owner.other
    if side is opponent.owner:
        msg = f"Responder and opponent are both team {side}"
        raise ValueError(msg)
    if not opponent.is_interior:
        msg = f"Opponent allocation of team {opponent.owner} has a zero share"
        raise BoundaryAllocationError(msg, {"team": str(opponent.owner)})

    n = spec.n_battles
    x = np.full(n, 1.0 / n)
    value, grad = _log_value_and_gradient(x, opponent, spec, side)
    deviation = grad - x @ grad
    initial_step = 0.5 / max(float(np.max(np.abs(deviation))), 1e-300)
    step = np.full(n, min(initial_step, _MAX_STEP))
    norm = projected_gradient_norm(x, grad)

    iteration = 0
    while norm >= tol:
        if iteration >= max_iter:
            msg = (
                f"Best response for team {side} did not converge in {max_iter} "
                f"iterations (projected gradient norm {norm:.3e})"
            )
            raise ConvergenceError(msg, norm)
        iteration += 1

        exponent = step * deviation
        trial = x * np.exp(exponent - exponent.max())
        trial = np.maximum(trial / trial.sum(), _MIN_FRACTION)
        trial /= trial.sum()
        trial_value, trial_grad = _log_value_and_gradient(trial, opponent, spec, side)
        trial_deviation = trial_grad - trial @ trial_grad

        if trial_deviation @ (trial - x) >= 0:
            kept_sign = trial_deviation * deviation > 0
            step = np.minimum(np.where(kept_sign, step * 1.5, step * 0.5), _MAX_STEP)
            x, value, grad, deviation = trial, trial_value, trial_grad, trial_deviation
            norm = projected_gradient_norm(x, grad)
        else:
            step *= 0.25

    logger.debug(
        "Best response for team %s: %d iterations, norm %.3e", side, iteration, norm
    )
    allocation = Allocation(shares=tuple(spec.budget(side) * x), owner=side)
    result = BestResponse(
        allocation=allocation, value=value, iterations=iteration, grad_norm=norm
    )
    if cross_check and n == 3:
        grid = grid_best_response(opponent, spec, side)
        gap = abs(grid.value - result.value)
        if gap > GRID_AGREEMENT or grid.value > result.value + 1e-12:
            msg = (
                f"Grid search disagrees with ascent for team {side}: "
                f"{grid.value!r} vs {result.value!r}"
            )
            raise ConvergenceError(msg, norm)
    return result


def _compositions(n: int, total: int) -> np.ndarray:
    """Nonnegative integer rows of length n summing to total, lexicographic."""
    if n == 1:
        return np.array([[total]])
    if n == 2:
        first = np.arange(total + 1)
        return np.column_stack([first, total - first])
    blocks = []
    for first in range(total + 1):
        tail = _compositions(n - 1, total - first)
        blocks.append(np.column_stack([np.full(len(tail), first), tail]))
    return np.vstack(blocks)


def simplex_grid(n: int, steps: int) -> np.ndarray:
    """All fraction vectors with entries in multiples of 1/steps.

    Rows are in lexicographic order of their coordinates.
    """
    return _compositions(n, steps) / steps


def side_values(
    fractions: np.ndarray, opponent: Allocation, spec: ContestSpec, side: Team
) -> np.ndarray:
    """Responder's winning probability at each row of a fraction matrix."""
    own = spec.budget(side) * np.atleast_2d(fractions)
    opp = opponent.as_array()
    columns = []
    for t, battle in enumerate(spec.battles):
        if side is Team.A:
            columns.append(battle_win_prob_array(own[:, t], opp[t], battle))
        else:
            columns.append(1.0 - battle_win_prob_array(opp[t], own[:, t], battle))
    return team_win_prob_batch(np.column_stack(columns))


def grid_best_response(
    opponent: Allocation,
    spec: ContestSpec,
    side: Team | None = None,
    resolution: float = GRID_RESOLUTION,
    refine_rounds: int = 4,
) -> BestResponse:
    """Grid search over a 3-battle simplex followed by local refinement.

    Ties go to the first grid point in lexicographic order. Each refinement
    round searches a 21 x 21 window of the previous step around the
    incumbent at a tenth of the step.

    Raises:
        ValueError: If the contest does not have exactly 3 battles
    """
    side = side if side is not None else opponent.owner.other
    if spec.n_battles != 3:
        msg = f"Grid search supports 3-battle contests, got {spec.n_battles}"
        raise ValueError(msg)

    steps = round(1.0 / resolution)
    grid = simplex_grid(3, steps)
    values = side_values(grid, opponent, spec, side)
    best = int(np.argmax(values))
    x, value = grid[best], float(values[best])
    points = len(grid)

    step = 1.0 / steps
    for _ in range(refine_rounds):
        step /= 10.0
        offsets = np.arange(-10, 11) * step
        x1, x2 = np.meshgrid(x[0] + offsets, x[1] + offsets, indexing="ij")
        x1, x2 = x1.ravel(), x2.ravel()
        window = np.column_stack([x1, x2, 1.0 - x1 - x2])
        window = window[np.all(window >= 0.0, axis=1)]
        window_values = side_values(window, opponent, spec, side)
        points += len(window)
        candidate = int(np.argmax(window_values))
        if window_values[candidate] > value:
            x, value = window[candidate], float(window_values[candidate])

    allocation = Allocation(shares=tuple(spec.budget(side) * x), owner=side)
    return BestResponse(
        allocation=allocation, value=value, iterations=points, grad_norm=float("nan")
    )


def boundary_grid(n: int) -> np.ndarray:
    """Boundary points (some fraction zero) of a simplex test grid."""
    steps = {3: round(1.0 / GRID_RESOLUTION), 5: 12, 7: 6}.get(n, 4)
    grid = simplex_grid(n, steps)
    return grid[np.any(grid == 0.0, axis=1)]


def verify_equilibrium(spec: ContestSpec, tol: float = 1e-4) -> VerificationReport:
    """Check that the closed form is a pure-strategy equilibrium.

    Checks, for each team: the numerical best response to the rival's
    closed-form allocation recovers the closed form within ``tol`` per
    budget-normalized component, and no boundary allocation on a test grid
    beats the equilibrium value. Also checks first-order stationarity and
    the proportional-prize ratio.

    Args:
        spec: Contest primitives
        tol: Per-component tolerance on budget fractions

    Returns:
        VerificationReport with one CheckResult per check
    """
    start_time = time.time()
    eq = solve(spec)
    report = VerificationReport(title="verify_equilibrium")
    report.values = {"team_prob_a": eq.team_prob_a, "k": eq.k}
    closed_form = {Team.A: eq.alloc_a, Team.B: eq.alloc_b}
    equilibrium_value = {Team.A: eq.team_prob_a, Team.B: 1.0 - eq.team_prob_a}
    boundary = boundary_grid(spec.n_battles)

    for side in (Team.A, Team.B):
        target = closed_form[side]
        opponent = closed_form[side.other]
        name = f"best_response_{side}"
        try:
            response = best_response(
                opponent, spec, side, cross_check=spec.n_battles == 3
            )
        except ConvergenceError as e:
            report.add(
                CheckResult(
                    name=name,
                    passed=False,
                    message=e.message,
                    residual=e.grad_norm,
                    threshold=tol,
                )
            )
        else:
            gap = float(
                np.max(np.abs(response.allocation.as_array() - target.as_array()))
                / spec.budget(side)
            )
            report.add(
                tolerance_check(
                    name,
                    gap,
                    tol,
                    {"iterations": response.iterations, "value": response.value},
                )
            )

        boundary_best = float(np.max(side_values(boundary, opponent, spec, side)))
        excess = max(boundary_best - equilibrium_value[side], 0.0)
        report.add(
            tolerance_check(
                f"boundary_{side}",
                excess,
                1e-12,
                {"points": len(boundary), "best_boundary_value": boundary_best},
            )
        )

    spreads = []
    for side in (Team.A, Team.B):
        grad = grad_team_win_prob(eq.alloc_a, eq.alloc_b, spec, side)
        spreads.append(float((grad.max() - grad.min()) / abs(grad.mean())))
    report.add(tolerance_check("foc_stationarity", max(spreads), 1e-10))

    ratios = eq.alloc_b.as_array() / eq.alloc_a.as_array()
    report.add(
        tolerance_check(
            "proportional_prizes", float(np.max(np.abs(ratios / eq.k - 1.0))), 1e-12
        )
    )
    warn_if_slow(logger, "verify_equilibrium", time.time() - start_time)
    return report


def quasiconcavity_counterexample() -> VerificationReport:
    """Two near-certain probability profiles whose midpoint is much worse.

    Evaluates the team-winning probability at (0.999, 0.999, 0.001),
    (0.001, 0.999, 0.999) and their midpoint (0.5, 0.999, 0.5).
    """
    left = team_win_prob([0.999, 0.999, 0.001])
    right = team_win_prob([0.001, 0.999, 0.999])
    middle = team_win_prob([0.5, 0.999, 0.5])
    report = VerificationReport(
        title="quasiconcavity_counterexample",
        values={"left": left, "right": right, "midpoint": middle},
    )
    for name, value in (("left_endpoint", left), ("right_endpoint", right)):
        report.add(
            tolerance_check(name, abs(value - 0.998), 5e-4, {"value": value})
        )
    report.add(
        tolerance_check("midpoint", abs(middle - 0.7495), 1e-4, {"value": middle})
    )
    below = middle < min(left, right)
    report.add(
        CheckResult(
            name="midpoint_below_endpoints",
            passed=below,
            message=f"midpoint {middle:.6f} vs endpoints min {min(left, right):.6f}",
            residual=max(middle - min(left, right), 0.0),
            threshold=0.0,
        )
    )
    return report


SPOT_THRESHOLDS: dict[str, float] = {
    "hessian_nsd": EIGEN_RTOL,
    "m0_psd": EIGEN_RTOL,
    "m0_below_m": 1e-14,
    "hessian_fd": 1e-4,
    "segment": SEGMENT_TOL,
    "m0_closed_form": 1e-10,
    "log_odds_gradient": 1e-5,
    "log_odds_hessian": 1e-4,
}


def _point_residuals(
    spec: ContestSpec,
    alloc_a: Allocation,
    alloc_b: Allocation,
    other_a: Allocation,
) -> dict[str, float]:
    """Worst residual of every spot check at one random point."""
    report = log_hessian(alloc_a, alloc_b, spec)
    h_norm = max(float(np.max(np.abs(np.linalg.eigvalsh(report.h)))), 1e-300)
    m0_norm = max(float(np.max(np.abs(np.linalg.eigvalsh(report.m0)))), 1e-300)
    gap = report.m - report.m0
    off_diagonal = gap - np.diag(np.diag(gap))

    def log_f(v: np.ndarray) -> float:
        own = Allocation(shares=tuple(v), owner=Team.A)
        return float(np.log(contest_win_prob(own, alloc_b, spec)))

    v = alloc_a.as_array()
    fd_h = central_hessian(log_f, v, floor=0.0)

    w = other_a.as_array()
    base = [log_f(v), log_f(w)]
    segment = max(
        lam * base[0] + (1 - lam) * base[1] - log_f(lam * v + (1 - lam) * w)
        for lam in LAMBDAS
    )

    probs = battle_probs(alloc_a, alloc_b, spec)
    moments = conditional_moments(probs)
    log_odds = np.log(probs) - np.log1p(-probs)

    def log_f_odds(eta: np.ndarray) -> float:
        return float(np.log(team_win_prob(expit(eta))))

    fd_g = central_gradient(log_f_odds, log_odds)
    fd_eta = central_hessian(log_f_odds, log_odds)
    return {
        "hessian_nsd": max(report.max_eig_h, 0.0) / h_norm,
        "m0_psd": max(-report.min_eig_m0, 0.0) / m0_norm,
        "m0_below_m": max(
            float(np.max(np.abs(off_diagonal))), float(max(-np.diag(gap).min(), 0.0))
        ),
        "hessian_fd": relative_error(fd_h, report.h),
        "segment": max(segment, 0.0),
        "m0_closed_form": relative_error(m0_closed_form(probs), report.m0),
        "log_odds_gradient": relative_error(fd_g, moments.g, floor=1e-4),
        "log_odds_hessian": relative_error(
            fd_eta, moments.sigma_a - np.diag(moments.d), floor=1e-3
        ),
    }


def _merge(worst: dict[str, float], point: dict[str, float]) -> None:
    for name, residual in point.items():
        worst[name] = max(worst.get(name, 0.0), residual)


def _checks_from(
    worst: dict[str, float], suffix: str = "", details: dict[str, Any] | None = None
) -> list[CheckResult]:
    return [
        tolerance_check(f"{name}{suffix}", worst[name], threshold, details)
        for name, threshold in SPOT_THRESHOLDS.items()
    ]


def log_concavity_spot_checks(
    spec: ContestSpec, n_points: int = 20, seed: int = 42
) -> VerificationReport:
    """Random interior allocation pairs for one contest.

    Team A's allocations and the second segment endpoint are drawn from a
    Dirichlet(2) distribution; team B's from the same family.
    """
    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {}
    for _ in range(n_points):
        alloc_a = random_allocation(rng, spec, Team.A)
        alloc_b = random_allocation(rng, spec, Team.B)
        other_a = random_allocation(rng, spec, Team.A)
        _merge(worst, _point_residuals(spec, alloc_a, alloc_b, other_a))
    report = VerificationReport(title="log_concavity_spot_checks")
    report.extend(_checks_from(worst, details={"points": n_points, "seed": seed}))
    return report


def _suite_task(task: tuple[int, int, int]) -> dict[str, float]:
    n_level, seed, n_points = task
    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {}
    for _ in range(n_points):
        spec = random_spec(rng, n_level)
        alloc_a = random_allocation(rng, spec, Team.A)
        alloc_b = random_allocation(rng, spec, Team.B)
        other_a = random_allocation(rng, spec, Team.A)
        _merge(worst, _point_residuals(spec, alloc_a, alloc_b, other_a))
    return worst


def log_concavity_suite(
    n_levels: Sequence[int] = (1, 2, 3),
    n_points: int = 500,
    seed: int = 42,
    jobs: int = 1,
) -> VerificationReport:
    """Random contests and interior allocation pairs for several sizes.

    Points are split into one chunk per worker and chunk i is seeded with
    seed + i. A different ``jobs`` therefore changes the seeds and the
    points sampled; a report is reproducible for a fixed (seed, jobs) pair.

    Returns:
        VerificationReport with one check per (property, N)
    """
    start_time = time.time()
    report = VerificationReport(title="log_concavity_suite")
    chunks = max(jobs, 1)
    for n_level in n_levels:
        sizes = [n_points // chunks + (i < n_points % chunks) for i in range(chunks)]
        tasks = [
            (n_level, seed + i, size) for i, size in enumerate(sizes) if size > 0
        ]
        worst: dict[str, float] = {}
        for partial in ordered_map(_suite_task, tasks, jobs):
            _merge(worst, partial)
        report.extend(
            _checks_from(worst, suffix=f"_n{n_level}", details={"points": n_points})
        )
    warn_if_slow(logger, "log_concavity_suite", time.time() - start_time)
    return report
