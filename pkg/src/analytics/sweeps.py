"""Comparative-statics sweeps over contest primitives.

Each sweep re-solves the contest at every grid point, returns a polars
DataFrame with one row per grid value (in grid order), and asserts the
shape the theory predicts for it:

- sweep_cost_index: team A's win probability increases in c_t
- sweep_battle_costs: it decreases in team A's own cost c_At
- sweep_budget_ratio: it decreases in k = W_B / W_A; on symmetric
  contests total effort cost peaks at k = 1
- salience_profile: S_t is single-peaked in rho_t with its peak at rho_t = k
- salience_r_profile: with rho_t = k, S_t increases in r_t
- effort_cost_r_monotonicity: E* increases in r_t wherever
  S_t >= max_{s != t} S_s / 2

A failed assertion raises ComparativeStaticsError carrying the table.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import replace

import numpy as np
import polars as pl

from src.contest.domain import (
    Battle,
    ContestSpec,
    VerificationReport,
    tolerance_check,
)
from src.contest.equilibrium import equilibrium_probabilities, solve
from src.contest.presets import product_counterexample_spec
from src.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

ELASTICITY_STEP = 1e-6
ELASTICITY_RTOL = 1e-5
ELASTICITY_FLOOR = 1e-3


class ComparativeStaticsError(Exception):
    """Exception raised when a sweep contradicts a comparative-statics claim.

    Attributes:
        message: Explanation of the error
        table: The sweep table that exposed the failure
    """

    def __init__(self, message: str, table: pl.DataFrame | None = None) -> None:
        self.message = message
        self.table = table
        super().__init__(self.message)


def _positive_grid(grid: Sequence[float], name: str) -> list[float]:
    values = [float(x) for x in grid]
    if not values:
        msg = f"{name} grid is empty"
        raise ValueError(msg)
    if any(not math.isfinite(x) or x <= 0 for x in values):
        msg = f"{name} grid must be positive and finite, got {values}"
        raise ValueError(msg)
    return values


def _battle_index(spec: ContestSpec, t: int) -> int:
    if not 0 <= t < spec.n_battles:
        msg = f"Battle index {t} out of range for {spec.n_battles} battles"
        raise ValueError(msg)
    return t


def _check_monotone(
    table: pl.DataFrame, x: str, y: str, *, increasing: bool, claim: str
) -> None:
    """Consecutive rows move y strictly with (or against) x; equal x, equal y."""
    xs = table[x].to_list()
    ys = table[y].to_list()
    direction = 1 if increasing else -1
    for i in range(len(xs) - 1):
        dx = xs[i + 1] - xs[i]
        dy = ys[i + 1] - ys[i]
        if dx == 0:
            ok = dy == 0
        else:
            ok = np.sign(dy) == direction * np.sign(dx)
        if not ok:
            msg = (
                f"{claim} fails between {x}={xs[i]!r} and {x}={xs[i + 1]!r}: "
                f"{y} goes {ys[i]!r} -> {ys[i + 1]!r}"
            )
            raise ComparativeStaticsError(msg, table)


def with_cost_index(spec: ContestSpec, t: int, cost_index: float) -> ContestSpec:
    """Replace battle t's cost index, keeping its power and team A's cost."""
    battle = spec.battles[_battle_index(spec, t)]
    return spec.with_battle(
        t,
        Battle.from_cost_index(cost_index, power=battle.power, cost_a=battle.cost_a),
    )


def _team_prob(spec: ContestSpec) -> float:
    return solve(spec).team_prob_a


def sweep_cost_index(
    spec: ContestSpec, t: int, grid: Sequence[float], jobs: int = 1
) -> pl.DataFrame:
    """Team A's equilibrium win probability as battle t's cost index varies.

    Args:
        spec: Base contest; every other primitive and k are held fixed
        t: 0-based battle index
        grid: Cost index values c_t
        jobs: Worker processes

    Returns:
        DataFrame with columns c_t, team_prob_a

    Raises:
        ComparativeStaticsError: If team_prob_a is not strictly increasing
    """
    values = _positive_grid(grid, "c_t")
    specs = [with_cost_index(spec, t, c) for c in values]
    table = pl.DataFrame(
        {"c_t": values, "team_prob_a": ordered_map(_team_prob, specs, jobs)}
    )
    _check_monotone(
        table, "c_t", "team_prob_a", increasing=True, claim="Increase in c_t"
    )
    logger.info("Cost-index sweep over %d points for battle %d", len(values), t + 1)
    return table


def sweep_battle_costs(
    spec: ContestSpec, t: int, cost_a_grid: Sequence[float], jobs: int = 1
) -> pl.DataFrame:
    """Team A's win probability as its own cost in battle t varies.

    Each c_At edit is a c_t edit with c_t = (c_Bt / c_At)^r_t.

    Returns:
        DataFrame with columns cost_a, c_t, team_prob_a

    Raises:
        ComparativeStaticsError: If team_prob_a is not strictly decreasing
    """
    values = _positive_grid(cost_a_grid, "cost_a")
    battle = spec.battles[_battle_index(spec, t)]
    specs = [
        spec.with_battle(
            t, Battle(cost_a=cost, cost_b=battle.cost_b, power=battle.power)
        )
        for cost in values
    ]
    table = pl.DataFrame(
        {
            "cost_a": values,
            "c_t": [s.battles[t].cost_index for s in specs],
            "team_prob_a": ordered_map(_team_prob, specs, jobs),
        }
    )
    _check_monotone(
        table, "cost_a", "team_prob_a", increasing=False, claim="Decrease in c_At"
    )
    return table


def _budget_row(spec: ContestSpec) -> tuple[float, float]:
    eq = solve(spec)
    return eq.team_prob_a, eq.total_effort_cost


def sweep_budget_ratio(
    spec: ContestSpec, grid: Sequence[float], jobs: int = 1
) -> pl.DataFrame:
    """Win probability and total effort cost as k = W_B / W_A varies.

    W_A + W_B is held at the contest's total. On symmetric contests with
    k = 1 on the grid, E* at k = 1 must be the largest on the grid.

    Returns:
        DataFrame with columns k, team_prob_a, e_star

    Raises:
        ComparativeStaticsError: If team_prob_a is not strictly decreasing in
            k, or a symmetric contest's E* does not peak at k = 1
    """
    values = _positive_grid(grid, "k")
    total = spec.total_budget
    specs = [
        spec.with_budgets(total / (1.0 + k), total * k / (1.0 + k)) for k in values
    ]
    rows = ordered_map(_budget_row, specs, jobs)
    table = pl.DataFrame(
        {
            "k": values,
            "team_prob_a": [row[0] for row in rows],
            "e_star": [row[1] for row in rows],
        }
    )
    _check_monotone(table, "k", "team_prob_a", increasing=False, claim="Decrease in k")

    if spec.is_symmetric() and 1.0 in values:
        peak = table.filter(pl.col("k") == 1.0)["e_star"].max()
        rest = table.filter(pl.col("k") != 1.0)["e_star"].max()
        if rest is not None and rest >= peak:
            msg = f"E* at k=1 ({peak!r}) is not the maximum on the grid ({rest!r})"
            raise ComparativeStaticsError(msg, table)
    elif not spec.is_symmetric():
        logger.debug("Asymmetric contest: E* peak location recorded, not asserted")
    return table


def _salience_row(args: tuple[ContestSpec, int]) -> tuple[float, float]:
    spec, t = args
    eq = solve(spec)
    p = eq.prob_a[t]
    return p * (1.0 - p), eq.salience[t]


def salience_profile(
    spec: ContestSpec, t: int, grid: Sequence[float], jobs: int = 1
) -> pl.DataFrame:
    """Battle t's symmetry level and salience as rho_t = c_Bt / c_At varies.

    The grid must be strictly increasing. S_t must rise then fall with no
    flat steps; when k is on the grid the peak must sit there.

    Returns:
        DataFrame with columns rho_t, sym_t, s_t

    Raises:
        ValueError: If the grid is not strictly increasing
        ComparativeStaticsError: If S_t is not single-peaked at rho_t = k
    """
    values = _positive_grid(grid, "rho_t")
    if any(b <= a for a, b in zip(values, values[1:], strict=False)):
        msg = f"rho_t grid must be strictly increasing, got {values}"
        raise ValueError(msg)
    battle = spec.battles[_battle_index(spec, t)]
    tasks = [
        (
            spec.with_battle(
                t,
                Battle(
                    cost_a=battle.cost_a,
                    cost_b=battle.cost_a * rho,
                    power=battle.power,
                ),
            ),
            t,
        )
        for rho in values
    ]
    rows = ordered_map(_salience_row, tasks, jobs)
    table = pl.DataFrame(
        {
            "rho_t": values,
            "sym_t": [row[0] for row in rows],
            "s_t": [row[1] for row in rows],
        }
    )

    diffs = np.diff(table["s_t"].to_numpy())
    falling = np.flatnonzero(diffs < 0)
    first_fall = int(falling[0]) if len(falling) else len(diffs)
    if np.any(diffs == 0) or np.any(diffs[first_fall:] > 0):
        msg = f"S_{t + 1} is not single-peaked in rho_t on the grid"
        raise ComparativeStaticsError(msg, table)

    k = spec.budget_ratio
    peak_rho = values[first_fall]
    if k in values and peak_rho != k:
        msg = f"S_{t + 1} peaks at rho_t={peak_rho!r}, expected k={k!r}"
        raise ComparativeStaticsError(msg, table)
    return table


def salience_r_profile(
    spec: ContestSpec, t: int, grid: Sequence[float], jobs: int = 1
) -> pl.DataFrame:
    """Battle t's salience as r_t varies with rho_t pinned to k.

    Returns:
        DataFrame with columns r_t, s_t

    Raises:
        ValueError: If a power leaves (0, 1]
        ComparativeStaticsError: If S_t is not strictly increasing in r_t
    """
    values = _positive_grid(grid, "r_t")
    if any(r > 1.0 for r in values):
        msg = f"r_t grid must lie in (0, 1], got {values}"
        raise ValueError(msg)
    battle = spec.battles[_battle_index(spec, t)]
    cost_b = battle.cost_a * spec.budget_ratio
    tasks = [
        (spec.with_battle(t, Battle(cost_a=battle.cost_a, cost_b=cost_b, power=r)), t)
        for r in values
    ]
    rows = ordered_map(_salience_row, tasks, jobs)
    table = pl.DataFrame({"r_t": values, "s_t": [row[1] for row in rows]})
    _check_monotone(table, "r_t", "s_t", increasing=True, claim="Increase in r_t")
    return table


def _effort_row(args: tuple[ContestSpec, int]) -> tuple[float, float, bool]:
    spec, t = args
    eq = solve(spec)
    salience = np.asarray(eq.salience)
    others = np.delete(salience, t)
    holds = bool(salience[t] >= 0.5 * others.max())
    return float(salience[t]), eq.total_effort_cost, holds


def effort_cost_r_monotonicity(
    spec: ContestSpec, t: int, grid: Sequence[float], jobs: int = 1
) -> pl.DataFrame:
    """Total effort cost as r_t varies on a contest with k = 1 and rho_t = 1.

    Rows where S_t < max_{s != t} S_s / 2 are recorded without assertion;
    between consecutive rows that both meet the condition E* must move
    with r_t.

    Returns:
        DataFrame with columns r_t, s_t, e_star, condition_holds

    Raises:
        ValueError: If k != 1 or rho_t != 1, or a power leaves (0, 1]
        ComparativeStaticsError: If E* fails to increase where required
    """
    t = _battle_index(spec, t)
    battle = spec.battles[t]
    if spec.budget_a != spec.budget_b or battle.cost_a != battle.cost_b:
        msg = "Effort-cost r_t sweep needs k = 1 and rho_t = 1"
        raise ValueError(msg)
    values = _positive_grid(grid, "r_t")
    if any(r > 1.0 for r in values):
        msg = f"r_t grid must lie in (0, 1], got {values}"
        raise ValueError(msg)
    tasks = [(spec.with_battle(t, replace(battle, power=r)), t) for r in values]
    rows = ordered_map(_effort_row, tasks, jobs)
    table = pl.DataFrame(
        {
            "r_t": values,
            "s_t": [row[0] for row in rows],
            "e_star": [row[1] for row in rows],
            "condition_holds": [row[2] for row in rows],
        }
    )

    skipped = table.filter(~pl.col("condition_holds")).height
    if skipped:
        logger.warning(
            "%d of %d rows fall outside the salience condition; E* recorded only",
            skipped,
            table.height,
        )
    held = table.filter(pl.col("condition_holds"))
    segments = [
        table.slice(i, 2)
        for i in range(table.height - 1)
        if table["condition_holds"][i] and table["condition_holds"][i + 1]
    ]
    for segment in segments:
        _check_monotone(
            segment, "r_t", "e_star", increasing=True, claim="Increase of E* in r_t"
        )
    logger.info("Effort-cost sweep: %d of %d rows asserted", held.height, table.height)
    return table


def _log_symmetry(spec: ContestSpec, t: int) -> float:
    p = float(equilibrium_probabilities(spec)[t])
    return math.log(p) + math.log1p(-p)


def symmetry_elasticity(spec: ContestSpec, t: int) -> float:
    """Elasticity of Sym_t = p*_At p*_Bt with respect to k.

    The closed form r_t (p*_At - p*_Bt) is cross-checked against a central
    difference of log Sym_t in log k (step 1e-6), with W_A fixed.

    Returns:
        r_t (p*_At - p*_Bt)

    Raises:
        ComparativeStaticsError: If the two disagree beyond relative 1e-5
    """
    t = _battle_index(spec, t)
    p = float(equilibrium_probabilities(spec)[t])
    analytic = spec.battles[t].power * (p - (1.0 - p))

    h = ELASTICITY_STEP
    up = spec.with_budgets(spec.budget_a, spec.budget_b * math.exp(h))
    down = spec.with_budgets(spec.budget_a, spec.budget_b * math.exp(-h))
    numeric = (_log_symmetry(up, t) - _log_symmetry(down, t)) / (2.0 * h)

    gap = abs(numeric - analytic) / max(abs(analytic), ELASTICITY_FLOOR)
    if gap > ELASTICITY_RTOL:
        table = pl.DataFrame(
            {"t": [t + 1], "analytic": [analytic], "numeric": [numeric], "gap": [gap]}
        )
        msg = (
            f"Elasticity of Sym_{t + 1}: closed form {analytic!r} "
            f"vs difference {numeric!r}"
        )
        raise ComparativeStaticsError(msg, table)
    return analytic


def product_conjecture_counterexample() -> VerificationReport:
    """Cost indices whose product is 1 while team A is a heavy favourite.

    Uses three unit-power battles with c = (99, 99, 1/9801) and k = 1.
    """
    spec = product_counterexample_spec()
    eq = solve(spec)
    product = math.prod(eq.cost_index)
    report = VerificationReport(
        title="Product-of-costs conjecture counterexample",
        values={"product": product, "team_prob_a": eq.team_prob_a},
    )
    report.add(tolerance_check("product_is_one", abs(product - 1.0), 1e-9))
    report.add(
        tolerance_check(
            "team_a_favoured",
            max(0.97 - eq.team_prob_a, 0.0),
            0.0,
            {"team_prob_a": eq.team_prob_a},
        )
    )
    return report
