"""Named contest instances and seeded random generators.

Provides the worked instances used across tests and the CLI, plus random
specs and allocations for property suites. All random draws go through
``numpy.random.Generator`` so runs are reproducible from a seed.
"""

from collections.abc import Sequence

import numpy as np

from src.contest.domain import Allocation, Battle, ContestSpec, Team


def worked_example_spec() -> ContestSpec:
    """Three unit-power battles with cost indices (1, 4, 2) and equal budgets."""
    return spec_from_cost_indices((1.0, 4.0, 2.0))


def symmetric_spec(
    n_battles: int = 3, power: float = 1.0, budget: float = 1.0
) -> ContestSpec:
    """Fully symmetric contest: unit costs, common power, equal budgets."""
    battle = Battle(cost_a=1.0, cost_b=1.0, power=power)
    return ContestSpec(battles=(battle,) * n_battles, budget_a=budget, budget_b=budget)


def product_counterexample_spec() -> ContestSpec:
    """Cost indices (99, 99, 1/9801): product one, yet A is a heavy favourite."""
    return spec_from_cost_indices((99.0, 99.0, 1.0 / 9801.0))


def spec_from_cost_indices(
    cost_indices: Sequence[float],
    powers: Sequence[float] | None = None,
    budget_a: float = 1.0,
    budget_b: float = 1.0,
) -> ContestSpec:
    """Build a spec whose battles have the given cost indices (cost_a = 1)."""
    powers = powers if powers is not None else [1.0] * len(cost_indices)
    battles = tuple(
        Battle.from_cost_index(c, power=r)
        for c, r in zip(cost_indices, powers, strict=True)
    )
    return ContestSpec(battles=battles, budget_a=budget_a, budget_b=budget_b)


def random_spec(
    rng: np.random.Generator,
    n_level: int,
    cost_sigma: float = 1.0,
    min_power: float = 0.2,
) -> ContestSpec:
    """Draw a random contest with 2N+1 battles.

    Costs and budgets are log-normal; powers are uniform on [min_power, 1].
    """
    n = 2 * n_level + 1
    costs = rng.lognormal(mean=0.0, sigma=cost_sigma, size=(n, 2))
    powers = rng.uniform(min_power, 1.0, size=n)
    budgets = rng.lognormal(mean=0.0, sigma=0.5, size=2)
    battles = tuple(
        Battle(cost_a=float(ca), cost_b=float(cb), power=float(r))
        for (ca, cb), r in zip(costs, powers, strict=True)
    )
    return ContestSpec(
        battles=battles, budget_a=float(budgets[0]), budget_b=float(budgets[1])
    )


def random_allocation(
    rng: np.random.Generator, spec: ContestSpec, owner: Team, concentration: float = 2.0
) -> Allocation:
    """Strictly interior allocation with Dirichlet-distributed fractions."""
    fractions = rng.dirichlet(np.full(spec.n_battles, concentration))
    return Allocation.from_fractions(fractions, spec.budget(owner), owner)
