"""Contest primitives, solution records and validation.

This module provides:
- Immutable records for battles, contest specs, allocations and equilibria
- Validation of every primitive invariant (parity, costs, powers, budgets)
- Temporal structures (ordered partitions of battles into clusters)
- Check results shared by every verification routine

Battle indices are 0-based throughout the library. Error details and
reports use 1-based battle numbers, matching the contest spec file where
battle order in the array is t = 1..2N+1.

Example:
    >>> spec = ContestSpec.from_dict(
    ...     {
    ...         "battles": [{"cost_a": 1.0, "cost_b": 1.0, "power": 1.0}] * 3,
    ...         "budget_a": 1.0,
    ...         "budget_b": 1.0,
    ...     }
    ... )
    >>> spec.n_level
    1
"""

import json
import math
import sys
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    from enum import StrEnum
else:
    from enum import Enum

    class StrEnum(str, Enum):
        """Backport of enum.StrEnum for Python < 3.11."""

        __str__ = str.__str__
        __format__ = str.__format__

ALLOCATION_RTOL = 1e-12


class SpecValidationError(Exception):
    """Exception raised when a contest primitive violates an invariant.

    Attributes:
        message: Explanation of the violated invariant
        details: Rule name and, where relevant, the 1-based battle number
    """

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        """Initialize the validation error.

        Args:
            message: Human-readable error description
            details: Optional dictionary with failure details
        """
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class PartitionError(SpecValidationError):
    """Exception raised for invalid temporal structures or outcome histories."""


class Team(StrEnum):
    """Team tag."""

    A = "A"
    B = "B"

    @property
    def other(self) -> "Team":
        """The opposing team."""
        return Team.B if self is Team.A else Team.A


@dataclass(frozen=True)
class Battle:
    """One pairwise battle.

    Attributes:
        cost_a: Marginal effort cost of team A's player
        cost_b: Marginal effort cost of team B's player
        power: Discriminatory power of the battle, in (0, 1]
    """

    cost_a: float
    cost_b: float
    power: float

    @property
    def cost_ratio(self) -> float:
        """Relative cost rho = cost_b / cost_a."""
        return self.cost_b / self.cost_a

    @property
    def cost_index(self) -> float:
        """Cost index c = (cost_b / cost_a) ** power, computed in log space."""
        return math.exp(self.power * (math.log(self.cost_b) - math.log(self.cost_a)))

    @classmethod
    def from_cost_index(
        cls, cost_index: float, power: float = 1.0, cost_a: float = 1.0
    ) -> "Battle":
        """Build a battle with a prescribed cost index.

        Args:
            cost_index: Target cost index, must be positive
            power: Discriminatory power
            cost_a: Team A's cost; team B's cost is solved for

        Returns:
            Battle whose cost_index equals the target up to rounding

        Example:
            >>> Battle.from_cost_index(4.0).cost_b
            4.0
        """
        if cost_index <= 0:
            msg = f"Cost index must be positive, got {cost_index}"
            raise ValueError(msg)
        cost_b = cost_a * math.exp(math.log(cost_index) / power)
        return cls(cost_a=cost_a, cost_b=cost_b, power=power)

    def to_dict(self) -> dict[str, float]:
        return {"cost_a": self.cost_a, "cost_b": self.cost_b, "power": self.power}


@dataclass(frozen=True)
class ContestSpec:
    """Primitives of one contest.

    Attributes:
        battles: Battles in index order, 2N+1 of them
        budget_a: Team A's prize budget W_A
        budget_b: Team B's prize budget W_B
    """

    battles: tuple[Battle, ...]
    budget_a: float
    budget_b: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "battles", tuple(self.battles))

    @property
    def n_battles(self) -> int:
        return len(self.battles)

    @property
    def n_level(self) -> int:
        """N such that the contest has 2N+1 battles."""
        return (self.n_battles - 1) // 2

    @property
    def budget_ratio(self) -> float:
        """k = W_B / W_A."""
        return self.budget_b / self.budget_a

    @property
    def total_budget(self) -> float:
        return self.budget_a + self.budget_b

    @property
    def powers(self) -> np.ndarray:
        return np.array([battle.power for battle in self.battles], dtype=float)

    @property
    def costs_a(self) -> np.ndarray:
        return np.array([battle.cost_a for battle in self.battles], dtype=float)

    @property
    def costs_b(self) -> np.ndarray:
        return np.array([battle.cost_b for battle in self.battles], dtype=float)

    @property
    def cost_indices(self) -> np.ndarray:
        """Vector of c_t = exp(r_t (ln c_Bt - ln c_At))."""
        return np.exp(self.powers * (np.log(self.costs_b) - np.log(self.costs_a)))

    def budget(self, team: Team) -> float:
        return self.budget_a if team is Team.A else self.budget_b

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        """True when every rho_t equals 1 and all powers coincide."""
        powers = self.powers
        return bool(
            all(abs(battle.cost_ratio - 1.0) <= tol for battle in self.battles)
            and np.all(np.abs(powers - powers[0]) <= tol)
        )

    def swapped(self) -> "ContestSpec":
        """Relabel the teams: A's costs and budget become B's and vice versa."""
        return ContestSpec(
            battles=tuple(
                Battle(cost_a=b.cost_b, cost_b=b.cost_a, power=b.power)
                for b in self.battles
            ),
            budget_a=self.budget_b,
            budget_b=self.budget_a,
        )

    def with_battle(self, t: int, battle: Battle) -> "ContestSpec":
        battles = list(self.battles)
        battles[t] = battle
        return replace(self, battles=tuple(battles))

    def with_budgets(self, budget_a: float, budget_b: float) -> "ContestSpec":
        return replace(self, budget_a=budget_a, budget_b=budget_b)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ContestSpec":
        """Parse and validate the contest spec JSON object.

        Args:
            data: Mapping with keys battles, budget_a and budget_b

        Returns:
            Validated ContestSpec

        Raises:
            SpecValidationError: If a key is missing or an invariant fails
        """
        try:
            battles = tuple(
                Battle(
                    cost_a=float(item["cost_a"]),
                    cost_b=float(item["cost_b"]),
                    power=float(item["power"]),
                )
                for item in data["battles"]
            )
            spec = cls(
                battles=battles,
                budget_a=float(data["budget_a"]),
                budget_b=float(data["budget_b"]),
            )
        except KeyError as e:
            msg = f"Contest spec is missing field {e.args[0]!r}"
            raise SpecValidationError(msg, {"rule": "schema"}) from e
        except (TypeError, ValueError) as e:
            msg = f"Contest spec has a malformed field: {e}"
            raise SpecValidationError(msg, {"rule": "schema"}) from e
        return validate_spec(spec)

    def to_dict(self) -> dict[str, Any]:
        return {
            "battles": [battle.to_dict() for battle in self.battles],
            "budget_a": self.budget_a,
            "budget_b": self.budget_b,
        }


def load_spec(path: str | Path) -> ContestSpec:
    """Read and validate a contest spec file.

    Raises:
        OSError: If the file cannot be read
        SpecValidationError: If the JSON is malformed or invalid
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        msg = f"Malformed JSON in {path}: {e.msg} (line {e.lineno})"
        raise SpecValidationError(msg, {"rule": "json"}) from e
    if not isinstance(data, dict):
        msg = f"Contest spec in {path} must be a JSON object"
        raise SpecValidationError(msg, {"rule": "schema"})
    return ContestSpec.from_dict(data)


@dataclass(frozen=True)
class Allocation:
    """A team's prize allocation across battles.

    Attributes:
        shares: Prize v_it placed on each battle
        owner: Team announcing the allocation
    """

    shares: tuple[float, ...]
    owner: Team

    def __post_init__(self) -> None:
        object.__setattr__(self, "shares", tuple(float(s) for s in self.shares))
        object.__setattr__(self, "owner", Team(self.owner))

    @property
    def budget(self) -> float:
        return math.fsum(self.shares)

    @property
    def is_interior(self) -> bool:
        return all(share > 0 for share in self.shares)

    def as_array(self) -> np.ndarray:
        return np.array(self.shares, dtype=float)

    def fractions(self) -> np.ndarray:
        return self.as_array() / self.budget

    @classmethod
    def uniform(cls, n_battles: int, budget: float, owner: Team) -> "Allocation":
        return cls(shares=(budget / n_battles,) * n_battles, owner=owner)

    @classmethod
    def from_fractions(
        cls, fractions: Sequence[float], budget: float, owner: Team
    ) -> "Allocation":
        weights = np.asarray(fractions, dtype=float)
        return cls(shares=tuple(budget * weights / weights.sum()), owner=owner)

    def to_dict(self) -> dict[str, Any]:
        return {"owner": str(self.owner), "shares": list(self.shares)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Allocation":
        return cls(shares=tuple(data["shares"]), owner=Team(data["owner"]))


@dataclass(frozen=True)
class Equilibrium:
    """Closed-form equilibrium of a contest.

    Vector fields are tuples indexed by battle.
    """

    k: float
    cost_index: tuple[float, ...]
    prob_a: tuple[float, ...]
    pivotality: tuple[float, ...]
    responsiveness: tuple[float, ...]
    salience: tuple[float, ...]
    alloc_a: Allocation
    alloc_b: Allocation
    team_prob_a: float
    efforts_a: tuple[float, ...]
    efforts_b: tuple[float, ...]
    total_effort_cost: float
    hhi: float

    @property
    def n_battles(self) -> int:
        return len(self.prob_a)

    @property
    def prob_b(self) -> tuple[float, ...]:
        return tuple(1.0 - p for p in self.prob_a)

    @property
    def total_salience(self) -> float:
        return math.fsum(self.salience)

    def to_dict(self) -> dict[str, Any]:
        """Serialize every field; allocations become owner/shares objects."""
        return {
            "k": self.k,
            "cost_index": list(self.cost_index),
            "prob_a": list(self.prob_a),
            "pivotality": list(self.pivotality),
            "responsiveness": list(self.responsiveness),
            "salience": list(self.salience),
            "alloc_a": self.alloc_a.to_dict(),
            "alloc_b": self.alloc_b.to_dict(),
            "team_prob_a": self.team_prob_a,
            "efforts_a": list(self.efforts_a),
            "efforts_b": list(self.efforts_b),
            "total_effort_cost": self.total_effort_cost,
            "hhi": self.hhi,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Equilibrium":
        vectors = (
            "cost_index",
            "prob_a",
            "pivotality",
            "responsiveness",
            "salience",
            "efforts_a",
            "efforts_b",
        )
        return cls(
            k=float(data["k"]),
            alloc_a=Allocation.from_dict(data["alloc_a"]),
            alloc_b=Allocation.from_dict(data["alloc_b"]),
            team_prob_a=float(data["team_prob_a"]),
            total_effort_cost=float(data["total_effort_cost"]),
            hhi=float(data["hhi"]),
            **{name: tuple(float(x) for x in data[name]) for name in vectors},
        )


@dataclass(frozen=True)
class TemporalStructure:
    """Ordered partition of battles into clusters played in sequence.

    Battles inside a cluster are simultaneous. Indices are 0-based.
    """

    clusters: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "clusters", tuple(tuple(int(t) for t in c) for c in self.clusters)
        )

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    @classmethod
    def simultaneous(cls, n_battles: int) -> "TemporalStructure":
        return cls(clusters=(tuple(range(n_battles)),))

    @classmethod
    def sequential(cls, n_battles: int) -> "TemporalStructure":
        return cls(clusters=tuple((t,) for t in range(n_battles)))

    @classmethod
    def parse(cls, text: str) -> "TemporalStructure":
        """Parse ``"1;2,3"`` style syntax with 1-based battle numbers.

        Raises:
            PartitionError: If a cluster is empty or an index is not an integer
        """
        clusters = []
        for chunk in text.split(";"):
            items = [item.strip() for item in chunk.split(",") if item.strip()]
            if not items:
                msg = f"Empty cluster in {text!r}"
                raise PartitionError(msg, {"rule": "empty cluster"})
            try:
                clusters.append(tuple(int(item) - 1 for item in items))
            except ValueError as e:
                msg = f"Non-integer battle index in {text!r}"
                raise PartitionError(msg, {"rule": "syntax"}) from e
        return cls(clusters=tuple(clusters))

    def format(self) -> str:
        return ";".join(",".join(str(t + 1) for t in c) for c in self.clusters)


@dataclass
class CheckResult:
    """Result of one verification check.

    Attributes:
        name: Short check identifier
        passed: Whether the check passed
        message: Description of the outcome
        residual: Worst observed violation, where the check is quantitative
        threshold: Tolerance the residual was compared against
        details: Optional extra values (inputs, per-case figures)
    """

    name: str
    passed: bool
    message: str
    residual: float | None = None
    threshold: float | None = None
    details: dict[str, Any] | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "message": self.message,
            "residual": self.residual,
            "threshold": self.threshold,
            "details": self.details or {},
        }


@dataclass
class VerificationReport:
    """Ordered collection of check results."""

    title: str
    checks: list[CheckResult] = field(default_factory=list)
    values: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> list[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    def extend(self, checks: Iterable[CheckResult]) -> None:
        self.checks.extend(checks)

    def __getitem__(self, name: str) -> CheckResult:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "title": self.title,
            "passed": self.passed,
            "values": self.values,
            "checks": [check.to_dict() for check in self.checks],
        }


def tolerance_check(
    name: str, residual: float, threshold: float, details: dict[str, Any] | None = None
) -> CheckResult:
    """Build a CheckResult passing when residual <= threshold."""
    passed = bool(residual <= threshold)
    verdict = "passed" if passed else "failed"
    return CheckResult(
        name=name,
        passed=passed,
        message=(
            f"{name} {verdict}: residual {residual:.3e} vs threshold {threshold:.1e}"
        ),
        residual=float(residual),
        threshold=float(threshold),
        details=details,
    )


def validate_spec(spec: ContestSpec) -> ContestSpec:
    """Validate every contest invariant, reporting the first violation.

    Checks run in order: battle count, then each battle's costs and power,
    then the two budgets.

    Args:
        spec: Contest spec to validate

    Returns:
        The same spec, unchanged

    Raises:
        SpecValidationError: Naming the violated rule and battle number

    Example:
        >>> battle = Battle(cost_a=1.0, cost_b=1.0, power=1.5)
        >>> validate_spec(ContestSpec((battle,) * 3, 1.0, 1.0))
        Traceback (most recent call last):
        ...
        src.contest.domain.SpecValidationError: power outside (0,1] at battle 1
    """
    n = spec.n_battles
    if n % 2 == 0:
        msg = f"even battle count: {n}"
        raise SpecValidationError(msg, {"rule": "even battle count", "count": n})
    if n < 3:
        msg = f"fewer than 3 battles: {n}"
        raise SpecValidationError(msg, {"rule": "too few battles", "count": n})

    for t, battle in enumerate(spec.battles, start=1):
        for cost in (battle.cost_a, battle.cost_b):
            if not math.isfinite(cost):
                msg = f"non-finite cost at battle {t}"
                raise SpecValidationError(msg, {"rule": "non-finite cost", "battle": t})
            if cost <= 0:
                msg = f"nonpositive cost at battle {t}"
                details = {"rule": "nonpositive cost", "battle": t}
                raise SpecValidationError(msg, details)
        if not 0 < battle.power <= 1:
            msg = f"power outside (0,1] at battle {t}"
            raise SpecValidationError(
                msg, {"rule": "power outside (0,1]", "battle": t, "power": battle.power}
            )

    for team, budget in ((Team.A, spec.budget_a), (Team.B, spec.budget_b)):
        if not math.isfinite(budget) or budget <= 0:
            msg = f"nonpositive budget for team {team}"
            details = {"rule": "nonpositive budget", "team": str(team)}
            raise SpecValidationError(msg, details)
    return spec


def validate_allocation(allocation: Allocation, spec: ContestSpec) -> Allocation:
    """Check an allocation against its owner's budget.

    Raises:
        SpecValidationError: On length mismatch, a negative share, or a
            budget mismatch beyond relative 1e-12
    """
    if len(allocation.shares) != spec.n_battles:
        msg = (
            f"Allocation has {len(allocation.shares)} shares, "
            f"contest has {spec.n_battles} battles"
        )
        raise SpecValidationError(msg, {"rule": "share count"})
    for t, share in enumerate(allocation.shares, start=1):
        if not math.isfinite(share) or share < 0:
            msg = f"negative share at battle {t}"
            raise SpecValidationError(msg, {"rule": "negative share", "battle": t})
    budget = spec.budget(allocation.owner)
    if abs(allocation.budget - budget) > ALLOCATION_RTOL * budget:
        msg = (
            f"Shares of team {allocation.owner} sum to {allocation.budget!r}, "
            f"budget is {budget!r}"
        )
        raise SpecValidationError(msg, {"rule": "budget mismatch"})
    return allocation


def validate_structure(
    structure: TemporalStructure, n_battles: int
) -> TemporalStructure:
    """Check that clusters partition the battle indices exactly once.

    Raises:
        PartitionError: On an empty cluster, out-of-range or repeated index,
            or a battle left out
    """
    seen: set[int] = set()
    for cluster in structure.clusters:
        if not cluster:
            raise PartitionError("Empty cluster", {"rule": "empty cluster"})
        for t in cluster:
            if not 0 <= t < n_battles:
                msg = f"battle {t + 1} out of range 1..{n_battles}"
                raise PartitionError(msg, {"rule": "out of range", "battle": t + 1})
            if t in seen:
                msg = f"battle {t + 1} appears in more than one cluster"
                raise PartitionError(msg, {"rule": "overlap", "battle": t + 1})
            seen.add(t)
    missing = sorted(set(range(n_battles)) - seen)
    if missing:
        msg = f"battles {[t + 1 for t in missing]} not covered by any cluster"
        raise PartitionError(msg, {"rule": "not covering", "battles": missing})
    return structure
