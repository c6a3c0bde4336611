"""Unit tests for contest primitives and validation.

Tests cover:
- Battle cost index and its inverse
- ContestSpec parsing, validation order and relabeling
- Allocation helpers and validation
- Equilibrium JSON round trip
- Temporal structure parsing and partition validation
- Check results and reports
"""

import json
import math

import pytest

from src.contest.domain import (
    Allocation,
    Battle,
    CheckResult,
    ContestSpec,
    Equilibrium,
    PartitionError,
    SpecValidationError,
    Team,
    TemporalStructure,
    VerificationReport,
    load_spec,
    tolerance_check,
    validate_allocation,
    validate_spec,
    validate_structure,
)
from src.contest.equilibrium import solve


def _spec(n: int = 3, **battle) -> ContestSpec:
    fields = {"cost_a": 1.0, "cost_b": 1.0, "power": 1.0} | battle
    return ContestSpec((Battle(**fields),) * n, 1.0, 1.0)


class TestTeam:
    """Tests for Team."""

    def test_other(self):
        """Test each team's opponent is the other tag."""
        assert Team.A.other is Team.B
        assert Team.B.other is Team.A


class TestBattle:
    """Tests for Battle."""

    def test_cost_index_power_one(self):
        """Test cost index equals the cost ratio at r = 1."""
        battle = Battle(cost_a=2.0, cost_b=8.0, power=1.0)
        assert battle.cost_index == pytest.approx(4.0)

    def test_cost_index_with_power(self):
        """Test cost index is the ratio raised to the power."""
        battle = Battle(cost_a=1.0, cost_b=9.0, power=0.5)
        assert battle.cost_index == pytest.approx(3.0, rel=1e-14)

    def test_cost_index_extreme_ratio(self):
        """Test an extreme ratio neither overflows nor underflows."""
        battle = Battle(cost_a=1e-150, cost_b=1e150, power=0.5)
        assert math.isfinite(battle.cost_index)
        assert battle.cost_index == pytest.approx(1e150, rel=1e-12)

    def test_from_cost_index(self):
        """Test building a battle from a target cost index."""
        battle = Battle.from_cost_index(4.0, power=0.5, cost_a=2.0)
        assert battle.cost_a == 2.0
        assert battle.cost_index == pytest.approx(4.0, rel=1e-14)

    def test_from_cost_index_rejects_nonpositive(self):
        """Test nonpositive cost index is rejected."""
        with pytest.raises(ValueError, match="positive"):
            Battle.from_cost_index(0.0)


class TestValidateSpec:
    """Tests for validate_spec."""

    def test_symmetric_baseline_valid(self, symmetric):
        """Test the symmetric three-battle contest validates unchanged."""
        assert validate_spec(symmetric) is symmetric

    def test_even_battle_count(self):
        """Test an even battle count is rejected first."""
        with pytest.raises(SpecValidationError, match="even battle count") as exc:
            validate_spec(_spec(4, power=1.5))
        assert exc.value.details["count"] == 4

    def test_single_battle(self):
        """Test a single battle is rejected."""
        with pytest.raises(SpecValidationError, match="fewer than 3"):
            validate_spec(_spec(1))

    def test_power_outside_range(self):
        """Test power above one is rejected with its battle number."""
        spec = _spec(3).with_battle(1, Battle(cost_a=1.0, cost_b=1.0, power=1.5))
        with pytest.raises(SpecValidationError, match=r"power outside \(0,1\]") as exc:
            validate_spec(spec)
        assert exc.value.details["battle"] == 2

    def test_zero_power(self):
        """Test zero power is rejected."""
        with pytest.raises(SpecValidationError, match="power outside"):
            validate_spec(_spec(3, power=0.0))

    def test_nonpositive_cost(self):
        """Test a nonpositive cost is rejected."""
        spec = _spec(3).with_battle(2, Battle(cost_a=1.0, cost_b=-1.0, power=1.0))
        with pytest.raises(SpecValidationError, match="nonpositive cost at battle 3"):
            validate_spec(spec)

    def test_infinite_cost(self):
        """Test an infinite cost is rejected."""
        with pytest.raises(SpecValidationError, match="non-finite"):
            validate_spec(_spec(3, cost_a=math.inf))

    def test_nonpositive_budget(self):
        """Test a zero budget is rejected after the battles."""
        spec = _spec(3).with_budgets(1.0, 0.0)
        with pytest.raises(SpecValidationError, match="budget for team B"):
            validate_spec(spec)


class TestContestSpec:
    """Tests for ContestSpec helpers and JSON handling."""

    def test_derived_sizes(self, worked_example):
        """Test battle count, level and budget ratio."""
        assert worked_example.n_battles == 3
        assert worked_example.n_level == 1
        assert worked_example.budget_ratio == 1.0
        assert worked_example.total_budget == 2.0

    def test_cost_indices(self, worked_example):
        """Test the worked example has cost indices (1, 4, 2)."""
        assert worked_example.cost_indices.tolist() == pytest.approx([1.0, 4.0, 2.0])

    def test_is_symmetric(self, symmetric, worked_example):
        """Test symmetry detection."""
        assert symmetric.is_symmetric()
        assert not worked_example.is_symmetric()

    def test_swapped_exchanges_teams(self, worked_example):
        """Test swapping exchanges costs and budgets."""
        spec = worked_example.with_budgets(1.0, 3.0)
        swapped = spec.swapped()
        assert swapped.budget_a == 3.0
        assert swapped.budget_b == 1.0
        assert swapped.battles[1].cost_a == spec.battles[1].cost_b
        assert swapped.swapped() == spec

    def test_dict_round_trip(self, worked_example):
        """Test to_dict and from_dict invert each other."""
        assert ContestSpec.from_dict(worked_example.to_dict()) == worked_example

    def test_from_dict_missing_field(self):
        """Test a missing field is reported as a schema error."""
        with pytest.raises(SpecValidationError, match="budget_b") as exc:
            ContestSpec.from_dict({"battles": [], "budget_a": 1.0})
        assert exc.value.details["rule"] == "schema"

    def test_from_dict_malformed_value(self):
        """Test a non-numeric field is reported as a schema error."""
        data = {
            "battles": [{"cost_a": "x", "cost_b": 1, "power": 1}] * 3,
            "budget_a": 1,
            "budget_b": 1,
        }
        with pytest.raises(SpecValidationError, match="malformed"):
            ContestSpec.from_dict(data)

    def test_load_spec(self, spec_file, worked_example):
        """Test loading a spec file."""
        assert load_spec(spec_file) == worked_example

    def test_load_spec_malformed_json(self, tmp_path):
        """Test malformed JSON is a validation error."""
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(SpecValidationError, match="Malformed JSON") as exc:
            load_spec(path)
        assert exc.value.details["rule"] == "json"

    def test_load_spec_not_object(self, tmp_path):
        """Test a JSON array is rejected."""
        path = tmp_path / "list.json"
        path.write_text(json.dumps([1, 2, 3]), encoding="utf-8")
        with pytest.raises(SpecValidationError, match="JSON object"):
            load_spec(path)


class TestAllocation:
    """Tests for Allocation."""

    def test_uniform(self):
        """Test uniform allocation splits the budget evenly."""
        alloc = Allocation.uniform(3, 1.5, Team.A)
        assert alloc.shares == (0.5, 0.5, 0.5)
        assert alloc.budget == pytest.approx(1.5)

    def test_from_fractions_normalizes(self):
        """Test fractions are normalized onto the budget."""
        alloc = Allocation.from_fractions([1.0, 1.0, 2.0], 2.0, Team.B)
        assert alloc.shares == pytest.approx((0.5, 0.5, 1.0))
        assert alloc.owner is Team.B

    def test_is_interior(self):
        """Test a zero share is not interior."""
        assert not Allocation((0.0, 1.0, 0.0), Team.A).is_interior
        assert Allocation((0.2, 0.3, 0.5), Team.A).is_interior

    def test_owner_coerced(self):
        """Test the owner string is coerced to Team."""
        assert Allocation((1.0,), "B").owner is Team.B

    def test_validate_budget_mismatch(self, symmetric):
        """Test shares that miss the budget are rejected."""
        with pytest.raises(SpecValidationError, match="sum to"):
            validate_allocation(Allocation((0.5, 0.5, 0.5), Team.A), symmetric)

    def test_validate_negative_share(self, symmetric):
        """Test a negative share is rejected."""
        with pytest.raises(SpecValidationError, match="negative share at battle 1"):
            validate_allocation(Allocation((-0.5, 1.0, 0.5), Team.A), symmetric)

    def test_validate_share_count(self, symmetric):
        """Test a wrong number of shares is rejected."""
        with pytest.raises(SpecValidationError, match="2 shares"):
            validate_allocation(Allocation((0.5, 0.5), Team.A), symmetric)

    def test_validate_within_tolerance(self, symmetric):
        """Test rounding-level budget drift is accepted."""
        alloc = Allocation((1 / 3, 1 / 3, 1 / 3), Team.A)
        assert validate_allocation(alloc, symmetric) is alloc


class TestEquilibriumRecord:
    """Tests for the Equilibrium record."""

    def test_json_round_trip_bit_exact(self, worked_example):
        """Test Equilibrium survives JSON text bit-for-bit."""
        eq = solve(worked_example)
        text = json.dumps(eq.to_dict())
        assert Equilibrium.from_dict(json.loads(text)) == eq

    def test_prob_b_complements(self, worked_example):
        """Test prob_b is the complement of prob_a."""
        eq = solve(worked_example)
        for p_a, p_b in zip(eq.prob_a, eq.prob_b, strict=True):
            assert p_a + p_b == pytest.approx(1.0, abs=1e-15)


class TestTemporalStructure:
    """Tests for TemporalStructure parsing and validation."""

    def test_parse_one_based(self):
        """Test 1-based syntax becomes 0-based clusters."""
        structure = TemporalStructure.parse("1;2,3")
        assert structure.clusters == ((0,), (1, 2))
        assert structure.format() == "1;2,3"

    def test_parse_empty_cluster(self):
        """Test an empty cluster is a partition error."""
        with pytest.raises(PartitionError, match="Empty cluster"):
            TemporalStructure.parse("1;;2,3")

    def test_parse_non_integer(self):
        """Test a non-integer index is a partition error."""
        with pytest.raises(PartitionError, match="Non-integer"):
            TemporalStructure.parse("1;a")

    def test_partition_error_is_validation_error(self):
        """Test partition errors are spec validation errors."""
        assert issubclass(PartitionError, SpecValidationError)

    def test_named_structures(self):
        """Test simultaneous and sequential constructors."""
        assert TemporalStructure.simultaneous(3).clusters == ((0, 1, 2),)
        assert TemporalStructure.sequential(3).n_clusters == 3

    @pytest.mark.parametrize(
        ("text", "rule"),
        [
            ("1;2", "not covering"),
            ("1;2,2,3", "overlap"),
            ("1;2;3;4", "out of range"),
        ],
    )
    def test_validate_structure_rules(self, text, rule):
        """Test each partition rule is reported."""
        with pytest.raises(PartitionError) as exc:
            validate_structure(TemporalStructure.parse(text), 3)
        assert exc.value.details["rule"] == rule


class TestReports:
    """Tests for CheckResult and VerificationReport."""

    def test_tolerance_check_pass_and_fail(self):
        """Test tolerance_check compares residual with threshold."""
        assert tolerance_check("x", 1e-13, 1e-12).passed
        failed = tolerance_check("x", 1e-3, 1e-12)
        assert not failed.passed
        assert "failed" in failed.message

    def test_report_aggregates(self):
        """Test a report passes only when every check passes."""
        report = VerificationReport(title="demo")
        report.add(CheckResult(name="a", passed=True, message="ok"))
        assert report.passed
        report.add(CheckResult(name="b", passed=False, message="bad"))
        assert not report.passed
        assert [c.name for c in report.failures] == ["b"]
        assert report["a"].passed

    def test_report_missing_check(self):
        """Test looking up an unknown check raises KeyError."""
        with pytest.raises(KeyError):
            VerificationReport(title="demo")["nope"]

    def test_report_to_dict(self):
        """Test report serialization."""
        report = VerificationReport(title="demo", values={"n": 3})
        report.add(tolerance_check("x", 0.0, 1e-12))
        data = report.to_dict()
        assert data["passed"] is True
        assert data["values"] == {"n": 3}
        assert data["checks"][0]["threshold"] == 1e-12
