"""Pytest configuration and shared fixtures for contest solver tests.

This module provides common test fixtures including:
- Named contest instances (three-battle worked example, symmetric baseline,
  product-of-costs counterexample)
- A seeded random generator
- Brute-force enumeration helpers used as independent oracles
- Spec files on disk for CLI tests
"""

import itertools
import json
from pathlib import Path

import numpy as np
import pytest

from src.contest.domain import ContestSpec
from src.contest.presets import (
    product_counterexample_spec,
    symmetric_spec,
    worked_example_spec,
)


@pytest.fixture
def project_root() -> Path:
    """Get the project root directory path.

    Returns:
        Path object pointing to the project root
    """
    return Path(__file__).parent.parent


@pytest.fixture
def worked_example() -> ContestSpec:
    """Three unit-power battles with cost indices (1, 4, 2) and W_A = W_B = 1."""
    return worked_example_spec()


@pytest.fixture
def symmetric() -> ContestSpec:
    """Symmetric three-battle contest: unit costs, r = 1, unit budgets."""
    return symmetric_spec()


@pytest.fixture
def product_counterexample() -> ContestSpec:
    """Cost indices (99, 99, 1/9801) with k = 1."""
    return product_counterexample_spec()


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator so randomized tests are reproducible."""
    return np.random.default_rng(20240611)


@pytest.fixture
def spec_file(tmp_path: Path, worked_example: ContestSpec) -> Path:
    """Write the three-battle worked example to a JSON file.

    Args:
        tmp_path: Pytest temporary directory
        worked_example: Worked example fixture

    Returns:
        Path to the contest file
    """
    path = tmp_path / "worked_example.json"
    path.write_text(json.dumps(worked_example.to_dict()), encoding="utf-8")
    return path


@pytest.fixture
def symmetric_file(tmp_path: Path, symmetric: ContestSpec) -> Path:
    """Write the symmetric baseline to a JSON file."""
    path = tmp_path / "symmetric.json"
    path.write_text(json.dumps(symmetric.to_dict()), encoding="utf-8")
    return path


def brute_force_majority(probs: list[float] | np.ndarray) -> float:
    """P(at least N+1 wins) by summing over every outcome vector.

    Example:
        >>> round(brute_force_majority([0.5, 0.8, 2 / 3]), 6)
        0.733333
    """
    p = list(probs)
    n = len(p)
    total = 0.0
    for outcome in itertools.product((0, 1), repeat=n):
        if sum(outcome) > n // 2:
            weight = 1.0
            for won, q in zip(outcome, p, strict=True):
                weight *= q if won else 1.0 - q
            total += weight
    return total


def brute_force_pivotality(probs: list[float] | np.ndarray, t: int) -> float:
    """P(exactly N wins among the battles other than t) by enumeration."""
    p = list(probs)
    others = p[:t] + p[t + 1 :]
    n_level = len(others) // 2
    total = 0.0
    for outcome in itertools.product((0, 1), repeat=len(others)):
        if sum(outcome) == n_level:
            weight = 1.0
            for won, q in zip(outcome, others, strict=True):
                weight *= q if won else 1.0 - q
            total += weight
    return total


@pytest.fixture(autouse=True)
def reset_environment(monkeypatch):
    """Reset environment variables for each test.

    This fixture automatically runs for every test and ensures
    a clean environment state.

    Args:
        monkeypatch: Pytest monkeypatch fixture
    """
    for name in (
        "CONTEST_SEED",
        "CONTEST_JOBS",
        "CONTEST_LOG_LEVEL",
        "CONTEST_ENUMERATION_CAP",
        "CONTEST_SLOW_SECONDS",
    ):
        monkeypatch.delenv(name, raising=False)


# Pytest configuration
def pytest_configure(config):
    """Configure pytest with custom markers.

    Args:
        config: Pytest config object
    """
    config.addinivalue_line(
        "markers", "slow: marks tests as slow (deselect with '-m \"not slow\"')"
    )
    config.addinivalue_line("markers", "integration: marks tests as integration tests")
