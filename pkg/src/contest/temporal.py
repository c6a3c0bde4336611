"""Team-winning probability under sequential play of battle clusters.

This module provides:
- eval_temporal: exact recursion over an ordered partition of battles
- pivotal_gap: how much winning battle t moves a team's contest probability
  at a given point in the sequence
- iter_nodes: every reachable decision node of a temporal structure

The recursion state is the pair (A wins so far, B wins so far). Within a
cluster the number of A wins follows the Poisson-binomial law of that
cluster's battles. Once a team holds N+1 wins the remaining battles are
trivial: they still resolve, but cannot change the winner.
"""

import itertools
from collections import defaultdict
from collections.abc import Iterator, Mapping, Sequence
from typing import Literal

import numpy as np

from src.contest.domain import (
    PartitionError,
    Team,
    TemporalStructure,
    validate_structure,
)
from src.contest.probability import team_win_prob, win_distribution

TrivialConvention = Literal["primitive", "half"]

State = tuple[int, int]


def _resolve(
    probs: np.ndarray,
    clusters: Sequence[Sequence[int]],
    start: State,
    n_level: int,
    trivial: TrivialConvention,
) -> dict[State, float]:
    """Final tally law after playing ``clusters`` from ``start``."""
    states: dict[State, float] = {start: 1.0}
    for cluster in clusters:
        if not cluster:
            continue
        advanced: dict[State, float] = defaultdict(float)
        for (wins_a, wins_b), mass in states.items():
            clinched = max(wins_a, wins_b) > n_level
            if clinched and trivial == "half":
                cluster_probs = np.full(len(cluster), 0.5)
            else:
                cluster_probs = probs[list(cluster)]
            law = win_distribution(cluster_probs).mass
            for won, weight in enumerate(law):
                advanced[(wins_a + won, wins_b + len(cluster) - won)] += mass * weight
        states = dict(advanced)
    return states


def _winning_mass(states: Mapping[State, float], n_level: int, side: Team) -> float:
    index = 0 if side is Team.A else 1
    return float(sum(mass for state, mass in states.items() if state[index] > n_level))


def final_tally(
    probs: Sequence[float],
    structure: TemporalStructure,
    trivial: TrivialConvention = "primitive",
) -> dict[State, float]:
    """Law of the final (A wins, B wins) tally after all clusters are played."""
    values = np.asarray(probs, dtype=float)
    validate_structure(structure, len(values))
    n_level = (len(values) - 1) // 2
    return _resolve(values, structure.clusters, (0, 0), n_level, trivial)


def eval_temporal(
    probs: Sequence[float],
    structure: TemporalStructure,
    trivial: TrivialConvention = "primitive",
) -> float:
    """Probability that team A reaches N+1 wins under a temporal structure.

    Args:
        probs: Team A's winning probability in each battle
        structure: Ordered partition of the battles into clusters
        trivial: Probability used for trivial battles, either their own
            ("primitive") or a fair coin ("half")

    Returns:
        P(team A wins the contest)

    Raises:
        PartitionError: If the structure does not partition the battles

    Example:
        >>> structure = TemporalStructure.sequential(3)
        >>> round(eval_temporal([0.5, 0.8, 2 / 3], structure), 6)
        0.733333
    """
    if trivial not in ("primitive", "half"):
        msg = f"Unknown trivial-battle convention {trivial!r}"
        raise ValueError(msg)
    states = final_tally(probs, structure, trivial)
    return _winning_mass(states, (len(probs) - 1) // 2, Team.A)


def simultaneous_residual(
    probs: Sequence[float], structure: TemporalStructure
) -> float:
    """|eval_temporal - team_win_prob| for a structure."""
    return abs(eval_temporal(probs, structure) - team_win_prob(probs))


def clinch_neutrality_residual(
    probs: Sequence[float], structure: TemporalStructure
) -> float:
    """Difference between the two trivial-battle conventions."""
    return abs(
        eval_temporal(probs, structure, "primitive")
        - eval_temporal(probs, structure, "half")
    )


def _next_cluster(
    structure: TemporalStructure, history: Mapping[int, bool]
) -> int | None:
    """Index of the first unresolved cluster, checking history is a prefix."""
    resolved = set(history)
    for position, cluster in enumerate(structure.clusters):
        members = set(cluster)
        if members <= resolved:
            resolved -= members
            continue
        if resolved:
            msg = (
                f"History resolves battles {sorted(t + 1 for t in resolved)} "
                "out of cluster order"
            )
            raise PartitionError(msg, {"rule": "history order"})
        return position
    if resolved:
        msg = f"History names unknown battles {sorted(t + 1 for t in resolved)}"
        raise PartitionError(msg, {"rule": "history range"})
    return None


def pivotal_gap(
    probs: Sequence[float],
    structure: TemporalStructure,
    history: Mapping[int, bool],
    t: int,
    side: Team = Team.A,
) -> float:
    """Pivotal gap of battle t for a team at a node of the sequence.

    The gap is P(side wins contest | side wins t, history) minus
    P(side wins contest | side loses t, history).

    Args:
        probs: Team A's winning probability in each battle
        structure: Ordered partition of the battles
        history: Outcomes of the already-played clusters, battle index to
            True when team A won it
        t: Battle in the next unresolved cluster
        side: Team whose gap is computed

    Returns:
        The pivotal gap; 0 when the history already decides the contest

    Raises:
        PartitionError: If the history is not a prefix of whole clusters or
            t is not in the next cluster
    """
    values = np.asarray(probs, dtype=float)
    validate_structure(structure, len(values))
    n_level = (len(values) - 1) // 2
    position = _next_cluster(structure, history)
    if position is None or t not in structure.clusters[position]:
        msg = f"Battle {t + 1} is not in the next unresolved cluster"
        raise PartitionError(msg, {"rule": "not next", "battle": t + 1})

    wins_a = sum(1 for won in history.values() if won)
    wins_b = len(history) - wins_a
    if max(wins_a, wins_b) > n_level:
        return 0.0

    rest = [
        tuple(s for s in structure.clusters[position] if s != t),
        *structure.clusters[position + 1 :],
    ]
    a_takes_t = _resolve(values, rest, (wins_a + 1, wins_b), n_level, "primitive")
    b_takes_t = _resolve(values, rest, (wins_a, wins_b + 1), n_level, "primitive")
    if side is Team.A:
        return _winning_mass(a_takes_t, n_level, Team.A) - _winning_mass(
            b_takes_t, n_level, Team.A
        )
    return _winning_mass(b_takes_t, n_level, Team.B) - _winning_mass(
        a_takes_t, n_level, Team.B
    )


def iter_nodes(
    structure: TemporalStructure,
) -> Iterator[tuple[dict[int, bool], tuple[int, ...]]]:
    """Yield (history, next cluster) for every reachable node.

    Histories cover every outcome of every prefix of whole clusters,
    including the empty prefix.
    """
    for position, cluster in enumerate(structure.clusters):
        played = [s for c in structure.clusters[:position] for s in c]
        for outcome in itertools.product((True, False), repeat=len(played)):
            yield dict(zip(played, outcome, strict=True)), cluster
