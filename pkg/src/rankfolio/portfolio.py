"""Schedules derived from predicted rankings, and their sequential simulation.

A schedule assigns each chosen algorithm a time slice; the simulator runs
the slices in order against the true runtimes and reports who solved the
instance and when. Slices are quantized to milliseconds with the rounding
remainder granted to the first slice, so schedules are reproducible
bit for bit. Runtimes recorded at the timeout are censored measurements,
so they never count as solving, regardless of slice length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidBudget, InvalidSpec, LevelMismatch, UnknownAlgorithm
from .rankers import SCORE_HIGHER, SCORE_LOWER, RankPrediction
from .scenario import PredictionLevel, Ranking

RECIPROCAL_FLOOR = 1e-3  # lower-better scores map to 1/max(score, floor)


@dataclass(frozen=True)
class Schedule:
    """Ordered (algorithm id, seconds) entries; algorithms are distinct."""

    entries: tuple

    def __post_init__(self):
        algs = [a for a, _ in self.entries]
        if len(set(algs)) != len(algs):
            raise InvalidSpec("schedule repeats an algorithm")
        if any(t < 0 for _, t in self.entries):
            raise InvalidSpec("negative time slice")

    def total(self) -> float:
        return sum(t for _, t in self.entries)


def _slices_ms(budget: float, weights) -> list:
    """Millisecond slices proportional to weights, remainder to the first.

    The budget is floored to whole milliseconds so the total never
    exceeds it.
    """
    budget_ms = int(math.floor(budget * 1000 + 1e-6))
    total_w = float(sum(weights))
    slices = [math.floor(budget_ms * (w / total_w)) for w in weights]
    slices[0] += budget_ms - sum(slices)
    return slices


def _ranked_order(ranking: Ranking):
    return ranking.order()


def schedule_equal_slices(ranking: Ranking, algorithms, budget: float,
                          top_n: int) -> Schedule:
    """budget / top_n seconds to each of the top_n ranked algorithms."""
    if not budget > 0:
        raise InvalidBudget(f"budget must be positive, got {budget}")
    if not 1 <= top_n <= len(algorithms):
        raise InvalidSpec(f"top_n must be in 1..{len(algorithms)}, got {top_n}")
    order = _ranked_order(ranking)[:top_n]
    slices = _slices_ms(budget, [1.0] * top_n)
    return Schedule(tuple(
        (algorithms[a], slices[pos] / 1000.0) for pos, a in enumerate(order)
    ))


def schedule_proportional(prediction: RankPrediction, algorithms,
                          budget: float) -> Schedule:
    """Slices proportional to score goodness, in rank order.

    Higher-better scores are shifted up by their minimum when that
    minimum is negative (so 2:1:1 scores split 2:1:1, while difference
    sums with negative entries still give nonnegative goodness);
    lower-better (runtime-like) scores map to reciprocals with a floor.
    Algorithms whose goodness is zero are left out; when every goodness
    is zero the whole portfolio gets equal slices.
    """
    if not budget > 0:
        raise InvalidBudget(f"budget must be positive, got {budget}")
    if prediction.level != PredictionLevel.R2 or prediction.scores is None:
        raise LevelMismatch("proportional schedules need scores (an R2 prediction)")
    scores = [float(s) for s in prediction.scores]
    if prediction.direction == SCORE_HIGHER:
        low = min(min(scores), 0.0)
        goodness = [s - low for s in scores]
    elif prediction.direction == SCORE_LOWER:
        goodness = [1.0 / max(s, RECIPROCAL_FLOOR) for s in scores]
    else:
        raise InvalidSpec(f"unknown score direction {prediction.direction!r}")
    if max(goodness) == 0.0:
        goodness = [1.0] * len(scores)
    order = [a for a in _ranked_order(prediction.ranking) if goodness[a] > 0]
    slices = _slices_ms(budget, [goodness[a] for a in order])
    return Schedule(tuple(
        (algorithms[a], slices[pos] / 1000.0) for pos, a in enumerate(order)
    ))


@dataclass(frozen=True)
class SimulationOutcome:
    solved: bool
    solver: str = None
    elapsed: float = 0.0


def simulate(schedule: Schedule, runtimes, timeout: float) -> SimulationOutcome:
    """Run the slices in order against the true runtimes.

    An algorithm solves the instance iff its runtime fits its slice and is
    below the timeout (a runtime at the timeout is a censored run). The
    first solver stops the clock; otherwise the whole schedule elapses.
    """
    elapsed = 0.0
    for alg, slice_s in schedule.entries:
        if alg not in runtimes:
            raise UnknownAlgorithm(f"no runtime recorded for {alg!r}")
        rt = float(runtimes[alg])
        if rt <= slice_s and rt < timeout:
            return SimulationOutcome(True, alg, elapsed + rt)
        elapsed += slice_s
    return SimulationOutcome(False, None, elapsed)
