"""The ten rank-prediction strategies and their training protocols.

Five strategies emit a bare ranking (level R1) and five emit a ranking
derived from per-algorithm scores (level R2):

* ``order``                  -- one classifier predicts the whole ranking
  as a label (ranks joined with ``|`` in portfolio order).
* ``order-score-class/reg``  -- one model per algorithm predicts that
  algorithm's rank; algorithms are sorted by (predicted rank, mean
  training runtime, portfolio index).
* ``faster-than-class``      -- one classifier per algorithm pair predicts
  which is faster; a second-layer classifier turns the pair predictions
  into a ranking label.
* ``faster-than-diff-class`` -- like the above with per-pair regressors
  predicting runtime differences.
* ``solve-time`` / ``solve-time-log`` -- one regressor per algorithm
  predicts the (log) runtime; lower score ranks first.
* ``prob-best``              -- one regressor per algorithm predicts a
  0/1 is-best indicator; scores are clamped to [0, 1], higher first.
* ``faster-than-vote``       -- algorithms score one point per pair they
  are predicted to win; higher first.
* ``faster-than-diff-sum``   -- each algorithm scores the sum of its
  predicted pairwise runtime margins; higher first.

Second-layer models train on out-of-fold first-layer predictions (inner
5-fold split) by default; ``stacking="resub"`` switches to resubstitution
predictions for comparison. First-layer models used at prediction time are
always refitted on the full training set. Per-algorithm and per-pair
models are fitted in portfolio (pair) order, which custom learner
factories may rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ComboMismatch,
    InvalidSpec,
    MalformedLabel,
    NonFiniteScore,
    TooFewRows,
)
from .learners import (
    Dataset,
    classifier_spec,
    fit_classifier,
    fit_regressor,
    regressor_spec,
)
from .scenario import PredictionLevel, Ranking, best_algorithm, true_ranking

LOG_RUNTIME_FLOOR = 1e-3  # seconds; guards the log target for instant solves

SCORE_HIGHER = "higher-better"
SCORE_LOWER = "lower-better"


@dataclass(frozen=True)
class Strategy:
    name: str
    level: str
    needs_classifier: bool
    needs_regressor: bool


STRATEGIES = {
    s.name: s
    for s in (
        Strategy("order", PredictionLevel.R1, True, False),
        Strategy("order-score-class", PredictionLevel.R1, True, False),
        Strategy("order-score-reg", PredictionLevel.R1, False, True),
        Strategy("faster-than-class", PredictionLevel.R1, True, False),
        Strategy("faster-than-diff-class", PredictionLevel.R1, True, True),
        Strategy("solve-time", PredictionLevel.R2, False, True),
        Strategy("solve-time-log", PredictionLevel.R2, False, True),
        Strategy("prob-best", PredictionLevel.R2, False, True),
        Strategy("faster-than-vote", PredictionLevel.R2, True, False),
        Strategy("faster-than-diff-sum", PredictionLevel.R2, False, True),
    )
}


def strategy_by_name(name: str) -> Strategy:
    if name not in STRATEGIES:
        raise InvalidSpec(f"unknown strategy {name!r}; choose from {sorted(STRATEGIES)}")
    return STRATEGIES[name]


@dataclass(frozen=True)
class LearnerCombo:
    """Base learners for a strategy: registry names or factory callables.

    A factory takes a Dataset and returns a fitted model exposing
    ``predict``; factories let tests and external tools inject custom
    learners.
    """

    classifier: object = None
    regressor: object = None

    def classifier_name(self) -> str:
        return _learner_name(self.classifier)

    def regressor_name(self) -> str:
        return _learner_name(self.regressor)


def _learner_name(ref) -> str:
    if ref is None:
        return "-"
    if isinstance(ref, str):
        return ref
    return getattr(ref, "__name__", "custom")


def _fit_clf(ref, dataset: Dataset):
    if callable(ref):
        return ref(dataset)
    return fit_classifier(classifier_spec(ref), dataset)


def _fit_reg(ref, dataset: Dataset):
    if callable(ref):
        return ref(dataset)
    return fit_regressor(regressor_spec(ref), dataset)


# -- ranking labels and score-derived rankings ------------------------------


def format_rank(rank: float) -> str:
    """Render a fractional rank exactly: 2.0 -> '2', 1.5 -> '1.5'."""
    return format(float(rank), "g")


def encode_ranking_label(ranking: Ranking) -> str:
    return "|".join(format_rank(r) for r in ranking.ranks)


def decode_ranking_label(label: str) -> Ranking:
    parts = label.split("|")
    if not label or any(p == "" for p in parts):
        raise MalformedLabel(f"bad ranking label {label!r}")
    try:
        ranks = tuple(float(p) for p in parts)
    except ValueError as exc:
        raise MalformedLabel(f"bad ranking label {label!r}") from exc
    return Ranking(ranks)  # raises InvalidRankMultiset for invalid rank sets


def derive_ranking_from_scores(scores, direction: str) -> Ranking:
    """Fractional ranks over scores; exact score ties become rank ties."""
    if direction not in (SCORE_HIGHER, SCORE_LOWER):
        raise InvalidSpec(f"unknown score direction {direction!r}")
    values = [float(s) for s in scores]
    if not all(math.isfinite(v) for v in values):
        raise NonFiniteScore(f"scores must be finite, got {values}")
    if direction == SCORE_HIGHER:
        values = [-v for v in values]
    return Ranking.from_values(values)


# -- pairwise targets and aggregations --------------------------------------


def algorithm_pairs(n: int) -> tuple:
    """Unordered index pairs (i, j), i < j, in portfolio order."""
    return tuple((i, j) for i in range(n) for j in range(i + 1, n))


def make_pairwise_faster_targets(matrix, instances) -> dict:
    """Per-pair label datasets: 'first' when algorithm i is at least as fast."""
    X = np.array([inst.features for inst in instances], dtype=np.float64)
    runtimes = np.array([matrix.runtimes(inst.id) for inst in instances])
    out = {}
    for i, j in algorithm_pairs(len(matrix.algorithms)):
        labels = tuple(
            "first" if runtimes[r, i] <= runtimes[r, j] else "second"
            for r in range(len(instances))
        )
        out[(i, j)] = Dataset(X, labels)
    return out


def make_pairwise_difference_targets(matrix, instances) -> dict:
    """Per-pair regression datasets: d(i,j) = runtime(j) - runtime(i)."""
    X = np.array([inst.features for inst in instances], dtype=np.float64)
    runtimes = np.array([matrix.runtimes(inst.id) for inst in instances])
    out = {}
    for i, j in algorithm_pairs(len(matrix.algorithms)):
        out[(i, j)] = Dataset(X, tuple(float(d) for d in runtimes[:, j] - runtimes[:, i]))
    return out


def majority_vote_scores(pair_labels: dict, n: int) -> np.ndarray:
    """Votes per algorithm: one per pair it was predicted to win."""
    votes = np.zeros(n)
    for (i, j), label in pair_labels.items():
        if label == "first":
            votes[i] += 1
        else:
            votes[j] += 1
    return votes


def difference_sum_scores(pair_diffs: dict, n: int) -> np.ndarray:
    """s(i) = sum over j of predicted d(i,j), with d(j,i) = -d(i,j)."""
    sums = np.zeros(n)
    for (i, j), d in pair_diffs.items():
        d = float(d)
        if not math.isfinite(d):
            raise NonFiniteScore(f"pair ({i}, {j}) predicted a non-finite difference")
        sums[i] += d
        sums[j] -= d
    return sums


# -- stacked second layer ----------------------------------------------------


def _inner_folds(n_rows: int, k: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    order = rng.permutation(n_rows)
    folds = [[] for _ in range(k)]
    for pos, row in enumerate(order):
        folds[pos % k].append(int(row))
    return folds


def build_stacked_training_set(
    scenario, instances, pair_mode: str, combo: LearnerCombo,
    inner_k: int = 5, seed: int = 0, stacking: str = "oof",
) -> Dataset:
    """Second-layer rows: first-layer pair predictions -> true ranking label.

    ``pair_mode`` is 'class' (faster-than labels encoded 1/0) or 'diff'
    (predicted runtime differences). In the default out-of-fold protocol
    each training row's features come from first-layer models whose inner
    training split excluded that row.
    """
    if pair_mode not in ("class", "diff"):
        raise InvalidSpec(f"unknown pair mode {pair_mode!r}")
    if stacking not in ("oof", "resub"):
        raise InvalidSpec(f"unknown stacking mode {stacking!r}")
    n_rows = len(instances)
    if stacking == "oof" and n_rows < inner_k:
        raise TooFewRows(
            f"stacking needs at least {inner_k} training rows, got {n_rows}"
        )
    pairs = algorithm_pairs(scenario.n_algorithms)
    features = np.zeros((n_rows, len(pairs)))

    def fill(rows_to_predict, model_instances):
        if pair_mode == "class":
            targets = make_pairwise_faster_targets(scenario.performance, model_instances)
            models = {p: _fit_clf(combo.classifier, targets[p]) for p in pairs}
        else:
            targets = make_pairwise_difference_targets(scenario.performance, model_instances)
            models = {p: _fit_reg(combo.regressor, targets[p]) for p in pairs}
        for r in rows_to_predict:
            x = np.asarray(instances[r].features, dtype=np.float64)
            for c, p in enumerate(pairs):
                pred = models[p].predict(x)
                features[r, c] = (1.0 if pred == "first" else 0.0) if pair_mode == "class" else float(pred)

    if stacking == "resub":
        fill(range(n_rows), list(instances))
    else:
        folds = _inner_folds(n_rows, inner_k, seed)
        for held_out in folds:
            held = set(held_out)
            train_insts = [instances[r] for r in range(n_rows) if r not in held]
            fill(held_out, train_insts)

    labels = tuple(
        encode_ranking_label(true_ranking(inst, scenario.performance))
        for inst in instances
    )
    return Dataset(features, labels)


# -- training ----------------------------------------------------------------


@dataclass(frozen=True)
class TrainedRanker:
    """A fitted strategy: its models plus tie-breaking metadata."""

    strategy: Strategy
    algorithms: tuple
    n_features: int
    classifier_name: str
    regressor_name: str
    mean_runtime: np.ndarray  # per algorithm, over the training instances
    models: dict


@dataclass(frozen=True)
class RankPrediction:
    """A predicted ranking, tagged with its level and optional scores."""

    ranking: Ranking
    level: str
    scores: tuple = None
    direction: str = None

    @classmethod
    def at_level1(cls, ranking: Ranking) -> "RankPrediction":
        return cls(ranking, PredictionLevel.R1)

    @classmethod
    def at_level2(cls, scores, direction: str) -> "RankPrediction":
        """Build scores-first; the ranking is derived, so the two agree."""
        scores = tuple(float(s) for s in scores)
        return cls(derive_ranking_from_scores(scores, direction),
                   PredictionLevel.R2, scores, direction)

    def downcast(self) -> "RankPrediction":
        """Drop the scores: the same ranking at level R1."""
        return RankPrediction(self.ranking, PredictionLevel.R1)


def train_ranker(
    strategy: Strategy, combo: LearnerCombo, scenario, instances,
    seed: int = 0, stacking: str = "oof",
) -> TrainedRanker:
    """Fit one strategy on the given training instances."""
    if isinstance(strategy, str):
        strategy = strategy_by_name(strategy)
    if not instances:
        raise TooFewRows("training set is empty")
    if strategy.needs_classifier and combo.classifier is None:
        raise ComboMismatch(f"strategy {strategy.name!r} needs a classifier")
    if strategy.needs_regressor and combo.regressor is None:
        raise ComboMismatch(f"strategy {strategy.name!r} needs a regressor")

    matrix = scenario.performance
    n = scenario.n_algorithms
    X = np.array([inst.features for inst in instances], dtype=np.float64)
    runtimes = np.array([matrix.runtimes(inst.id) for inst in instances])
    rankings = [true_ranking(inst, matrix) for inst in instances]
    mean_runtime = runtimes.mean(axis=0)
    models = {}
    name = strategy.name

    if name == "order":
        labels = tuple(encode_ranking_label(r) for r in rankings)
        models["label"] = _fit_clf(combo.classifier, Dataset(X, labels))
    elif name == "order-score-class":
        models["per_alg"] = [
            _fit_clf(combo.classifier,
                     Dataset(X, tuple(format_rank(r.ranks[a]) for r in rankings)))
            for a in range(n)
        ]
    elif name == "order-score-reg":
        models["per_alg"] = [
            _fit_reg(combo.regressor, Dataset(X, tuple(r.ranks[a] for r in rankings)))
            for a in range(n)
        ]
    elif name in ("faster-than-class", "faster-than-diff-class"):
        pair_mode = "class" if name == "faster-than-class" else "diff"
        stacked = build_stacked_training_set(
            scenario, instances, pair_mode, combo, seed=seed, stacking=stacking
        )
        models["layer2"] = _fit_clf(combo.classifier, stacked)
        if pair_mode == "class":
            targets = make_pairwise_faster_targets(matrix, instances)
            models["pairs"] = {p: _fit_clf(combo.classifier, targets[p]) for p in sorted(targets)}
        else:
            targets = make_pairwise_difference_targets(matrix, instances)
            models["pairs"] = {p: _fit_reg(combo.regressor, targets[p]) for p in sorted(targets)}
    elif name == "solve-time":
        models["per_alg"] = [
            _fit_reg(combo.regressor, Dataset(X, tuple(runtimes[:, a]))) for a in range(n)
        ]
    elif name == "solve-time-log":
        models["per_alg"] = [
            _fit_reg(combo.regressor,
                     Dataset(X, tuple(math.log(max(rt, LOG_RUNTIME_FLOOR)) for rt in runtimes[:, a])))
            for a in range(n)
        ]
    elif name == "prob-best":
        best = [best_algorithm(inst, matrix) for inst in instances]
        models["per_alg"] = [
            _fit_reg(combo.regressor,
                     Dataset(X, tuple(1.0 if b == scenario.algorithms[a] else 0.0 for b in best)))
            for a in range(n)
        ]
    elif name == "faster-than-vote":
        targets = make_pairwise_faster_targets(matrix, instances)
        models["pairs"] = {p: _fit_clf(combo.classifier, targets[p]) for p in sorted(targets)}
    elif name == "faster-than-diff-sum":
        targets = make_pairwise_difference_targets(matrix, instances)
        models["pairs"] = {p: _fit_reg(combo.regressor, targets[p]) for p in sorted(targets)}
    else:  # pragma: no cover
        raise InvalidSpec(f"unhandled strategy {name!r}")

    return TrainedRanker(
        strategy, scenario.algorithms, X.shape[1],
        combo.classifier_name(), combo.regressor_name(), mean_runtime, models,
    )


# -- prediction ---------------------------------------------------------------


def _pair_vector(ranker: TrainedRanker, features: np.ndarray):
    preds = {}
    for pair in sorted(ranker.models["pairs"]):
        preds[pair] = ranker.models["pairs"][pair].predict(features)
    return preds


def _sorted_ranking(ranker: TrainedRanker, predicted_rank) -> Ranking:
    """Strict ranking by (predicted rank, mean training runtime, index)."""
    n = len(ranker.algorithms)
    order = sorted(range(n), key=lambda a: (predicted_rank[a], ranker.mean_runtime[a], a))
    ranks = [0.0] * n
    for pos, a in enumerate(order):
        ranks[a] = float(pos + 1)
    return Ranking(tuple(ranks))


def predict_ranking(ranker: TrainedRanker, features) -> RankPrediction:
    """Predict the portfolio ranking for one feature vector."""
    x = np.asarray(features, dtype=np.float64)
    name = ranker.strategy.name
    n = len(ranker.algorithms)

    if name == "order":
        return RankPrediction.at_level1(
            decode_ranking_label(ranker.models["label"].predict(x)))
    if name == "order-score-class":
        predicted = [float(m.predict(x)) for m in ranker.models["per_alg"]]
        return RankPrediction.at_level1(_sorted_ranking(ranker, predicted))
    if name == "order-score-reg":
        predicted = [float(m.predict(x)) for m in ranker.models["per_alg"]]
        return RankPrediction.at_level1(_sorted_ranking(ranker, predicted))
    if name in ("faster-than-class", "faster-than-diff-class"):
        preds = _pair_vector(ranker, x)
        if name == "faster-than-class":
            stacked = [1.0 if preds[p] == "first" else 0.0 for p in sorted(preds)]
        else:
            stacked = [float(preds[p]) for p in sorted(preds)]
        label = ranker.models["layer2"].predict(np.asarray(stacked))
        return RankPrediction.at_level1(decode_ranking_label(label))
    if name == "solve-time":
        scores = [float(m.predict(x)) for m in ranker.models["per_alg"]]
        return RankPrediction.at_level2(scores, SCORE_LOWER)
    if name == "solve-time-log":
        # report on the runtime scale; exp() preserves the ranking, the
        # clip only guards against overflow on absurd extrapolations
        scores = [math.exp(min(float(m.predict(x)), 700.0)) for m in ranker.models["per_alg"]]
        return RankPrediction.at_level2(scores, SCORE_LOWER)
    if name == "prob-best":
        scores = [min(1.0, max(0.0, float(m.predict(x)))) for m in ranker.models["per_alg"]]
        return RankPrediction.at_level2(scores, SCORE_HIGHER)
    if name == "faster-than-vote":
        votes = majority_vote_scores(_pair_vector(ranker, x), n)
        return RankPrediction.at_level2(votes, SCORE_HIGHER)
    if name == "faster-than-diff-sum":
        sums = difference_sum_scores(_pair_vector(ranker, x), n)
        return RankPrediction.at_level2(sums, SCORE_HIGHER)
    raise InvalidSpec(f"unhandled strategy {name!r}")  # pragma: no cover
