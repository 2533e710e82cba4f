import math

import numpy as np
import pytest

from conftest import (
    ConstantModel,
    CountingFactory,
    build_scenario,
    oracle_runtime_factory,
    random_ranking_values,
)
from rankfolio.errors import (
    ComboMismatch,
    InvalidRankMultiset,
    MalformedLabel,
    NonFiniteScore,
    TooFewRows,
)
from rankfolio.rankers import (
    SCORE_HIGHER,
    SCORE_LOWER,
    STRATEGIES,
    LearnerCombo,
    algorithm_pairs,
    build_stacked_training_set,
    decode_ranking_label,
    derive_ranking_from_scores,
    difference_sum_scores,
    encode_ranking_label,
    majority_vote_scores,
    make_pairwise_difference_targets,
    make_pairwise_faster_targets,
    predict_ranking,
    strategy_by_name,
    train_ranker,
)
from rankfolio.scenario import PredictionLevel, Ranking, true_ranking


# -- labels --------------------------------------------------------------------


def test_encode_examples():
    assert encode_ranking_label(Ranking((2.0, 1.0, 3.0))) == "2|1|3"
    assert encode_ranking_label(Ranking((1.5, 1.5, 3.0))) == "1.5|1.5|3"
    assert encode_ranking_label(Ranking((1.0, 2.0))) == "1|2"


def test_decode_examples():
    assert decode_ranking_label("2|1|3").ranks == (2.0, 1.0, 3.0)
    with pytest.raises(InvalidRankMultiset):
        decode_ranking_label("1|1|3")
    with pytest.raises(MalformedLabel):
        decode_ranking_label("")
    with pytest.raises(MalformedLabel):
        decode_ranking_label("1|x|3")


def test_label_round_trip_random_weak_orders():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        ranking = Ranking.from_values(random_ranking_values(rng, n))
        assert decode_ranking_label(encode_ranking_label(ranking)) == ranking


# -- score-derived rankings ------------------------------------------------------


def test_derive_examples():
    assert derive_ranking_from_scores([10, 20, 5], SCORE_LOWER).ranks == (2.0, 3.0, 1.0)
    assert derive_ranking_from_scores([2, 1, 0], SCORE_HIGHER).ranks == (1.0, 2.0, 3.0)


def test_derive_monotone_transform_invariance():
    rng = np.random.default_rng(1)
    for _ in range(100):
        scores = rng.uniform(0.1, 100, int(rng.integers(2, 8)))
        direct = derive_ranking_from_scores(scores, SCORE_LOWER)
        logged = derive_ranking_from_scores(np.log(scores), SCORE_LOWER)
        assert direct == logged


def test_derive_rejects_non_finite():
    with pytest.raises(NonFiniteScore):
        derive_ranking_from_scores([1.0, float("nan")], SCORE_LOWER)
    with pytest.raises(NonFiniteScore):
        derive_ranking_from_scores([1.0, float("inf")], SCORE_HIGHER)


# -- pairwise targets --------------------------------------------------------------


def test_faster_targets():
    s = build_scenario({"i1": [5, 9], "i2": [9, 5], "i3": [4, 4]})
    targets = make_pairwise_faster_targets(s.performance, s.instances)
    assert targets[(0, 1)].y == ("first", "second", "first")  # tie labeled first


def test_pair_count():
    s = build_scenario({"i1": [1, 2, 3, 4, 5]})
    targets = make_pairwise_faster_targets(s.performance, s.instances)
    assert len(targets) == 10 == len(algorithm_pairs(5))


def test_difference_targets_antisymmetric_convention():
    s = build_scenario({"i1": [5, 9], "i2": [9, 5]})
    targets = make_pairwise_difference_targets(s.performance, s.instances)
    assert targets[(0, 1)].y == (4.0, -4.0)  # d(i,j) = rt(j) - rt(i)


def test_majority_vote_examples():
    assert majority_vote_scores({(0, 1): "first", (0, 2): "first", (1, 2): "first"}, 3).tolist() == [2, 1, 0]
    assert majority_vote_scores({(0, 1): "first", (1, 2): "first", (0, 2): "second"}, 3).tolist() == [1, 1, 1]
    assert majority_vote_scores({(0, 1): "second"}, 2).tolist() == [0, 1]


def test_vote_total_is_pair_count():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(2, 7))
        labels = {p: ("first" if rng.random() < 0.5 else "second")
                  for p in algorithm_pairs(n)}
        assert majority_vote_scores(labels, n).sum() == n * (n - 1) / 2


def test_difference_sum_examples():
    sums = difference_sum_scores({(0, 1): 4.0, (0, 2): 6.0, (1, 2): 2.0}, 3)
    assert sums.tolist() == [10.0, -2.0, -8.0]
    assert derive_ranking_from_scores(sums, SCORE_HIGHER).ranks == (1.0, 2.0, 3.0)
    zeros = difference_sum_scores({p: 0.0 for p in algorithm_pairs(3)}, 3)
    assert derive_ranking_from_scores(zeros, SCORE_HIGHER).ranks == (2.0, 2.0, 2.0)


def test_difference_sum_totals_zero():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(2, 7))
        diffs = {p: float(rng.normal() * 100) for p in algorithm_pairs(n)}
        assert abs(difference_sum_scores(diffs, n).sum()) < 1e-9


def test_difference_sum_rejects_non_finite():
    with pytest.raises(NonFiniteScore):
        difference_sum_scores({(0, 1): float("nan")}, 2)


# -- stacking ------------------------------------------------------------------


def grid_scenario(n_inst=24, n_alg=3, seed=4):
    rng = np.random.default_rng(seed)
    runtimes = {f"i{k:03d}": rng.uniform(1, 100, n_alg).tolist() for k in range(n_inst)}
    features = {iid: tuple(rng.normal(size=4)) for iid in runtimes}
    return build_scenario(runtimes, features=features)


def test_stacked_feature_width():
    s = grid_scenario()
    combo = LearnerCombo(classifier="knn1", regressor="knn1")
    stacked = build_stacked_training_set(s, s.instances, "class", combo, seed=0)
    assert stacked.X.shape == (24, 3)  # n(n-1)/2 pair columns


def test_stacked_rows_are_out_of_fold():
    s = grid_scenario()
    trained_rows = []

    def make_model(index, dataset):
        trained_rows.append({tuple(x) for x in dataset.X.tolist()})
        return ConstantModel(float(len(trained_rows) - 1))

    factory = CountingFactory(make_model)
    combo = LearnerCombo(regressor=factory)
    stacked = build_stacked_training_set(s, s.instances, "diff", combo,
                                         inner_k=5, seed=0)
    for r, inst in enumerate(s.instances):
        model_id = int(stacked.X[r, 0])  # the model that produced this row
        assert tuple(inst.features) not in trained_rows[model_id]


def test_stacked_resubstitution_mode():
    s = grid_scenario()

    def make_model(index, dataset):
        return ConstantModel(float(index))

    combo = LearnerCombo(regressor=CountingFactory(make_model))
    stacked = build_stacked_training_set(s, s.instances, "diff", combo,
                                         seed=0, stacking="resub")
    assert stacked.X.shape == (24, 3)
    assert set(stacked.X[:, 0]) == {0.0}  # single first-layer fit per pair


def test_stacked_deterministic():
    s = grid_scenario()
    combo = LearnerCombo(classifier="tree")
    a = build_stacked_training_set(s, s.instances, "class", combo, seed=9)
    b = build_stacked_training_set(s, s.instances, "class", combo, seed=9)
    assert np.array_equal(a.X, b.X) and a.y == b.y


def test_stacked_too_few_rows():
    s = grid_scenario(n_inst=4)
    with pytest.raises(TooFewRows):
        build_stacked_training_set(s, s.instances, "class",
                                   LearnerCombo(classifier="knn1"), inner_k=5)


def test_stacked_labels_are_true_rankings():
    s = grid_scenario()
    combo = LearnerCombo(classifier="knn1")
    stacked = build_stacked_training_set(s, s.instances, "class", combo, seed=0)
    expected = tuple(encode_ranking_label(true_ranking(i, s.performance))
                     for i in s.instances)
    assert stacked.y == expected


# -- training ------------------------------------------------------------------


def test_order_knn1_resubstitution():
    s = grid_scenario(n_inst=30)
    ranker = train_ranker("order", LearnerCombo(classifier="knn1"), s, s.instances)
    for inst in s.instances:
        pred = predict_ranking(ranker, inst.features)
        assert pred.ranking == true_ranking(inst, s.performance)
        assert pred.level == PredictionLevel.R1 and pred.scores is None


def test_prob_best_targets_are_indicators():
    s = build_scenario({"i1": [9, 9, 1, 9, 9], "i2": [1, 9, 9, 9, 9]})
    factory = CountingFactory(lambda index, dataset: ConstantModel(0.0))
    train_ranker("prob-best", LearnerCombo(regressor=factory), s, s.instances)
    per_alg = [ds.y for ds in factory.datasets]
    assert per_alg[2] == (1.0, 0.0)  # algorithm 3 of 5 best on i1
    assert per_alg[0] == (0.0, 1.0)
    assert all(y == (0.0, 0.0) for y in (per_alg[1], per_alg[3], per_alg[4]))


def test_solve_time_log_floor_for_zero_runtime():
    s = build_scenario({"i1": [0.0, 5.0], "i2": [2.0, 1.0]})
    factory = CountingFactory(lambda index, dataset: ConstantModel(0.0))
    train_ranker("solve-time-log", LearnerCombo(regressor=factory), s, s.instances)
    assert factory.datasets[0].y[0] == math.log(1e-3)


def test_combo_mismatch():
    s = grid_scenario()
    with pytest.raises(ComboMismatch, match="classifier"):
        train_ranker("order", LearnerCombo(regressor="knn5"), s, s.instances)
    with pytest.raises(ComboMismatch, match="regressor"):
        train_ranker("solve-time", LearnerCombo(classifier="knn5"), s, s.instances)


def test_strategy_levels():
    levels = [s.level for s in STRATEGIES.values()]
    assert levels.count(PredictionLevel.R1) == 5
    assert levels.count(PredictionLevel.R2) == 5


# -- prediction ----------------------------------------------------------------


def test_solve_time_with_oracle_stub_recovers_truth():
    s = grid_scenario(n_inst=20, n_alg=4)
    combo = LearnerCombo(regressor=oracle_runtime_factory(s))
    ranker = train_ranker("solve-time", combo, s, s.instances)
    for inst in s.instances:
        pred = predict_ranking(ranker, inst.features)
        assert pred.ranking == true_ranking(inst, s.performance)
        assert pred.direction == SCORE_LOWER


def test_vote_prediction_composition():
    s = grid_scenario(n_alg=3)
    # pair models fitted in pair order: (0,1), (0,2), (1,2) -> A>B, A>C, B>C
    factory = CountingFactory(lambda index, dataset: ConstantModel("first"))
    ranker = train_ranker("faster-than-vote", LearnerCombo(classifier=factory),
                          s, s.instances)
    pred = predict_ranking(ranker, s.instances[0].features)
    assert pred.scores == (2.0, 1.0, 0.0)
    assert pred.ranking.ranks == (1.0, 2.0, 3.0)
    assert pred.level == PredictionLevel.R2


def test_prob_best_clamps_reported_scores():
    s = grid_scenario(n_alg=3)
    outputs = [1.2, 0.4, -0.1]
    factory = CountingFactory(lambda index, dataset: ConstantModel(outputs[index]))
    ranker = train_ranker("prob-best", LearnerCombo(regressor=factory), s, s.instances)
    pred = predict_ranking(ranker, s.instances[0].features)
    assert pred.scores == (1.0, 0.4, 0.0)
    assert pred.ranking.ranks == (1.0, 2.0, 3.0)


def test_order_score_ties_broken_by_mean_runtime_then_index():
    # both models predict rank 1; algorithm 2 has the lower mean runtime
    s = build_scenario({"i1": [9.0, 2.0], "i2": [9.0, 2.0]})
    factory = CountingFactory(lambda index, dataset: ConstantModel(1.0))
    ranker = train_ranker("order-score-reg", LearnerCombo(regressor=factory),
                          s, s.instances)
    pred = predict_ranking(ranker, s.instances[0].features)
    assert pred.ranking.ranks == (2.0, 1.0)


def test_r2_consistency_and_downcast(standard_scenario):
    s = standard_scenario
    train = s.instances[:80]
    for name in ("solve-time", "solve-time-log", "prob-best",
                 "faster-than-vote", "faster-than-diff-sum"):
        strategy = strategy_by_name(name)
        combo = LearnerCombo(classifier="tree", regressor="tree")
        ranker = train_ranker(strategy, combo, s, train, seed=0)
        for inst in s.instances[80:120]:
            pred = predict_ranking(ranker, inst.features)
            assert pred.level == PredictionLevel.R2
            assert pred.ranking == derive_ranking_from_scores(pred.scores, pred.direction)
            down = pred.downcast()
            assert down.level == PredictionLevel.R1
            assert down.ranking == pred.ranking and down.scores is None


def test_solve_time_and_log_agree_under_oracle():
    s = grid_scenario(n_inst=25, n_alg=4, seed=8)
    plain = train_ranker("solve-time", LearnerCombo(regressor=oracle_runtime_factory(s)),
                         s, s.instances)
    logged = train_ranker(
        "solve-time-log",
        LearnerCombo(regressor=oracle_runtime_factory(s, transform=lambda rt: math.log(max(rt, 1e-3)))),
        s, s.instances)
    for inst in s.instances:
        a = predict_ranking(plain, inst.features)
        b = predict_ranking(logged, inst.features)
        assert a.ranking == b.ranking


def test_training_is_deterministic(standard_scenario):
    s = standard_scenario
    combo = LearnerCombo(classifier="tree", regressor="tree")
    probe = s.instances[150].features
    for name in STRATEGIES:
        a = train_ranker(name, combo, s, s.instances[:60], seed=3)
        b = train_ranker(name, combo, s, s.instances[:60], seed=3)
        assert predict_ranking(a, probe) == predict_ranking(b, probe), name


def test_all_predictions_have_valid_rank_sums(standard_scenario):
    s = standard_scenario
    combo = LearnerCombo(classifier="knn3", regressor="knn3")
    n = s.n_algorithms
    for name in STRATEGIES:
        ranker = train_ranker(name, combo, s, s.instances[:50], seed=1)
        for inst in s.instances[50:70]:
            pred = predict_ranking(ranker, inst.features)
            assert sum(pred.ranking.ranks) == n * (n + 1) / 2
