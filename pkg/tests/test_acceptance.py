"""Acceptance gate: one test per exit criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import itertools
import math
import time

import numpy as np
import pytest

from conftest import oracle_runtime_factory, random_ranking_values
from rankfolio import cli
from rankfolio.evaluation import (
    kruskal_wallis,
    quartiles,
    run_cross_validation,
    spearman,
    stratified_folds,
    sum_quartile_scores,
    wilcoxon_signed_rank,
)
from rankfolio.rankers import (
    STRATEGIES,
    LearnerCombo,
    derive_ranking_from_scores,
    predict_ranking,
    train_ranker,
)
from rankfolio.scenario import (
    GeneratorSpec,
    Ranking,
    best_algorithm,
    generate_synthetic,
    true_ranking,
)


def ok(n, message):
    print(f"ACCEPTANCE {n:2d} PASS: {message}")


def random_baseline_median(scenario, seed=123):
    rng = np.random.default_rng(seed)
    n = scenario.n_algorithms
    rhos = [
        spearman(Ranking(tuple((rng.permutation(n) + 1.0).tolist())),
                 true_ranking(inst, scenario.performance))
        for inst in scenario.instances
    ]
    return float(np.median(rhos)), float(np.mean(rhos))


def test_criterion_01_spearman_oracle_equivalence():
    def oracle(a, b):
        n = len(a)
        ma, mb = sum(a) / n, sum(b) / n
        cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
        va = sum((x - ma) ** 2 for x in a)
        vb = sum((y - mb) ** 2 for y in b)
        if va == 0 or vb == 0:
            return 0.0
        return cov / math.sqrt(va * vb)

    rng = np.random.default_rng(0)
    pairs = []
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        pairs.append((Ranking.from_values(random_ranking_values(rng, n)),
                      Ranking.from_values(random_ranking_values(rng, n))))
    start = time.perf_counter()
    for a, b in pairs:
        assert abs(spearman(a, b) - oracle(a.ranks, b.ranks)) <= 1e-12
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    ok(1, f"1000 weak-order pairs match the Pearson-on-ranks oracle within 1e-12 "
          f"in {elapsed * 1000:.0f} ms")


def test_criterion_02_perfect_information_sanity(tie_free_scenario):
    s = tie_free_scenario
    assert len(s.instances) == 100 and s.n_algorithms == 5
    for inst in s.instances:  # premise: no runtime ties anywhere
        assert all(r == int(r) for r in true_ranking(inst, s.performance).ranks)

    plain = run_cross_validation(
        s, "solve-time", LearnerCombo(regressor=oracle_runtime_factory(s)),
        k=10, seed=0)
    assert all(x.rho == 1.0 for x in plain)

    logged = run_cross_validation(
        s, "solve-time-log",
        LearnerCombo(regressor=oracle_runtime_factory(
            s, transform=lambda rt: math.log(max(rt, 1e-3)))),
        k=10, seed=0)
    assert [x.predicted for x in logged] == [x.predicted for x in plain]
    ok(2, "oracle solve-time scores rho=1 on all 100 instances; "
          "solve-time-log reproduces the same rankings")


def test_criterion_03_two_algorithm_property(two_algorithm_scenario):
    s = two_algorithm_scenario
    real = run_cross_validation(s, "order", LearnerCombo(classifier="tree"),
                                k=10, seed=0)
    assert all(x.rho in (1.0, -1.0) for x in real)

    perfect = run_cross_validation(
        s, "solve-time", LearnerCombo(regressor=oracle_runtime_factory(s)),
        k=10, seed=0)
    assert sum_quartile_scores([quartiles([x.rho for x in perfect])]) == 3.0
    ok(3, "every 2-algorithm score is +/-1; a perfect ranker's quartile sum is exactly 3")


def test_criterion_04_random_baseline():
    s = generate_synthetic(GeneratorSpec(2000, 5, 10, noise=0.1), 17)
    median, mean = random_baseline_median(s, seed=99)
    assert abs(median) <= 0.10
    assert abs(mean) <= 0.05
    ok(4, f"uniform-random ranker over 2000 instances: median rho {median:+.3f}, "
          f"mean {mean:+.4f}")


def test_criterion_05_planted_signal_learnability(standard_scenario):
    s = standard_scenario
    baseline_median, _ = random_baseline_median(s)
    names = ("knn5", "tree", "linear")
    report = []
    for strategy in STRATEGIES.values():
        clf_options = [n for n in names if n != "linear"] if strategy.needs_classifier else [None]
        reg_options = list(names) if strategy.needs_regressor else [None]
        best = -2.0
        for clf, reg in itertools.product(clf_options, reg_options):
            combo = LearnerCombo(classifier=clf, regressor=reg)
            scores = run_cross_validation(s, strategy, combo, k=10, seed=0)
            best = max(best, float(np.median([x.rho for x in scores])))
        assert best >= 0.6, f"{strategy.name}: best median {best}"
        assert best >= baseline_median + 0.4, f"{strategy.name} vs baseline"
        report.append(f"{strategy.name}={best:.2f}")
    ok(5, "all ten strategies reach median rho >= 0.6 and beat the random baseline "
          f"by >= 0.4 ({', '.join(report)})")


def test_criterion_06_stratification():
    rng = np.random.default_rng(3)
    k = 10
    for _ in range(100):
        spec = GeneratorSpec(int(rng.integers(20, 90)), int(rng.integers(2, 6)), 3)
        s = generate_synthetic(spec, int(rng.integers(10_000)))
        assignment = stratified_folds(s, k, int(rng.integers(10_000)))
        sizes = [len(assignment.test_ids(f)) for f in range(1, k + 1)]
        assert max(sizes) - min(sizes) <= 1
        strata = {}
        for inst in s.instances:
            strata.setdefault(best_algorithm(inst, s.performance), []).append(inst.id)
        for ids in strata.values():
            for f in range(1, k + 1):
                count = sum(1 for i in ids if assignment.fold_of[i] == f)
                assert abs(count - len(ids) / k) < 1 + 1e-9
    ok(6, "100 random scenarios: fold sizes within 1; per-stratum counts within 1 "
          "of exact proportionality")


def test_criterion_07_report_golden(tmp_path):
    from rankfolio.evaluation import QuartileSummary, write_summary_csv

    table = {
        "order": {"CSP": 3.0, "QBF": 2.4, "SAT-HAN": 2.789, "SAT-IND": 3.148},
        "faster-than-class": {"CSP": 3.0, "QBF": 2.3, "SAT-HAN": 2.907, "SAT-IND": 3.29},
    }
    rows = []
    for strategy, cells in table.items():
        for dataset, total in cells.items():
            v = total / 3
            rows.append((dataset, strategy, "tree", "-", QuartileSummary(-1, v, v, v, 1)))
    write_summary_csv(tmp_path / "summary.csv", rows)
    assert cli.main(["report", "--results", str(tmp_path / "summary.csv"),
                     "--format", "csv", "--out", str(tmp_path)]) == 0
    import csv

    with open(tmp_path / "report-best.csv", newline="") as fh:
        rendered = {r[0]: r[1:] for r in list(csv.reader(fh))[1:]}
    assert rendered["order"] == ["3", "2.4", "2.789", "3.148", "11.337"]
    assert rendered["faster-than-class"] == ["3", "2.3", "2.907", "3.29", "11.497"]
    ok(7, "report renders the published Order (11.337) and Faster-than-classification "
          "(11.497) rows exactly at 3 decimals")


def test_criterion_08_statistics_oracles():
    kw = kruskal_wallis([[1, 2, 3], [4, 5, 6]])
    assert abs(kw.statistic - 27.0 / 7.0) <= 1e-3  # hand-evaluated closed form

    wx = wilcoxon_signed_rank([2, 3, 4], [1, 1, 1])
    assert wx.statistic == 6.0
    # independent enumeration oracle over all 2^3 sign assignments
    ranks = (1.0, 2.0, 3.0)
    mu = sum(ranks) / 2
    w_obs = 6.0
    extreme = sum(
        1 for signs in itertools.product((0, 1), repeat=3)
        if abs(sum(r for r, s in zip(ranks, signs) if s) - mu) >= abs(w_obs - mu) - 1e-12
    )
    assert wx.p_value == pytest.approx(extreme / 8.0, abs=1e-12) == pytest.approx(0.25)
    ok(8, "kruskal-wallis H=3.857+/-0.001; wilcoxon W=6 with exact two-sided p=0.25")


def test_criterion_09_consistency_invariants(standard_scenario):
    s = standard_scenario
    n = s.n_algorithms
    pair_total = n * (n - 1) / 2
    rank_total = n * (n + 1) / 2
    learners = ("knn1", "knn3", "knn5", "tree", "baseline", "linear")
    checked = 0
    folds = stratified_folds(s, 5, seed=0)
    train = [i for i in s.instances if folds.fold_of[i.id] != 1]
    test = [i for i in s.instances if folds.fold_of[i.id] == 1]
    for strategy in STRATEGIES.values():
        for name in learners:
            if strategy.needs_classifier and name == "linear":
                continue  # no linear classifier
            clf = name if strategy.needs_classifier else None
            reg = name if strategy.needs_regressor else None
            combo = LearnerCombo(classifier=clf, regressor=reg)
            ranker = train_ranker(strategy, combo, s, train, seed=0)
            for inst in itertools.chain(train, test):
                pred = predict_ranking(ranker, inst.features)
                assert sum(pred.ranking.ranks) == rank_total
                if pred.level == "R2":
                    assert pred.ranking == derive_ranking_from_scores(
                        pred.scores, pred.direction)
                if strategy.name == "faster-than-vote":
                    assert sum(pred.scores) == pair_total
                if strategy.name == "faster-than-diff-sum":
                    assert abs(sum(pred.scores)) <= 1e-6  # float antisymmetry dust
                checked += 1
    assert checked >= 10_000
    ok(9, f"{checked} predictions: rank sums, R2 score consistency, vote totals and "
          "difference-sum zeroing all hold")


def test_criterion_10_determinism_and_budget(tmp_path, monkeypatch):
    monkeypatch.setenv("RANKFOLIO_THREADS", "0")
    scen = tmp_path / "std"
    assert cli.main(["generate", "--instances", "200", "--algorithms", "5",
                     "--features", "10", "--noise", "0.1", "--seed", "42",
                     "--out", str(scen)]) == 0
    elapsed = []
    for sub in ("g1", "g2"):
        start = time.perf_counter()
        assert cli.main(["grid", "--scenarios", str(scen),
                         "--combos", "knn1,knn5,tree,linear",
                         "--folds", "10", "--seed", "0",
                         "--out", str(tmp_path / sub)]) == 0
        elapsed.append(time.perf_counter() - start)
    assert max(elapsed) < 300.0, "grid must finish well under five minutes"
    for name in ("scores.csv", "summary.csv", "cells.csv", "best_worst.csv"):
        a = (tmp_path / "g1" / name).read_bytes()
        b = (tmp_path / "g2" / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"
    ok(10, f"full 10x4 grid twice in {elapsed[0]:.1f}s + {elapsed[1]:.1f}s "
           "(< 300s each) with byte-identical outputs")
