"""Experiment methodology: stratified CV, rank correlation, aggregation.

Rankers are scored per instance with the tie-corrected Spearman
coefficient (Pearson correlation of the fractional rank vectors).
Per-cell results are summarized as quartiles over instances; cells are
compared across datasets by the sum q1 + median + q3, and differences
between strategies are tested with the Kruskal-Wallis rank sum test and
the Wilcoxon signed-rank test.

Results files (UTF-8 CSV):

* per-instance scores: ``dataset,strategy,classifier,regressor,fold,
  instance,rho,predicted,actual``
* summaries: ``dataset,strategy,classifier,regressor,min,q1,median,q3,max``
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2, norm

from .errors import (
    EmptyInput,
    IncompleteGrid,
    InvalidGroups,
    InvalidSpec,
    LengthMismatch,
    TooFewInstances,
)
from .rankers import (
    LearnerCombo,
    encode_ranking_label,
    predict_ranking,
    train_ranker,
)
from .scenario import Ranking, best_algorithm, fractional_ranks, true_ranking

WILCOXON_EXACT_MAX = 12  # enumerate all sign assignments up to this many pairs


# -- fold assignment ---------------------------------------------------------


@dataclass(frozen=True)
class FoldAssignment:
    """Instance id -> fold index in 1..k; folds are near-equal in size and
    preserve the distribution of best algorithms."""

    k: int
    fold_of: dict = field(hash=False)

    def test_ids(self, fold: int) -> list:
        return [iid for iid, f in self.fold_of.items() if f == fold]

    def train_ids(self, fold: int) -> list:
        return [iid for iid, f in self.fold_of.items() if f != fold]


def stratified_folds(scenario, k: int = 10, seed: int = 0) -> FoldAssignment:
    """Deal each best-algorithm stratum round-robin over a shared pointer.

    Instances are shuffled within their stratum by the seed; the shared
    pointer keeps both the overall fold sizes and the per-stratum counts
    within one of exact proportionality.
    """
    if k < 2:
        raise InvalidSpec("need at least 2 folds")
    if len(scenario.instances) < k:
        raise TooFewInstances(
            f"{len(scenario.instances)} instances cannot fill {k} folds"
        )
    rng = np.random.default_rng(seed)
    strata = {a: [] for a in scenario.algorithms}
    for inst in scenario.instances:
        strata[best_algorithm(inst, scenario.performance)].append(inst.id)
    fold_of = {}
    ptr = 0
    for a in scenario.algorithms:
        ids = strata[a]
        for t in rng.permutation(len(ids)):
            fold_of[ids[int(t)]] = ptr % k + 1
            ptr += 1
    return FoldAssignment(k, fold_of)


# -- scoring -----------------------------------------------------------------


def _rank_vector(r) -> np.ndarray:
    return np.asarray(r.ranks if isinstance(r, Ranking) else r, dtype=np.float64)


def spearman(predicted, actual) -> float:
    """Tie-corrected Spearman: Pearson correlation of the rank vectors.

    Equals 1 - 6*sum(d_i^2)/(n(n^2-1)) for tie-free inputs. A fully tied
    vector has no order information; the correlation is defined as 0.
    """
    a = _rank_vector(predicted)
    b = _rank_vector(actual)
    if a.shape != b.shape or a.ndim != 1 or a.shape[0] < 2:
        raise LengthMismatch(
            f"need two equal-length rankings of >= 2, got {a.shape} and {b.shape}"
        )
    da = a - a.mean()
    db = b - b.mean()
    va = float(da @ da)
    vb = float(db @ db)
    if va == 0.0 or vb == 0.0:
        return 0.0
    rho = float(da @ db) / math.sqrt(va * vb)
    return min(1.0, max(-1.0, rho))


def is_degenerate_pair(predicted, actual) -> bool:
    """True when either ranking is a full tie (Spearman defined as 0)."""
    a = _rank_vector(predicted)
    b = _rank_vector(actual)
    return bool(np.all(a == a[0]) or np.all(b == b[0]))


@dataclass(frozen=True)
class QuartileSummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float

    def spread_sum(self) -> float:
        return self.q1 + self.median + self.q3


def quartiles(scores) -> QuartileSummary:
    """Five-number summary; quartiles interpolate linearly at p*(m-1)."""
    vals = np.asarray(list(scores), dtype=np.float64)
    if vals.size == 0:
        raise EmptyInput("no scores to summarize")
    q1, med, q3 = (float(v) for v in np.percentile(vals, [25, 50, 75]))
    return QuartileSummary(float(vals.min()), q1, med, q3, float(vals.max()))


def sum_quartile_scores(summaries) -> float:
    """Sum of q1 + median + q3 over datasets; higher is better."""
    summaries = list(summaries)
    if not summaries:
        raise EmptyInput("no summaries to sum")
    return float(sum(s.spread_sum() for s in summaries))


# -- cross-validation --------------------------------------------------------


@dataclass(frozen=True)
class InstanceScore:
    instance_id: str
    fold: int
    rho: float
    predicted: str
    actual: str
    degenerate: bool = False


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def cross_validate(scenario, strategy, combo: LearnerCombo, k: int = 10,
                   seed: int = 0, stacking: str = "oof"):
    """Stratified k-fold protocol; returns (scores, predictions).

    Each instance is predicted exactly once, by the ranker trained on the
    other k-1 folds; both lists come back sorted by instance id.
    """
    assignment = stratified_folds(scenario, k, seed)
    scores = []
    predictions = []
    for fold in range(1, k + 1):
        train = [inst for inst in scenario.instances if assignment.fold_of[inst.id] != fold]
        test = [inst for inst in scenario.instances if assignment.fold_of[inst.id] == fold]
        ranker = train_ranker(
            strategy, combo, scenario, train,
            seed=_fold_seed(seed, fold), stacking=stacking,
        )
        for inst in test:
            pred = predict_ranking(ranker, inst.features)
            actual = true_ranking(inst, scenario.performance)
            scores.append(InstanceScore(
                inst.id, fold,
                spearman(pred.ranking, actual),
                encode_ranking_label(pred.ranking),
                encode_ranking_label(actual),
                is_degenerate_pair(pred.ranking, actual),
            ))
            predictions.append((inst.id, pred))
    scores.sort(key=lambda s: s.instance_id)
    predictions.sort(key=lambda p: p[0])
    return scores, predictions


def run_cross_validation(scenario, strategy, combo: LearnerCombo, k: int = 10,
                         seed: int = 0, stacking: str = "oof") -> list:
    """Per-instance Spearman scores under stratified k-fold CV."""
    scores, _ = cross_validate(scenario, strategy, combo, k, seed, stacking)
    return scores


# -- grids and best/worst selection ------------------------------------------


@dataclass(frozen=True)
class GridCell:
    dataset: str
    strategy: str
    combo: str
    classifier: str
    regressor: str
    summary: QuartileSummary = None
    scores: tuple = ()
    error: str = None


@dataclass
class GridResult:
    """All evaluated (dataset, strategy, combo) cells of one experiment."""

    cells: dict = field(default_factory=dict)

    def add(self, cell: GridCell):
        self.cells[(cell.dataset, cell.strategy, cell.combo)] = cell

    def datasets(self) -> list:
        return sorted({d for d, _, _ in self.cells})

    def strategies(self) -> list:
        return sorted({s for _, s, _ in self.cells})


def select_best_worst(grid: GridResult, strategy: str):
    """Best and worst combo for a strategy by cross-dataset quartile sums.

    Combos whose every cell failed are ignored; a combo with results on
    only part of the datasets makes the comparison ill-defined and raises
    IncompleteGrid. Ties go to the lexicographically smaller combo name.
    """
    datasets = grid.datasets()
    by_combo = {}
    for (d, s, c), cell in grid.cells.items():
        if s == strategy:
            by_combo.setdefault(c, {})[d] = cell
    sums = {}
    for combo, cells in sorted(by_combo.items()):
        ok = {d: cell for d, cell in cells.items() if cell.error is None}
        if not ok:
            continue
        missing = [d for d in datasets if d not in ok]
        if missing:
            raise IncompleteGrid(
                f"combo {combo!r} has no result for dataset(s) {missing} on {strategy!r}"
            )
        sums[combo] = sum_quartile_scores(ok[d].summary for d in datasets)
    if not sums:
        raise IncompleteGrid(f"no evaluable combo for strategy {strategy!r}")
    best = min(sums, key=lambda c: (-sums[c], c))
    worst = min(sums, key=lambda c: (sums[c], c))
    return best, worst


# -- significance tests ------------------------------------------------------


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    p_value: float
    method: str

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise InvalidSpec(f"p-value {self.p_value} out of [0, 1]")


def kruskal_wallis(groups) -> TestResult:
    """Kruskal-Wallis H over >= 2 groups, with the standard tie correction.

    p comes from the chi-square approximation with len(groups)-1 degrees
    of freedom; identical pooled values give H = 0, p = 1.
    """
    groups = [list(g) for g in groups]
    if len(groups) < 2 or any(len(g) == 0 for g in groups):
        raise InvalidGroups("need >= 2 nonempty groups")
    pooled = [float(v) for g in groups for v in g]
    n_total = len(pooled)
    if n_total < 3:
        raise InvalidGroups("need at least 3 values in total")
    ranks = fractional_ranks(pooled)
    df = len(groups) - 1
    # tie correction: 1 - sum(t^3 - t) / (N^3 - N) over tied groups
    counts = {}
    for v in pooled:
        counts[v] = counts.get(v, 0) + 1
    tie_term = sum(t**3 - t for t in counts.values())
    denom = 1.0 - tie_term / (n_total**3 - n_total)
    if denom == 0.0:  # every pooled value identical
        return TestResult("kruskal-wallis", 0.0, 1.0,
                          f"degenerate (all values tied), df={df}")
    pos = 0
    h = 0.0
    for g in groups:
        r_sum = sum(ranks[pos + i] for i in range(len(g)))
        pos += len(g)
        h += r_sum * r_sum / len(g)
    h = (12.0 / (n_total * (n_total + 1)) * h - 3.0 * (n_total + 1)) / denom
    p = float(chi2.sf(h, df))
    return TestResult("kruskal-wallis", h, min(1.0, max(0.0, p)),
                      f"chi-square approximation, df={df}")


def wilcoxon_signed_rank(a, b) -> TestResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped; W is the positive-rank sum over ranks of
    |differences| (average ranks on ties). The p-value is exact (all sign
    assignments enumerated) up to 12 nonzero pairs, and the tie-corrected
    normal approximation beyond.
    """
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    if len(a) != len(b) or len(a) < 1:
        raise LengthMismatch(f"need equal-length samples >= 1, got {len(a)} and {len(b)}")
    diffs = [x - y for x, y in zip(a, b) if x - y != 0.0]
    m = len(diffs)
    if m == 0:
        return TestResult("wilcoxon", 0.0, 1.0, "degenerate (all differences zero)")
    ranks = fractional_ranks([abs(d) for d in diffs])
    w = float(sum(r for r, d in zip(ranks, diffs) if d > 0))

    if m <= WILCOXON_EXACT_MAX:
        sums = np.zeros(1)
        for r in ranks:
            sums = np.concatenate([sums, sums + r])
        p_low = float(np.count_nonzero(sums <= w)) / sums.size
        p_high = float(np.count_nonzero(sums >= w)) / sums.size
        p = min(1.0, 2.0 * min(p_low, p_high))
        return TestResult("wilcoxon", w, p, f"exact enumeration, m={m}")

    mu = m * (m + 1) / 4.0
    counts = {}
    for d in diffs:
        key = abs(d)
        counts[key] = counts.get(key, 0) + 1
    tie_term = sum(t**3 - t for t in counts.values())
    sigma2 = m * (m + 1) * (2 * m + 1) / 24.0 - tie_term / 48.0
    if sigma2 <= 0:  # all |differences| tied at one magnitude and m huge
        sigma2 = m * (m + 1) * (2 * m + 1) / 24.0
    z = (w - mu) / math.sqrt(sigma2)
    p = min(1.0, 2.0 * float(norm.sf(abs(z))))
    return TestResult("wilcoxon", w, p, f"normal approximation, m={m}")


# -- results files -----------------------------------------------------------

SCORES_HEADER = ["dataset", "strategy", "classifier", "regressor",
                 "fold", "instance", "rho", "predicted", "actual"]
SUMMARY_HEADER = ["dataset", "strategy", "classifier", "regressor",
                  "min", "q1", "median", "q3", "max"]


def write_scores_csv(path, rows):
    """rows: (dataset, strategy, classifier, regressor, InstanceScore)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCORES_HEADER)
        for dataset, strategy, clf, reg, s in rows:
            writer.writerow([dataset, strategy, clf, reg, s.fold, s.instance_id,
                             repr(float(s.rho)), s.predicted, s.actual])


def read_scores_csv(path):
    """Inverse of write_scores_csv."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SCORES_HEADER:
            raise InvalidSpec(f"{path}: not a per-instance results file")
        for row in reader:
            dataset, strategy, clf, reg, fold, instance, rho, predicted, actual = row
            out.append((dataset, strategy, clf, reg,
                        InstanceScore(instance, int(fold), float(rho), predicted, actual)))
    return out


def write_summary_csv(path, rows):
    """rows: (dataset, strategy, classifier, regressor, QuartileSummary)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for dataset, strategy, clf, reg, q in rows:
            writer.writerow([dataset, strategy, clf, reg,
                             repr(float(q.min)), repr(float(q.q1)), repr(float(q.median)),
                             repr(float(q.q3)), repr(float(q.max))])


def read_summary_csv(path):
    """Inverse of write_summary_csv."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SUMMARY_HEADER:
            raise InvalidSpec(f"{path}: not a summary file")
        for row in reader:
            dataset, strategy, clf, reg = row[:4]
            q = QuartileSummary(*(float(v) for v in row[4:9]))
            out.append((dataset, strategy, clf, reg, q))
    return out
