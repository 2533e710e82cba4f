"""rankfolio: predict complete performance rankings of algorithm portfolios.

Given a scenario (instances with feature vectors plus censored runtimes
per portfolio algorithm), the package trains any of ten rank-prediction
strategies, evaluates them under stratified cross-validation with
tie-corrected Spearman scoring, aggregates quartile-sum comparisons with
significance tests, and turns predicted rankings into solver schedules
whose execution can be simulated against the true runtimes.
"""

from ._kernels import active_backend
from .errors import RankfolioError, ValidationError
from .evaluation import (
    FoldAssignment,
    GridCell,
    GridResult,
    InstanceScore,
    QuartileSummary,
    TestResult,
    cross_validate,
    kruskal_wallis,
    quartiles,
    run_cross_validation,
    select_best_worst,
    spearman,
    stratified_folds,
    sum_quartile_scores,
    wilcoxon_signed_rank,
)
from .learners import (
    Dataset,
    FeatureScaler,
    LearnerSpec,
    fit_classifier,
    fit_regressor,
    predict_label,
    predict_value,
    standardize_fit,
)
from .portfolio import (
    Schedule,
    SimulationOutcome,
    schedule_equal_slices,
    schedule_proportional,
    simulate,
)
from .rankers import (
    STRATEGIES,
    LearnerCombo,
    RankPrediction,
    Strategy,
    TrainedRanker,
    decode_ranking_label,
    derive_ranking_from_scores,
    encode_ranking_label,
    predict_ranking,
    train_ranker,
)
from .scenario import (
    GeneratorSpec,
    Instance,
    PerformanceMatrix,
    PerformanceRecord,
    PredictionLevel,
    Ranking,
    Scenario,
    best_algorithm,
    censored_runtime,
    generate_synthetic,
    load_scenario,
    save_scenario,
    true_ranking,
)

__version__ = "0.1.0"
