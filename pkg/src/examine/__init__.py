"""Label-free data valuation from embedding spectra, plus supervised baselines.

The core idea: score each item by how much the top singular value of the
embedding matrix drops when that item's row is removed, mapped through
``exp(-drop)`` so inert items score 1 and influential outliers score
lower.  Supervised baselines (leave-one-out, exact and truncated-Monte-
Carlo Shapley), a corruption-aware synthetic generator, a numerical
verifier for the linear-readout property of reconstruction embeddings,
and an experiment harness round out the package.
"""

from .errors import FormatError, SizeLimitError, ValidationError
from .experiments import (
    CurveConfig,
    CurvePoint,
    CurveSeries,
    DistributionSummary,
    TimingReport,
    benchmark_timing,
    make_curve_benchmark,
    ranking_auc,
    run_addition_curve,
    run_removal_curve,
    score_distribution_report,
)
from .linalg import (
    FeatureMatrix,
    LooSigmaResult,
    brute_force_loo,
    loo_top_singular_values,
    top_singular_value,
)
from .scoring import ScoreReport, examine_scores
from .synth import (
    AssessedSet,
    CorruptionSpec,
    corrupt_gaussian,
    gen_clusters,
    make_assessed_set,
    sample_clusters,
)
from .theory import DiscreteJoint, TheoremReport, make_ci_joint, verify_theorem
from .utility import (
    LabeledSet,
    LogisticModel,
    TrainConfig,
    accuracy,
    train,
    utility_value,
)
from .valuation import (
    MemoizedUtility,
    TmcConfig,
    logistic_utility,
    loo_values,
    random_values,
    shapley_exact,
    shapley_tmc,
)

__all__ = [
    "AssessedSet",
    "CorruptionSpec",
    "CurveConfig",
    "CurvePoint",
    "CurveSeries",
    "DiscreteJoint",
    "DistributionSummary",
    "FeatureMatrix",
    "FormatError",
    "LabeledSet",
    "LogisticModel",
    "LooSigmaResult",
    "MemoizedUtility",
    "ScoreReport",
    "SizeLimitError",
    "TheoremReport",
    "TimingReport",
    "TmcConfig",
    "TrainConfig",
    "ValidationError",
    "accuracy",
    "benchmark_timing",
    "brute_force_loo",
    "corrupt_gaussian",
    "examine_scores",
    "gen_clusters",
    "logistic_utility",
    "loo_top_singular_values",
    "loo_values",
    "make_assessed_set",
    "make_ci_joint",
    "make_curve_benchmark",
    "random_values",
    "ranking_auc",
    "run_addition_curve",
    "run_removal_curve",
    "sample_clusters",
    "score_distribution_report",
    "shapley_exact",
    "shapley_tmc",
    "top_singular_value",
    "train",
    "utility_value",
    "verify_theorem",
]
