"""Evaluation harness: score distributions, add/remove curves, timing.

Three views of how well a scoring method separates good data from bad:

* grouped score statistics per ground-truth corruption level, with the
  pairwise ranking AUC between groups;
* accuracy curves where items are added to (or removed from) a training
  pool in score order, with labels revealed only once an item is
  selected, and the model retrained from scratch at every step;
* wall-clock and utility-evaluation accounting across methods on one
  shared assessed set.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .scoring import ScoreReport, examine_scores, rank_ids
from .synth import (
    DEFAULT_CLASSES,
    DEFAULT_DIM,
    DEFAULT_INTRA_STD,
    AssessedSet,
    CorruptionSpec,
    make_assessed_set,
    sample_clusters,
)
from .utility import LabeledSet, TrainConfig, concat_labeled, utility_value
from .valuation import TmcConfig, logistic_utility, loo_values, random_values, shapley_tmc

CURVE_MODES = ("add", "remove")
CURVE_ORDERS = ("high_first", "low_first", "random")
HISTOGRAM_BINS = 20


@dataclass
class CurveConfig:
    mode: str
    order: str
    step: int = 5
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self) -> None:
        if self.mode not in CURVE_MODES:
            raise ValidationError(f"mode must be one of {CURVE_MODES}")
        if self.order not in CURVE_ORDERS:
            raise ValidationError(f"order must be one of {CURVE_ORDERS}")
        if self.step < 1:
            raise ValidationError("step must be positive")
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ValidationError("need at least one seed")


@dataclass
class CurvePoint:
    n_selected: int
    mean_accuracy: float
    std_accuracy: float


@dataclass
class CurveSeries:
    """Accuracy against the number of assessed items in the training set."""

    method: str
    mode: str
    order: str
    points: list[CurvePoint]

    def __post_init__(self) -> None:
        counts = [p.n_selected for p in self.points]
        diffs = np.diff(counts)
        if self.mode == "add" and not (diffs > 0).all():
            raise ValidationError("addition curves need strictly increasing counts")
        if self.mode == "remove" and not (diffs < 0).all():
            raise ValidationError("removal curves need strictly decreasing counts")
        for p in self.points:
            if not (0.0 <= p.mean_accuracy <= 1.0) or p.std_accuracy < 0:
                raise ValidationError("accuracies must lie in [0, 1]")

    def accuracies(self) -> np.ndarray:
        return np.array([p.mean_accuracy for p in self.points])

    def mid_band_mean(self) -> float:
        """Mean accuracy over the middle half of the curve.

        Endpoints are method-independent by construction, so comparisons
        between orderings happen on the interior band.
        """
        n = len(self.points)
        lo, hi = n // 4, max(n // 4 + 1, (3 * n) // 4)
        return float(np.mean([p.mean_accuracy for p in self.points[lo:hi]]))


@dataclass
class GroupStats:
    level: float
    count: int
    mean: float
    std: float
    min: float
    max: float
    histogram: list[int]


@dataclass
class DistributionSummary:
    """Per-level score statistics plus pairwise ranking AUC."""

    groups: list[GroupStats]
    bin_edges: list[float]
    auc: dict[tuple[float, float], float]


@dataclass
class MethodTiming:
    method: str
    seconds: float
    utility_evaluations: int
    n_items: int


@dataclass
class TimingReport:
    entries: list[MethodTiming]

    def seconds(self, method: str) -> float:
        for entry in self.entries:
            if entry.method == method:
                return entry.seconds
        raise KeyError(method)


def ranking_auc(winners: np.ndarray, losers: np.ndarray) -> float:
    """Probability that a random 'winner' outranks a random 'loser'."""
    winners = np.asarray(winners, dtype=float)
    losers = np.asarray(losers, dtype=float)
    greater = (winners[:, None] > losers[None, :]).sum()
    equal = (winners[:, None] == losers[None, :]).sum()
    return float((greater + 0.5 * equal) / (winners.size * losers.size))


def _scores_for(assessed: AssessedSet, scores: ScoreReport) -> np.ndarray:
    missing = [i for i in assessed.features.ids if i not in scores.scores]
    if missing:
        raise ValidationError(f"scores missing {len(missing)} assessed ids, e.g. {missing[0]!r}")
    return np.array([scores.scores[i] for i in assessed.features.ids])


def score_distribution_report(assessed: AssessedSet, scores: ScoreReport) -> DistributionSummary:
    """Group scores by ground-truth corruption level.

    Histograms use 20 fixed bins on (0, 1]; scores outside that range
    still contribute to the moments but fall off the histogram.
    """
    values = _scores_for(assessed, scores)
    edges = np.linspace(0.0, 1.0, HISTOGRAM_BINS + 1)
    levels = sorted(set(float(v) for v in assessed.corruption_level))
    groups = []
    by_level: dict[float, np.ndarray] = {}
    for level in levels:
        vals = values[assessed.corruption_level == level]
        by_level[level] = vals
        hist, _ = np.histogram(vals, bins=edges)
        groups.append(
            GroupStats(
                level=level,
                count=int(vals.size),
                mean=float(vals.mean()),
                std=float(vals.std()),
                min=float(vals.min()),
                max=float(vals.max()),
                histogram=[int(c) for c in hist],
            )
        )
    auc = {}
    for i, low in enumerate(levels):
        for high in levels[i + 1 :]:
            auc[(low, high)] = ranking_auc(by_level[low], by_level[high])
    return DistributionSummary(groups=groups, bin_edges=[float(e) for e in edges], auc=auc)


def _selection_order(assessed: AssessedSet, scores: ScoreReport, order: str, seed: int) -> list[str]:
    ids = list(assessed.features.ids)
    if order == "high_first":
        values = _scores_for(assessed, scores)
        return rank_ids({i: float(s) for i, s in zip(ids, values)})
    if order == "low_first":
        _scores_for(assessed, scores)  # coverage check
        return sorted(ids, key=lambda item_id: (scores.scores[item_id], item_id))
    rng = np.random.default_rng(seed)
    shuffled = sorted(ids)
    return [shuffled[i] for i in rng.permutation(len(shuffled))]


def _index_of(assessed: AssessedSet) -> dict[str, int]:
    return {item_id: i for i, item_id in enumerate(assessed.features.ids)}


def _addition_counts(n: int, step: int) -> list[int]:
    counts = list(range(0, n + 1, step))
    if counts[-1] != n:
        counts.append(n)
    return counts


def _removal_counts(n: int, step: int) -> list[int]:
    counts = []
    remaining = n
    while remaining >= 1:
        counts.append(remaining)
        remaining -= step
    return counts


def run_addition_curve(
    clean_train: LabeledSet,
    assessed: AssessedSet,
    validation: LabeledSet,
    scores: ScoreReport,
    cfg: CurveConfig,
) -> CurveSeries:
    """Grow the training pool from ``clean_train`` in the configured order.

    At count ``t`` the model trains on ``clean_train`` plus the first
    ``t`` assessed items (labels revealed at selection); accuracy on
    ``validation`` is averaged over the configured seeds.
    """
    if cfg.mode != "add":
        raise ValidationError("config mode must be 'add'")
    if clean_train.dim != assessed.features.dim or validation.dim != assessed.features.dim:
        raise ValidationError("feature dimensions disagree")
    index = _index_of(assessed)
    counts = _addition_counts(assessed.n, cfg.step)
    labeled_pool = assessed.labeled()
    accs = np.empty((len(cfg.seeds), len(counts)))
    for s_pos, seed in enumerate(cfg.seeds):
        order_ids = _selection_order(assessed, scores, cfg.order, seed)
        train_cfg = replace(cfg.train, seed=seed)
        for c_pos, count in enumerate(counts):
            if count == 0:
                combined = clean_train
            else:
                chosen = [index[i] for i in order_ids[:count]]
                combined = concat_labeled(clean_train, labeled_pool.subset(chosen))
            accs[s_pos, c_pos] = utility_value(combined, validation, train_cfg)
    points = [
        CurvePoint(int(c), float(accs[:, j].mean()), float(accs[:, j].std()))
        for j, c in enumerate(counts)
    ]
    return CurveSeries(method=scores.method, mode="add", order=cfg.order, points=points)


def run_removal_curve(
    assessed: AssessedSet,
    validation: LabeledSet,
    scores: ScoreReport,
    cfg: CurveConfig,
) -> CurveSeries:
    """Shrink the training pool from the full assessed set in order.

    The first point trains on everything; afterwards the highest- (or
    lowest-, or randomly-) ranked items are dropped ``step`` at a time.
    """
    if cfg.mode != "remove":
        raise ValidationError("config mode must be 'remove'")
    if validation.dim != assessed.features.dim:
        raise ValidationError("feature dimensions disagree")
    index = _index_of(assessed)
    counts = _removal_counts(assessed.n, cfg.step)
    labeled_pool = assessed.labeled()
    accs = np.empty((len(cfg.seeds), len(counts)))
    for s_pos, seed in enumerate(cfg.seeds):
        order_ids = _selection_order(assessed, scores, cfg.order, seed)
        train_cfg = replace(cfg.train, seed=seed)
        for c_pos, remaining in enumerate(counts):
            keep_ids = order_ids[assessed.n - remaining :]
            keep = [index[i] for i in keep_ids]
            accs[s_pos, c_pos] = utility_value(labeled_pool.subset(keep), validation, train_cfg)
    points = [
        CurvePoint(int(c), float(accs[:, j].mean()), float(accs[:, j].std()))
        for j, c in enumerate(counts)
    ]
    return CurveSeries(method=scores.method, mode="remove", order=cfg.order, points=points)


def benchmark_timing(
    assessed: AssessedSet,
    validation: LabeledSet,
    methods: Sequence[str],
    train_cfg: TrainConfig | None = None,
    tmc_cfg: TmcConfig | None = None,
    seed: int = 0,
) -> TimingReport:
    """Wall-clock and utility-call accounting on one shared assessed set.

    Label-free methods report zero utility evaluations; each supervised
    method gets a fresh memoized utility so counts are not shared.
    """
    if not methods:
        raise ValidationError("need at least one method")
    train_cfg = train_cfg or TrainConfig()
    tmc_cfg = tmc_cfg or TmcConfig()
    n = assessed.n
    entries = []
    for method in methods:
        started = time.perf_counter()
        evaluations = 0
        if method == "examine":
            examine_scores(assessed.features)
        elif method == "random":
            random_values(n, seed=seed, ids=assessed.features.ids)
        elif method == "loo":
            utility = logistic_utility(assessed.labeled(), validation, train_cfg)
            loo_values(n, utility, ids=assessed.features.ids)
            evaluations = utility.evaluations
        elif method == "shapley_tmc":
            utility = logistic_utility(assessed.labeled(), validation, train_cfg)
            shapley_tmc(n, utility, tmc_cfg, ids=assessed.features.ids)
            evaluations = utility.evaluations
        else:
            raise ValidationError(f"unknown timing method {method!r}")
        entries.append(MethodTiming(method, time.perf_counter() - started, evaluations, n))
    return TimingReport(entries)


def make_curve_benchmark(
    clean_train_size: int = 20,
    validation_size: int = 2000,
    spec: CorruptionSpec | None = None,
    classes: int = DEFAULT_CLASSES,
    dim: int = DEFAULT_DIM,
    intra_std: float = DEFAULT_INTRA_STD,
    seed: int = 0,
) -> tuple[LabeledSet, AssessedSet, LabeledSet]:
    """Disjoint clean-train / assessed / validation splits from one family.

    All three draw from the same cluster geometry; only the assessed
    split is corrupted.  Id prefixes keep the splits disjoint when
    concatenated during curve runs.
    """
    spec = spec or CorruptionSpec()
    seq = np.random.SeedSequence(seed)
    train_seed, assessed_seed, validation_seed = seq.spawn(3)
    clean_train = sample_clusters(clean_train_size, classes, dim, intra_std, train_seed, id_prefix="t")
    assessed = make_assessed_set(spec, classes, dim, intra_std, seed=assessed_seed, id_prefix="a")
    validation = sample_clusters(validation_size, classes, dim, intra_std, validation_seed, id_prefix="v")
    return clean_train, assessed, validation
