"""Supervised valuation baselines over an abstract utility function.

A utility function maps a subset of training indices to a real score and
must be deterministic with a defined empty-set value.  ``MemoizedUtility``
wraps any such callable with content-keyed caching and an evaluation
counter, because the cost model of every baseline here is "number of
model trainings".

Provided baselines:

* leave-one-out differences (n + 1 evaluations),
* the exact Shapley value by subset enumeration (hard-capped at n = 20),
* its truncated-Monte-Carlo estimate by permutation sampling,
* uniform random scores.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import SizeLimitError, ValidationError
from .scoring import ScoreReport
from .utility import LabeledSet, TrainConfig, utility_value

UtilityFn = Callable[[Sequence[int]], float]

SHAPLEY_EXACT_MAX_N = 20


class MemoizedUtility:
    """Content-keyed cache around a subset utility.

    ``evaluations`` counts cache misses, i.e. actual utility evaluations;
    two calls with the same index content (in any order) cost one.
    """

    def __init__(self, fn: UtilityFn) -> None:
        self._fn = fn
        self._cache: dict[tuple[int, ...], float] = {}
        self.evaluations = 0

    def __call__(self, indices: Sequence[int]) -> float:
        key = tuple(sorted(indices))
        try:
            return self._cache[key]
        except KeyError:
            self.evaluations += 1
            value = float(self._fn(key))
            self._cache[key] = value
            return value


def logistic_utility(train: LabeledSet, test: LabeledSet, cfg: TrainConfig) -> MemoizedUtility:
    """Memoized subset utility: accuracy of the logistic model on ``test``."""

    def fn(indices: Sequence[int]) -> float:
        if len(indices) == 0:
            return utility_value(None, test, cfg)
        return utility_value(train.subset(indices), test, cfg)

    return MemoizedUtility(fn)


@dataclass
class TmcConfig:
    """Knobs for truncated-Monte-Carlo Shapley estimation."""

    max_permutations: int = 2000
    truncation_tolerance: float = 0.01
    convergence_threshold: float = 0.05
    convergence_window: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_permutations < 1:
            raise ValidationError("max_permutations must be positive")
        if self.truncation_tolerance < 0:
            raise ValidationError("truncation_tolerance must be nonnegative")
        if self.convergence_threshold < 0:
            raise ValidationError("convergence_threshold must be nonnegative")
        if self.convergence_window < 1:
            raise ValidationError("convergence_window must be positive")
        if self.convergence_window > self.max_permutations:
            raise ValidationError("convergence_window must not exceed max_permutations")


def _resolve_ids(n: int, ids: Sequence[str] | None) -> list[str]:
    if ids is None:
        width = len(str(max(n - 1, 0)))
        return [f"{i:0{width}d}" for i in range(n)]
    ids = [str(i) for i in ids]
    if len(ids) != n:
        raise ValidationError(f"got {len(ids)} ids for {n} items")
    if len(set(ids)) != n:
        raise ValidationError("item ids must be unique")
    return ids


def loo_values(
    n: int,
    utility: UtilityFn,
    ids: Sequence[str] | None = None,
    created_at: str | None = None,
) -> ScoreReport:
    """Leave-one-out differences: value of i is V(all) - V(all minus i)."""
    if n < 1:
        raise ValidationError("need at least one item")
    item_ids = _resolve_ids(n, ids)
    everything = list(range(n))
    full = float(utility(everything))
    scores = {}
    for i in range(n):
        rest = everything[:i] + everything[i + 1 :]
        scores[item_ids[i]] = full - float(utility(rest))
    params = {"n": n, "v_full": full}
    return ScoreReport(method="loo", scores=scores, params=params, created_at=created_at or "")


def shapley_exact(
    n: int,
    utility: UtilityFn,
    ids: Sequence[str] | None = None,
    created_at: str | None = None,
) -> ScoreReport:
    """Exact Shapley values by enumerating all 2^n subsets.

    phi_i = (1/n) * sum over subsets S of the others of
    (V(S + i) - V(S)) / C(n-1, |S|); this is the unique allocation that
    is efficient, symmetric, and gives dummies zero.
    """
    if n < 1:
        raise ValidationError("need at least one item")
    if n > SHAPLEY_EXACT_MAX_N:
        raise SizeLimitError(
            f"exact Shapley enumerates 2^n subsets; n={n} exceeds the guard n <= {SHAPLEY_EXACT_MAX_N}"
        )
    item_ids = _resolve_ids(n, ids)
    values = np.empty(1 << n)
    members: list[list[int]] = [[] for _ in range(1 << n)]
    for mask in range(1 << n):
        if mask:
            low = mask & -mask
            members[mask] = members[mask ^ low] + [low.bit_length() - 1]
        values[mask] = utility(members[mask])

    inv_weight = np.array([1.0 / math.comb(n - 1, s) for s in range(n)])
    phi = np.zeros(n)
    for mask in range(1 << n):
        size = mask.bit_count()
        for i in range(n):
            bit = 1 << i
            if mask & bit:
                continue
            phi[i] += (values[mask | bit] - values[mask]) * inv_weight[size]
    phi /= n
    scores = {item_ids[i]: float(phi[i]) for i in range(n)}
    params = {"n": n, "subsets": 1 << n}
    return ScoreReport(
        method="shapley_exact", scores=scores, params=params, created_at=created_at or ""
    )


def _fisher_yates(rng: np.random.Generator, n: int) -> np.ndarray:
    perm = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def shapley_tmc(
    n: int,
    utility: UtilityFn,
    cfg: TmcConfig,
    ids: Sequence[str] | None = None,
    created_at: str | None = None,
) -> ScoreReport:
    """Truncated-Monte-Carlo Shapley estimate.

    Walks seeded random permutations accumulating marginal contributions;
    a walk is truncated (remaining marginals zero) once the prefix
    utility is within ``truncation_tolerance`` of the full-set utility.
    Running averages are the estimates.  Sampling stops early when the
    mean relative change over ``convergence_window`` permutations falls
    below ``convergence_threshold``.
    """
    if n < 1:
        raise ValidationError("need at least one item")
    item_ids = _resolve_ids(n, ids)
    rng = np.random.default_rng(cfg.seed)
    v_all = float(utility(list(range(n))))
    v_empty = float(utility([]))

    sums = np.zeros(n)
    # Oldest entry is the estimate from convergence_window permutations ago.
    snapshots: deque[np.ndarray] = deque(maxlen=cfg.convergence_window + 1)
    permutations_run = 0
    converged = False
    for t in range(1, cfg.max_permutations + 1):
        perm = _fisher_yates(rng, n)
        prefix: list[int] = []
        previous = v_empty
        contrib = np.zeros(n)
        for idx in perm:
            if abs(v_all - previous) < cfg.truncation_tolerance:
                break  # remaining marginals stay zero for this walk
            prefix.append(int(idx))
            current = float(utility(prefix))
            contrib[idx] = current - previous
            previous = current
        sums += contrib
        permutations_run = t
        means = sums / t
        snapshots.append(means.copy())
        if len(snapshots) == cfg.convergence_window + 1:
            prior = snapshots[0]
            change = float(np.mean(np.abs(means - prior) / (np.abs(means) + 1e-12)))
            if change < cfg.convergence_threshold:
                converged = True
                break
    estimates = sums / permutations_run
    scores = {item_ids[i]: float(estimates[i]) for i in range(n)}
    params = {
        "n": n,
        "seed": cfg.seed,
        "max_permutations": cfg.max_permutations,
        "permutations_run": permutations_run,
        "converged": converged,
        "truncation_tolerance": cfg.truncation_tolerance,
        "convergence_threshold": cfg.convergence_threshold,
        "convergence_window": cfg.convergence_window,
    }
    return ScoreReport(
        method="shapley_tmc", scores=scores, params=params, created_at=created_at or ""
    )


def random_values(
    n: int,
    seed: int,
    ids: Sequence[str] | None = None,
    created_at: str | None = None,
) -> ScoreReport:
    """I.i.d. uniform(0, 1) scores; the no-information baseline."""
    if n < 1:
        raise ValidationError("need at least one item")
    item_ids = _resolve_ids(n, ids)
    draws = np.random.default_rng(seed).random(n)
    scores = {item_ids[i]: float(draws[i]) for i in range(n)}
    return ScoreReport(
        method="random", scores=scores, params={"n": n, "seed": seed}, created_at=created_at or ""
    )
