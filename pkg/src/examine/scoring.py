"""Per-item valuation reports and the spectral leave-one-out score.

The spectral score of item ``i`` is ``exp(-(lam_full - lam_without_i))``:
the exponential of how much the top singular value of the embedding
matrix drops when the item's row is removed.  Items whose removal barely
moves the spectrum score near 1; items carrying unusual directions score
lower.  No labels are involved.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .linalg import FeatureMatrix, loo_top_singular_values

METHODS = ("examine", "loo", "shapley_exact", "shapley_tmc", "random")


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def rank_ids(scores: Mapping[str, float]) -> list[str]:
    """Ids sorted by score descending, ties broken by id ascending."""
    return sorted(scores, key=lambda item_id: (-scores[item_id], item_id))


@dataclass
class ScoreReport:
    """Scores for a set of items under one valuation method.

    ``ranking`` is always the permutation of the scored ids in
    (score desc, id asc) order; it is validated on construction so a
    report read back from disk carries the same guarantee.
    """

    method: str
    scores: dict[str, float]
    ranking: list[str] = field(default_factory=list)
    params: dict[str, Any] = field(default_factory=dict)
    created_at: str = ""

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}; expected one of {METHODS}")
        self.scores = {str(k): float(v) for k, v in self.scores.items()}
        if not self.created_at:
            self.created_at = _utc_now()
        expected = rank_ids(self.scores)
        if not self.ranking:
            self.ranking = expected
        elif list(self.ranking) != expected:
            raise ValidationError("ranking is not the (score desc, id asc) order of the scores")

    def values_in_ranking_order(self) -> np.ndarray:
        return np.array([self.scores[i] for i in self.ranking])

    def params_digest(self) -> str:
        blob = json.dumps(self.params, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def examine_scores(
    features: FeatureMatrix,
    centering: bool = False,
    created_at: str | None = None,
) -> ScoreReport:
    """Score every row of ``features`` by its marginal spectral drop.

    With ``centering`` the column means are removed once before the
    sweep, so the spectrum is that of the displacement from the dataset
    mean; the flag is recorded in the report parameters.  Scores lie in
    ``(0, 1]``; a score of exactly 1 means the row is spectrally inert.
    """
    if features.n < 2:
        raise ValidationError("scoring needs at least 2 rows")
    working = features
    if centering:
        working = FeatureMatrix(features.ids, features.data - features.data.mean(axis=0))
    loo = loo_top_singular_values(working)
    values = np.exp(-loo.drops())
    scores = {item_id: float(v) for item_id, v in zip(working.ids, values)}
    params: dict[str, Any] = {
        "centering": bool(centering),
        "n": features.n,
        "dim": features.dim,
        "lambda_full": loo.lambda_full,
    }
    return ScoreReport(
        method="examine",
        scores=scores,
        params=params,
        created_at=created_at or "",
    )
