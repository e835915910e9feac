"""Numerical check of the linear-readout property of reconstruction embeddings.

On a finite joint distribution of two views and a discrete label, the
population minimizer of the view-reconstruction loss is the conditional
expectation ``f*(x1) = E[embed(X2) | X1 = x1]``.  When the views are
conditionally independent given the label, ``f*`` factors through the
label posterior: ``f*(x1) = A.T h(x1)`` with ``h(x1) = P(Y | X1 = x1)``
and ``A[y] = E[embed(X2) | Y = y]``; when ``A`` additionally has full
row rank, a fixed linear map (its pseudo-inverse) recovers the posterior
from ``f*``.  Both identities are verified here by exact summation, with
no model training involved, so any residual is purely arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

# Singular values below this fraction of the largest count as zero when
# ranking the conditional-mean matrix.
_RANK_RTOL = 1e-10
_CI_TOL = 1e-10
_MASS_TOL = 1e-12


@dataclass(eq=False)
class DiscreteJoint:
    """Finite joint distribution P(X1, X2, Y) over d1 x d2 x k support.

    ``x2_embedding`` maps each X2 value to a vector; the default one-hot
    table makes ``E[embed(X2) | .]`` the conditional distribution itself.
    """

    p: np.ndarray
    x2_embedding: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.p = np.asarray(self.p, dtype=np.float64)
        if self.p.ndim != 3:
            raise ValidationError("joint tensor must have shape (d1, d2, k)")
        if (self.p < 0).any():
            raise ValidationError("probabilities must be nonnegative")
        if abs(float(self.p.sum()) - 1.0) > _MASS_TOL:
            raise ValidationError(f"total mass is {self.p.sum()!r}, not 1")
        if self.x2_embedding is None:
            self.x2_embedding = np.eye(self.p.shape[1])
        else:
            self.x2_embedding = np.asarray(self.x2_embedding, dtype=np.float64)
            if self.x2_embedding.shape[0] != self.p.shape[1]:
                raise ValidationError("embedding table must have one row per X2 value")

    @property
    def d1(self) -> int:
        return self.p.shape[0]

    @property
    def d2(self) -> int:
        return self.p.shape[1]

    @property
    def k(self) -> int:
        return self.p.shape[2]


@dataclass
class TheoremReport:
    """Residuals of the factorization and recovery identities.

    ``recovery_residual`` is ``None`` when the conditional-mean matrix is
    rank deficient (``a_rank < k``); the recovery identity is undefined
    there and the report flags it instead of asserting it.
    """

    reconstruction_residual: float
    recovery_residual: float | None
    a_rank: int
    ci_holds: bool

    def as_dict(self) -> dict:
        return {
            "reconstruction_residual": self.reconstruction_residual,
            "recovery_residual": self.recovery_residual,
            "a_rank": self.a_rank,
            "ci_holds": self.ci_holds,
        }


def make_ci_joint(d1: int, d2: int, k: int, seed) -> DiscreteJoint:
    """Random joint with X1 and X2 conditionally independent given Y.

    Component distributions are normalized uniform draws, so every
    probability is strictly positive.  Requires ``k < d2`` so the
    conditional-mean matrix can have full row rank.
    """
    if min(d1, d2, k) < 2:
        raise ValidationError("all support sizes must be at least 2")
    if k >= d2:
        raise ValidationError(f"need k < d2 for a full-rank readout, got k={k}, d2={d2}")
    rng = np.random.default_rng(seed)
    py = rng.random(k)
    py /= py.sum()
    px1_y = rng.random((d1, k))
    px1_y /= px1_y.sum(axis=0, keepdims=True)
    px2_y = rng.random((d2, k))
    px2_y /= px2_y.sum(axis=0, keepdims=True)
    joint = np.einsum("y,ay,by->aby", py, px1_y, px2_y)
    joint /= joint.sum()  # absorb roundoff in the mass invariant
    return DiscreteJoint(joint)


def _ci_deviation(p: np.ndarray) -> float:
    """Max deviation of P(x1, x2 | y) from P(x1|y) P(x2|y) over all cells."""
    worst = 0.0
    py = p.sum(axis=(0, 1))
    for y in range(p.shape[2]):
        if py[y] == 0:
            continue
        conditional = p[:, :, y] / py[y]
        factored = np.outer(conditional.sum(axis=1), conditional.sum(axis=0))
        worst = max(worst, float(np.abs(conditional - factored).max()))
    return worst


def verify_theorem(joint: DiscreteJoint) -> TheoremReport:
    """Evaluate both identities on ``joint`` by exact summation."""
    p = joint.p
    embed = joint.x2_embedding
    px1 = p.sum(axis=(1, 2))
    if (px1 <= 0).any():
        raise ValidationError("every X1 value needs positive marginal probability")
    py = p.sum(axis=(0, 1))
    if (py <= 0).any():
        raise ValidationError("every Y value needs positive marginal probability")

    # f*(x1) = E[embed(X2) | X1 = x1], one row per x1 value.
    f_star = (p.sum(axis=2) / px1[:, None]) @ embed
    # h(x1) = P(Y = . | X1 = x1).
    h = p.sum(axis=1) / px1[:, None]
    # A[y] = E[embed(X2) | Y = y].
    a_matrix = (p.sum(axis=0).T / py[:, None]) @ embed

    reconstruction = float(np.abs(f_star - h @ a_matrix).max())
    singular = np.linalg.svd(a_matrix, compute_uv=False)
    a_rank = int((singular > _RANK_RTOL * singular[0]).sum()) if singular.size else 0

    recovery: float | None = None
    if a_rank == joint.k:
        readout = np.linalg.pinv(a_matrix)  # the linear map recovering h from f*
        recovery = float(np.abs(f_star @ readout - h).max())

    return TheoremReport(
        reconstruction_residual=reconstruction,
        recovery_residual=recovery,
        a_rank=a_rank,
        ci_holds=_ci_deviation(p) <= _CI_TOL,
    )
