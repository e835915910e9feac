"""Top singular values of a feature matrix and their leave-one-out sweep.

Scoring needs the largest singular value of an ``N x C`` embedding matrix
and, for every row ``i``, the largest singular value of the matrix with
row ``i`` deleted.  Recomputing a full SVD per deletion costs
``O(N * min(N, C)^3)``.  This module does one Gram eigendecomposition and
then resolves each deletion cheaply:

* ``C <= N``: deleting row ``f`` turns the Gram matrix ``M = F.T F`` into
  the rank-one downdate ``M - f f.T``.  Its top eigenvalue is the largest
  root of the secular equation ``1 - sum_j z_j^2 / (lam_j - mu) = 0`` with
  ``z = V.T f``, bracketed in ``[lam_2, lam_1]`` by downdate interlacing
  and solved with safeguarded bisection + Newton.
* ``N < C``: deleting row ``i`` removes row and column ``i`` of the outer
  Gram ``F F.T``; the top eigenvalue of that principal submatrix is found
  by power iteration on the masked operator, warm-started from the full
  top eigenvector with entry ``i`` zeroed.

``brute_force_loo`` recomputes every deletion with an independent full
SVD and is the reference oracle for tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError

# Secular-equation components with |z_j| below this fraction of ||z|| are
# dropped; the eigenvalue is unchanged along such directions.
_DEFLATION_RTOL = 1e-14
# Bracket below this relative width counts the top Gram eigenvalue as
# repeated and routes the row to the iteration fallback.
_REPEATED_RTOL = 1e-12
_SECULAR_RTOL = 1e-12
_SECULAR_MAX_ITER = 200
_POWER_RTOL = 1e-11
_POWER_MAX_ITER = 5000


@dataclass(eq=False)
class FeatureMatrix:
    """An ``N x C`` embedding matrix with one stable id per row.

    Entries must be finite and ids unique; both are enforced on
    construction so downstream code can assume them.
    """

    ids: tuple[str, ...]
    data: np.ndarray

    def __init__(self, ids: Sequence[str], data: np.ndarray) -> None:
        self.ids = tuple(str(i) for i in ids)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValidationError(f"feature data must be 2-D, got shape {self.data.shape}")
        n, c = self.data.shape
        if n < 1 or c < 1:
            raise ValidationError(f"feature matrix must be at least 1x1, got {n}x{c}")
        if len(self.ids) != n:
            raise ValidationError(f"got {len(self.ids)} ids for {n} rows")
        if len(set(self.ids)) != n:
            raise ValidationError("row ids must be unique")
        if not np.isfinite(self.data).all():
            raise ValidationError("feature data contains non-finite entries")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(eq=False)
class LooSigmaResult:
    """Top singular value of the full matrix and of each row-deleted one.

    Row deletion cannot increase the top singular value, so
    ``lambda_without[i] <= lambda_full`` holds entrywise.
    """

    lambda_full: float
    lambda_without: np.ndarray = field(repr=False)

    def drops(self) -> np.ndarray:
        """Per-row marginal decrease ``lambda_full - lambda_without[i]``."""
        return self.lambda_full - self.lambda_without


def top_singular_value(features: FeatureMatrix) -> float:
    """Largest singular value of the feature matrix."""
    return float(np.linalg.svd(features.data, compute_uv=False)[0])


def brute_force_loo(features: FeatureMatrix) -> LooSigmaResult:
    """Reference sweep: one independent full SVD per row deletion."""
    n = features.n
    if n < 2:
        raise ValidationError("leave-one-out needs at least 2 rows")
    lam_full = top_singular_value(features)
    out = np.empty(n)
    for i in range(n):
        reduced = np.delete(features.data, i, axis=0)
        out[i] = np.linalg.svd(reduced, compute_uv=False)[0]
    return LooSigmaResult(lam_full, out)


def loo_top_singular_values(features: FeatureMatrix) -> LooSigmaResult:
    """Top singular value after deleting each row, via one shared factorization.

    Matches ``brute_force_loo`` to relative 1e-9.  Rows the fast path
    cannot resolve (degenerate bracket, stalled iteration) silently fall
    back to a full recomputation, so the result is always complete.
    """
    n, c = features.data.shape
    if n < 2:
        raise ValidationError("leave-one-out needs at least 2 rows")
    lam_full = top_singular_value(features)
    if c <= n:
        out = _loo_gram_downdate(features.data, lam_full)
    else:
        out = _loo_masked_power(features.data, lam_full)
    # Interlacing guarantees the true values never exceed lambda_full;
    # clamp what roundoff leaks past it.
    np.minimum(out, lam_full, out=out)
    return LooSigmaResult(lam_full, out)


def _loo_gram_downdate(data: np.ndarray, lam_full: float) -> np.ndarray:
    """Leave-one-out sweep through rank-one downdates of ``F.T F``."""
    n, c = data.shape
    gram = data.T @ data
    evals, evecs = np.linalg.eigh(gram)
    evals = np.maximum(evals[::-1], 0.0)  # descending, PSD floor
    evecs = evecs[:, ::-1]
    degenerate_top = c >= 2 and (evals[0] - evals[1]) < _REPEATED_RTOL * max(evals[0], 0.0)
    coords = data @ evecs  # row i of coords is V.T f_i
    top_vec = evecs[:, 0]

    out = np.empty(n)
    for i in range(n):
        row = data[i]
        if not row.any():
            out[i] = lam_full  # deleting a zero row changes nothing
            continue
        mu = _downdated_top_eigenvalue(evals, coords[i], gram, row, top_vec, degenerate_top)
        if mu is None:
            out[i] = lam_full
        else:
            out[i] = math.sqrt(max(mu, 0.0))
    return out


def _downdated_top_eigenvalue(
    evals: np.ndarray,
    z: np.ndarray,
    gram: np.ndarray,
    row: np.ndarray,
    top_vec: np.ndarray,
    degenerate_top: bool,
) -> float | None:
    """Top eigenvalue of ``gram - row row.T``; ``None`` means "unchanged".

    ``evals`` are the eigenvalues of ``gram`` in descending order and
    ``z`` the coordinates of ``row`` in its eigenbasis.
    """
    norm_z = float(np.linalg.norm(z))
    if norm_z == 0.0:
        return None
    if degenerate_top:
        return _downdate_by_iteration(gram, row, top_vec, evals)

    active = np.abs(z) >= _DEFLATION_RTOL * norm_z
    if not active[0]:
        # The top eigendirection is untouched by the downdate.
        return None
    act_evals = evals[active]
    act_z2 = z[active] ** 2
    inactive = evals[~active]
    survivor = float(inactive[0]) if inactive.size else -math.inf

    if act_evals.size == 1:
        root = float(act_evals[0] - act_z2[0])
    else:
        root = _secular_top_root(act_evals, act_z2, lo=float(act_evals[1]), hi=float(act_evals[0]))
        if root is None:
            return _downdate_by_iteration(gram, row, top_vec, evals)
    return max(root, survivor, 0.0)


def _secular_top_root(lams: np.ndarray, z2: np.ndarray, lo: float, hi: float) -> float | None:
    """Largest root of ``1 - sum_j z2_j / (lams_j - mu)`` in ``(lo, hi)``.

    The function decreases strictly from +inf at ``lo`` to -inf at ``hi``,
    so bisection always makes progress; Newton steps are taken whenever
    they stay inside the current bracket.  Returns ``None`` only if the
    iteration cap is hit.
    """
    mu = 0.5 * (lo + hi)
    for _ in range(_SECULAR_MAX_ITER):
        d = lams - mu
        f = 1.0 - float(np.sum(z2 / d))
        if f == 0.0:
            return mu
        if f > 0.0:
            lo = mu
        else:
            hi = mu
        if hi - lo <= _SECULAR_RTOL * abs(hi):
            return 0.5 * (lo + hi)
        fprime = -float(np.sum(z2 / d**2))  # strictly negative
        nxt = mu - f / fprime
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - mu) <= _SECULAR_RTOL * max(abs(nxt), 1e-300):
            return nxt
        mu = nxt
    return None


def _downdate_by_iteration(
    gram: np.ndarray, row: np.ndarray, top_vec: np.ndarray, evals: np.ndarray
) -> float:
    """Top eigenvalue of ``gram - row row.T`` without the secular solver.

    Power iteration warm-started from the top eigenvector of ``gram``;
    stalls fall through to an exact eigendecomposition of the downdate.
    Downdate interlacing pins the answer into ``[evals[1], evals[0]]``, so
    the second eigenvalue acts as a certified floor: it rescues warm
    starts that collapse onto a non-top eigenvector of the downdate.
    """
    scale = max(float(evals[0]), 1e-300)

    def matvec(v: np.ndarray) -> np.ndarray:
        return gram @ v - row * float(row @ v)

    mu = _power_top_psd(matvec, top_vec.copy(), scale)
    if mu is None:
        reduced = gram - np.outer(row, row)
        mu = float(np.linalg.eigvalsh(reduced)[-1])
    if evals.size >= 2:
        mu = max(mu, float(evals[1]))
    return mu


def _loo_masked_power(data: np.ndarray, lam_full: float) -> np.ndarray:
    """Leave-one-out sweep on the ``N x N`` Gram when rows are short of columns.

    Deleting row ``i`` of ``F`` removes row and column ``i`` of
    ``G = F F.T``; the submatrix spectrum is reached through the masked
    operator ``v -> mask_i(G mask_i(v))`` without materializing it.
    """
    n = data.shape[0]
    gram = data @ data.T
    evals, evecs = np.linalg.eigh(gram)
    top_vec = evecs[:, -1]
    scale = max(float(evals[-1]), 1e-300)
    # Cauchy interlacing: the submatrix top eigenvalue is at least the
    # second eigenvalue of the full Gram.
    floor = float(evals[-2])

    out = np.empty(n)
    for i in range(n):
        if not data[i].any():
            out[i] = lam_full
            continue

        def matvec(v: np.ndarray, i: int = i) -> np.ndarray:
            w = gram @ v
            w[i] = 0.0
            return w

        start = top_vec.copy()
        start[i] = 0.0
        if np.linalg.norm(start) < 1e-12:
            start = np.ones(n)
            start[i] = 0.0
        mu = _power_top_psd(matvec, start, scale)
        if mu is None:
            reduced = np.delete(np.delete(gram, i, axis=0), i, axis=1)
            mu = float(np.linalg.eigvalsh(reduced)[-1])
        else:
            mu = max(mu, floor)
        out[i] = math.sqrt(max(mu, 0.0))
    return out


def _power_top_psd(matvec, start: np.ndarray, scale: float) -> float | None:
    """Power iteration for the top eigenvalue of a PSD operator.

    Converges when the eigenpair residual drops below ``_POWER_RTOL``
    relative to ``scale`` (an upper bound on the spectrum); the residual
    bound makes the Rayleigh quotient trustworthy to the same tolerance.
    Returns ``None`` if the cap is reached, letting callers fall back.
    """
    v = start / np.linalg.norm(start)
    for _ in range(_POWER_MAX_ITER):
        w = matvec(v)
        rayleigh = float(v @ w)
        if np.linalg.norm(w - rayleigh * v) <= _POWER_RTOL * scale:
            return rayleigh
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0  # operator annihilates the iterate: spectrum reached 0
        v = w / norm_w
    return None
