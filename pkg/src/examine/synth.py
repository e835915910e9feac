"""Synthetic clustered embeddings and the additive corruption protocol.

The generator produces near-linearly-separable class clusters (orthonormal
class means plus isotropic noise), then degrades chosen rows with Gaussian
noise whose mean is the corruption level ``delta`` and whose standard
deviation is ``delta * m``, ``m`` being the scalar mean of all matrix
entries.  The per-item level is kept as ground truth so ranking quality
can be validated without real labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .linalg import FeatureMatrix
from .utility import LabeledSet

DEFAULT_LEVELS = (0.1, 0.3, 0.5, 1.0)


@dataclass
class CorruptionSpec:
    """How many items to corrupt, and how hard."""

    levels: tuple[float, ...] = DEFAULT_LEVELS
    per_level: int = 100
    clean: int = 100

    def __post_init__(self) -> None:
        self.levels = tuple(float(v) for v in self.levels)
        if any(v < 0 for v in self.levels):
            raise ValidationError("corruption levels must be nonnegative")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValidationError("corruption levels must be strictly increasing")
        if self.per_level < 0 or self.clean < 0:
            raise ValidationError("counts must be nonnegative")
        if self.total < 2:
            raise ValidationError("need at least 2 items in total")

    @property
    def total(self) -> int:
        return self.clean + self.per_level * len(self.levels)


@dataclass(eq=False)
class AssessedSet:
    """Features to be scored, with hidden labels and ground-truth levels.

    ``labels`` are never consulted by unsupervised scoring; they exist for
    the downstream accuracy curves.  ``corruption_level`` is 0 for clean
    items and the applied ``delta`` otherwise.
    """

    features: FeatureMatrix
    labels: np.ndarray
    n_classes: int
    corruption_level: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.corruption_level = np.asarray(self.corruption_level, dtype=np.float64)
        n = self.features.n
        if self.labels.shape != (n,) or self.corruption_level.shape != (n,):
            raise ValidationError("labels and corruption levels must align with the rows")
        if (self.corruption_level < 0).any():
            raise ValidationError("corruption levels must be nonnegative")

    @property
    def n(self) -> int:
        return self.features.n

    def labeled(self) -> LabeledSet:
        return LabeledSet(self.features, self.labels, self.n_classes)

    def levels_by_id(self) -> dict[str, float]:
        return {i: float(v) for i, v in zip(self.features.ids, self.corruption_level)}


def class_means(k: int, dim: int) -> np.ndarray:
    """K mutually orthogonal unit vectors with class-distinct footprints.

    Each class mean is the normalized indicator of its own block of
    coordinates; block widths grow with the class index, so classes
    differ in how strongly they project onto the all-ones direction.
    That keeps the geometry deterministic and gives every class a
    positive, distinct alignment with additive corruption.
    """
    if k < 2:
        raise ValidationError("need at least 2 classes")
    if dim < k:
        raise ValidationError(f"dim={dim} cannot host {k} orthogonal class means")
    shares = np.arange(1, k + 1, dtype=float) ** 2
    widths = np.maximum(1, np.floor(dim * shares / shares.sum()).astype(int))
    while widths.sum() > dim:
        widths[np.argmax(widths)] -= 1
    widths[-1] += dim - widths.sum()
    means = np.zeros((k, dim))
    start = 0
    for c, width in enumerate(widths):
        means[c, start : start + width] = 1.0 / np.sqrt(width)
        start += width
    return means


def gen_clusters(
    n_per_class: int,
    k: int,
    dim: int,
    intra_std: float,
    seed,
    id_prefix: str = "p",
) -> LabeledSet:
    """Class clusters around k mutually orthogonal unit means in R^dim.

    Means come from ``class_means`` (deterministic block indicators);
    points are mean + isotropic Gaussian noise with standard deviation
    ``intra_std``, reproducible from the seed.
    """
    if n_per_class < 1:
        raise ValidationError("need at least one point per class")
    if intra_std < 0:
        raise ValidationError("intra_std must be nonnegative")
    means = class_means(k, dim)
    rng = np.random.default_rng(seed)
    blocks = []
    for c in range(k):
        noise = rng.normal(size=(n_per_class, dim))
        blocks.append(means[c] + intra_std * noise)
    data = np.vstack(blocks)
    labels = np.repeat(np.arange(k), n_per_class)
    ids = [f"{id_prefix}{i:05d}" for i in range(data.shape[0])]
    return LabeledSet(FeatureMatrix(ids, data), labels, k)


def corrupt_gaussian(
    features: FeatureMatrix,
    indices: Sequence[int],
    level: float,
    seed,
) -> FeatureMatrix:
    """Add noise with mean ``level`` and std ``level * |m|`` to chosen rows.

    ``m`` is the scalar mean over all entries of ``features`` (taken in
    magnitude, since a scale cannot be negative).  Unselected rows are
    bit-identical to the input; ``level == 0`` returns an exact copy.
    """
    if level < 0:
        raise ValidationError("corruption level must be nonnegative")
    idx = sorted(set(int(i) for i in indices))
    if idx and (idx[0] < 0 or idx[-1] >= features.n):
        raise ValidationError(f"corruption index out of range for {features.n} rows")
    data = features.data.copy()
    if level > 0 and idx:
        m = abs(float(features.data.mean()))
        rng = np.random.default_rng(seed)
        noise = rng.normal(loc=level, scale=level * m, size=(len(idx), features.dim))
        data[idx] += noise
    return FeatureMatrix(features.ids, data)


def sample_clusters(
    total: int,
    classes: int,
    dim: int,
    intra_std: float,
    seed,
    id_prefix: str = "p",
) -> LabeledSet:
    """Exactly ``total`` cluster points with classes interleaved row by row.

    Any contiguous run of rows is class-balanced to within one item,
    which keeps downstream slices (corruption levels, curve prefixes)
    from confounding with class identity.
    """
    if total < 1:
        raise ValidationError("need at least one point")
    n_per_class = -(-total // classes)
    base = gen_clusters(n_per_class, classes, dim, intra_std, seed, id_prefix=id_prefix)
    order = [c * n_per_class + j for j in range(n_per_class) for c in range(classes)][:total]
    ids = [base.features.ids[i] for i in order]
    return LabeledSet(FeatureMatrix(ids, base.features.data[order]), base.labels[order], classes)


DEFAULT_CLASSES = 10
DEFAULT_DIM = 32
DEFAULT_INTRA_STD = 0.3


def make_assessed_set(
    spec: CorruptionSpec,
    classes: int = DEFAULT_CLASSES,
    dim: int = DEFAULT_DIM,
    intra_std: float = DEFAULT_INTRA_STD,
    seed=0,
    id_prefix: str = "a",
) -> AssessedSet:
    """Generate clusters and corrupt them per the spec, tracking ground truth.

    Rows are interleaved across classes before levels are assigned, so
    each corruption level is class-balanced to within one item.  Every
    level's noise is derived from the clean data (one ``corrupt_gaussian``
    call per level on the uncorrupted matrix), making levels independent
    of each other.
    """
    total = spec.total
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = seq.spawn(1 + len(spec.levels))
    base = sample_clusters(total, classes, dim, intra_std, children[0], id_prefix=id_prefix)
    ids = list(base.features.ids)
    data = base.features.data.copy()
    labels = base.labels
    clean = FeatureMatrix(ids, data)

    corruption = np.zeros(total)
    pos = spec.clean
    for level, child in zip(spec.levels, children[1:]):
        idx = list(range(pos, pos + spec.per_level))
        corrupted = corrupt_gaussian(clean, idx, level, child)
        data[idx] = corrupted.data[idx]
        corruption[idx] = level
        pos += spec.per_level
    return AssessedSet(FeatureMatrix(ids, data), labels, classes, corruption)
