"""File formats: feature matrices (CSV and EXMF), reports, and run configs.

Feature files carry an optional label column; its presence decides
whether reading yields a ``FeatureMatrix`` or a ``LabeledSet``.  The
binary EXMF layout stores doubles end to end, because the spectral
tolerances downstream need full precision:

    magic "EXMF" | u32 version | u32 flags (bit 0: labels)
    u64 N | u64 C
    N x (u32 byte-length + UTF-8 id)
    N x i32 labels              (only if flagged)
    N*C little-endian f64, row-major

Writers are deterministic byte-for-byte given identical inputs; the only
timestamp lives in a dedicated ``created_at`` JSON field.  Config parsing
is strict: unknown keys are an error, listed by name.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import FormatError, ValidationError
from .experiments import CurveConfig, CurvePoint, CurveSeries, DistributionSummary
from .linalg import FeatureMatrix
from .scoring import ScoreReport
from .synth import DEFAULT_CLASSES, DEFAULT_DIM, DEFAULT_INTRA_STD, CorruptionSpec
from .utility import LabeledSet, TrainConfig
from .valuation import TmcConfig

EXMF_MAGIC = b"EXMF"
EXMF_VERSION = 1
_FLAG_LABELS = 1
SCHEMA_VERSION = 1

FeatureLike = FeatureMatrix | LabeledSet


def _detect_format(path: Path, explicit: str | None) -> str:
    if explicit:
        if explicit not in ("csv", "exmf"):
            raise ValidationError(f"unknown feature format {explicit!r}")
        return explicit
    return "exmf" if path.suffix == ".exmf" else "csv"


# ---------------------------------------------------------------------------
# feature matrices


def write_features(features: FeatureLike, path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    fmt = _detect_format(path, format)
    if fmt == "csv":
        _write_features_csv(features, path)
    else:
        _write_features_exmf(features, path)


def read_features(path: str | Path, format: str | None = None) -> FeatureLike:
    path = Path(path)
    fmt = _detect_format(path, format)
    if fmt == "csv":
        return _read_features_csv(path)
    return _read_features_exmf(path)


def as_matrix(features: FeatureLike) -> FeatureMatrix:
    """The bare feature matrix of either feature kind."""
    return features.features if isinstance(features, LabeledSet) else features


def _split(features: FeatureLike) -> tuple[FeatureMatrix, np.ndarray | None]:
    if isinstance(features, LabeledSet):
        return features.features, features.labels
    return features, None


def _infer_classes(labels: np.ndarray) -> int:
    # Files carry no class count; recover it from the labels with the
    # type's minimum of two classes as the floor.
    return max(2, int(labels.max()) + 1) if labels.size else 2


def _write_features_csv(features: FeatureLike, path: Path) -> None:
    matrix, labels = _split(features)
    header = ["id"] + (["label"] if labels is not None else []) + [
        f"f{j}" for j in range(matrix.dim)
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, item_id in enumerate(matrix.ids):
            row = [item_id]
            if labels is not None:
                row.append(str(int(labels[i])))
            row.extend(repr(float(v)) for v in matrix.data[i])
            writer.writerow(row)


def _read_features_csv(path: Path) -> FeatureLike:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if not header or header[0] != "id":
            raise FormatError(f"{path}: header must start with 'id'")
        has_labels = len(header) > 1 and header[1] == "label"
        first_feature = 2 if has_labels else 1
        expected = ["f" + str(j) for j in range(len(header) - first_feature)]
        if header[first_feature:] != expected:
            raise FormatError(f"{path}: feature columns must be f0..f{len(expected) - 1} in order")
        dim = len(expected)
        if dim == 0:
            raise FormatError(f"{path}: no feature columns")

        ids: list[str] = []
        labels: list[int] = []
        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValidationError(
                    f"{path}: row {line_no} has {len(row)} fields, expected {len(header)}"
                )
            ids.append(row[0])
            if has_labels:
                try:
                    labels.append(int(row[1]))
                except ValueError:
                    raise ValidationError(f"{path}: row {line_no} has non-integer label {row[1]!r}")
            try:
                rows.append([float(v) for v in row[first_feature:]])
            except ValueError:
                raise ValidationError(f"{path}: row {line_no} has a non-numeric feature")
    matrix = FeatureMatrix(ids, np.array(rows, dtype=np.float64))
    if has_labels:
        lab = np.asarray(labels, dtype=np.int64)
        return LabeledSet(matrix, lab, _infer_classes(lab))
    return matrix


def _write_features_exmf(features: FeatureLike, path: Path) -> None:
    matrix, labels = _split(features)
    flags = _FLAG_LABELS if labels is not None else 0
    parts = [
        EXMF_MAGIC,
        struct.pack("<II", EXMF_VERSION, flags),
        struct.pack("<QQ", matrix.n, matrix.dim),
    ]
    for item_id in matrix.ids:
        encoded = item_id.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
    if labels is not None:
        parts.append(labels.astype("<i4").tobytes())
    parts.append(np.ascontiguousarray(matrix.data, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


class _Cursor:
    def __init__(self, blob: bytes, path: Path) -> None:
        self.blob = blob
        self.pos = 0
        self.path = path

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.blob):
            raise FormatError(f"{self.path}: truncated file (needed {count} more bytes)")
        out = self.blob[self.pos : self.pos + count]
        self.pos += count
        return out


def _read_features_exmf(path: Path) -> FeatureLike:
    cursor = _Cursor(Path(path).read_bytes(), path)
    if cursor.take(4) != EXMF_MAGIC:
        raise FormatError(f"{path}: bad magic, not an EXMF file")
    version, flags = struct.unpack("<II", cursor.take(8))
    if version != EXMF_VERSION:
        raise FormatError(f"{path}: unsupported EXMF version {version}")
    n, dim = struct.unpack("<QQ", cursor.take(16))
    if n < 1 or dim < 1:
        raise FormatError(f"{path}: declared shape {n}x{dim} is invalid")
    ids = []
    for _ in range(n):
        (length,) = struct.unpack("<I", cursor.take(4))
        ids.append(cursor.take(length).decode("utf-8"))
    labels = None
    if flags & _FLAG_LABELS:
        labels = np.frombuffer(cursor.take(4 * n), dtype="<i4").astype(np.int64)
    data = np.frombuffer(cursor.take(8 * n * dim), dtype="<f8").reshape(n, dim)
    if cursor.pos != len(cursor.blob):
        raise FormatError(f"{path}: {len(cursor.blob) - cursor.pos} trailing bytes")
    matrix = FeatureMatrix(ids, data)
    if labels is not None:
        return LabeledSet(matrix, labels, _infer_classes(labels))
    return matrix


# ---------------------------------------------------------------------------
# reports


def _dump_json(doc: dict, path: Path) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def _load_json(path: Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return doc


def _expect_schema(doc: dict, kind: str, path: Path) -> None:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(f"{path}: unsupported schema_version {doc.get('schema_version')!r}")
    if doc.get("kind") != kind:
        raise FormatError(f"{path}: expected kind {kind!r}, got {doc.get('kind')!r}")


def write_report(report: ScoreReport, path: str | Path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "score_report",
        "method": report.method,
        "params": report.params,
        "created_at": report.created_at,
        "scores": report.scores,
        "ranking": report.ranking,
    }
    _dump_json(doc, Path(path))


def read_report(path: str | Path) -> ScoreReport:
    path = Path(path)
    doc = _load_json(path)
    _expect_schema(doc, "score_report", path)
    return ScoreReport(
        method=doc["method"],
        scores=doc["scores"],
        ranking=list(doc.get("ranking") or []),
        params=doc.get("params") or {},
        created_at=doc.get("created_at") or "",
    )


def write_curve(series: CurveSeries, path: str | Path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "curve_series",
        "method": series.method,
        "mode": series.mode,
        "order": series.order,
        "points": [
            {
                "n_selected": p.n_selected,
                "mean_accuracy": p.mean_accuracy,
                "std_accuracy": p.std_accuracy,
            }
            for p in series.points
        ],
    }
    _dump_json(doc, Path(path))


def read_curve(path: str | Path) -> CurveSeries:
    path = Path(path)
    doc = _load_json(path)
    _expect_schema(doc, "curve_series", path)
    points = [
        CurvePoint(int(p["n_selected"]), float(p["mean_accuracy"]), float(p["std_accuracy"]))
        for p in doc["points"]
    ]
    return CurveSeries(method=doc["method"], mode=doc["mode"], order=doc["order"], points=points)


def curve_to_csv(series: CurveSeries, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n_selected", "mean_accuracy", "std_accuracy"])
        for p in series.points:
            writer.writerow([p.n_selected, repr(p.mean_accuracy), repr(p.std_accuracy)])


def write_distribution_summary(summary: DistributionSummary, path: str | Path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "distribution_summary",
        "bin_edges": summary.bin_edges,
        "groups": [
            {
                "level": g.level,
                "count": g.count,
                "mean": g.mean,
                "std": g.std,
                "min": g.min,
                "max": g.max,
                "histogram": g.histogram,
            }
            for g in summary.groups
        ],
        "auc": [
            {"level_a": a, "level_b": b, "auc": v} for (a, b), v in sorted(summary.auc.items())
        ],
    }
    _dump_json(doc, Path(path))


def distribution_summary_to_csv(summary: DistributionSummary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        bins = len(summary.bin_edges) - 1
        writer.writerow(
            ["level", "count", "mean", "std", "min", "max"] + [f"h{j}" for j in range(bins)]
        )
        for g in summary.groups:
            writer.writerow(
                [repr(g.level), g.count, repr(g.mean), repr(g.std), repr(g.min), repr(g.max)]
                + list(g.histogram)
            )


def write_ground_truth(levels_by_id: Mapping[str, float], path: str | Path, params: dict | None = None) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "ground_truth",
        "corruption_level": {str(k): float(v) for k, v in levels_by_id.items()},
        "params": params or {},
    }
    _dump_json(doc, Path(path))


def read_ground_truth(path: str | Path) -> dict[str, float]:
    path = Path(path)
    doc = _load_json(path)
    _expect_schema(doc, "ground_truth", path)
    return {str(k): float(v) for k, v in doc["corruption_level"].items()}


# ---------------------------------------------------------------------------
# run configuration


def _check_keys(doc: Mapping[str, Any], allowed: set[str], context: str) -> None:
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ValidationError(f"{context}: unknown keys {unknown}; allowed keys are {sorted(allowed)}")


def _parse_train(doc: Mapping[str, Any], context: str) -> TrainConfig:
    _check_keys(doc, {"learning_rate", "iterations", "l2", "seed"}, context)
    return TrainConfig(
        learning_rate=float(doc.get("learning_rate", 0.1)),
        iterations=int(doc.get("iterations", 500)),
        l2=float(doc.get("l2", 1e-4)),
        seed=int(doc.get("seed", 0)),
    )


def _parse_tmc(doc: Mapping[str, Any], context: str) -> TmcConfig:
    _check_keys(
        doc,
        {"max_permutations", "truncation_tolerance", "convergence_threshold", "convergence_window", "seed"},
        context,
    )
    return TmcConfig(
        max_permutations=int(doc.get("max_permutations", 2000)),
        truncation_tolerance=float(doc.get("truncation_tolerance", 0.01)),
        convergence_threshold=float(doc.get("convergence_threshold", 0.05)),
        convergence_window=int(doc.get("convergence_window", 100)),
        seed=int(doc.get("seed", 0)),
    )


@dataclass
class SynthConfig:
    """Parameters for generating an assessed set from the CLI."""

    spec: CorruptionSpec
    classes: int = DEFAULT_CLASSES
    dim: int = DEFAULT_DIM
    intra_std: float = DEFAULT_INTRA_STD
    seed: int = 0


def read_synth_config(path: str | Path) -> SynthConfig:
    path = Path(path)
    doc = _load_json(path)
    _check_keys(
        doc, {"levels", "per_level", "clean", "classes", "dim", "intra_std", "seed"}, str(path)
    )
    spec = CorruptionSpec(
        levels=tuple(float(v) for v in doc.get("levels", CorruptionSpec().levels)),
        per_level=int(doc.get("per_level", 100)),
        clean=int(doc.get("clean", 100)),
    )
    return SynthConfig(
        spec=spec,
        classes=int(doc.get("classes", DEFAULT_CLASSES)),
        dim=int(doc.get("dim", DEFAULT_DIM)),
        intra_std=float(doc.get("intra_std", DEFAULT_INTRA_STD)),
        seed=int(doc.get("seed", 0)),
    )


def read_curve_config(path: str | Path, mode: str) -> CurveConfig:
    path = Path(path)
    doc = _load_json(path)
    _check_keys(doc, {"order", "step", "seeds", "train"}, str(path))
    return CurveConfig(
        mode=mode,
        order=str(doc.get("order", "high_first")),
        step=int(doc.get("step", 5)),
        seeds=tuple(int(s) for s in doc.get("seeds", (0, 1, 2, 3, 4))),
        train=_parse_train(doc.get("train", {}), f"{path}:train"),
    )


@dataclass
class BenchConfig:
    """Parameters for the timing benchmark."""

    n_items: int = 200
    dim: int = 64
    classes: int = DEFAULT_CLASSES
    intra_std: float = DEFAULT_INTRA_STD
    validation_size: int = 500
    methods: tuple[str, ...] = ("examine", "loo", "shapley_tmc", "random")
    seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    tmc: TmcConfig = field(default_factory=TmcConfig)


def read_bench_config(path: str | Path) -> BenchConfig:
    path = Path(path)
    doc = _load_json(path)
    _check_keys(
        doc,
        {"n_items", "dim", "classes", "intra_std", "validation_size", "methods", "seed", "train", "tmc"},
        str(path),
    )
    base = BenchConfig()
    return BenchConfig(
        n_items=int(doc.get("n_items", base.n_items)),
        dim=int(doc.get("dim", base.dim)),
        classes=int(doc.get("classes", base.classes)),
        intra_std=float(doc.get("intra_std", base.intra_std)),
        validation_size=int(doc.get("validation_size", base.validation_size)),
        methods=tuple(str(m) for m in doc.get("methods", base.methods)),
        seed=int(doc.get("seed", 0)),
        train=_parse_train(doc.get("train", {}), f"{path}:train"),
        tmc=_parse_tmc(doc.get("tmc", {}), f"{path}:tmc"),
    )
