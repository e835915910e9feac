"""Extraction manifests: which images, which encoder, which corruption.

Parsing is strict (unknown keys are an error) to match the valuation
engine's config conventions; a typo in a corruption plan should fail
loudly rather than silently extract clean embeddings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .corrupt import validate_blur_kernel, validate_noise_level


@dataclass
class CorruptionPlan:
    noise: float = 0.0
    blur: int = 0

    def __post_init__(self) -> None:
        self.noise = validate_noise_level(self.noise)
        self.blur = validate_blur_kernel(self.blur)


@dataclass
class Manifest:
    image_dir: Path
    checkpoint: Path
    output_path: Path
    output_format: str = "csv"
    truth_path: Path | None = None
    seed: int = 0
    batch_size: int = 16
    default_plan: CorruptionPlan = field(default_factory=CorruptionPlan)
    per_image: dict[str, CorruptionPlan] = field(default_factory=dict)

    def plan_for(self, name: str) -> CorruptionPlan:
        return self.per_image.get(name, self.default_plan)

    def resolved_truth_path(self) -> Path:
        return self.truth_path or Path(f"{self.output_path}.truth.json")


def _check_keys(doc: Mapping, allowed: set[str], context: str) -> None:
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ValueError(f"{context}: unknown keys {unknown}; allowed keys are {sorted(allowed)}")


def _parse_plan(doc: Mapping, context: str) -> CorruptionPlan:
    _check_keys(doc, {"noise", "blur"}, context)
    return CorruptionPlan(noise=float(doc.get("noise", 0.0)), blur=int(doc.get("blur", 0)))


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: manifest must be a JSON object")
    _check_keys(doc, {"image_dir", "encoder", "output", "seed", "batch_size", "corruption"}, str(path))

    encoder = doc.get("encoder", {})
    _check_keys(encoder, {"checkpoint"}, f"{path}:encoder")
    if "checkpoint" not in encoder:
        raise ValueError(f"{path}: encoder.checkpoint is required")

    output = doc.get("output", {})
    _check_keys(output, {"path", "format", "truth"}, f"{path}:output")
    if "path" not in output:
        raise ValueError(f"{path}: output.path is required")
    fmt = str(output.get("format", "csv"))
    if fmt not in ("csv", "exmf"):
        raise ValueError(f"{path}: output.format must be 'csv' or 'exmf', got {fmt!r}")

    corruption = doc.get("corruption", {})
    _check_keys(corruption, {"default", "per_image"}, f"{path}:corruption")
    default_plan = _parse_plan(corruption.get("default", {}), f"{path}:corruption.default")
    per_image = {
        str(name): _parse_plan(plan, f"{path}:corruption.per_image[{name}]")
        for name, plan in corruption.get("per_image", {}).items()
    }

    if "image_dir" not in doc:
        raise ValueError(f"{path}: image_dir is required")
    batch_size = int(doc.get("batch_size", 16))
    if batch_size < 1:
        raise ValueError(f"{path}: batch_size must be positive")

    base = path.parent
    def _resolve(p: str) -> Path:
        candidate = Path(p)
        return candidate if candidate.is_absolute() else base / candidate

    return Manifest(
        image_dir=_resolve(str(doc["image_dir"])),
        checkpoint=_resolve(str(encoder["checkpoint"])),
        output_path=_resolve(str(output["path"])),
        output_format=fmt,
        truth_path=_resolve(str(output["truth"])) if "truth" in output else None,
        seed=int(doc.get("seed", 0)),
        batch_size=batch_size,
        default_plan=default_plan,
        per_image=per_image,
    )
