"""The extraction pipeline: load, corrupt, embed, export.

Images are discovered by sorted file name (ids are the file names),
resized to the encoder's input size, corrupted in pixel space per the
manifest plan, embedded in batches, and written out with a ground-truth
sidecar recording each image's corruption plan plus any skipped files.
Unreadable images are skipped with a warning rather than failing the run;
an empty usable set is an error.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .corrupt import corrupt_image
from .encoder import encode_batches, load_checkpoint
from .feature_files import write_features, write_sidecar
from .manifest import Manifest

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tif", ".tiff"}


@dataclass
class ExtractionResult:
    ids: list[str]
    embeddings: np.ndarray
    skipped: list[str]
    output_path: Path
    truth_path: Path


def _list_images(directory: Path) -> list[Path]:
    if not directory.is_dir():
        raise ValueError(f"image directory {directory} does not exist")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def _load_image(path: Path, size: int) -> torch.Tensor:
    with Image.open(path) as img:
        rgb = img.convert("RGB").resize((size, size), Image.BILINEAR)
    array = np.asarray(rgb, dtype=np.float32) / 255.0
    return torch.from_numpy(array).permute(2, 0, 1).contiguous()


def run_extraction(manifest: Manifest, log=None) -> ExtractionResult:
    log = log or (lambda msg: print(msg, file=sys.stderr))
    model = load_checkpoint(str(manifest.checkpoint))
    size = model.cfg.image_size

    candidates = _list_images(manifest.image_dir)
    ids: list[str] = []
    tensors: list[torch.Tensor] = []
    skipped: list[str] = []
    for path in candidates:
        try:
            tensors.append(_load_image(path, size))
            ids.append(path.name)
        except Exception as exc:
            skipped.append(path.name)
            log(f"warning: skipping unreadable image {path.name}: {exc}")
    if not ids:
        raise ValueError(f"no usable images in {manifest.image_dir}")

    pixel_mean = float(torch.stack(tensors).mean())
    corrupted = []
    for index, (name, tensor) in enumerate(zip(ids, tensors)):
        plan = manifest.plan_for(name)
        corrupted.append(
            corrupt_image(tensor, plan.noise, plan.blur, pixel_mean, seed=(manifest.seed, index))
        )
    batch = torch.stack(corrupted)
    embeddings = encode_batches(model, batch, manifest.batch_size).numpy().astype(np.float64)

    write_features(ids, embeddings, manifest.output_path, manifest.output_format)
    truth_path = manifest.resolved_truth_path()
    write_sidecar(
        {name: manifest.plan_for(name).noise for name in ids},
        truth_path,
        params={
            "blur_kernel": {name: manifest.plan_for(name).blur for name in ids},
            "skipped": skipped,
            "seed": manifest.seed,
            "pixel_mean": pixel_mean,
            "encoder_checkpoint": manifest.checkpoint.name,
            "embedding_width": model.embedding_width,
            "weights": "pretrained checkpoint used as-is (no fine-tuning on corrupted data)",
            "noise": "pixel gaussian, mean=level, std=level*pixel_mean; blur before noise",
        },
    )
    return ExtractionResult(
        ids=ids,
        embeddings=embeddings,
        skipped=skipped,
        output_path=manifest.output_path,
        truth_path=truth_path,
    )
