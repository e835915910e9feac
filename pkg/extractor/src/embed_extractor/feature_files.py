"""Writers for the valuation engine's interchange formats.

The engine publishes two feature-file formats (CSV with an ``id,f0..``
header and the binary EXMF layout); this module implements them
independently on the writing side.  The engine's own reader remains the
source of truth for validity, which the integration tests exercise.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

EXMF_MAGIC = b"EXMF"
EXMF_VERSION = 1


def write_features_csv(ids: Sequence[str], data: np.ndarray, path: str | Path) -> None:
    data = np.asarray(data, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id"] + [f"f{j}" for j in range(data.shape[1])])
        for item_id, row in zip(ids, data):
            writer.writerow([item_id] + [repr(float(v)) for v in row])


def write_features_exmf(ids: Sequence[str], data: np.ndarray, path: str | Path) -> None:
    data = np.asarray(data, dtype=np.float64)
    n, dim = data.shape
    parts = [
        EXMF_MAGIC,
        struct.pack("<II", EXMF_VERSION, 0),  # flags 0: no labels
        struct.pack("<QQ", n, dim),
    ]
    for item_id in ids:
        encoded = str(item_id).encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
    parts.append(np.ascontiguousarray(data, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def write_features(ids: Sequence[str], data: np.ndarray, path: str | Path, fmt: str) -> None:
    if fmt == "csv":
        write_features_csv(ids, data, path)
    elif fmt == "exmf":
        write_features_exmf(ids, data, path)
    else:
        raise ValueError(f"unknown feature format {fmt!r}")


def write_sidecar(
    levels_by_id: Mapping[str, float],
    path: str | Path,
    params: dict,
) -> None:
    doc = {
        "schema_version": 1,
        "kind": "ground_truth",
        "corruption_level": {str(k): float(v) for k, v in levels_by_id.items()},
        "params": params,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
