"""Bridge from image folders to the valuation engine's feature files."""

from .corrupt import corrupt_image
from .encoder import EncoderConfig, PatchEncoder, load_checkpoint, make_demo_checkpoint
from .extract import ExtractionResult, run_extraction
from .manifest import CorruptionPlan, Manifest, load_manifest

__all__ = [
    "CorruptionPlan",
    "EncoderConfig",
    "ExtractionResult",
    "Manifest",
    "PatchEncoder",
    "corrupt_image",
    "load_checkpoint",
    "load_manifest",
    "make_demo_checkpoint",
    "run_extraction",
]
