"""Patch-transformer image encoder consumed as a pretrained checkpoint.

The architecture mirrors the encoder half of a masked-autoencoder setup:
patchify, linear patch embedding, fixed sin-cos positional embeddings,
pre-norm transformer blocks, mean pooling over patch tokens.  No training
code lives here; weights arrive via checkpoint files.  Because this build
environment cannot download published checkpoints, ``make_demo_checkpoint``
synthesizes a fixed-seed stand-in with the same format, which is enough to
exercise the full corruption/embedding/export pipeline deterministically.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import torch
from torch import nn


@dataclass
class EncoderConfig:
    image_size: int = 32
    patch_size: int = 8
    width: int = 48
    depth: int = 2
    heads: int = 4
    mlp_ratio: float = 2.0

    def __post_init__(self) -> None:
        if self.image_size % self.patch_size != 0:
            raise ValueError("image_size must be a multiple of patch_size")
        if self.width % self.heads != 0:
            raise ValueError("width must be a multiple of heads")


def _sincos_positions(n_tokens: int, width: int) -> torch.Tensor:
    """Fixed sinusoidal position table, one row per patch token."""
    position = torch.arange(n_tokens, dtype=torch.float64).unsqueeze(1)
    half = width // 2
    freq = torch.exp(torch.arange(half, dtype=torch.float64) * (-math.log(10000.0) / max(half - 1, 1)))
    table = torch.zeros(n_tokens, width, dtype=torch.float64)
    table[:, 0::2] = torch.sin(position * freq)[:, : (width + 1) // 2]
    table[:, 1::2] = torch.cos(position * freq)[:, : width // 2]
    return table.to(torch.float32)


class _Block(nn.Module):
    def __init__(self, cfg: EncoderConfig) -> None:
        super().__init__()
        self.norm1 = nn.LayerNorm(cfg.width)
        self.attn = nn.MultiheadAttention(cfg.width, cfg.heads, batch_first=True)
        self.norm2 = nn.LayerNorm(cfg.width)
        hidden = int(cfg.width * cfg.mlp_ratio)
        self.mlp = nn.Sequential(nn.Linear(cfg.width, hidden), nn.GELU(), nn.Linear(hidden, cfg.width))

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        normed = self.norm1(tokens)
        attended, _ = self.attn(normed, normed, normed, need_weights=False)
        tokens = tokens + attended
        return tokens + self.mlp(self.norm2(tokens))


class PatchEncoder(nn.Module):
    """Images (B, 3, S, S) in [0, 1]-ish range to embeddings (B, width)."""

    def __init__(self, cfg: EncoderConfig) -> None:
        super().__init__()
        self.cfg = cfg
        n_tokens = (cfg.image_size // cfg.patch_size) ** 2
        patch_dim = 3 * cfg.patch_size * cfg.patch_size
        self.embed = nn.Linear(patch_dim, cfg.width)
        self.register_buffer("positions", _sincos_positions(n_tokens, cfg.width))
        self.blocks = nn.ModuleList(_Block(cfg) for _ in range(cfg.depth))
        self.norm = nn.LayerNorm(cfg.width)

    def _patchify(self, images: torch.Tensor) -> torch.Tensor:
        b, c, h, w = images.shape
        p = self.cfg.patch_size
        patches = images.unfold(2, p, p).unfold(3, p, p)  # B, C, H/p, W/p, p, p
        patches = patches.permute(0, 2, 3, 1, 4, 5).reshape(b, -1, c * p * p)
        return patches

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        tokens = self.embed(self._patchify(images)) + self.positions
        for block in self.blocks:
            tokens = block(tokens)
        return self.norm(tokens.mean(dim=1))

    @property
    def embedding_width(self) -> int:
        return self.cfg.width


def save_checkpoint(model: PatchEncoder, path: str) -> None:
    torch.save({"config": asdict(model.cfg), "state_dict": model.state_dict()}, path)


def load_checkpoint(path: str) -> PatchEncoder:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if not isinstance(payload, dict) or "config" not in payload or "state_dict" not in payload:
        raise ValueError(f"{path}: not an encoder checkpoint (missing config/state_dict)")
    model = PatchEncoder(EncoderConfig(**payload["config"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model


def make_demo_checkpoint(path: str, seed: int = 0, cfg: EncoderConfig | None = None) -> PatchEncoder:
    """Write a deterministic stand-in checkpoint for environments without
    access to published pretrained weights."""
    cfg = cfg or EncoderConfig()
    generator = torch.Generator().manual_seed(seed)
    model = PatchEncoder(cfg)
    state = model.state_dict()
    for name, tensor in state.items():
        if tensor.dtype.is_floating_point and name != "positions":
            scale = 0.5 / math.sqrt(max(tensor.shape[-1], 1))
            state[name] = torch.randn(tensor.shape, generator=generator, dtype=tensor.dtype) * scale
    model.load_state_dict(state)
    model.eval()
    save_checkpoint(model, path)
    return model


@torch.no_grad()
def encode_batches(model: PatchEncoder, images: torch.Tensor, batch_size: int = 16) -> torch.Tensor:
    """Deterministic batched inference; single-threaded so reductions are
    reproducible across runs on the same machine."""
    previous_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        model.eval()
        chunks = [model(images[i : i + batch_size]) for i in range(0, images.shape[0], batch_size)]
        return torch.cat(chunks, dim=0)
    finally:
        torch.set_num_threads(previous_threads)
