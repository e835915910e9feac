"""Pixel-space corruption: additive Gaussian noise and Gaussian blur.

Noise for level ``delta`` is drawn per pixel from N(delta, (delta * m)^2),
``m`` being the mean pixel value over the whole image set, so heavier
levels both brighten and roughen the image.  Blur uses an odd kernel size
with the conventional sigma rule.  Levels of zero leave the tensor
untouched bit for bit.
"""

from __future__ import annotations

import numpy as np
import torch
from torchvision.transforms.v2 import functional as tvf


def validate_blur_kernel(kernel: int) -> int:
    kernel = int(kernel)
    if kernel < 0 or (kernel != 0 and kernel % 2 == 0):
        raise ValueError(f"blur kernel must be 0 or odd, got {kernel}")
    return kernel


def validate_noise_level(level: float) -> float:
    level = float(level)
    if level < 0:
        raise ValueError(f"noise level must be nonnegative, got {level}")
    return level


def corrupt_image(
    image: torch.Tensor,
    noise_level: float,
    blur_kernel: int,
    pixel_mean: float,
    seed,
) -> torch.Tensor:
    """Blur first (optics), then noise (sensor); both optional.

    ``seed`` should derive from (run seed, image index) so results do not
    depend on batching order.
    """
    noise_level = validate_noise_level(noise_level)
    blur_kernel = validate_blur_kernel(blur_kernel)
    out = image
    if blur_kernel > 0:
        out = tvf.gaussian_blur(out, [blur_kernel, blur_kernel])
    if noise_level > 0:
        rng = np.random.default_rng(seed)
        noise = rng.normal(
            loc=noise_level,
            scale=noise_level * abs(pixel_mean),
            size=tuple(out.shape),
        )
        out = out + torch.from_numpy(noise.astype(np.float32))
    return out
