"""Tests for pixel-space corruption."""

import numpy as np
import pytest
import torch

from embed_extractor.corrupt import corrupt_image, validate_blur_kernel


class TestValidation:
    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError):
            validate_blur_kernel(8)

    def test_zero_and_odd_ok(self):
        assert validate_blur_kernel(0) == 0
        assert validate_blur_kernel(9) == 9

    def test_negative_noise_rejected(self):
        image = torch.rand(3, 16, 16)
        with pytest.raises(ValueError):
            corrupt_image(image, -0.1, 0, 0.5, seed=(0, 0))


class TestCorruptImage:
    def test_no_corruption_is_bitwise_identity(self):
        image = torch.rand(3, 16, 16)
        out = corrupt_image(image, 0.0, 0, 0.5, seed=(0, 0))
        assert out is image  # untouched, not even copied

    def test_noise_mean_matches_level(self):
        torch.manual_seed(1)
        image = torch.rand(3, 64, 64)
        level, pixel_mean = 0.8, 0.5
        out = corrupt_image(image, level, 0, pixel_mean, seed=(0, 3))
        shift = float((out - image).mean())
        stderr = level * pixel_mean / np.sqrt(3 * 64 * 64)
        assert abs(shift - level) <= 4 * stderr

    def test_noise_deterministic_per_seed_tuple(self):
        image = torch.rand(3, 16, 16)
        a = corrupt_image(image, 0.5, 0, 0.4, seed=(7, 2))
        b = corrupt_image(image, 0.5, 0, 0.4, seed=(7, 2))
        c = corrupt_image(image, 0.5, 0, 0.4, seed=(7, 3))
        assert torch.equal(a, b)
        assert not torch.equal(a, c)

    def test_blur_smooths(self):
        rng = np.random.default_rng(5)
        image = torch.from_numpy(rng.random((3, 32, 32)).astype(np.float32))
        blurred = corrupt_image(image, 0.0, 9, 0.5, seed=(0, 0))
        assert float(blurred.std()) < float(image.std())
        assert blurred.shape == image.shape
