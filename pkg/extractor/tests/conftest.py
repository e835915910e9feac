import numpy as np
import pytest
from PIL import Image

from embed_extractor.encoder import EncoderConfig, make_demo_checkpoint


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "demo.pt"
    make_demo_checkpoint(str(path), seed=0, cfg=EncoderConfig())
    return path


@pytest.fixture(scope="session")
def image_dir(tmp_path_factory):
    """Twenty small synthetic PNGs plus one unreadable impostor."""
    directory = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(0)
    for i in range(20):
        base = rng.integers(0, 200, size=(24, 24, 3), dtype=np.uint8)
        stripe = (np.arange(24) * (i + 1)) % 255
        base[:, :, 0] = stripe[None, :].astype(np.uint8)
        Image.fromarray(base, mode="RGB").save(directory / f"img{i:02d}.png")
    (directory / "broken.png").write_bytes(b"not an image at all")
    return directory
