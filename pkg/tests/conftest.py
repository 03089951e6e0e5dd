from __future__ import annotations

import numpy as np
import pytest

from gazevlm.vlm.engine import VlmEngine, load_model
from gazevlm.vlm.testbundle import make_test_bundle


@pytest.fixture(scope="session")
def bundle_dir(tmp_path_factory):
    return make_test_bundle(tmp_path_factory.mktemp("bundle"), seed=0)


@pytest.fixture(scope="session")
def bundle(bundle_dir):
    return load_model(bundle_dir)


@pytest.fixture()
def engine(bundle):
    return VlmEngine(bundle)


@pytest.fixture(scope="session")
def image_folder(tmp_path_factory):
    """Ten deterministic synthetic PNGs for benchmark sweeps."""
    from PIL import Image

    folder = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(7)
    for i in range(10):
        pixels = rng.integers(0, 256, (96, 128, 3), dtype=np.uint8)
        Image.fromarray(pixels).save(folder / f"img_{i:02d}.png")
    return folder
