"""Image preprocessing for the vision encoder.

Bilinear resize to the model's target size, then per-channel
normalization with the constants from the bundle's preprocess config.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from PIL import Image

from ..capture import CroppedImage


@dataclass(frozen=True)
class PreprocessConfig:
    target_size: int = 224
    mean: tuple[float, float, float] = (0.5, 0.5, 0.5)
    std: tuple[float, float, float] = (0.5, 0.5, 0.5)
    # "conditioned" bundles get the prompt tokenized into the decoder
    # prefix; "logged" bundles (captioning-only) record it only.
    prompt_mode: str = "logged"

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessConfig":
        return cls(
            target_size=int(d.get("target_size", 224)),
            mean=tuple(d.get("mean", (0.5, 0.5, 0.5))),
            std=tuple(d.get("std", (0.5, 0.5, 0.5))),
            prompt_mode=d.get("prompt_mode", "logged"),
        )


@dataclass(frozen=True)
class PreprocessedImage:
    tensor: np.ndarray  # (3, target, target) float32
    provenance: Optional[str] = None


def preprocess(
    img: CroppedImage | np.ndarray,
    cfg: PreprocessConfig,
    provenance: Optional[str] = None,
) -> PreprocessedImage:
    pixels = img.pixels if isinstance(img, CroppedImage) else np.asarray(img)
    if pixels.size == 0:
        raise ValueError("cannot preprocess an empty image")
    size = cfg.target_size
    if pixels.shape[0] != size or pixels.shape[1] != size:
        pil = Image.fromarray(pixels).resize((size, size), Image.BILINEAR)
        pixels = np.asarray(pil)
    scaled = pixels.astype(np.float32) / 255.0
    mean = np.asarray(cfg.mean, dtype=np.float32).reshape(1, 1, 3)
    std = np.asarray(cfg.std, dtype=np.float32).reshape(1, 1, 3)
    tensor = ((scaled - mean) / std).transpose(2, 0, 1)
    return PreprocessedImage(tensor=np.ascontiguousarray(tensor), provenance=provenance)
