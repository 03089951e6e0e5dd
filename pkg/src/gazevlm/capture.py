"""Frame sources, shutter-time latching, and pixel-exact ROI cropping.

The latch snapshots the window state and frame at shutter time so the
rectangle shown to the user and the saved crop are the same pixel bounds.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
from PIL import Image

from .geometry import CameraIntrinsics, PixelBounds, WindowState, to_pixel_bounds


class EndOfSource(Exception):
    """Raised by a frame source that has no more frames to offer."""


class FrameSourceError(Exception):
    """I/O or decode failure inside a frame source; names the file."""


@dataclass(frozen=True)
class Frame:
    """One camera frame: HxWx3 uint8 RGB plus a capture timestamp."""

    pixels: np.ndarray
    timestamp: float

    def __post_init__(self) -> None:
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError(f"expected HxWx3 RGB, got shape {self.pixels.shape}")
        if self.pixels.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {self.pixels.dtype}")
        # Freeze so a latch can hold the array by reference safely.
        self.pixels.setflags(write=False)

    @property
    def width_px(self) -> int:
        return self.pixels.shape[1]

    @property
    def height_px(self) -> int:
        return self.pixels.shape[0]

    @property
    def intrinsics(self) -> CameraIntrinsics:
        return CameraIntrinsics(width_px=self.width_px, height_px=self.height_px)


@dataclass(frozen=True)
class CaptureLatch:
    """Immutable snapshot of (window, frame) taken at shutter time."""

    window: WindowState
    frame: Frame
    shutter_time: float
    bounds: PixelBounds


@dataclass(frozen=True)
class CroppedImage:
    pixels: np.ndarray
    source_bounds: PixelBounds
    source_frame_time: float

    @property
    def width_px(self) -> int:
        return self.pixels.shape[1]

    @property
    def height_px(self) -> int:
        return self.pixels.shape[0]

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.width_px}x{self.height_px}:".encode())
        h.update(np.ascontiguousarray(self.pixels).tobytes())
        return h.hexdigest()


def latch(window: WindowState, frame: Frame, now: float) -> CaptureLatch:
    """Snapshot window + frame; bounds are derived once, here."""
    bounds = to_pixel_bounds(window, frame.intrinsics)
    return CaptureLatch(window=window, frame=frame, shutter_time=now, bounds=bounds)


def crop(lat: CaptureLatch) -> CroppedImage:
    """Copy the latched rectangle out of the frame, bit-exact.

    A rectangular slice copy: cost scales with the bounds area, never the
    full frame.
    """
    b = lat.bounds
    region = np.array(lat.frame.pixels[b.y0 : b.y1, b.x0 : b.x1], copy=True)
    region.setflags(write=False)
    return CroppedImage(
        pixels=region, source_bounds=b, source_frame_time=lat.frame.timestamp
    )


def persist(
    img: CroppedImage,
    path: str | Path,
    quality: int = 90,
    lossless: bool = False,
) -> Path:
    """Write the crop as a JPEG; with lossless also write a PNG sibling.

    The write goes through a temp file and an atomic rename so a failure
    never leaves a partial capture on disk.
    """
    path = Path(path)
    pil = Image.fromarray(np.asarray(img.pixels))
    try:
        _atomic_save(pil, path, format="JPEG", quality=quality)
        if lossless:
            _atomic_save(pil, path.with_suffix(".png"), format="PNG")
    except OSError as exc:
        raise OSError(f"failed writing capture to {path}: {exc}") from exc
    return path


def _atomic_save(pil: Image.Image, path: Path, **save_kwargs) -> None:
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as fh:
            pil.save(fh, **save_kwargs)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class FrameSource:
    """Anything that can be polled for the next frame."""

    def next_frame(self) -> Frame:
        raise NotImplementedError


class ImageFolderSource(FrameSource):
    """Cycles through the images of a folder, decoding on demand.

    Corrupt files raise FrameSourceError naming the file; the source then
    continues with the next one. An exhausted or empty folder raises
    EndOfSource (immediately, when the folder holds no images).
    """

    EXTENSIONS = {".jpg", ".jpeg", ".png", ".bmp", ".webp"}

    def __init__(self, folder: str | Path, loop: bool = True, clock=None):
        self.folder = Path(folder)
        self.loop = loop
        self._clock = clock or _monotonic
        self.paths = sorted(
            p for p in self.folder.iterdir() if p.suffix.lower() in self.EXTENSIONS
        )
        self._index = 0

    def __len__(self) -> int:
        return len(self.paths)

    def next_frame(self) -> Frame:
        if not self.paths:
            raise EndOfSource(f"no images in {self.folder}")
        if self._index >= len(self.paths):
            if not self.loop:
                raise EndOfSource(f"exhausted {self.folder}")
            self._index = 0
        path = self.paths[self._index]
        self._index += 1
        try:
            with Image.open(path) as im:
                pixels = np.asarray(im.convert("RGB"))
        except Exception as exc:
            raise FrameSourceError(f"cannot decode {path}: {exc}") from exc
        return Frame(pixels=pixels, timestamp=self._clock())

    def frames(self) -> Iterator[Frame]:
        """Iterate frames, skipping (but logging via exception args) corrupt files."""
        while True:
            try:
                yield self.next_frame()
            except FrameSourceError:
                continue
            except EndOfSource:
                return


class SyntheticSource(FrameSource):
    """Procedural test-pattern frames.

    ``index`` pattern: R channel carries (x + y*W) mod 256, G carries x
    mod 256, B carries y mod 256 — lets a test read any pixel's position
    back out of its value. ``gray`` is a uniform mid-gray field.
    """

    def __init__(
        self,
        width_px: int = 640,
        height_px: int = 480,
        pattern: str = "index",
        clock=None,
    ):
        if pattern not in ("index", "gray"):
            raise ValueError(f"unknown pattern {pattern!r}")
        self.width_px = width_px
        self.height_px = height_px
        self.pattern = pattern
        self._clock = clock or _monotonic

    def next_frame(self) -> Frame:
        w, h = self.width_px, self.height_px
        if self.pattern == "gray":
            pixels = np.full((h, w, 3), 128, dtype=np.uint8)
        else:
            xs = np.arange(w, dtype=np.int64)
            ys = np.arange(h, dtype=np.int64)
            xx, yy = np.meshgrid(xs, ys)
            pixels = np.stack(
                [(xx + yy * w) % 256, xx % 256, yy % 256], axis=-1
            ).astype(np.uint8)
        return Frame(pixels=pixels, timestamp=self._clock())


def index_pattern_value(x: int, y: int, width_px: int) -> int:
    """Expected R-channel value of the synthetic index pattern at (x, y)."""
    return (x + y * width_px) % 256


def open_webcam_source(device: int = 0) -> FrameSource:
    """Optional webcam adapter; needs opencv at runtime."""
    import cv2

    class _WebcamSource(FrameSource):
        def __init__(self) -> None:
            self.cap = cv2.VideoCapture(device)
            if not self.cap.isOpened():
                raise FrameSourceError(f"cannot open webcam device {device}")

        def next_frame(self) -> Frame:
            ok, bgr = self.cap.read()
            if not ok:
                raise EndOfSource(f"webcam device {device} stopped")
            return Frame(pixels=bgr[:, :, ::-1].copy(), timestamp=_monotonic())

    return _WebcamSource()


def _monotonic() -> float:
    import time

    return time.monotonic()
