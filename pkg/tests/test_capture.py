import os
import time

import numpy as np
import pytest
from PIL import Image

from gazevlm.capture import (
    EndOfSource,
    Frame,
    FrameSourceError,
    ImageFolderSource,
    SyntheticSource,
    crop,
    index_pattern_value,
    latch,
    persist,
)
from gazevlm.geometry import clamp_window


def make_frame(w=1280, h=720, t=0.0, pattern="index"):
    return SyntheticSource(width_px=w, height_px=h, pattern=pattern, clock=lambda: t).next_frame()


class TestLatch:
    def test_bounds_from_geometry(self):
        lat = latch(clamp_window((0.5, 0.5), (0.25, 0.25)), make_frame(), now=5.0)
        assert (lat.bounds.x0, lat.bounds.x1, lat.bounds.y0, lat.bounds.y1) == (480, 800, 270, 450)
        assert lat.shutter_time == 5.0

    def test_immutable_under_window_change(self):
        window = clamp_window((0.5, 0.5), (0.25, 0.25))
        lat = latch(window, make_frame(), now=1.0)
        bounds_before = lat.bounds
        window = clamp_window((0.9, 0.9), (0.1, 0.1))  # "resize" after latch
        assert lat.bounds == bounds_before
        assert crop(lat).source_bounds == bounds_before


class TestCrop:
    def test_uniform_frame(self):
        lat = latch(clamp_window((0.4, 0.6), (0.2, 0.3)), make_frame(pattern="gray"), 0.0)
        out = crop(lat)
        assert out.pixels.shape == (lat.bounds.height, lat.bounds.width, 3)
        assert (out.pixels == 128).all()

    def test_index_pattern_corners(self):
        frame = make_frame(w=640, h=480)
        lat = latch(clamp_window((0.3, 0.7), (0.22, 0.18)), frame, 0.0)
        out = crop(lat)
        b = lat.bounds
        assert out.pixels[0, 0, 0] == index_pattern_value(b.x0, b.y0, 640)
        assert out.pixels[-1, -1, 0] == index_pattern_value(b.x1 - 1, b.y1 - 1, 640)

    def test_full_window_strictly_inside(self):
        frame = make_frame(w=224, h=224)
        lat = latch(clamp_window((0.5, 0.5), (2.0, 2.0)), frame, 0.0)
        b = lat.bounds
        assert b.x0 > 0 and b.y0 > 0 and b.x1 < 224 and b.y1 < 224

    def test_bit_exact_region(self):
        frame = make_frame(w=320, h=200)
        lat = latch(clamp_window((0.5, 0.5), (0.5, 0.5)), frame, 0.0)
        out = crop(lat)
        b = lat.bounds
        assert (out.pixels == frame.pixels[b.y0:b.y1, b.x0:b.x1]).all()

    def test_cost_scales_with_area(self):
        # 1% vs ~100% area on a large frame: rectangular copy, no full scan
        frame = make_frame(w=4000, h=3000, pattern="gray")
        small = latch(clamp_window((0.5, 0.5), (0.1, 0.1)), frame, 0.0)
        big = latch(clamp_window((0.5, 0.5), (0.98, 0.98)), frame, 0.0)

        def best_of(lat, n=5):
            times = []
            for _ in range(n):
                t0 = time.perf_counter()
                crop(lat)
                times.append(time.perf_counter() - t0)
            return min(times)

        assert best_of(small) < best_of(big) / 2


class TestPersist:
    def test_jpeg_decodable(self, tmp_path):
        out = crop(latch(clamp_window((0.5, 0.5), (0.5, 0.5)), make_frame(640, 360), 0.0))
        path = persist(out, tmp_path / "capture_1.jpg")
        with Image.open(path) as im:
            assert im.size == (out.width_px, out.height_px)
            assert im.format == "JPEG"

    def test_lossless_png_roundtrip(self, tmp_path):
        out = crop(latch(clamp_window((0.5, 0.5), (0.3, 0.3)), make_frame(640, 360), 0.0))
        persist(out, tmp_path / "capture_2.jpg", lossless=True)
        with Image.open(tmp_path / "capture_2.png") as im:
            assert (np.asarray(im) == out.pixels).all()

    def test_unwritable_destination_no_partial_file(self, tmp_path):
        # nonexistent parent: chmod-based read-only dirs do not bind as root
        out = crop(latch(clamp_window((0.5, 0.5), (0.3, 0.3)), make_frame(64, 64), 0.0))
        missing = tmp_path / "missing" / "capture.jpg"
        with pytest.raises(OSError, match="capture.jpg"):
            persist(out, missing)
        assert not (tmp_path / "missing").exists()


class TestImageFolderSource:
    def test_cycles(self, tmp_path):
        for i, color in enumerate([(255, 0, 0), (0, 255, 0), (0, 0, 255)]):
            Image.new("RGB", (8, 8), color).save(tmp_path / f"{i}.png")
        src = ImageFolderSource(tmp_path)
        firsts = [src.next_frame().pixels[0, 0].tolist() for _ in range(4)]
        assert firsts == [[255, 0, 0], [0, 255, 0], [0, 0, 255], [255, 0, 0]]

    def test_empty_folder(self, tmp_path):
        with pytest.raises(EndOfSource):
            ImageFolderSource(tmp_path).next_frame()

    def test_corrupt_file_named_then_continues(self, tmp_path):
        (tmp_path / "a_bad.jpg").write_bytes(b"not an image")
        Image.new("RGB", (8, 8), (9, 9, 9)).save(tmp_path / "b_good.png")
        src = ImageFolderSource(tmp_path)
        with pytest.raises(FrameSourceError, match="a_bad.jpg"):
            src.next_frame()
        assert src.next_frame().pixels[0, 0].tolist() == [9, 9, 9]

    def test_no_loop_ends(self, tmp_path):
        Image.new("RGB", (8, 8)).save(tmp_path / "one.png")
        src = ImageFolderSource(tmp_path, loop=False)
        src.next_frame()
        with pytest.raises(EndOfSource):
            src.next_frame()


class TestFrameValidation:
    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            Frame(pixels=np.zeros((4, 4), dtype=np.uint8), timestamp=0.0)

    def test_rejects_bad_dtype(self):
        with pytest.raises(ValueError):
            Frame(pixels=np.zeros((4, 4, 3), dtype=np.float32), timestamp=0.0)

    def test_frame_pixels_frozen(self):
        frame = make_frame(16, 16)
        with pytest.raises(ValueError):
            frame.pixels[0, 0, 0] = 1
