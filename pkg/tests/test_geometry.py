import math

import pytest
from hypothesis import given, strategies as st

from gazevlm.geometry import (
    CameraIntrinsics,
    HudConfig,
    WindowState,
    clamp_window,
    fit_hud,
    gaze_to_normalized,
    normalized_to_gaze,
    to_pixel_bounds,
)

REL = 1e-9


class TestFitHud:
    def test_wide_camera_height_binds_via_width(self):
        fit = fit_hud(HudConfig(0.4, 0.3), CameraIntrinsics(1600, 900))
        assert fit.scale == pytest.approx(0.225, rel=REL)
        assert fit.span_x == pytest.approx(0.4, rel=REL)
        assert fit.span_y == pytest.approx(0.225, rel=REL)

    def test_square_fills_square_hud(self):
        fit = fit_hud(HudConfig(0.3, 0.3), CameraIntrinsics(100, 100))
        assert (fit.scale, fit.span_x, fit.span_y) == (0.3, 0.3, 0.3)

    def test_short_hud_height_binds(self):
        fit = fit_hud(HudConfig(1.0, 0.1), CameraIntrinsics(200, 100))
        assert fit.scale == pytest.approx(0.1, rel=REL)
        assert fit.span_x == pytest.approx(0.2, rel=REL)
        assert fit.span_y == pytest.approx(0.1, rel=REL)

    def test_rejects_bad_hud(self):
        with pytest.raises(ValueError):
            HudConfig(0.0, 0.3)
        with pytest.raises(ValueError):
            HudConfig(0.3, float("nan"))
        with pytest.raises(ValueError):
            CameraIntrinsics(0, 100)

    @given(
        hw=st.floats(0.05, 5.0), hh=st.floats(0.05, 5.0),
        w=st.integers(1, 4000), h=st.integers(1, 4000),
    )
    def test_preserves_aspect_and_fits(self, hw, hh, w, h):
        cam = CameraIntrinsics(w, h)
        fit = fit_hud(HudConfig(hw, hh), cam)
        assert fit.span_x / fit.span_y == pytest.approx(cam.aspect, rel=1e-12)
        assert fit.span_x <= hw * (1 + 1e-9)
        assert fit.span_y <= hh * (1 + 1e-9)


class TestGazeToNormalized:
    FIT = fit_hud(HudConfig(0.4, 0.3), CameraIntrinsics(1600, 900))

    def test_center(self):
        assert gaze_to_normalized(0.0, 0.0, self.FIT)[:2] == (0.5, 0.5)

    def test_top_right_corner(self):
        u, v, clamped = gaze_to_normalized(self.FIT.span_x, self.FIT.span_y, self.FIT)
        assert (u, v) == (1.0, 0.0)
        assert not clamped

    def test_bottom_left_corner(self):
        u, v, _ = gaze_to_normalized(-self.FIT.span_x, -self.FIT.span_y, self.FIT)
        assert (u, v) == (0.0, 1.0)

    def test_out_of_span_clamps_with_flag(self):
        u, v, clamped = gaze_to_normalized(10.0, -10.0, self.FIT)
        assert clamped
        assert (u, v) == (1.0, 1.0)

    @given(x=st.floats(-0.4, 0.4), y=st.floats(-0.225, 0.225))
    def test_invertible(self, x, y):
        u, v, clamped = gaze_to_normalized(x, y, self.FIT)
        assert not clamped
        xb, yb = normalized_to_gaze(u, v, self.FIT)
        assert xb == pytest.approx(x, abs=1e-9 * self.FIT.span_x)
        assert yb == pytest.approx(y, abs=1e-9 * self.FIT.span_y)

    def test_monotone(self):
        us = [gaze_to_normalized(x, 0.0, self.FIT).u for x in (-0.3, -0.1, 0.1, 0.3)]
        assert us == sorted(us) and len(set(us)) == 4
        vs = [gaze_to_normalized(0.0, y, self.FIT).v for y in (-0.2, 0.0, 0.2)]
        assert vs == sorted(vs, reverse=True)


class TestClampWindow:
    def test_interior_unchanged(self):
        w = clamp_window((0.5, 0.5), (0.25, 0.25))
        assert (w.center_u, w.center_v, w.width_n, w.height_n) == (0.5, 0.5, 0.25, 0.25)

    def test_center_moves_size_preserved(self):
        w = clamp_window((0.0, 0.5), (0.2, 0.2))
        assert w.center_u == pytest.approx(0.1, rel=REL)
        assert w.center_v == 0.5
        assert (w.width_n, w.height_n) == (0.2, 0.2)

    def test_oversize_capped(self):
        w = clamp_window((0.5, 0.5), (1.2, 0.2))
        assert w.width_n == pytest.approx(0.98, rel=REL)
        assert (w.center_u, w.center_v) == (0.5, 0.5)

    def test_degenerate_size_becomes_minimum(self):
        w = clamp_window((0.5, 0.5), (0.0, -1.0))
        assert w.width_n > 0 and w.height_n > 0

    @given(
        cu=st.floats(-1, 2), cv=st.floats(-1, 2),
        w=st.floats(0, 2), h=st.floats(0, 2),
    )
    def test_idempotent_and_inside(self, cu, cv, w, h):
        once = clamp_window((cu, cv), (w, h))
        twice = clamp_window((once.center_u, once.center_v), (once.width_n, once.height_n))
        assert once == twice
        assert once.center_u - once.width_n / 2 >= -1e-12
        assert once.center_u + once.width_n / 2 <= 1 + 1e-12
        assert once.width_n / 2 <= 0.49 and once.height_n / 2 <= 0.49


class TestToPixelBounds:
    def test_hd_frame_quarter_window(self):
        b = to_pixel_bounds(clamp_window((0.5, 0.5), (0.25, 0.25)), CameraIntrinsics(1280, 720))
        assert (b.x0, b.x1, b.y0, b.y1) == (480, 800, 270, 450)

    def test_max_window_on_square(self):
        b = to_pixel_bounds(clamp_window((0.5, 0.5), (0.98, 0.98)), CameraIntrinsics(224, 224))
        assert (b.x0, b.x1, b.y0, b.y1) == (2, 222, 2, 222)

    def test_degenerate_size_nonempty(self):
        b = to_pixel_bounds(clamp_window((0.5, 0.5), (0.0, 0.0)), CameraIntrinsics(100, 100))
        assert b.x1 > b.x0 and b.y1 > b.y0

    @staticmethod
    def _pixel_membership_oracle(w: WindowState, cam: CameraIntrinsics, b):
        """A pixel column x intersects [cx - w/2, cx + w/2] (in pixel units)
        iff x is inside the bounds, allowing the floor/ceil boundary pixel."""
        lo = cam.width_px * (w.center_u - w.width_n / 2)
        hi = cam.width_px * (w.center_u + w.width_n / 2)
        for x in range(cam.width_px):
            overlaps = x + 1 > lo and x < hi
            inside = b.x0 <= x < b.x1
            # floor/ceil admits at most the single partially covered pixel
            if overlaps != inside:
                assert min(abs(x + 1 - lo), abs(x - hi)) <= 1.0

    def test_bounds_match_membership_oracle(self):
        cam = CameraIntrinsics(160, 90)
        for cu in (0.1, 0.33, 0.5, 0.77, 0.95):
            for wn in (0.05, 0.3, 0.6, 0.98):
                w = clamp_window((cu, 0.5), (wn, 0.4))
                self._pixel_membership_oracle(w, cam, to_pixel_bounds(w, cam))

    def test_grid_nonempty_and_inside(self):
        for cam in (CameraIntrinsics(1280, 720), CameraIntrinsics(224, 224)):
            for ci in range(0, 11):
                for si in range(1, 10):
                    c = ci / 10
                    s = si / 10
                    w = clamp_window((c, 1 - c), (s, s))
                    b = to_pixel_bounds(w, cam)
                    assert 0 <= b.x0 < b.x1 <= cam.width_px
                    assert 0 <= b.y0 < b.y1 <= cam.height_px
