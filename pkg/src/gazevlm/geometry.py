"""Gaze-locked clipping window geometry.

Pure functions mapping gaze hits on a HUD plane to a normalized window on
the camera image, and converting that window to pixel crop bounds. All
math is 64-bit float; the pixel conversion is the only integer boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

# Half-extent cap: a window never covers more than 98% of either image axis.
MAX_HALF_EXTENT = 0.49


def _require_finite_positive(name: str, value: float) -> None:
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class HudConfig:
    """HUD plane half-sizes in meters plus its placement distance.

    Distance is a comfort control for where the plane sits; it does not
    enter the gaze-to-image mapping.
    """

    half_width: float
    half_height: float
    distance: float = 1.0

    def __post_init__(self) -> None:
        _require_finite_positive("half_width", self.half_width)
        _require_finite_positive("half_height", self.half_height)
        _require_finite_positive("distance", self.distance)


@dataclass(frozen=True)
class CameraIntrinsics:
    width_px: int
    height_px: int

    def __post_init__(self) -> None:
        if self.width_px < 1 or self.height_px < 1:
            raise ValueError(
                f"camera dimensions must be >= 1, got {self.width_px}x{self.height_px}"
            )

    @property
    def aspect(self) -> float:
        return self.width_px / self.height_px


@dataclass(frozen=True)
class HudFit:
    """Largest aspect-preserving image rectangle inside the HUD.

    ``span_x``/``span_y`` are half-spans in meters: the rectangle occupies
    [-span_x, span_x] x [-span_y, span_y] in HUD-local coordinates.
    """

    scale: float
    span_x: float
    span_y: float


class NormalizedGaze(NamedTuple):
    u: float
    v: float
    clamped: bool


@dataclass(frozen=True)
class WindowState:
    """Normalized window center and size on the image plane, post-clamp."""

    center_u: float
    center_v: float
    width_n: float
    height_n: float


@dataclass(frozen=True)
class PixelBounds:
    x0: int
    x1: int
    y0: int
    y1: int

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height


def fit_hud(hud: HudConfig, cam: CameraIntrinsics) -> HudFit:
    """Fit the camera image rectangle inside the HUD, preserving aspect.

    scale = min(half_height, half_width / aspect); the fitted half-spans
    are (scale * aspect, scale).
    """
    aspect = cam.aspect
    scale = min(hud.half_height, hud.half_width / aspect)
    return HudFit(scale=scale, span_x=scale * aspect, span_y=scale)


def gaze_to_normalized(x: float, y: float, fit: HudFit) -> NormalizedGaze:
    """Map a HUD-local gaze hit (meters) to image-normalized (u, v).

    u = (1 + x/span_x)/2, v = (1 - y/span_y)/2; the v axis flips because
    HUD +y points up while image v grows downward. Hits outside the fitted
    spans are clamped to the edge and flagged, never rejected.
    """
    clamped = abs(x) > fit.span_x or abs(y) > fit.span_y
    x = min(max(x, -fit.span_x), fit.span_x)
    y = min(max(y, -fit.span_y), fit.span_y)
    u = 0.5 * (1.0 + x / fit.span_x)
    v = 0.5 * (1.0 - y / fit.span_y)
    return NormalizedGaze(u=u, v=v, clamped=clamped)


def normalized_to_gaze(u: float, v: float, fit: HudFit) -> tuple[float, float]:
    """Inverse of :func:`gaze_to_normalized` on its domain."""
    return (2.0 * u - 1.0) * fit.span_x, (1.0 - 2.0 * v) * fit.span_y


# Fallback half-extent floor when no camera is known yet; to_pixel_bounds
# applies the real 1-pixel floor from the actual image dimensions.
MIN_HALF_EXTENT = 1e-6


def clamp_window(
    center: tuple[float, float], size: tuple[float, float]
) -> WindowState:
    """Clamp a window so it lies fully inside the unit image square.

    Size is clamped first (half-extent within [MIN_HALF_EXTENT,
    MAX_HALF_EXTENT]), then the center moves componentwise so the window
    fits; the size itself is never changed by center clamping. Zero or
    negative size collapses to the minimum-size window.
    """
    cu, cv = center
    w, h = size
    half_w = min(max(w / 2.0, MIN_HALF_EXTENT), MAX_HALF_EXTENT)
    half_h = min(max(h / 2.0, MIN_HALF_EXTENT), MAX_HALF_EXTENT)
    cu = min(max(cu, half_w), 1.0 - half_w)
    cv = min(max(cv, half_h), 1.0 - half_h)
    return WindowState(
        center_u=cu, center_v=cv, width_n=2.0 * half_w, height_n=2.0 * half_h
    )


def to_pixel_bounds(w: WindowState, cam: CameraIntrinsics) -> PixelBounds:
    """Convert a normalized window to integer crop bounds.

    x0 = floor(W*(cu - w/2)), x1 = ceil(W*(cu + w/2)), same for y with H.
    The normalized size is floored at 2 pixels per axis so the crop is
    never empty, and the floor/ceil results are clipped to the image
    rectangle (the formula can overshoot by one pixel at the edge).
    """
    width_n = max(w.width_n, 2.0 / cam.width_px)
    height_n = max(w.height_n, 2.0 / cam.height_px)
    cu = min(max(w.center_u, width_n / 2.0), 1.0 - width_n / 2.0)
    cv = min(max(w.center_v, height_n / 2.0), 1.0 - height_n / 2.0)

    x0 = math.floor(cam.width_px * (cu - width_n / 2.0))
    x1 = math.ceil(cam.width_px * (cu + width_n / 2.0))
    y0 = math.floor(cam.height_px * (cv - height_n / 2.0))
    y1 = math.ceil(cam.height_px * (cv + height_n / 2.0))

    x0 = max(x0, 0)
    y0 = max(y0, 0)
    x1 = min(x1, cam.width_px)
    y1 = min(y1, cam.height_px)
    return PixelBounds(x0=x0, x1=x1, y0=y0, y1=y1)


def angle_to_normalized(angle_deg: float, hud: HudConfig, fit: HudFit) -> float:
    """Angular threshold (degrees at the eye) expressed in normalized-u units.

    At HUD distance d an angle theta subtends d*tan(theta) meters on the
    plane; the full fitted width 2*span_x spans u in [0, 1]. Used so the
    fixation gate works identically for mouse-driven simulator gaze.
    """
    meters = hud.distance * math.tan(math.radians(angle_deg))
    return meters / (2.0 * fit.span_x)
