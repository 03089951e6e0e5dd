"""Dwell auto-capture state machine.

Fires a capture trigger when gaze stays inside the (fixed-size) window
for the dwell interval, gated by a fixation check that suppresses jitter.
Driven entirely by explicit sample timestamps so traces replay
deterministically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from .geometry import WindowState


@dataclass(frozen=True)
class DwellConfig:
    dwell_interval: float = 0.8
    fixation_time: float = 0.15
    fixation_angle_deg: float = 1.5
    refractory: float = 2.0
    # Degrees-to-normalized-u conversion for simulator (u, v) samples;
    # compute from the HUD fit via geometry.angle_to_normalized.
    norm_per_degree: float = 0.01

    def __post_init__(self) -> None:
        for name in ("dwell_interval", "fixation_time", "fixation_angle_deg", "refractory"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.fixation_time > self.dwell_interval:
            raise ValueError("fixation_time must not exceed dwell_interval")

    @property
    def fixation_radius_norm(self) -> float:
        return self.fixation_angle_deg * self.norm_per_degree


@dataclass(frozen=True)
class GazeSample:
    """One gaze observation: either a unit direction or a normalized hit."""

    timestamp: float
    u: float
    v: float
    direction: Optional[tuple[float, float, float]] = None


class Phase(enum.Enum):
    IDLE = "idle"
    FIXATING = "fixating"
    DWELLING = "dwelling"
    FIRED = "fired"
    REFRACTORY = "refractory"


@dataclass(frozen=True)
class CaptureTrigger:
    timestamp: float
    episode_start: float


@dataclass(frozen=True)
class DwellState:
    phase: Phase = Phase.IDLE
    phase_entered_at: float = 0.0
    episode_start: float = 0.0
    anchor: Optional[GazeSample] = None
    anchor_since: float = 0.0
    last_timestamp: float = field(default=-math.inf)


def initial_state() -> DwellState:
    return DwellState()


def reset(state: DwellState) -> DwellState:
    """Drop back to Idle, clearing the anchor and any refractory lockout."""
    return DwellState(last_timestamp=state.last_timestamp)


def _inside(sample: GazeSample, window: WindowState) -> bool:
    half_w = window.width_n / 2.0
    half_h = window.height_n / 2.0
    return (
        abs(sample.u - window.center_u) <= half_w
        and abs(sample.v - window.center_v) <= half_h
    )


def _angular_break(sample: GazeSample, anchor: GazeSample, cfg: DwellConfig) -> bool:
    if sample.direction is not None and anchor.direction is not None:
        dot = sum(a * b for a, b in zip(sample.direction, anchor.direction))
        angle = math.degrees(math.acos(min(max(dot, -1.0), 1.0)))
        return angle > cfg.fixation_angle_deg
    du = sample.u - anchor.u
    dv = sample.v - anchor.v
    return math.hypot(du, dv) > cfg.fixation_radius_norm


def step(
    state: DwellState,
    sample: GazeSample,
    window: WindowState,
    cfg: DwellConfig,
) -> tuple[DwellState, Optional[CaptureTrigger]]:
    """Advance the machine by one gaze sample.

    Emits at most one CaptureTrigger per contiguous in-window episode: the
    first sample at which the episode has lasted dwell_interval and the
    current fixation anchor has been stable for fixation_time. Leaving the
    window resets the episode; an angular break resets only the anchor.
    Non-monotonic timestamps are rejected without changing state.
    """
    now = sample.timestamp
    if now <= state.last_timestamp:
        return state, None
    state = replace(state, last_timestamp=now)

    if state.phase in (Phase.FIRED, Phase.REFRACTORY):
        if now - state.phase_entered_at >= cfg.refractory:
            state = replace(
                state, phase=Phase.IDLE, phase_entered_at=now, anchor=None
            )
        else:
            return replace(state, phase=Phase.REFRACTORY), None

    if not _inside(sample, window):
        if state.phase is Phase.IDLE:
            return state, None
        return replace(
            state, phase=Phase.IDLE, phase_entered_at=now, anchor=None
        ), None

    if state.phase is Phase.IDLE:
        return (
            replace(
                state,
                phase=Phase.FIXATING,
                phase_entered_at=now,
                episode_start=now,
                anchor=sample,
                anchor_since=now,
            ),
            None,
        )

    # In-window continuation: re-anchor on jitter beyond the angular gate.
    assert state.anchor is not None
    if _angular_break(sample, state.anchor, cfg):
        state = replace(
            state, phase=Phase.FIXATING, anchor=sample, anchor_since=now
        )

    fixated = now - state.anchor_since >= cfg.fixation_time
    if state.phase is Phase.FIXATING and fixated:
        state = replace(state, phase=Phase.DWELLING, phase_entered_at=now)

    if (
        state.phase is Phase.DWELLING
        and now - state.episode_start >= cfg.dwell_interval
    ):
        trigger = CaptureTrigger(timestamp=now, episode_start=state.episode_start)
        return (
            replace(state, phase=Phase.FIRED, phase_entered_at=now, anchor=None),
            trigger,
        )
    return state, None
