"""Application configuration: one JSON file covering mode, window geometry,
dwell parameters, silence policy, model directory, and frame source."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .dwell import DwellConfig
from .geometry import HudConfig
from .speech import SilencePolicy


@dataclass
class AppConfig:
    mode: str = "select_and_ask"  # "select_and_ask" | "dwell"
    model_dir: str = "models/tiny"
    frame_source: str = "synthetic"  # "synthetic" or an image folder path
    output_dir: str = "captures"
    jpeg_quality: int = 90
    lossless: bool = False

    hud_half_width: float = 0.4
    hud_half_height: float = 0.3
    hud_distance: float = 1.0
    window_width_n: float = 0.25
    window_height_n: float = 0.25

    dwell_interval_s: float = 0.8
    fixation_time_s: float = 0.15
    fixation_angle_deg: float = 1.5
    refractory_s: float = 2.0

    silence_grace_s: float = 1.0
    max_timeout_s: float = 15.0
    asr_backend: str = "mock"  # "mock", "mock:<script.txt>", "vosk:<model_dir>"
    tts_backend: str = "null"  # "null" | "scripted"

    default_prompt: str = "What is in the image?"
    voice_binding_window_s: float = 10.0
    speak_answers: bool = True

    @classmethod
    def from_file(cls, path: str | Path) -> "AppConfig":
        data = json.loads(Path(path).read_text())
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_file(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2))

    def hud(self) -> HudConfig:
        return HudConfig(
            half_width=self.hud_half_width,
            half_height=self.hud_half_height,
            distance=self.hud_distance,
        )

    def dwell(self, norm_per_degree: float | None = None) -> DwellConfig:
        kwargs = dict(
            dwell_interval=self.dwell_interval_s,
            fixation_time=self.fixation_time_s,
            fixation_angle_deg=self.fixation_angle_deg,
            refractory=self.refractory_s,
        )
        if norm_per_degree is not None:
            kwargs["norm_per_degree"] = norm_per_degree
        return DwellConfig(**kwargs)

    def silence_policy(self) -> SilencePolicy:
        return SilencePolicy(
            silence_grace=self.silence_grace_s, max_timeout=self.max_timeout_s
        )
