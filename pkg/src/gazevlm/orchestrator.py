"""Session orchestrator: wires window interaction, capture, speech, and
generation into the two interaction modes.

Select-and-ask: the user places and sizes the window, confirms with a
trigger, speaks (or types) a question, and gets the answer as text plus
optional speech. Dwell mode: a fixed-size window follows gaze and
auto-captures after the dwell gate fires, using the default prompt unless
a recently committed voice query exists.

Every stage appends to one ordered event log so pipeline-ordering
invariants are machine-checkable; the crop hash recorded at capture time
is the hash of exactly the pixels the engine later consumes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional

from . import dwell as dwell_mod
from .capture import CaptureLatch, CroppedImage, Frame, crop, latch
from .config import AppConfig
from .dwell import CaptureTrigger, DwellConfig, DwellState, GazeSample
from .geometry import WindowState, clamp_window
from .speech import (
    AsrBackend,
    AsrSession,
    CommitEvent,
    LogRecord,
    SessionState,
    SilencePolicy,
    SpeechError,
    SpeechHub,
)
from .vlm.engine import GenerationResult, VlmEngine
from .vlm.preprocess import preprocess

DEFAULT_PROMPT = "What is in the image?"


class Mode(enum.Enum):
    SELECT_AND_ASK = "select_and_ask"
    DWELL = "dwell"


@dataclass(frozen=True)
class Query:
    text: str
    source: str  # "voice" | "edited" | "default_prompt"


@dataclass(frozen=True)
class Answer:
    text: str
    query: Query
    generation: GenerationResult
    crop_hash: str
    delivered_via: frozenset[str]


@dataclass
class _PendingCapture:
    latch: CaptureLatch
    crop: CroppedImage
    crop_hash: str
    session: Optional[AsrSession] = None


class SessionOrchestrator:
    """Single-owner interaction state; step it with explicit timestamps."""

    def __init__(
        self,
        engine: VlmEngine,
        hub: SpeechHub,
        asr_backend_factory: Callable[[], AsrBackend],
        config: Optional[AppConfig] = None,
        emit: Optional[Callable[[str, dict], None]] = None,
        dwell_config: Optional[DwellConfig] = None,
    ):
        self.config = config or AppConfig()
        self.engine = engine
        self.events: list[LogRecord] = hub.events
        self.hub = hub
        self.asr_backend_factory = asr_backend_factory
        self.emit = emit or (lambda name, payload: None)
        self.policy: SilencePolicy = self.config.silence_policy()
        self.dwell_config = dwell_config or self.config.dwell()

        self.mode = Mode(self.config.mode)
        self.window: WindowState = clamp_window(
            (0.5, 0.5), (self.config.window_width_n, self.config.window_height_n)
        )
        self.hud_distance = self.config.hud_distance
        self.frame: Optional[Frame] = None
        self.dwell_state: DwellState = dwell_mod.initial_state()

        self._pending: Optional[_PendingCapture] = None
        self._generating = False
        self._last_voice_commit: Optional[CommitEvent] = None
        self.answers: list[Answer] = []

    # -- logging ----------------------------------------------------------

    def _log(self, now: float, stage: str, payload: str = "") -> None:
        self.events.append(LogRecord(now, stage, payload))

    def save_event_log(self, path: str | Path) -> None:
        """Newline-delimited records: ``<t> <stage> <payload-hash?>``."""
        lines = [
            f"{r.timestamp:.6f} {r.name}" + (f" {r.payload}" if r.payload else "")
            for r in self.events
        ]
        Path(path).write_text("\n".join(lines) + "\n")

    # -- window / frame interaction ---------------------------------------

    def update_frame(self, frame: Frame) -> None:
        self.frame = frame

    def _emit_window(self) -> None:
        from .geometry import to_pixel_bounds

        payload = {"window": self.window}
        if self.frame is not None:
            payload["bounds"] = to_pixel_bounds(self.window, self.frame.intrinsics)
        self.emit("window_update", payload)

    def set_size(self, width_n: Optional[float] = None, height_n: Optional[float] = None) -> WindowState:
        w = width_n if width_n is not None else self.window.width_n
        h = height_n if height_n is not None else self.window.height_n
        self.window = clamp_window((self.window.center_u, self.window.center_v), (w, h))
        self._emit_window()
        return self.window

    def set_distance(self, distance: float) -> float:
        # Presentation-only comfort control; does not enter the mapping.
        if distance > 0:
            self.hud_distance = distance
        return self.hud_distance

    def set_mode(self, mode: Mode, now: float) -> None:
        if mode is self.mode:
            return
        self.mode = mode
        self.dwell_state = dwell_mod.initial_state()
        # Mode switch cancels any in-flight ASR; generation finishes on its own.
        if self._pending is not None and self._pending.session is not None:
            if self._pending.session.state is SessionState.LISTENING:
                self._pending = None
                self._log(now, "asr_cancelled")

    def move_gaze(self, u: float, v: float, now: float) -> Optional[Answer]:
        """Window center follows gaze; in dwell mode this also steps the gate.

        The gate sees the window as currently displayed (pre-move), so a
        saccade that jumps clear of the rectangle between samples resets
        the dwell episode even though the center catches up afterwards.
        """
        sample = GazeSample(timestamp=now, u=u, v=v)
        displayed = self.window
        self.window = clamp_window((u, v), (self.window.width_n, self.window.height_n))
        self._emit_window()
        if self.mode is not Mode.DWELL:
            return None
        self.dwell_state, trig = dwell_mod.step(
            self.dwell_state, sample, displayed, self.dwell_config
        )
        if trig is not None:
            return self._dwell_capture(trig)
        return None

    # -- select-and-ask ----------------------------------------------------

    def trigger(self, now: float) -> bool:
        """Controller trigger: latch + crop, then open the microphone.

        Returns False (with a busy signal) when a capture or generation is
        already in flight; one question at a time.
        """
        if self.mode is not Mode.SELECT_AND_ASK:
            self.emit("error", {"msg": "trigger is select-and-ask only"})
            return False
        if self._pending is not None or self._generating:
            self._log(now, "busy")
            self.emit("busy", {})
            return False
        if self.frame is None:
            self.emit("error", {"msg": "no frame available"})
            return False
        self._log(now, "trigger")
        pending = self._capture(now)
        try:
            pending.session = self.hub.start_session(
                self.policy, self.asr_backend_factory(), now
            )
        except SpeechError as exc:
            self._pending = None
            self.emit("error", {"msg": str(exc)})
            return False
        self._pending = pending
        self.emit("mic_open", {})
        return True

    def _capture(self, now: float) -> _PendingCapture:
        lat = latch(self.window, self.frame, now)
        self._log(now, "latch", f"{lat.bounds.x0},{lat.bounds.y0},{lat.bounds.x1},{lat.bounds.y1}")
        cropped = crop(lat)
        pending = _PendingCapture(latch=lat, crop=cropped, crop_hash=cropped.content_hash())
        self.emit(
            "capture",
            {"bounds": lat.bounds, "crop_hash": pending.crop_hash, "crop": cropped},
        )
        return pending

    def feed_audio(self, pcm_chunk: bytes, now: float) -> Optional[Answer]:
        """Drive the open ASR session; on commit, run the full answer path."""
        if self._pending is None or self._pending.session is None:
            return None
        session = self._pending.session
        before = session.current_partial
        commit = self.hub.feed(session, pcm_chunk, now)
        if session.current_partial != before:
            self.emit("partial", {"text": session.current_partial})
        if commit is None:
            return None
        self.emit("committed", {"text": commit.text, "empty": commit.empty})
        if commit.empty:
            query = Query(text=self.config.default_prompt or DEFAULT_PROMPT, source="default_prompt")
        else:
            query = Query(text=commit.text, source="voice")
        return self._answer_pending(query, now)

    def submit_text(self, text: str, now: float) -> Optional[Answer]:
        """Edited-text path: the user revised (or replaced) the committed query."""
        if self._pending is None:
            self.emit("error", {"msg": "no capture awaiting a query"})
            return None
        session = self._pending.session
        if session is not None and session.state is SessionState.LISTENING:
            # Typing supersedes listening: commit whatever was heard, use the text.
            self.hub._commit(session, now, "silence")
        return self._answer_pending(Query(text=text, source="edited"), now)

    def clear(self, now: float) -> None:
        """Drop the partial/committed transcript and re-open the microphone."""
        if self._pending is None or self._pending.session is None:
            return
        self._pending.session = self.hub.clear(
            self._pending.session, self.asr_backend_factory(), now
        )
        self.emit("mic_open", {})

    # -- dwell mode --------------------------------------------------------

    def start_voice_query(self, now: float) -> Optional[AsrSession]:
        """Open a free-standing voice session (dwell mode): its commit binds
        to the next dwell capture inside the binding window."""
        try:
            return self.hub.start_session(self.policy, self.asr_backend_factory(), now)
        except SpeechError as exc:
            self.emit("error", {"msg": str(exc)})
            return None

    def feed_voice_query(self, session: AsrSession, pcm_chunk: bytes, now: float) -> Optional[CommitEvent]:
        commit = self.hub.feed(session, pcm_chunk, now)
        if commit is not None and not commit.empty:
            self._last_voice_commit = commit
        return commit

    def _dwell_capture(self, trig: CaptureTrigger) -> Optional[Answer]:
        now = trig.timestamp
        if self._generating:
            self._log(now, "trigger_dropped")
            return None
        if self.frame is None:
            return None
        self._log(now, "trigger")
        pending = self._capture(now)
        self._pending = pending
        commit = self._last_voice_commit
        if commit is not None and now - commit.timestamp <= self.config.voice_binding_window_s:
            query = Query(text=commit.text, source="voice")
            self._last_voice_commit = None
        else:
            query = Query(text=self.config.default_prompt or DEFAULT_PROMPT, source="default_prompt")
        return self._answer_pending(query, now)

    # -- generation + delivery --------------------------------------------

    def _answer_pending(self, query: Query, now: float) -> Answer:
        pending = self._pending
        assert pending is not None
        self._pending = None
        self._generating = True
        try:
            self._log(now, "generate_start", pending.crop_hash)
            image = preprocess(
                pending.crop, self.engine.bundle.preprocess_config, provenance=pending.crop_hash
            )
            result = self.engine.generate(
                image,
                prompt=query.text,
                token_callback=lambda tid, text: self.emit("token", {"text": text}),
            )
            end = now + result.inference_time
            self._log(end, "generate_end", pending.crop_hash)
        finally:
            self._generating = False
        answer = self._deliver(result, query, pending.crop_hash, end)
        self.answers.append(answer)
        return answer

    def _deliver(self, result: GenerationResult, query: Query, crop_hash: str, now: float) -> Answer:
        delivered = {"ui_text"}
        self._log(now, "ui_text", crop_hash)
        self.emit(
            "answer",
            {
                "text": result.text,
                "crop_hash": crop_hash,
                "encode_s": result.encode_time,
                "decode_s": result.decode_time,
                "tokens": result.tokens_generated,
                "tg_tok_per_s": result.tg_speed,
            },
        )
        if self.config.speak_answers and self.hub.tts is not None:
            try:
                self.hub.speak(result.text, now)
                delivered.add("speech")
            except SpeechError:
                pass  # speech is best-effort
        return Answer(
            text=result.text,
            query=query,
            generation=result,
            crop_hash=crop_hash,
            delivered_via=frozenset(delivered),
        )

    # -- scripted drivers --------------------------------------------------

    def run_select_and_ask(
        self, trigger_time: float, audio_feed: Iterable[tuple[float, bytes]]
    ) -> Optional[Answer]:
        """Drive one full select-and-ask exchange from scripted audio."""
        if not self.trigger(trigger_time):
            return None
        for now, chunk in audio_feed:
            answer = self.feed_audio(chunk, now)
            if answer is not None:
                return answer
        return None

    def run_dwell_mode(self, gaze_trace: Iterable[GazeSample]) -> list[Answer]:
        """Feed a scripted gaze trace; returns the answers it produced."""
        produced: list[Answer] = []
        for sample in gaze_trace:
            answer = self.move_gaze(sample.u, sample.v, sample.timestamp)
            if answer is not None:
                produced.append(answer)
        return produced
