"""Streaming speech I/O: recognition sessions with the listen-until-silence
commit policy, editable-text mode, and synthesis with feedback avoidance.

Backends are interfaces. The deterministic mock backend replays a scripted
event trace and is the test workhorse; a real offline recognizer can be
plugged in behind the same contract. Recognition is paused for the whole
duration of any speech playback so the microphone never hears the device.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

SAMPLE_RATE = 16_000
BYTES_PER_SAMPLE = 2  # 16-bit signed little-endian mono


class SpeechError(Exception):
    pass


class EventKind(enum.Enum):
    PARTIAL = "PARTIAL"
    FINAL = "FINAL"
    VOICE = "VOICE"
    SILENCE = "SILENCE"


@dataclass(frozen=True)
class AsrEvent:
    timestamp: float
    kind: EventKind
    text: str = ""


@dataclass(frozen=True)
class SilencePolicy:
    silence_grace: float = 1.0
    max_timeout: float = 15.0

    def __post_init__(self) -> None:
        if not 0 < self.silence_grace < self.max_timeout:
            raise ValueError("need 0 < silence_grace < max_timeout")


class SessionState(enum.Enum):
    LISTENING = "listening"
    COMMITTED = "committed"
    TIMED_OUT = "timed_out"


@dataclass(frozen=True)
class CommitEvent:
    text: str
    timestamp: float
    reason: str  # "silence" | "timeout"
    empty: bool


class AsrBackend:
    """Consumes 16 kHz mono PCM chunks, yields partial/final transcript events."""

    sample_rate: int = SAMPLE_RATE

    def accept(self, pcm_chunk: bytes, now: float) -> list[AsrEvent]:
        raise NotImplementedError


class MockAsrBackend(AsrBackend):
    """Replays a scripted (timestamp, kind, text) trace.

    ``accept`` releases every not-yet-delivered event with timestamp <= now;
    the PCM content itself is ignored. The same script always produces the
    same event sequence.
    """

    def __init__(self, events: list[AsrEvent]):
        self.events = sorted(events, key=lambda e: e.timestamp)
        self._cursor = 0

    @classmethod
    def from_script(cls, script: str | Path) -> "MockAsrBackend":
        return cls(parse_mock_script(script))

    def accept(self, pcm_chunk: bytes, now: float) -> list[AsrEvent]:
        out = []
        while self._cursor < len(self.events) and self.events[self._cursor].timestamp <= now:
            out.append(self.events[self._cursor])
            self._cursor += 1
        return out

    def rewind(self) -> None:
        self._cursor = 0


def parse_mock_script(script: str | Path) -> list[AsrEvent]:
    """Parse mock script lines: ``<t_seconds> PARTIAL|FINAL|VOICE|SILENCE <text?>``."""
    if isinstance(script, Path) or (isinstance(script, str) and "\n" not in script and script.endswith(".txt")):
        text = Path(script).read_text()
    else:
        text = str(script)
    events = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(maxsplit=2)
        if len(parts) < 2:
            raise SpeechError(f"malformed script line {lineno}: {line!r}")
        try:
            t = float(parts[0])
            kind = EventKind(parts[1])
        except ValueError as exc:
            raise SpeechError(f"malformed script line {lineno}: {line!r}") from exc
        events.append(AsrEvent(t, kind, parts[2] if len(parts) > 2 else ""))
    return events


class TtsBackend:
    """speak() returns the playback duration in seconds (0 = instantaneous)."""

    def speak(self, text: str) -> float:
        raise NotImplementedError


class NullTts(TtsBackend):
    def speak(self, text: str) -> float:
        return 0.0


class ScriptedTts(TtsBackend):
    """Deterministic playback length proportional to text length."""

    def __init__(self, seconds_per_char: float = 0.05):
        self.seconds_per_char = seconds_per_char
        self.spoken: list[str] = []

    def speak(self, text: str) -> float:
        self.spoken.append(text)
        return len(text) * self.seconds_per_char


@dataclass
class AsrSession:
    policy: SilencePolicy
    backend: AsrBackend
    started_at: float
    state: SessionState = SessionState.LISTENING
    current_partial: str = ""
    last_voice_activity: float = field(default=0.0)
    commit: Optional[CommitEvent] = None

    def __post_init__(self) -> None:
        self.last_voice_activity = self.started_at


@dataclass(frozen=True)
class LogRecord:
    timestamp: float
    name: str
    payload: str = ""


class SpeechHub:
    """Owns at most one listening session and the TTS mutual exclusion.

    Time is always passed in explicitly, so scripted traces replay to
    identical event logs. Session starts requested during playback are
    deferred: the session's clock starts at the playback end time and
    chunks fed before then are dropped (recognition paused).
    """

    def __init__(self, tts: Optional[TtsBackend] = None, events: Optional[list[LogRecord]] = None):
        self.tts = tts
        # May be shared with the orchestrator so speech and pipeline events
        # interleave on one ordered stream.
        self.events: list[LogRecord] = events if events is not None else []
        self.session: Optional[AsrSession] = None
        self._tts_busy_until = float("-inf")

    def _log(self, timestamp: float, name: str, payload: str = "") -> None:
        self.events.append(LogRecord(timestamp, name, payload))

    def start_session(self, policy: SilencePolicy, backend: AsrBackend, now: float) -> AsrSession:
        if backend is None:
            raise SpeechError("no ASR backend available")
        if backend.sample_rate != SAMPLE_RATE:
            raise SpeechError(
                f"backend sample rate {backend.sample_rate} != required {SAMPLE_RATE}"
            )
        if self.session is not None and self.session.state is SessionState.LISTENING:
            raise SpeechError("an ASR session is already active")
        start_at = max(now, self._tts_busy_until)
        self.session = AsrSession(policy=policy, backend=backend, started_at=start_at)
        self._log(start_at, "asr_open")
        return self.session

    def feed(self, session: AsrSession, pcm_chunk: bytes, now: float) -> Optional[CommitEvent]:
        """Feed one PCM chunk at time ``now``; returns the commit exactly once."""
        if session.state is not SessionState.LISTENING:
            raise SpeechError("session is no longer listening")
        if now < session.started_at:
            return None  # recognition paused (TTS still playing)

        for event in session.backend.accept(pcm_chunk, now):
            if event.kind in (EventKind.PARTIAL, EventKind.FINAL):
                # any recognizer output counts as activity, changed or not
                session.last_voice_activity = event.timestamp
                if event.text != session.current_partial:
                    session.current_partial = event.text
                    self._log(event.timestamp, "partial", event.text)
            elif event.kind is EventKind.VOICE:
                session.last_voice_activity = event.timestamp

        if session.current_partial and now - session.last_voice_activity >= session.policy.silence_grace:
            return self._commit(session, now, "silence")
        if now - session.started_at >= session.policy.max_timeout:
            return self._commit(session, now, "timeout")
        return None

    def _commit(self, session: AsrSession, now: float, reason: str) -> CommitEvent:
        text = session.current_partial
        commit = CommitEvent(text=text, timestamp=now, reason=reason, empty=not text)
        session.commit = commit
        session.state = (
            SessionState.TIMED_OUT if reason == "timeout" and not text else SessionState.COMMITTED
        )
        self._log(now, "commit", text)
        return commit

    def edit_mode(self, session: AsrSession, user_text: Optional[str] = None) -> str:
        """Return the query text after optional user revision of the commit."""
        if session.commit is None:
            raise SpeechError("cannot edit before commit")
        return session.commit.text if user_text is None else user_text

    def clear(self, session: AsrSession, backend: AsrBackend, now: float) -> AsrSession:
        """Discard the session and start listening again."""
        if session is self.session:
            self.session = None
        self._log(now, "clear")
        return self.start_session(session.policy, backend, now)

    def speak(self, text: str, now: float) -> tuple[float, float]:
        """Play ``text``; returns (start, end) times. Failure is non-fatal:
        text delivery continues, no events are logged."""
        if self.tts is None:
            return (now, now)
        if now < self._tts_busy_until:
            raise SpeechError("an utterance is already playing")
        try:
            duration = self.tts.speak(text)
        except Exception:
            self._log(now, "tts_error")
            return (now, now)
        end = now + duration
        self._tts_busy_until = end
        self._log(now, "focus_acquired")
        self._log(now, "tts_start", text)
        self._log(end, "tts_end")
        self._log(end, "focus_released")
        return (now, end)


def silence_chunk(duration: float) -> bytes:
    """All-zero PCM covering ``duration`` seconds at the required format."""
    return b"\x00" * int(duration * SAMPLE_RATE) * BYTES_PER_SAMPLE


def chunk_period(pcm_chunk: bytes) -> float:
    return len(pcm_chunk) / (SAMPLE_RATE * BYTES_PER_SAMPLE)
