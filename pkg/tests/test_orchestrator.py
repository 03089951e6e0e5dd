import pytest

from gazevlm.capture import SyntheticSource
from gazevlm.config import AppConfig
from gazevlm.dwell import DwellConfig, GazeSample
from gazevlm.orchestrator import Mode, SessionOrchestrator
from gazevlm.speech import (
    MockAsrBackend,
    ScriptedTts,
    SpeechHub,
    parse_mock_script,
    silence_chunk,
)

CHUNK = silence_chunk(0.1)

QUERY_SCRIPT = """\
10.3 PARTIAL what
10.8 PARTIAL what is this
11.2 FINAL what is this
"""

PIPELINE_ORDER = ["trigger", "latch", "asr_open", "commit", "generate_start",
                  "generate_end", "ui_text"]


def build(engine, mode="select_and_ask", script="", tts=None, grace=0.8, **cfg_kwargs):
    config = AppConfig(
        mode=mode,
        silence_grace_s=grace,
        max_timeout_s=15.0,
        tts_backend="scripted" if tts else "null",
        **cfg_kwargs,
    )
    hub = SpeechHub(tts=tts)
    orch = SessionOrchestrator(
        engine=engine,
        hub=hub,
        asr_backend_factory=lambda: MockAsrBackend(parse_mock_script(script)),
        config=config,
        dwell_config=DwellConfig(norm_per_degree=0.02),
    )
    orch.update_frame(SyntheticSource(640, 480, clock=lambda: 0.0).next_frame())
    return orch


def audio_feed(start, end, period=0.1):
    t = start
    while t <= end:
        t = round(t + period, 10)
        yield t, CHUNK


def stage_names(orch):
    return [r.name for r in orch.events]


class TestSelectAndAsk:
    def test_spoken_query_end_to_end(self, engine):
        orch = build(engine, script=QUERY_SCRIPT)
        answer = orch.run_select_and_ask(10.0, audio_feed(10.0, 30.0))
        assert answer is not None
        assert answer.query.text == "what is this"
        assert answer.query.source == "voice"
        assert "ui_text" in answer.delivered_via
        assert answer.text == engine.bundle.tokenizer.decode(answer.generation.token_ids)

    def test_silence_substitutes_default_prompt(self, engine):
        orch = build(engine, script="", grace=0.8)
        answer = orch.run_select_and_ask(0.0, audio_feed(0.0, 30.0))
        assert answer is not None
        assert answer.query.text == "What is in the image?"
        assert answer.query.source == "default_prompt"

    def test_pipeline_ordering(self, engine):
        orch = build(engine, script=QUERY_SCRIPT, tts=ScriptedTts())
        orch.run_select_and_ask(10.0, audio_feed(10.0, 30.0))
        names = stage_names(orch)
        order = PIPELINE_ORDER + ["tts_start"]
        positions = [names.index(stage) for stage in order]
        assert positions == sorted(positions), names
        times = [r.timestamp for r in orch.events]
        assert times == sorted(times)

    def test_crop_hash_matches_engine_input(self, engine):
        captured = {}

        def emit(name, payload):
            if name == "capture":
                captured["hash"] = payload["crop_hash"]
                captured["crop"] = payload["crop"]

        orch = build(engine, script=QUERY_SCRIPT)
        orch.emit = emit
        answer = orch.run_select_and_ask(10.0, audio_feed(10.0, 30.0))
        assert answer.crop_hash == captured["hash"] == captured["crop"].content_hash()

    def test_second_trigger_while_pending_is_busy(self, engine):
        orch = build(engine, script=QUERY_SCRIPT)
        assert orch.trigger(10.0)
        assert not orch.trigger(10.5)
        assert "busy" in stage_names(orch)
        # first exchange still completes
        answer = None
        for t, chunk in audio_feed(10.5, 30.0):
            answer = orch.feed_audio(chunk, t)
            if answer:
                break
        assert answer is not None and answer.query.text == "what is this"

    def test_edited_text_supersedes(self, engine):
        orch = build(engine, script=QUERY_SCRIPT)
        orch.trigger(10.0)
        for t, chunk in audio_feed(10.0, 11.5):
            orch.feed_audio(chunk, t)
        answer = orch.submit_text("what color is this", 11.6)
        assert answer is not None
        assert answer.query.source == "edited"
        assert answer.query.text == "what color is this"

    def test_clear_reopens_microphone(self, engine):
        orch = build(engine, script=QUERY_SCRIPT)
        orch.trigger(10.0)
        orch.clear(12.0)
        assert stage_names(orch).count("asr_open") == 2

    def test_trigger_without_frame_errors(self, engine):
        orch = build(engine, script="")
        orch.frame = None
        errors = []
        orch.emit = lambda name, payload: errors.append(name) if name == "error" else None
        assert not orch.trigger(0.0)
        assert errors == ["error"]


class TestDwellMode:
    def steady_trace(self, t0, t1, u=0.5, v=0.5, period=0.016):
        t = t0
        while t < t1:
            yield GazeSample(timestamp=t, u=u, v=v)
            t += period

    def test_auto_capture_with_default_prompt(self, engine):
        orch = build(engine, mode="dwell")
        answers = orch.run_dwell_mode(self.steady_trace(0.0, 1.5))
        assert len(answers) == 1
        assert answers[0].query.source == "default_prompt"

    def test_no_dwell_no_answers(self, engine):
        orch = build(engine, mode="dwell")
        # wander: jump around the whole image every sample
        trace = [GazeSample(0.016 * i, (i % 7) / 7, (i % 5) / 5) for i in range(120)]
        assert orch.run_dwell_mode(trace) == []

    def test_committed_voice_query_binds_to_next_trigger(self, engine):
        orch = build(engine, mode="dwell", script="0.2 FINAL what color is this\n")
        session = orch.start_voice_query(0.0)
        t = 0.0
        while session.commit is None:
            t = round(t + 0.1, 10)
            orch.feed_voice_query(session, CHUNK, t)
        answers = orch.run_dwell_mode(self.steady_trace(t, t + 1.5))
        assert len(answers) == 1
        assert answers[0].query.text == "what color is this"
        assert answers[0].query.source == "voice"

    def test_stale_voice_commit_expires(self, engine):
        orch = build(engine, mode="dwell", script="0.2 FINAL too old\n")
        session = orch.start_voice_query(0.0)
        t = 0.0
        while session.commit is None:
            t = round(t + 0.1, 10)
            orch.feed_voice_query(session, CHUNK, t)
        # dwell fires more than 10 s after the commit
        answers = orch.run_dwell_mode(self.steady_trace(t + 12.0, t + 13.5))
        assert len(answers) == 1
        assert answers[0].query.source == "default_prompt"

    def test_window_size_fixed_during_session(self, engine):
        orch = build(engine, mode="dwell", window_width_n=0.3, window_height_n=0.2)
        orch.run_dwell_mode(self.steady_trace(0.0, 1.2, u=0.4, v=0.6))
        assert (orch.window.width_n, orch.window.height_n) == (0.3, 0.2)


class TestDelivery:
    def test_tts_spoken_after_ui_text(self, engine):
        tts = ScriptedTts()
        orch = build(engine, script="", tts=tts)
        answer = orch.run_select_and_ask(0.0, audio_feed(0.0, 30.0))
        assert "speech" in answer.delivered_via
        assert tts.spoken == [answer.text]

    def test_null_tts_text_only(self, engine):
        orch = build(engine, script="")
        answer = orch.run_select_and_ask(0.0, audio_feed(0.0, 30.0))
        assert answer.delivered_via == frozenset({"ui_text"})


class TestEventLogFile:
    def test_log_format(self, engine, tmp_path):
        orch = build(engine, script=QUERY_SCRIPT)
        orch.run_select_and_ask(10.0, audio_feed(10.0, 30.0))
        path = tmp_path / "session.log"
        orch.save_event_log(path)
        lines = path.read_text().splitlines()
        assert len(lines) == len(orch.events)
        for line in lines:
            parts = line.split(" ", 2)
            float(parts[0])  # leading timestamp parses
            assert parts[1]
