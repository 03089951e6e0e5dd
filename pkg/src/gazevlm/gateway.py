"""Realtime gateway exposing the orchestrator to the HUD simulator UI.

One FastAPI app: static UI assets, a JPEG endpoint for the current frame,
and a WebSocket carrying protocol records (see :mod:`gazevlm.protocol`).
The first WebSocket connection is the interactive session; later ones get
read-only event mirroring. All pipeline mutations are funneled through a
single worker task so event ordering is preserved.
"""

from __future__ import annotations

import asyncio
import base64
import io
import logging
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse, Response
from fastapi.staticfiles import StaticFiles
from PIL import Image

from .capture import (
    EndOfSource,
    Frame,
    FrameSource,
    FrameSourceError,
    ImageFolderSource,
    SyntheticSource,
)
from .config import AppConfig
from .geometry import PixelBounds, WindowState, fit_hud
from .orchestrator import Mode, SessionOrchestrator
from .protocol import PROTO_VERSION, ProtocolError, encode_message, parse_message
from .speech import AsrEvent, MockAsrBackend, NullTts, ScriptedTts, parse_mock_script
from .vlm.engine import VlmEngine

log = logging.getLogger(__name__)

AUDIO_CHUNK_PERIOD = 0.1  # seconds of PCM per pumped chunk
FRAME_PUMP_HZ = 30.0


def _make_frame_source(config: AppConfig) -> FrameSource:
    if config.frame_source == "synthetic":
        return SyntheticSource(width_px=640, height_px=480, pattern="index")
    return ImageFolderSource(config.frame_source)


def _thumbnail_b64(pixels: np.ndarray, max_side: int = 128) -> str:
    pil = Image.fromarray(np.asarray(pixels))
    pil.thumbnail((max_side, max_side))
    buf = io.BytesIO()
    pil.save(buf, format="JPEG", quality=80)
    return base64.b64encode(buf.getvalue()).decode("ascii")


class Gateway:
    def __init__(self, config: AppConfig, engine: Optional[VlmEngine] = None):
        self.config = config
        self.engine = engine or VlmEngine.from_dir(config.model_dir)
        self.frame_source = _make_frame_source(config)
        tts = ScriptedTts() if config.tts_backend == "scripted" else (
            None if config.tts_backend == "none" else NullTts()
        )
        from .speech import SpeechHub

        self.hub = SpeechHub(tts=tts)
        self.orchestrator = SessionOrchestrator(
            engine=self.engine,
            hub=self.hub,
            asr_backend_factory=self._make_asr_backend,
            config=config,
            emit=self._emit,
        )
        self.loop: Optional[asyncio.AbstractEventLoop] = None
        self.interactive: Optional[WebSocket] = None
        self.mirrors: list[WebSocket] = []
        self._commands: asyncio.Queue = asyncio.Queue()
        self._tasks: list[asyncio.Task] = []
        self._mic_script: list[AsrEvent] = []
        self._session_t0 = 0.0
        self._audio_task: Optional[asyncio.Task] = None
        self._last_answer: Optional[str] = None
        self._outbox: list[str] = []  # answers produced while disconnected

    # -- backends ----------------------------------------------------------

    def _make_asr_backend(self) -> MockAsrBackend:
        events = [
            AsrEvent(e.timestamp + self._session_t0, e.kind, e.text)
            for e in self._mic_script
        ]
        return MockAsrBackend(events)

    def now(self) -> float:
        assert self.loop is not None
        return self.loop.time()

    # -- outbound ----------------------------------------------------------

    def _emit(self, name: str, payload: dict) -> None:
        record = self._to_record(name, payload)
        if record is None:
            return
        if name == "answer":
            self._last_answer = record
        if self.loop is None:
            return
        self.loop.call_soon_threadsafe(self._broadcast, record)

    def _to_record(self, name: str, payload: dict) -> Optional[str]:
        if name == "window_update":
            w: WindowState = payload["window"]
            fields = dict(cu=w.center_u, cv=w.center_v, w=w.width_n, h=w.height_n)
            b: Optional[PixelBounds] = payload.get("bounds")
            if b is not None:
                fields.update(x0=b.x0, y0=b.y0, x1=b.x1, y1=b.y1)
            return encode_message("window", **fields)
        if name == "capture":
            b = payload["bounds"]
            return encode_message(
                "capture",
                x0=b.x0, y0=b.y0, x1=b.x1, y1=b.y1,
                crop_hash=payload["crop_hash"],
                thumbnail=_thumbnail_b64(payload["crop"].pixels),
            )
        if name == "mic_open":
            return encode_message("mic_open")
        if name == "partial":
            return encode_message("partial", text=payload["text"])
        if name == "committed":
            return encode_message(
                "committed", text=payload["text"], empty=int(payload["empty"])
            )
        if name == "token":
            return encode_message("token", text=payload["text"])
        if name == "answer":
            return encode_message(
                "answer",
                text=payload["text"],
                crop_hash=payload["crop_hash"],
                encode_s=f"{payload['encode_s']:.6f}",
                decode_s=f"{payload['decode_s']:.6f}",
                tokens=payload["tokens"],
                tg_tok_per_s=f"{payload['tg_tok_per_s']:.6f}",
            )
        if name == "busy":
            return encode_message("busy")
        if name == "error":
            return encode_message("error", msg=payload["msg"])
        return None

    def _broadcast(self, record: str) -> None:
        targets = ([self.interactive] if self.interactive else []) + self.mirrors
        if self.interactive is None:
            self._outbox.append(record)
        for ws in targets:
            asyncio.ensure_future(self._send_safe(ws, record))

    async def _send_safe(self, ws: WebSocket, record: str) -> None:
        try:
            await ws.send_text(record)
        except Exception:
            pass

    # -- background tasks --------------------------------------------------

    async def start(self) -> None:
        self.loop = asyncio.get_running_loop()
        self._tasks.append(asyncio.create_task(self._frame_pump()))
        self._tasks.append(asyncio.create_task(self._command_worker()))

    async def stop(self) -> None:
        for t in self._tasks:
            t.cancel()
        if self._audio_task:
            self._audio_task.cancel()

    async def _frame_pump(self) -> None:
        period = 1.0 / FRAME_PUMP_HZ
        while True:
            try:
                frame = self.frame_source.next_frame()
                self.orchestrator.update_frame(frame)
            except (EndOfSource, FrameSourceError) as exc:
                log.warning("frame source: %s", exc)
            await asyncio.sleep(period)

    async def _command_worker(self) -> None:
        while True:
            record = await self._commands.get()
            try:
                await self._handle(record)
            except ProtocolError as exc:
                self._broadcast(encode_message("error", msg=str(exc)))
            except Exception as exc:  # malformed input must not kill the session
                log.exception("command failed")
                self._broadcast(encode_message("error", msg=str(exc)))

    async def _handle(self, record: str) -> None:
        tag, f = parse_message(record)
        orch = self.orchestrator
        now = self.now()
        if tag == "hello":
            self._send_hello()
        elif tag == "gaze":
            await asyncio.to_thread(orch.move_gaze, float(f["u"]), float(f["v"]), now)
        elif tag == "slider":
            which = f["which"]
            value = float(f["value"])
            if which == "width":
                orch.set_size(width_n=value)
            elif which == "height":
                orch.set_size(height_n=value)
            elif which == "distance":
                orch.set_distance(value)
                orch._emit_window()
            else:
                raise ProtocolError(f"unknown slider {which!r}")
        elif tag == "mode":
            orch.set_mode(Mode(f["mode"]), now)
        elif tag == "trigger":
            self._session_t0 = now
            ok = await asyncio.to_thread(orch.trigger, now)
            if ok:
                self._start_audio_pump(now)
        elif tag == "query":
            await asyncio.to_thread(orch.submit_text, f["text"], now)
        elif tag == "mic_script":
            self._mic_script = parse_mock_script(f["script"])
        elif tag == "clear":
            self._session_t0 = now
            await asyncio.to_thread(orch.clear, now)
        else:
            raise ProtocolError(f"unknown tag {tag!r}")

    def _start_audio_pump(self, t0: float) -> None:
        if self._audio_task is not None:
            self._audio_task.cancel()
        self._audio_task = asyncio.create_task(self._audio_pump(t0))

    async def _audio_pump(self, t0: float) -> None:
        from .speech import silence_chunk

        chunk = silence_chunk(AUDIO_CHUNK_PERIOD)
        t = t0
        while self.orchestrator._pending is not None:
            t += AUDIO_CHUNK_PERIOD
            delay = t - self.now()
            if delay > 0:
                await asyncio.sleep(delay)
            answer = await asyncio.to_thread(self.orchestrator.feed_audio, chunk, t)
            if answer is not None:
                break

    # -- websocket session -------------------------------------------------

    def _send_hello(self) -> None:
        cfg = self.config
        frame = self.orchestrator.frame
        fields = dict(
            proto=PROTO_VERSION,
            hud_half_width=cfg.hud_half_width,
            hud_half_height=cfg.hud_half_height,
            hud_distance=self.orchestrator.hud_distance,
            mode=self.orchestrator.mode.value,
        )
        if frame is not None:
            fit = fit_hud(cfg.hud(), frame.intrinsics)
            fields.update(
                span_x=fit.span_x, span_y=fit.span_y,
                frame_w=frame.width_px, frame_h=frame.height_px,
            )
        self._broadcast(encode_message("hello", **fields))
        self.orchestrator._emit_window()
        if self._last_answer is not None:
            self._broadcast(self._last_answer)

    async def handle_ws(self, ws: WebSocket) -> None:
        await ws.accept()
        interactive = self.interactive is None
        if interactive:
            self.interactive = ws
            # Flush anything produced while no client was attached.
            for record in self._outbox:
                await self._send_safe(ws, record)
            self._outbox.clear()
            self._send_hello()
        else:
            self.mirrors.append(ws)
            self._send_hello()
        try:
            while True:
                record = await ws.receive_text()
                if interactive:
                    await self._commands.put(record)
                # Mirrors are read-only; their input is dropped.
        except WebSocketDisconnect:
            pass
        finally:
            if interactive:
                self.interactive = None
            elif ws in self.mirrors:
                self.mirrors.remove(ws)


_FALLBACK_PAGE = """<!doctype html><title>HUD simulator</title>
<p>UI assets not built. Run <code>npm run build</code> in frontend/ and copy
dist/ into src/gazevlm/ui/, or use the WebSocket protocol directly at /ws.</p>
"""


def build_app(config: AppConfig, engine: Optional[VlmEngine] = None) -> FastAPI:
    gateway = Gateway(config, engine=engine)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        await gateway.start()
        yield
        await gateway.stop()

    app = FastAPI(lifespan=lifespan)
    app.state.gateway = gateway

    @app.get("/")
    async def index():
        page = Path(__file__).parent / "ui" / "index.html"
        if page.exists():
            return HTMLResponse(page.read_text())
        return HTMLResponse(_FALLBACK_PAGE)

    ui_dir = Path(__file__).parent / "ui"
    if ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir)), name="ui")

    @app.get("/frame.jpg")
    async def frame_jpg():
        frame = gateway.orchestrator.frame
        if frame is None:
            return Response(status_code=404)
        buf = io.BytesIO()
        Image.fromarray(np.asarray(frame.pixels)).save(buf, format="JPEG", quality=85)
        return Response(content=buf.getvalue(), media_type="image/jpeg")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await gateway.handle_ws(ws)

    return app


def serve(config: AppConfig, host: str = "127.0.0.1", port: int = 8787) -> None:
    import uvicorn

    uvicorn.run(build_app(config), host=host, port=port, log_level="warning")
