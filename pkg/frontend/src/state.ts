/**
 * Pure UI state: every server record is applied through `apply`, and the
 * rendered rectangle derives only from the last window record — the
 * client never predicts geometry locally, so what is displayed is what
 * the server will crop.
 */

import { Message, parseMessage } from "./protocol.js";

export interface PixelBounds {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export interface WindowEcho {
  centerU: number;
  centerV: number;
  widthN: number;
  heightN: number;
  bounds: PixelBounds | null;
}

export interface HelloInfo {
  proto: number;
  spanX: number;
  spanY: number;
  frameW: number;
  frameH: number;
  hudDistance: number;
  mode: string;
}

export interface UiState {
  connected: boolean;
  hello: HelloInfo | null;
  window: WindowEcho | null;
  micOpen: boolean;
  partial: string;
  committed: string | null;
  caption: string;
  answer: string | null;
  answerStats: Record<string, string> | null;
  thumbnail: string | null; // base64 JPEG of the last crop
  cropHash: string | null;
  busy: boolean;
  error: string | null;
}

export function initialState(): UiState {
  return {
    connected: false,
    hello: null,
    window: null,
    micOpen: false,
    partial: "",
    committed: null,
    caption: "",
    answer: null,
    answerStats: null,
    thumbnail: null,
    cropHash: null,
    busy: false,
    error: null,
  };
}

export function applyRecord(state: UiState, record: string): UiState {
  return apply(state, parseMessage(record));
}

export function apply(state: UiState, msg: Message): UiState {
  const f = msg.fields;
  switch (msg.tag) {
    case "hello":
      return {
        ...state,
        connected: true,
        hello: {
          proto: Number(f.proto),
          spanX: Number(f.span_x ?? "0"),
          spanY: Number(f.span_y ?? "0"),
          frameW: Number(f.frame_w ?? "0"),
          frameH: Number(f.frame_h ?? "0"),
          hudDistance: Number(f.hud_distance ?? "1"),
          mode: f.mode ?? "select_and_ask",
        },
      };
    case "window": {
      const hasBounds = f.x0 !== undefined;
      return {
        ...state,
        window: {
          centerU: Number(f.cu),
          centerV: Number(f.cv),
          widthN: Number(f.w),
          heightN: Number(f.h),
          bounds: hasBounds
            ? { x0: Number(f.x0), y0: Number(f.y0), x1: Number(f.x1), y1: Number(f.y1) }
            : null,
        },
      };
    }
    case "capture":
      return {
        ...state,
        thumbnail: f.thumbnail ?? null,
        cropHash: f.crop_hash ?? null,
        caption: "",
        answer: null,
        busy: false,
      };
    case "mic_open":
      return { ...state, micOpen: true, partial: "", committed: null };
    case "partial":
      return { ...state, partial: f.text ?? "" };
    case "committed":
      return { ...state, micOpen: false, committed: f.text ?? "" };
    case "token":
      return { ...state, caption: state.caption + (f.text ?? "") };
    case "answer":
      return {
        ...state,
        answer: f.text ?? "",
        caption: f.text ?? "",
        answerStats: f,
        busy: false,
      };
    case "busy":
      return { ...state, busy: true };
    case "error":
      return { ...state, error: f.msg ?? "unknown error" };
    default:
      return state; // forward-compatible: unknown tags are ignored
  }
}

export function disconnected(state: UiState): UiState {
  return { ...state, connected: false, micOpen: false };
}

/**
 * Mouse position on the canvas -> normalized window coordinates, going
 * through the HUD-plane constants from the hello record so client and
 * server agree on the mapping without duplicating it beyond rendering.
 */
export function mouseToNormalized(
  px: number,
  py: number,
  canvasW: number,
  canvasH: number,
  hello: HelloInfo,
): { u: number; v: number } {
  // canvas spans [-spanX, spanX] x [-spanY, spanY], +y up
  const x = ((px / canvasW) * 2 - 1) * hello.spanX;
  const y = (1 - (py / canvasH) * 2) * hello.spanY;
  const cx = Math.max(-hello.spanX, Math.min(hello.spanX, x));
  const cy = Math.max(-hello.spanY, Math.min(hello.spanY, y));
  return {
    u: 0.5 * (1 + cx / hello.spanX),
    v: 0.5 * (1 - cy / hello.spanY),
  };
}

/** Pixel bounds in frame coordinates -> canvas-space rectangle. */
export function boundsToCanvasRect(
  b: PixelBounds,
  frameW: number,
  frameH: number,
  canvasW: number,
  canvasH: number,
): { x: number; y: number; w: number; h: number } {
  const sx = canvasW / frameW;
  const sy = canvasH / frameH;
  return { x: b.x0 * sx, y: b.y0 * sy, w: (b.x1 - b.x0) * sx, h: (b.y1 - b.y0) * sy };
}
