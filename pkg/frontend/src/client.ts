/**
 * Thin WebSocket client: sends protocol records, surfaces received
 * records to a callback, reconnects with backoff when the gateway drops.
 */

import { encodeMessage } from "./protocol.js";

export interface ClientHooks {
  onRecord(record: string): void;
  onOpen(): void;
  onClose(): void;
}

export class GatewayClient {
  private ws: WebSocket | null = null;
  private closed = false;
  private retryMs = 500;

  constructor(private url: string, private hooks: ClientHooks) {}

  connect(): void {
    this.closed = false;
    this.open();
  }

  private open(): void {
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.retryMs = 500;
      this.hooks.onOpen();
      ws.send(encodeMessage("hello", { proto: 1 }));
    };
    ws.onmessage = (ev) => this.hooks.onRecord(String(ev.data));
    ws.onclose = () => {
      this.hooks.onClose();
      if (!this.closed) {
        setTimeout(() => this.open(), this.retryMs);
        this.retryMs = Math.min(this.retryMs * 2, 5000);
      }
    };
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }

  private send(record: string): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(record);
    }
  }

  gaze(u: number, v: number): void {
    this.send(encodeMessage("gaze", { u: u.toFixed(4), v: v.toFixed(4) }));
  }

  slider(which: "width" | "height" | "distance", value: number): void {
    this.send(encodeMessage("slider", { which, value }));
  }

  trigger(): void {
    this.send(encodeMessage("trigger"));
  }

  query(text: string): void {
    this.send(encodeMessage("query", { text }));
  }

  clear(): void {
    this.send(encodeMessage("clear"));
  }

  mode(mode: string): void {
    this.send(encodeMessage("mode", { mode }));
  }

  micScript(script: string): void {
    this.send(encodeMessage("mic_script", { script }));
  }
}
