/**
 * Thin WebSocket client: sends protocol records, surfaces received
 * records to a callback, reconnects with backoff when the gateway drops.
 */
import { encodeMessage } from "./protocol.js";
export class GatewayClient {
    constructor(url, hooks) {
        this.url = url;
        this.hooks = hooks;
        this.ws = null;
        this.closed = false;
        this.retryMs = 500;
    }
    connect() {
        this.closed = false;
        this.open();
    }
    open() {
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
    close() {
        this.closed = true;
        this.ws?.close();
    }
    send(record) {
        if (this.ws && this.ws.readyState === WebSocket.OPEN) {
            this.ws.send(record);
        }
    }
    gaze(u, v) {
        this.send(encodeMessage("gaze", { u: u.toFixed(4), v: v.toFixed(4) }));
    }
    slider(which, value) {
        this.send(encodeMessage("slider", { which, value }));
    }
    trigger() {
        this.send(encodeMessage("trigger"));
    }
    query(text) {
        this.send(encodeMessage("query", { text }));
    }
    clear() {
        this.send(encodeMessage("clear"));
    }
    mode(mode) {
        this.send(encodeMessage("mode", { mode }));
    }
    micScript(script) {
        this.send(encodeMessage("mic_script", { script }));
    }
}
