/**
 * DOM wiring for the HUD simulator: mouse-as-gaze canvas with a
 * border-only clipping-window rectangle, three sliders, trigger button,
 * mic/partial panel with an editable query, and the streaming caption.
 * All pipeline truth comes from server records; this file only renders.
 */
import { GatewayClient } from "./client.js";
import { applyRecord, boundsToCanvasRect, disconnected, initialState, mouseToNormalized, } from "./state.js";
let state = initialState();
let dirty = true;
function $(id) {
    const el = document.getElementById(id);
    if (!el)
        throw new Error(`missing element #${id}`);
    return el;
}
const canvas = $("hud");
const ctx = canvas.getContext("2d");
const frameImg = new Image();
let frameLoaded = false;
const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
const client = new GatewayClient(wsUrl, {
    onRecord(record) {
        state = applyRecord(state, record);
        dirty = true;
        syncPanels();
    },
    onOpen() {
        dirty = true;
    },
    onClose() {
        state = disconnected(state);
        dirty = true;
        syncPanels();
    },
});
function refreshFrame() {
    const img = new Image();
    img.onload = () => {
        frameImg.src = img.src;
        frameLoaded = true;
        dirty = true;
    };
    img.src = `/frame.jpg?t=${Date.now()}`;
}
function draw() {
    if (dirty) {
        dirty = false;
        ctx.clearRect(0, 0, canvas.width, canvas.height);
        if (frameLoaded) {
            ctx.drawImage(frameImg, 0, 0, canvas.width, canvas.height);
        }
        else {
            ctx.fillStyle = "#202020";
            ctx.fillRect(0, 0, canvas.width, canvas.height);
        }
        const hello = state.hello;
        const win = state.window;
        if (hello && win && win.bounds) {
            const r = boundsToCanvasRect(win.bounds, hello.frameW, hello.frameH, canvas.width, canvas.height);
            ctx.strokeStyle = "#e53935"; // border-only rectangle, transparent fill
            ctx.lineWidth = 2;
            ctx.strokeRect(r.x, r.y, r.w, r.h);
        }
        if (!state.connected) {
            ctx.fillStyle = "rgba(40,40,40,0.6)";
            ctx.fillRect(0, 0, canvas.width, canvas.height);
            ctx.fillStyle = "#fff";
            ctx.font = "16px sans-serif";
            ctx.fillText("reconnecting…", 16, 28);
        }
    }
    requestAnimationFrame(draw);
}
function syncPanels() {
    $("mic").style.visibility = state.micOpen ? "visible" : "hidden";
    $("status").textContent = state.connected
        ? (state.busy ? "busy" : "connected")
        : "disconnected";
    const queryBox = $("query");
    if (state.micOpen) {
        // live editable field follows the partial transcript
        queryBox.value = state.partial;
    }
    else if (state.committed !== null && queryBox.value === "") {
        queryBox.value = state.committed;
    }
    $("caption").textContent = state.caption;
    const thumb = $("thumb");
    if (state.thumbnail) {
        thumb.src = `data:image/jpeg;base64,${state.thumbnail}`;
        thumb.style.display = "inline";
    }
    if (state.error) {
        $("status").textContent = `error: ${state.error}`;
    }
}
canvas.addEventListener("mousemove", (ev) => {
    if (!state.hello)
        return;
    const rect = canvas.getBoundingClientRect();
    const { u, v } = mouseToNormalized(ev.clientX - rect.left, ev.clientY - rect.top, rect.width, rect.height, state.hello);
    client.gaze(u, v);
});
canvas.addEventListener("click", () => client.trigger());
document.addEventListener("keydown", (ev) => {
    if (ev.code === "Space" && document.activeElement !== $("query")) {
        ev.preventDefault();
        client.trigger();
    }
});
for (const which of ["width", "height", "distance"]) {
    const slider = $(which);
    slider.addEventListener("input", () => client.slider(which, Number(slider.value)));
}
$("submit").addEventListener("click", () => {
    const text = $("query").value.trim();
    if (text)
        client.query(text);
});
$("clear").addEventListener("click", () => {
    $("query").value = "";
    client.clear();
});
$("mode-toggle").addEventListener("change", (ev) => {
    client.mode(ev.target.checked ? "dwell" : "select_and_ask");
});
$("mic-script-apply").addEventListener("click", () => {
    client.micScript($("mic-script").value);
});
client.connect();
setInterval(refreshFrame, 250);
refreshFrame();
requestAnimationFrame(draw);
