// DOM wiring for the labeling GUI: live sample canvas, probability bars,
// class buttons 0-9 + unsure, keyboard shortcuts, speed slider, autospeed
// and don't-show-if-sure toggles, live counters.

import { SessionClient } from "./client.js";
import { attachKeyboard } from "./keyboard.js";
import { UNSURE, WireFrame, makeEvent } from "./protocol.js";
import { drawFrame, probBarHeights } from "./render.js";
import { UiState, applyLocalPick, applyServerMessage, initialState } from "./state.js";

const SCALE = 8;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function wsUrl(): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/session`;
}

let state: UiState = initialState();

const canvas = el<HTMLCanvasElement>("sample");
const ctx = canvas.getContext("2d")!;
const bars = el<HTMLDivElement>("bars");
const buttonsBox = el<HTMLDivElement>("buttons");
const unsureButton = el<HTMLButtonElement>("unsure");
const slider = el<HTMLInputElement>("speed");
const speedValue = el<HTMLSpanElement>("speed-value");
const autospeedBox = el<HTMLInputElement>("autospeed");
const skipBox = el<HTMLInputElement>("skip-if-sure");
const stopButton = el<HTMLButtonElement>("stop");
const banner = el<HTMLDivElement>("banner");
const countersBox = el<HTMLDivElement>("counters");
const frameIdBox = el<HTMLSpanElement>("frame-id");

const labelButtons: HTMLButtonElement[] = [];
for (let k = 0; k < 10; k++) {
  const b = document.createElement("button");
  b.textContent = String(k);
  b.addEventListener("click", () => pickLabel(k));
  buttonsBox.appendChild(b);
  labelButtons.push(b);
}

const client = new SessionClient({
  url: wsUrl(),
  reconnectDelayMs: 1000,
  onMessage: (msg) => {
    state = applyServerMessage(state, msg);
    if (msg.kind === "frame") paint(msg);
    render();
  },
  onConnectionChange: (connected, queued) => {
    state = {
      ...state,
      connection: connected ? "connected" : "disconnected",
      queuedWarning: queued > 0,
    };
    render();
  },
  onProtocolError: (err) => {
    state = { ...state, errorBanner: `bad frame: ${err.message}` };
    render();
  },
});

function pickLabel(k: number): void {
  state = applyLocalPick(state, k);
  client.sendEvent(makeEvent("set_label", k));
  render();
}

function pickUnsure(): void {
  state = applyLocalPick(state, UNSURE);
  client.sendEvent(makeEvent("set_unsure"));
  render();
}

unsureButton.addEventListener("click", pickUnsure);
stopButton.addEventListener("click", () => client.sendEvent(makeEvent("stop")));

slider.addEventListener("input", () => {
  const fps = Number(slider.value);
  state = { ...state, speed: fps };
  client.sendEvent(makeEvent("set_speed", fps));
  render();
});

autospeedBox.addEventListener("change", () => {
  state = { ...state, autospeed: autospeedBox.checked };
  client.sendEvent(makeEvent("toggle_autospeed"));
});

skipBox.addEventListener("change", () => {
  state = { ...state, skipIfSure: skipBox.checked };
  client.sendEvent(makeEvent("toggle_skip_if_sure"));
});

attachKeyboard(document, () => state.nLabels, (action) => {
  if (action.event === "set_label") pickLabel(action.arg!);
  else pickUnsure();
});

function paint(frame: WireFrame): void {
  canvas.width = frame.width * SCALE;
  canvas.height = frame.height * SCALE;
  drawFrame(ctx, frame, SCALE);
  frameIdBox.textContent = `#${frame.frame_id}`;
}

function render(): void {
  labelButtons.forEach((b, k) =>
    b.classList.toggle("active", state.activeLabel === k),
  );
  unsureButton.classList.toggle("active", state.activeLabel === UNSURE);

  if (state.frame) {
    const heights = probBarHeights(state.frame.label_probs);
    bars.innerHTML = "";
    heights.forEach((h, k) => {
      const bar = document.createElement("div");
      bar.className = "bar";
      bar.style.height = `${Math.round(h * 100)}%`;
      bar.title = `${k}: ${state.frame!.label_probs[k].toFixed(2)}`;
      bars.appendChild(bar);
    });
  }

  speedValue.textContent = `${state.speed} fps`;
  if (state.errorBanner) {
    banner.textContent = state.errorBanner;
    banner.className = "banner error";
  } else if (state.connection === "disconnected") {
    banner.textContent = state.queuedWarning
      ? `disconnected; ${client.queuedCount} event(s) queued`
      : "disconnected; reconnecting";
    banner.className = "banner warn";
  } else if (state.stopped) {
    banner.textContent = "session stopped";
    banner.className = "banner";
  } else {
    banner.textContent = state.role === "observer" ? "read-only observer" : "";
    banner.className = "banner";
  }

  if (state.counters) {
    const c = state.counters;
    countersBox.textContent =
      `frames ${c.frames_shown} | labeled ${c.labels_applied} | ` +
      `undone ${c.undos} | skipped ${c.skips} | ` +
      `${state.elapsedSeconds.toFixed(0)}s labeling`;
  }
}

client.connect();
render();
