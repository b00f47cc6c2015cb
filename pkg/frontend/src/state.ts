// UI state: a single reducer over server messages plus optimistic local
// highlights. The server is the source of truth for the active label; a
// local pick highlights immediately and is reconciled by the next frame
// or status message.

import { ServerMessage, SessionCounters, UNSURE, WireFrame } from "./protocol.js";

export type Connection = "connecting" | "connected" | "disconnected";

export interface UiState {
  connection: Connection;
  role: "labeler" | "observer" | null;
  nLabels: number;
  frame: WireFrame | null;
  activeLabel: number; // UNSURE or class index; the highlighted button
  optimistic: boolean; // highlight not yet acknowledged by the server
  speed: number;
  autospeed: boolean;
  skipIfSure: boolean;
  counters: SessionCounters | null;
  elapsedSeconds: number;
  stopped: boolean;
  errorBanner: string | null;
  queuedWarning: boolean;
}

export function initialState(): UiState {
  return {
    connection: "connecting",
    role: null,
    nLabels: 10,
    frame: null,
    activeLabel: UNSURE,
    optimistic: false,
    speed: 6,
    autospeed: true,
    skipIfSure: false,
    counters: null,
    elapsedSeconds: 0,
    stopped: false,
    errorBanner: null,
    queuedWarning: false,
  };
}

export function applyServerMessage(state: UiState, msg: ServerMessage): UiState {
  switch (msg.kind) {
    case "frame":
      return {
        ...state,
        frame: msg,
        activeLabel: msg.active_label,
        optimistic: false,
        counters: msg.counters,
        elapsedSeconds: msg.elapsed_seconds,
        errorBanner: null,
      };
    case "status":
      return {
        ...state,
        role: msg.role,
        nLabels: msg.n_labels,
        activeLabel: state.optimistic ? state.activeLabel : msg.active_label,
        stopped: msg.stopped,
      };
    case "error":
      // keep the connection; surface the message
      return { ...state, errorBanner: msg.message };
  }
}

export function applyLocalPick(state: UiState, label: number): UiState {
  return { ...state, activeLabel: label, optimistic: true };
}

// Exactly one of {class button, unsure button} is highlighted.
export function highlightedButton(state: UiState): number {
  return state.activeLabel;
}
