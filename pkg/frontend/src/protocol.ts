// Wire protocol for the /session socket: server sends frame/status/error
// messages, the client sends events. Mirrors the service schema.

export interface SessionCounters {
  frames_shown: number;
  labels_applied: number;
  skips: number;
  undos: number;
  reinits: number;
  retry_exhaustions: number;
}

export interface WireFrame {
  kind: "frame";
  frame_id: number;
  width: number;
  height: number;
  pixels: string; // base64, one byte per pixel, round(p * 255)
  label_probs: number[];
  fps: number;
  active_label: number;
  counters: SessionCounters;
  elapsed_seconds: number;
}

export interface WireStatus {
  kind: "status";
  role: "labeler" | "observer";
  width: number;
  height: number;
  n_labels: number;
  active_label: number;
  stopped: boolean;
  [key: string]: unknown;
}

export interface WireError {
  kind: "error";
  message: string;
}

export type ServerMessage = WireFrame | WireStatus | WireError;

export type EventKind =
  | "set_label"
  | "set_unsure"
  | "set_speed"
  | "toggle_autospeed"
  | "toggle_skip_if_sure"
  | "stop";

export interface WireEvent {
  kind: "event";
  event: EventKind;
  arg: number | null;
  t_ms: number;
}

export const UNSURE = -1;

export class ProtocolError extends Error {}

export function parseServerMessage(raw: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new ProtocolError("not JSON");
  }
  const msg = data as Record<string, unknown>;
  switch (msg.kind) {
    case "frame": {
      if (
        typeof msg.frame_id !== "number" ||
        typeof msg.width !== "number" ||
        typeof msg.height !== "number" ||
        typeof msg.pixels !== "string" ||
        !Array.isArray(msg.label_probs)
      ) {
        throw new ProtocolError("malformed frame message");
      }
      return msg as unknown as WireFrame;
    }
    case "status":
      return msg as unknown as WireStatus;
    case "error": {
      if (typeof msg.message !== "string") {
        throw new ProtocolError("malformed error message");
      }
      return msg as unknown as WireError;
    }
    default:
      throw new ProtocolError(`unknown message kind ${String(msg.kind)}`);
  }
}

export function makeEvent(
  event: EventKind,
  arg: number | null = null,
  now: () => number = Date.now,
): WireEvent {
  if (event === "set_label") {
    if (arg === null || !Number.isInteger(arg) || arg < 0) {
      throw new ProtocolError(`set_label needs a non-negative label, got ${arg}`);
    }
  }
  if (event === "set_speed" && (arg === null || !Number.isFinite(arg))) {
    throw new ProtocolError("set_speed needs a numeric fps");
  }
  return { kind: "event", event, arg, t_ms: now() };
}

export function decodePixels(frame: WireFrame): Uint8Array {
  const bin = atob(frame.pixels);
  const expected = frame.width * frame.height;
  if (bin.length !== expected) {
    throw new ProtocolError(
      `pixel payload is ${bin.length} bytes, expected ${expected}`,
    );
  }
  const out = new Uint8Array(expected);
  for (let i = 0; i < expected; i++) {
    out[i] = bin.charCodeAt(i);
  }
  return out;
}
