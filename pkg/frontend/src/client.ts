// Session socket wrapper: parses server messages, sends events in user
// order over a single connection, queues events while disconnected, and
// flushes the queue on reconnect.

import {
  ProtocolError,
  ServerMessage,
  WireEvent,
  parseServerMessage,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export interface SessionClientOptions {
  url: string;
  socketFactory?: (url: string) => SocketLike;
  reconnectDelayMs?: number;
  onMessage: (msg: ServerMessage) => void;
  onConnectionChange?: (connected: boolean, queued: number) => void;
  onProtocolError?: (err: ProtocolError) => void;
}

export class SessionClient {
  private opts: Required<Pick<SessionClientOptions, "url" | "onMessage">> &
    SessionClientOptions;
  private socket: SocketLike | null = null;
  private queue: WireEvent[] = [];
  private connected = false;
  private closedByUser = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(opts: SessionClientOptions) {
    this.opts = opts;
  }

  get isConnected(): boolean {
    return this.connected;
  }

  get queuedCount(): number {
    return this.queue.length;
  }

  connect(): void {
    this.closedByUser = false;
    const factory =
      this.opts.socketFactory ??
      ((url: string) => new WebSocket(url) as unknown as SocketLike);
    const socket = factory(this.opts.url);
    this.socket = socket;

    socket.onopen = () => {
      this.connected = true;
      const pending = this.queue;
      this.queue = [];
      for (const event of pending) {
        socket.send(JSON.stringify(event));
      }
      this.notify();
    };
    socket.onmessage = (ev) => {
      try {
        this.opts.onMessage(parseServerMessage(String(ev.data)));
      } catch (err) {
        if (err instanceof ProtocolError && this.opts.onProtocolError) {
          this.opts.onProtocolError(err);
        }
      }
    };
    socket.onclose = () => {
      this.connected = false;
      this.socket = null;
      this.notify();
      if (!this.closedByUser && this.opts.reconnectDelayMs) {
        this.reconnectTimer = setTimeout(
          () => this.connect(),
          this.opts.reconnectDelayMs,
        );
      }
    };
    socket.onerror = () => {
      // onclose follows; nothing to do here
    };
  }

  // Events keep user-action order: queued entries flush before anything
  // sent after reconnect.
  sendEvent(event: WireEvent): void {
    if (this.connected && this.socket) {
      this.socket.send(JSON.stringify(event));
    } else {
      this.queue.push(event);
      this.notify();
    }
  }

  close(): void {
    this.closedByUser = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
    this.socket = null;
    this.connected = false;
  }

  private notify(): void {
    this.opts.onConnectionChange?.(this.connected, this.queue.length);
  }
}
