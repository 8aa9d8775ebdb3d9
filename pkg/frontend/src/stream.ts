// Event stream subscription over the service WebSocket. The socket
// constructor is injectable so browser (native WebSocket) and tests
// (the `ws` package or a fake) share the same reconnection logic.

import type { ServerEvent } from './types.js';

export interface SocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  close(): void;
  send(data: string): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface StreamCallbacks {
  onEvent: (event: ServerEvent) => void;
  onStatus?: (status: 'connecting' | 'live' | 'lost') => void;
}

export class EventStream {
  private socket: SocketLike | null = null;
  private stopped = false;
  private cursor = 0;
  private retryMs = 250;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private urlFor: (since: number) => string,
    private factory: SocketFactory,
    private callbacks: StreamCallbacks,
  ) {}

  start(since = 0): void {
    this.cursor = since;
    this.stopped = false;
    this.connect();
  }

  private connect(): void {
    if (this.stopped) return;
    this.callbacks.onStatus?.('connecting');
    const socket = this.factory(this.urlFor(this.cursor));
    this.socket = socket;
    socket.onopen = () => {
      this.retryMs = 250;
      this.callbacks.onStatus?.('live');
    };
    socket.onmessage = (ev) => {
      let parsed: ServerEvent | { error: string };
      try {
        parsed = JSON.parse(String(ev.data));
      } catch {
        return;
      }
      if ('error' in parsed) return;
      this.cursor = parsed.seq + 1;
      this.callbacks.onEvent(parsed);
    };
    const reconnect = () => {
      if (this.stopped) return;
      this.callbacks.onStatus?.('lost');
      if (this.retryTimer) return;
      this.retryTimer = setTimeout(() => {
        this.retryTimer = null;
        this.retryMs = Math.min(this.retryMs * 2, 5000);
        this.connect();
      }, this.retryMs);
    };
    socket.onclose = reconnect;
    socket.onerror = reconnect;
  }

  stop(): void {
    this.stopped = true;
    if (this.retryTimer) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    this.socket?.close();
    this.socket = null;
  }
}
