import { describe, expect, it, vi } from 'vitest';

import { EventStream, type SocketLike } from '../src/stream.js';

class FakeSocket implements SocketLike {
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  closed = false;

  constructor(public url: string) {}

  close(): void {
    this.closed = true;
  }

  send(): void {}

  emit(event: object): void {
    this.onmessage?.({ data: JSON.stringify(event) });
  }
}

describe('EventStream', () => {
  it('delivers events and advances its cursor', () => {
    const sockets: FakeSocket[] = [];
    const received: number[] = [];
    const stream = new EventStream(
      (since) => `ws://test/events?since=${since}`,
      (url) => {
        const s = new FakeSocket(url);
        sockets.push(s);
        return s;
      },
      { onEvent: (e) => received.push(e.seq) },
    );
    stream.start(0);
    sockets[0].onopen?.();
    sockets[0].emit({ event: 'SessionCreated', round: 0, seq: 0, payload: {} });
    sockets[0].emit({ event: 'StrokesSubmitted', round: 0, seq: 1, payload: {} });
    expect(received).toEqual([0, 1]);
    stream.stop();
    expect(sockets[0].closed).toBe(true);
  });

  it('reconnects from the cursor after a drop', async () => {
    vi.useFakeTimers();
    const sockets: FakeSocket[] = [];
    const statuses: string[] = [];
    const stream = new EventStream(
      (since) => `ws://test/events?since=${since}`,
      (url) => {
        const s = new FakeSocket(url);
        sockets.push(s);
        return s;
      },
      { onEvent: () => {}, onStatus: (s) => statuses.push(s) },
    );
    stream.start(0);
    sockets[0].onopen?.();
    sockets[0].emit({ event: 'SessionCreated', round: 0, seq: 0, payload: {} });
    sockets[0].onclose?.();
    await vi.advanceTimersByTimeAsync(500);
    expect(sockets).toHaveLength(2);
    expect(sockets[1].url).toContain('since=1'); // resumes after the last seq
    expect(statuses).toContain('lost');
    stream.stop();
    vi.useRealTimers();
  });

  it('ignores malformed frames and error payloads', () => {
    const sockets: FakeSocket[] = [];
    const received: unknown[] = [];
    const stream = new EventStream(
      () => 'ws://test',
      (url) => {
        const s = new FakeSocket(url);
        sockets.push(s);
        return s;
      },
      { onEvent: (e) => received.push(e) },
    );
    stream.start(0);
    sockets[0].onmessage?.({ data: 'not json' });
    sockets[0].emit({ error: 'no session x' });
    expect(received).toHaveLength(0);
    stream.stop();
  });
});
