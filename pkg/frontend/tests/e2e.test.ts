// End-to-end: the scripted full game driven through the UI logic
// against the real service (trained checkpoint, journal-backed,
// WebSocket stream). Requires python3 with the backend installed.

import { spawn, spawnSync, type ChildProcess } from 'node:child_process';
import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import WebSocket from 'ws';

import { ApiClient } from '../src/api.js';
import { StrokeCapture } from '../src/capture.js';
import { GameControls } from '../src/controls.js';
import { polylineLength, Viewport } from '../src/geometry.js';
import { renderSession, SUGGESTION_DASH } from '../src/render.js';
import { SessionStore } from '../src/store.js';
import { EventStream } from '../src/stream.js';
import { CHANNEL_COLORS, type Channel, type ServerEvent, type SketchJson } from '../src/types.js';
import { FakeContext } from './fake_canvas.js';

const PORT = 18000 + Math.floor(Math.random() * 800);
const BASE = `http://127.0.0.1:${PORT}`;
const CANVAS: [number, number] = [400, 300];

let service: ChildProcess | null = null;
let workDir = '';

function trainCheckpoint(dir: string): string {
  const ndjson = join(dir, 'squares.ndjson');
  const lines: string[] = [];
  let state = 123456789;
  const rand = () => ((state = (state * 1103515245 + 12345) % 2 ** 31) / 2 ** 31);
  for (let i = 0; i < 30; i++) {
    const size = 40 + Math.floor(rand() * 50);
    const x = 5 + Math.floor(rand() * (240 - size));
    const y = 5 + Math.floor(rand() * (240 - size));
    lines.push(
      JSON.stringify({
        word: 'sq',
        drawing: [[[x, x + size, x + size, x, x], [y, y, y + size, y + size, y]]],
      }),
    );
  }
  writeFileSync(ndjson, lines.join('\n') + '\n');
  const checkpoint = join(dir, 'model.ckpt');
  const result = spawnSync(
    'python3',
    [
      '-m', 'atelier.cli', 'train',
      '--ndjson', ndjson, '--out', checkpoint,
      '--epochs', '1', '--batch-size', '8',
      '--hidden', '16', '--mixtures', '2', '--seed', '1',
    ],
    { encoding: 'utf-8' },
  );
  if (result.status !== 0) {
    throw new Error(`training failed: ${result.stderr}`);
  }
  return checkpoint;
}

async function waitForService(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const response = await fetch(`${BASE}/healthz`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error('service did not come up');
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), 'atelier-ui-'));
  const checkpoint = trainCheckpoint(workDir);
  service = spawn(
    'python3',
    [
      '-m', 'atelier.cli', 'serve',
      '--checkpoint', checkpoint,
      '--data-dir', join(workDir, 'data'),
      '--port', String(PORT),
      '--log-level', 'warning',
    ],
    { stdio: ['ignore', 'pipe', 'pipe'] },
  );
  await waitForService();
});

afterAll(() => {
  service?.kill();
});

/** One UI client: store + controls + capture, like a browser tab. */
function makeClient(sessionId: string, player: Channel) {
  const api = new ApiClient(BASE);
  const store = new SessionStore();
  store.setLocalPlayer(player);
  const controls = new GameControls(api, store, sessionId);
  const view = new Viewport();
  view.fit(CANVAS, [800, 600], 0); // scale 2 px per mm exactly
  const capture = new StrokeCapture(view, CANVAS);
  return { api, store, controls, view, capture };
}

function paint(store: SessionStore, view: Viewport): FakeContext {
  const ctx = new FakeContext();
  renderSession(ctx, view, store.state, [800, 600]);
  return ctx;
}

describe('full game through the UI against the live service', () => {
  const sessionId = `ui-e2e-${PORT}`;
  const theme: SketchJson = {
    canvas: CANVAS,
    strokes: [{ channel: 'black', points: [[50, 50], [180, 80]] }],
  };

  it('drives theme -> rounds -> suggestions -> consensus', async () => {
    const red = makeClient(sessionId, 'red');
    const green = makeClient(sessionId, 'green');

    const created = await red.api.createSession(theme, sessionId);
    expect(created.expected_player).toBe('red');

    // subscribe red's client to the event stream (real WebSocket)
    const seen: ServerEvent[] = [];
    const stream = new EventStream(
      (since) => red.api.eventsUrl(sessionId, since),
      (url) => new WebSocket(url) as any,
      { onEvent: (e) => seen.push(e) },
    );
    stream.start(0);

    await red.controls.refresh();
    await green.controls.refresh();

    // --- UI round trip: pointer-scripted stroke equals the server echo
    expect(red.store.canDraw()).toBe(true);
    expect(green.store.canDraw()).toBe(false); // input blocked off-turn
    red.capture.begin({ x: 100, y: 100 });
    for (let i = 1; i <= 30; i++) red.capture.move({ x: 100 + i * 10, y: 100 });
    const drawn = red.capture.end('red')!;
    expect(drawn.points).toEqual([
      [50, 50],
      [200, 50],
    ]);
    expect(await red.controls.submitStroke(drawn)).toBe(true);
    const echoed = red.store.state.snapshot!.sketch.strokes.filter(
      (s) => s.channel === 'red',
    );
    expect(echoed).toEqual([drawn]); // structural equality with the echo
    expect(red.store.state.optimistic).toHaveLength(0); // echo drained it

    // --- green's round, through green's client
    await green.controls.refresh();
    expect(green.store.canDraw()).toBe(true);
    green.capture.begin({ x: 100, y: 200 });
    green.capture.move([
      { x: 200, y: 220 },
      { x: 300, y: 200 },
    ]);
    const greenStroke = green.capture.end('green')!;
    expect(await green.controls.submitStroke(greenStroke)).toBe(true);

    // --- machine round 1: emitter, accepted (driven from red's UI)
    await red.controls.refresh();
    expect(red.store.isMachineTurn()).toBe(true);
    red.store.setControls({ policy: 'emitter', amount: 1, temperature: 0.3, seed: 9 });
    expect(await red.controls.requestCompletion()).toBe(true);
    expect(red.store.hasPending()).toBe(true);

    // overlay renders dashed blue before resolution
    let ctx = paint(red.store, red.view);
    const dashed = ctx.strokes.filter((s) => s.dash.length > 0);
    expect(dashed.length).toBeGreaterThan(0);
    expect(dashed.every((s) => s.color === CHANNEL_COLORS.blue)).toBe(true);
    expect(dashed[0].dash).toEqual(SUGGESTION_DASH);

    const suggested = red.store.state.snapshot!.pending_suggestion!.sketch;
    expect(await red.controls.accept()).toBe(true);
    expect(red.store.hasPending()).toBe(false);

    // accepted strokes now render solid blue (taps become filled dots)
    ctx = paint(red.store, red.view);
    expect(ctx.strokes.every((s) => s.dash.length === 0)).toBe(true);
    const blueSolid =
      ctx.strokes.filter((s) => s.color === CHANNEL_COLORS.blue).length +
      ctx.fills.filter((f) => f.color === CHANNEL_COLORS.blue).length;
    expect(blueSolid).toBe(suggested.strokes.length);

    // --- second human rounds
    await red.controls.refresh();
    red.capture.begin({ x: 100, y: 300 });
    red.capture.move({ x: 400, y: 320 });
    expect(await red.controls.submitStroke(red.capture.end('red')!)).toBe(true);

    await green.controls.refresh();
    green.capture.begin({ x: 120, y: 400 });
    green.capture.move({ x: 500, y: 380 });
    expect(await green.controls.submitStroke(green.capture.end('green')!)).toBe(true);

    // --- machine round 2: receptor, rejected (driven from green's UI)
    await green.controls.refresh();
    green.store.setControls({ policy: 'receptor', amount: 2, temperature: 0.6, seed: 10 });
    expect(await green.controls.requestCompletion()).toBe(true);
    const strokesBefore = green.store.state.snapshot!.sketch.strokes.length;
    expect(await green.controls.reject()).toBe(true);
    expect(green.store.state.snapshot!.sketch.strokes).toHaveLength(strokesBefore);

    // --- consensus from both human clients
    expect(await red.controls.signalConsensus()).toBe(true);
    expect(red.store.state.snapshot!.status).toBe('open');
    expect(await green.controls.signalConsensus()).toBe(true);
    expect(green.store.state.snapshot!.status).toBe('closed');

    // --- stats panel data matches a local recount of the final sketch
    const stats = await red.api.stats(sessionId);
    const final = green.store.state.snapshot!.sketch;
    for (const channel of ['black', 'red', 'green', 'blue'] as const) {
      const strokes = final.strokes.filter((s) => s.channel === channel);
      expect(stats[channel].stroke_count).toBe(strokes.length);
      const ink = strokes.reduce((sum, s) => sum + polylineLength(s.points), 0);
      expect(Math.abs(stats[channel].ink_length_mm - ink)).toBeLessThan(1e-6);
    }

    // --- the stream delivered the whole journal
    await new Promise((resolve) => setTimeout(resolve, 500));
    stream.stop();
    const types = seen.map((e) => e.event);
    expect(types[0]).toBe('SessionCreated');
    expect(types).toContain('CompletionRequested');
    expect(types).toContain('SuggestionResolved');
    expect(types).toContain('ConsensusSignaled');
    expect(seen.length).toBe(green.store.state.snapshot!.event_count);
  }, 120_000);

  it('server errors surface as toasts and leave state unchanged', async () => {
    const sessionB = `ui-e2e-b-${PORT}`;
    const red = makeClient(sessionB, 'red');
    await red.api.createSession(
      { canvas: CANVAS, strokes: [] },
      sessionB,
    );
    await red.controls.refresh();
    // machine turn has not come yet: request must fail client-side
    expect(await red.controls.requestCompletion()).toBe(false);
    expect(red.store.state.toasts.at(-1)?.code).toBe('turn_violation');

    // out-of-turn submit rejected by the server, optimistic rolled back
    red.store.setLocalPlayer('green');
    red.store.state.snapshot!.expected_player = 'green' as Channel; // stale client view
    const stroke: SketchJson['strokes'][number] = {
      channel: 'green',
      points: [[10, 10], [60, 20]],
    };
    expect(await red.controls.submitStroke(stroke)).toBe(false);
    expect(red.store.state.toasts.at(-1)?.code).toBe('turn_violation');
    expect(red.store.state.optimistic).toHaveLength(0);
    await red.controls.refresh();
    expect(red.store.state.snapshot!.round_count).toBe(0);
  }, 120_000);
});
