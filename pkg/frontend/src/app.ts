// Browser bootstrap: routes, pointer wiring, controls, stream
// subscription, stats panel. Routes:
//   #/session/<id>?player=red|green  - the drawing surface
//   #/project/<id>                   - chromeless projection mode
// No route: a theme-drawing landing page that creates a session.

import { ApiClient } from './api.js';
import { StrokeCapture } from './capture.js';
import { GameControls } from './controls.js';
import { Viewport } from './geometry.js';
import { renderProjection, renderSession } from './render.js';
import { SessionStore } from './store.js';
import { EventStream } from './stream.js';
import type { Channel, SketchJson, StatsJson } from './types.js';

const api = new ApiClient(window.location.origin);

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = '',
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text) node.textContent = text;
  return node;
}

function pointerSamples(event: PointerEvent): Array<{ x: number; y: number }> {
  const events =
    typeof event.getCoalescedEvents === 'function' && event.getCoalescedEvents().length
      ? event.getCoalescedEvents()
      : [event];
  return events.map((e) => ({ x: e.offsetX, y: e.offsetY }));
}

// ---------------------------------------------------------------------------
// landing: draw a black theme, then start the session

function landingView(root: HTMLElement): void {
  root.innerHTML = '';
  const title = el('h2', {}, 'new painting: draw the theme in black');
  const canvas = el('canvas', { width: '800', height: '600', class: 'board' });
  const start = el('button', {}, 'start game');
  root.append(title, canvas, start);

  const canvasMm: [number, number] = [1100, 1600];
  const view = new Viewport();
  view.fit(canvasMm, [canvas.width, canvas.height]);
  const capture = new StrokeCapture(view, canvasMm);
  const theme: SketchJson = { canvas: canvasMm, strokes: [] };
  const ctx = canvas.getContext('2d')!;

  const paint = () => {
    ctx.fillStyle = '#ffffff';
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    ctx.strokeStyle = '#0f0f0f';
    ctx.lineWidth = 2.5;
    ctx.lineCap = 'round';
    for (const stroke of theme.strokes) {
      ctx.beginPath();
      stroke.points.forEach(([x, y], i) => {
        const p = view.toScreen({ x, y });
        if (i === 0) ctx.moveTo(p.x, p.y);
        else ctx.lineTo(p.x, p.y);
      });
      ctx.stroke();
    }
  };
  paint();

  canvas.addEventListener('pointerdown', (e) => {
    canvas.setPointerCapture(e.pointerId);
    capture.begin({ x: e.offsetX, y: e.offsetY });
  });
  canvas.addEventListener('pointermove', (e) => capture.move(pointerSamples(e)));
  canvas.addEventListener('pointerup', () => {
    const stroke = capture.end('black');
    if (stroke) theme.strokes.push(stroke);
    paint();
  });
  start.addEventListener('click', async () => {
    const snapshot = await api.createSession(theme);
    window.location.hash = `#/session/${snapshot.id}?player=red`;
  });
}

// ---------------------------------------------------------------------------
// main session view

function sessionView(root: HTMLElement, sessionId: string, player: Channel): void {
  root.innerHTML = '';
  const store = new SessionStore();
  store.setLocalPlayer(player);
  const controls = new GameControls(api, store, sessionId);

  const header = el('div', { class: 'header' });
  const turnBadge = el('span', { class: 'badge' });
  const connBadge = el('span', { class: 'badge' });
  const roundBadge = el('span', { class: 'badge' });
  header.append(
    el('strong', {}, `session ${sessionId}`),
    el('span', {}, ` you are ${player} `),
    turnBadge,
    roundBadge,
    connBadge,
  );

  const canvas = el('canvas', { width: '800', height: '600', class: 'board' });
  const panel = el('div', { class: 'panel' });

  const policySelect = el('select');
  policySelect.append(new Option('emitter', 'emitter'), new Option('receptor', 'receptor'));
  const amountInput = el('input', { type: 'number', min: '1', value: '1' });
  const temperatureInput = el('input', {
    type: 'number', min: '0', max: '2', step: '0.1', value: '0.4',
  });
  const seedInput = el('input', { type: 'number', value: '0' });
  const checkpointInfo = el('span', { class: 'badge' }, 'checkpoint: ?');
  api.health().then((h) => (checkpointInfo.textContent = `checkpoint ${h.checkpoint}`));

  const requestBtn = el('button', {}, 'request completion');
  const acceptBtn = el('button', {}, 'accept');
  const modifyBtn = el('button', {}, 'modify');
  const sendModifyBtn = el('button', {}, 'send edit');
  const rejectBtn = el('button', {}, 'reject');
  const consensusBtn = el('button', {}, 'signal consensus');
  const projectLink = el('a', { href: `#/project/${sessionId}` }, 'projection mode');
  const statsPane = el('pre', { class: 'stats' });
  const toastPane = el('div', { class: 'toasts' });
  const hint = el('div', { class: 'hint' });

  panel.append(
    el('label', {}, 'policy '), policySelect, el('br'),
    el('label', {}, 'amount '), amountInput, el('br'),
    el('label', {}, 'temperature '), temperatureInput, el('br'),
    el('label', {}, 'seed '), seedInput, el('br'),
    checkpointInfo, el('br'),
    requestBtn, acceptBtn, modifyBtn, sendModifyBtn, rejectBtn, el('br'),
    consensusBtn, el('br'), projectLink, statsPane, toastPane, hint,
  );
  root.append(header, canvas, panel);

  const ctx = canvas.getContext('2d')!;
  const view = new Viewport();
  let capture: StrokeCapture | null = null;
  let dragTarget: { stroke: number; point: number } | null = null;

  const syncControls = () => {
    store.setControls({
      policy: policySelect.value as 'emitter' | 'receptor',
      amount: Number(amountInput.value),
      temperature: Number(temperatureInput.value),
      seed: Number(seedInput.value),
    });
  };
  for (const input of [policySelect, amountInput, temperatureInput, seedInput]) {
    input.addEventListener('change', syncControls);
  }

  const refreshStats = async () => {
    try {
      const stats: StatsJson = await api.stats(sessionId);
      statsPane.textContent = (Object.keys(stats) as Channel[])
        .map((c) => {
          const s = stats[c];
          return `${c.padEnd(6)} strokes ${s.stroke_count}  ink ${s.ink_length_mm.toFixed(0)}mm  rounds ${s.rounds}`;
        })
        .join('\n');
    } catch {
      // stats are cosmetic; ignore transient failures
    }
  };

  const paint = () => {
    const snap = store.state.snapshot;
    if (snap) {
      view.fit(snap.canvas, [canvas.width, canvas.height]);
      capture = capture ?? new StrokeCapture(view, snap.canvas);
    }
    renderSession(ctx, view, store.state, [canvas.width, canvas.height]);
    turnBadge.textContent = snap
      ? snap.status === 'closed'
        ? 'painting finished'
        : `turn: ${snap.expected_player}`
      : 'loading';
    roundBadge.textContent = snap ? `round ${snap.round_count}` : '';
    connBadge.textContent = store.state.connection;
    const drawable = store.canDraw();
    canvas.classList.toggle('disabled', !drawable);
    hint.textContent = drawable
      ? 'draw on the canvas'
      : store.hasPending()
        ? 'resolve the blue suggestion'
        : snap && snap.expected_player === 'blue'
          ? 'machine turn: request a completion'
          : 'waiting for the other player';
    toastPane.innerHTML = '';
    for (const toast of store.state.toasts.slice(-4)) {
      toastPane.append(el('div', { class: 'toast' }, `${toast.code}: ${toast.message}`));
    }
  };
  store.subscribe(paint);

  canvas.addEventListener('pointerdown', (e) => {
    canvas.setPointerCapture(e.pointerId);
    if (store.state.overlayEdit) {
      const mm = view.toMm({ x: e.offsetX, y: e.offsetY });
      dragTarget = nearestVertex(store.state.overlayEdit, mm, 8 / view.scale);
      return;
    }
    if (!store.canDraw() || !capture) return; // input disabled off-turn
    capture.begin({ x: e.offsetX, y: e.offsetY });
  });
  canvas.addEventListener('pointermove', (e) => {
    if (dragTarget && store.state.overlayEdit) {
      const mm = view.toMm({ x: e.offsetX, y: e.offsetY });
      store.dragOverlayVertex(dragTarget.stroke, dragTarget.point, [mm.x, mm.y]);
      return;
    }
    if (capture?.isActive) {
      capture.move(pointerSamples(e));
    }
  });
  canvas.addEventListener('pointerup', async () => {
    if (dragTarget) {
      dragTarget = null;
      return;
    }
    if (!capture?.isActive) return;
    const stroke = capture.end(player);
    if (stroke) await controls.submitStroke(stroke);
    paint();
  });

  requestBtn.addEventListener('click', () => {
    syncControls();
    void controls.requestCompletion();
  });
  acceptBtn.addEventListener('click', () => void controls.accept());
  rejectBtn.addEventListener('click', () => void controls.reject());
  modifyBtn.addEventListener('click', () => controls.beginModify());
  sendModifyBtn.addEventListener('click', () => void controls.submitModify());
  consensusBtn.addEventListener('click', () => void controls.signalConsensus());

  const stream = new EventStream(
    (since) => api.eventsUrl(sessionId, since),
    (url) => new WebSocket(url) as any,
    {
      onEvent: () => {
        void controls.refresh();
        void refreshStats();
      },
      onStatus: (status) => store.setConnection(status),
    },
  );
  void controls.refresh().then(() => {
    void refreshStats();
    const snap = store.state.snapshot;
    stream.start(snap ? snap.event_count : 0);
  });
  window.addEventListener('hashchange', () => stream.stop(), { once: true });
}

function nearestVertex(
  sketch: SketchJson,
  mm: { x: number; y: number },
  radiusMm: number,
): { stroke: number; point: number } | null {
  let best: { stroke: number; point: number } | null = null;
  let bestD = radiusMm;
  sketch.strokes.forEach((stroke, si) => {
    stroke.points.forEach(([x, y], pi) => {
      const d = Math.hypot(x - mm.x, y - mm.y);
      if (d <= bestD) {
        bestD = d;
        best = { stroke: si, point: pi };
      }
    });
  });
  return best;
}

// ---------------------------------------------------------------------------
// projection mode: suggestion only, blue on black, fullscreen

function projectionView(root: HTMLElement, sessionId: string): void {
  root.innerHTML = '';
  document.body.classList.add('projection');
  const canvas = el('canvas', {
    width: String(window.innerWidth),
    height: String(window.innerHeight),
    class: 'projector',
  });
  const img = el('img', { class: 'projector', style: 'display:none' });
  root.append(canvas, img);
  const ctx = canvas.getContext('2d')!;
  const store = new SessionStore();
  store.subscribe(() => {
    // prefer the service's calibrated overlay raster when one exists
    if (store.hasPending()) {
      const url = `${window.location.origin}/sessions/${sessionId}/suggestion.png?t=${Date.now()}`;
      img.onload = () => {
        img.style.display = 'block';
        canvas.style.display = 'none';
      };
      img.onerror = () => {
        img.style.display = 'none';
        canvas.style.display = 'block';
        renderProjection(ctx, store.state, [canvas.width, canvas.height]);
      };
      img.src = url;
    } else {
      img.style.display = 'none';
      canvas.style.display = 'block';
      renderProjection(ctx, store.state, [canvas.width, canvas.height]);
    }
  });

  const refresh = async () => store.applySnapshot(await api.getSession(sessionId));
  const stream = new EventStream(
    (since) => api.eventsUrl(sessionId, since),
    (url) => new WebSocket(url) as any,
    { onEvent: () => void refresh() },
  );
  void refresh().then(() => stream.start(store.state.snapshot?.event_count ?? 0));
}

// ---------------------------------------------------------------------------

function route(): void {
  const root = document.getElementById('app')!;
  document.body.classList.remove('projection');
  const hash = window.location.hash;
  const sessionMatch = hash.match(/^#\/session\/([^?]+)(?:\?player=(red|green))?/);
  const projectMatch = hash.match(/^#\/project\/([^?]+)/);
  if (projectMatch) {
    projectionView(root, projectMatch[1]);
  } else if (sessionMatch) {
    sessionView(root, sessionMatch[1], (sessionMatch[2] as Channel) ?? 'red');
  } else {
    landingView(root);
  }
}

window.addEventListener('hashchange', route);
window.addEventListener('DOMContentLoaded', route);
