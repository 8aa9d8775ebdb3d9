// Canvas rendering. Committed strokes draw solid in their channel
// colors; the pending suggestion draws dashed blue above everything
// until it is resolved, so machine proposals are always visually
// distinct from accepted paint.

import { Viewport } from './geometry.js';
import { CHANNEL_COLORS, type SketchJson, type StrokeJson } from './types.js';
import type { UiState } from './store.js';

// the structural subset of CanvasRenderingContext2D the renderer needs;
// style properties are loose so both the DOM context and test fakes fit
export interface Canvas2DLike {
  lineWidth: number;
  strokeStyle: any;
  fillStyle: any;
  lineCap: any;
  lineJoin: any;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  setLineDash(segments: number[]): void;
}

export const SUGGESTION_DASH = [8, 6];

function drawStroke(
  ctx: Canvas2DLike,
  view: Viewport,
  stroke: StrokeJson,
  options: { color: string; width: number; dash: number[] },
): void {
  ctx.strokeStyle = options.color;
  ctx.lineWidth = options.width;
  ctx.lineCap = 'round';
  ctx.lineJoin = 'round';
  ctx.setLineDash(options.dash);
  if (stroke.points.length === 1) {
    // pen tap: committed taps are filled dots, suggested taps draw as
    // dashed circles so the overlay stays visually distinct
    const p = view.toScreen({ x: stroke.points[0][0], y: stroke.points[0][1] });
    ctx.beginPath();
    ctx.arc(p.x, p.y, Math.max(options.width, 4), 0, Math.PI * 2);
    if (options.dash.length > 0) {
      ctx.stroke();
    } else {
      ctx.fillStyle = options.color;
      ctx.fill();
    }
    return;
  }
  ctx.beginPath();
  stroke.points.forEach(([x, y], index) => {
    const p = view.toScreen({ x, y });
    if (index === 0) ctx.moveTo(p.x, p.y);
    else ctx.lineTo(p.x, p.y);
  });
  ctx.stroke();
}

function drawVertexHandles(
  ctx: Canvas2DLike,
  view: Viewport,
  sketch: SketchJson,
): void {
  ctx.fillStyle = '#ffffff';
  ctx.strokeStyle = CHANNEL_COLORS.blue;
  ctx.setLineDash([]);
  ctx.lineWidth = 1.5;
  for (const stroke of sketch.strokes) {
    for (const [x, y] of stroke.points) {
      const p = view.toScreen({ x, y });
      ctx.beginPath();
      ctx.arc(p.x, p.y, 4, 0, Math.PI * 2);
      ctx.fill();
      ctx.stroke();
    }
  }
}

/**
 * Draw the whole session frame: canvas background, committed strokes,
 * the local optimistic buffer, then the pending suggestion (or its
 * in-progress edit) dashed on top.
 */
export function renderSession(
  ctx: Canvas2DLike,
  view: Viewport,
  state: UiState,
  viewSize: [number, number],
): void {
  ctx.setLineDash([]);
  ctx.fillStyle = '#e8e4dc';
  ctx.fillRect(0, 0, viewSize[0], viewSize[1]);
  const snap = state.snapshot;
  if (!snap) return;

  const origin = view.toScreen({ x: 0, y: 0 });
  const corner = view.toScreen({ x: snap.canvas[0], y: snap.canvas[1] });
  ctx.fillStyle = '#ffffff';
  ctx.fillRect(origin.x, origin.y, corner.x - origin.x, corner.y - origin.y);

  for (const stroke of snap.sketch.strokes) {
    drawStroke(ctx, view, stroke, {
      color: CHANNEL_COLORS[stroke.channel],
      width: 2.5,
      dash: [],
    });
  }
  for (const stroke of state.optimistic) {
    drawStroke(ctx, view, stroke, {
      color: CHANNEL_COLORS[stroke.channel],
      width: 2.5,
      dash: [],
    });
  }

  const overlay = state.overlayEdit ?? snap.pending_suggestion?.sketch ?? null;
  if (overlay) {
    for (const stroke of overlay.strokes) {
      drawStroke(ctx, view, stroke, {
        color: CHANNEL_COLORS.blue,
        width: 3,
        dash: SUGGESTION_DASH,
      });
    }
    if (state.overlayEdit) drawVertexHandles(ctx, view, state.overlayEdit);
  }
}

/**
 * Projection mode: only the pending suggestion, solid blue on black,
 * meant to be fullscreened at the projector. Used when the service has
 * no projector calibration (otherwise the app shows the service's
 * calibrated suggestion.png directly).
 */
export function renderProjection(
  ctx: Canvas2DLike,
  state: UiState,
  viewSize: [number, number],
): void {
  ctx.setLineDash([]);
  ctx.fillStyle = '#000000';
  ctx.fillRect(0, 0, viewSize[0], viewSize[1]);
  const snap = state.snapshot;
  const pending = snap?.pending_suggestion;
  if (!snap || !pending) return;
  const view = new Viewport();
  view.fit(snap.canvas, viewSize, 0);
  for (const stroke of pending.sketch.strokes) {
    drawStroke(ctx, view, stroke, {
      color: CHANNEL_COLORS.blue,
      width: 4,
      dash: [],
    });
  }
}
