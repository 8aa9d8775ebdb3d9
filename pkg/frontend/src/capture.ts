// Pointer stroke capture: screen samples -> a canvas-mm stroke in the
// active player's channel, simplified client-side with 1 mm RDP.

import { clampToCanvas, dedupe, rdpSimplify, Viewport, type Pt } from './geometry.js';
import type { Channel, StrokeJson } from './types.js';

export const CAPTURE_EPSILON_MM = 1.0;

export class StrokeCapture {
  private samples: Pt[] = [];
  private active = false;

  constructor(
    private viewport: Viewport,
    private canvasMm: [number, number],
  ) {}

  get isActive(): boolean {
    return this.active;
  }

  begin(sample: Pt): void {
    this.active = true;
    this.samples = [sample];
  }

  /** Accepts one sample or a batch (coalesced pointer events). */
  move(samples: Pt | Pt[]): void {
    if (!this.active) return;
    const batch = Array.isArray(samples) ? samples : [samples];
    this.samples.push(...batch);
  }

  /**
   * Close the stroke; returns null for zero-length drags (discarded
   * silently per the input contract).
   */
  end(channel: Channel): StrokeJson | null {
    if (!this.active) return null;
    this.active = false;
    const mm = dedupe(
      this.samples.map((s) => clampToCanvas(this.viewport.toMm(s), this.canvasMm)),
    );
    this.samples = [];
    if (mm.length < 2) return null;
    const simplified = rdpSimplify(mm, CAPTURE_EPSILON_MM);
    if (simplified.length < 2) return null;
    return {
      channel,
      points: simplified.map((p) => [p.x, p.y] as [number, number]),
    };
  }

  cancel(): void {
    this.active = false;
    this.samples = [];
  }
}
