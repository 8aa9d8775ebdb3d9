import { describe, expect, it } from 'vitest';

import { clampToCanvas, dedupe, polylineLength, rdpSimplify, Viewport } from '../src/geometry.js';

describe('rdpSimplify', () => {
  it('collapses collinear points to the endpoints', () => {
    const pts = [0, 1, 2, 3, 4].map((x) => ({ x, y: 0 }));
    expect(rdpSimplify(pts, 0.5)).toEqual([pts[0], pts[4]]);
  });

  it('keeps the apex of a bend', () => {
    const pts = [
      { x: 0, y: 0 },
      { x: 5, y: 5 },
      { x: 10, y: 0 },
    ];
    expect(rdpSimplify(pts, 1)).toEqual(pts);
  });

  it('epsilon zero is identity', () => {
    const pts = [0, 1, 2].map((x) => ({ x, y: 0 }));
    expect(rdpSimplify(pts, 0)).toEqual(pts);
  });

  it('dropped points stay within epsilon of the kept polyline', () => {
    const pts = Array.from({ length: 50 }, (_, i) => ({
      x: i,
      y: Math.sin(i / 5) * 3,
    }));
    const epsilon = 0.75;
    const kept = rdpSimplify(pts, epsilon);
    for (const p of pts) {
      let best = Infinity;
      for (let i = 1; i < kept.length; i++) {
        const a = kept[i - 1];
        const b = kept[i];
        const dx = b.x - a.x;
        const dy = b.y - a.y;
        const len2 = dx * dx + dy * dy;
        const t = Math.max(0, Math.min(1, ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2));
        best = Math.min(best, Math.hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy)));
      }
      expect(best).toBeLessThanOrEqual(epsilon + 1e-9);
    }
  });
});

describe('Viewport', () => {
  it('round trips screen and mm coordinates', () => {
    const view = new Viewport();
    view.fit([1100, 1600], [800, 600]);
    const mm = { x: 321.5, y: 1234.25 };
    const back = view.toMm(view.toScreen(mm));
    expect(back.x).toBeCloseTo(mm.x, 9);
    expect(back.y).toBeCloseTo(mm.y, 9);
  });

  it('letterboxes the canvas inside the view', () => {
    const view = new Viewport();
    view.fit([100, 100], [800, 600], 10);
    const topLeft = view.toScreen({ x: 0, y: 0 });
    const bottomRight = view.toScreen({ x: 100, y: 100 });
    expect(bottomRight.y - topLeft.y).toBeCloseTo(580);
    expect(topLeft.x).toBeGreaterThan(10); // centered horizontally
  });
});

describe('helpers', () => {
  it('dedupe removes consecutive duplicates', () => {
    expect(
      dedupe([
        { x: 0, y: 0 },
        { x: 0, y: 0 },
        { x: 1, y: 1 },
      ]),
    ).toHaveLength(2);
  });

  it('clampToCanvas pins points to the rectangle', () => {
    expect(clampToCanvas({ x: -5, y: 150 }, [100, 100])).toEqual({ x: 0, y: 100 });
  });

  it('polylineLength sums segments', () => {
    expect(polylineLength([[0, 0], [3, 4]])).toBeCloseTo(5);
  });
});
