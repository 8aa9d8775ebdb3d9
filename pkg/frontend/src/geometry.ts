// Client-side geometry: polyline simplification for captured strokes and
// the screen <-> canvas-mm viewport transform.

export interface Pt {
  x: number;
  y: number;
}

function segmentDist2(p: Pt, a: Pt, b: Pt): number {
  const dx = b.x - a.x;
  const dy = b.y - a.y;
  const len2 = dx * dx + dy * dy;
  let t = 0;
  if (len2 > 0) {
    t = Math.max(0, Math.min(1, ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2));
  }
  const ex = p.x - (a.x + t * dx);
  const ey = p.y - (a.y + t * dy);
  return ex * ex + ey * ey;
}

/** Ramer-Douglas-Peucker; keeps both endpoints, epsilon 0 is identity. */
export function rdpSimplify(points: Pt[], epsilon: number): Pt[] {
  if (epsilon <= 0 || points.length < 3) return points.slice();
  const eps2 = epsilon * epsilon;
  const keep = new Array<boolean>(points.length).fill(false);
  keep[0] = keep[points.length - 1] = true;
  const stack: Array<[number, number]> = [[0, points.length - 1]];
  while (stack.length > 0) {
    const [first, last] = stack.pop()!;
    let maxD2 = eps2;
    let index = -1;
    for (let i = first + 1; i < last; i++) {
      const d2 = segmentDist2(points[i], points[first], points[last]);
      if (d2 > maxD2) {
        maxD2 = d2;
        index = i;
      }
    }
    if (index !== -1) {
      keep[index] = true;
      if (index - first > 1) stack.push([first, index]);
      if (last - index > 1) stack.push([index, last]);
    }
  }
  return points.filter((_, i) => keep[i]);
}

export function dedupe(points: Pt[]): Pt[] {
  const out: Pt[] = [];
  for (const p of points) {
    const last = out[out.length - 1];
    if (!last || last.x !== p.x || last.y !== p.y) out.push(p);
  }
  return out;
}

/**
 * Maps between screen pixels and canvas millimeters. The canvas is
 * letterboxed into the view at a uniform scale.
 */
export class Viewport {
  scale = 1; // screen px per canvas mm
  offsetX = 0;
  offsetY = 0;

  fit(canvasMm: [number, number], viewPx: [number, number], margin = 10): void {
    const [w, h] = canvasMm;
    const [vw, vh] = viewPx;
    this.scale = Math.min((vw - 2 * margin) / w, (vh - 2 * margin) / h);
    this.offsetX = (vw - w * this.scale) / 2;
    this.offsetY = (vh - h * this.scale) / 2;
  }

  toMm(screen: Pt): Pt {
    return {
      x: (screen.x - this.offsetX) / this.scale,
      y: (screen.y - this.offsetY) / this.scale,
    };
  }

  toScreen(mm: Pt): Pt {
    return {
      x: mm.x * this.scale + this.offsetX,
      y: mm.y * this.scale + this.offsetY,
    };
  }
}

export function clampToCanvas(p: Pt, canvas: [number, number]): Pt {
  return {
    x: Math.min(Math.max(p.x, 0), canvas[0]),
    y: Math.min(Math.max(p.y, 0), canvas[1]),
  };
}

export function polylineLength(points: Array<[number, number]>): number {
  let total = 0;
  for (let i = 1; i < points.length; i++) {
    total += Math.hypot(points[i][0] - points[i - 1][0], points[i][1] - points[i - 1][1]);
  }
  return total;
}
