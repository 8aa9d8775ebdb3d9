"""Raster capture -> ordered, color-attributed vector strokes.

Pipeline: flat-field illumination correction, per-channel color
classification, Zhang-Suen thinning, and graph tracing of the skeleton
into polylines. Rasters are (H, W, 3) uint8 numpy arrays in row-major
RGB; recovered strokes come back in canvas millimeters through the
supplied pixel->mm homography.

Stroke drawing direction is not recoverable from a raster; traced
points run from the endpoint nearer the top-left corner, a documented
information loss.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .calibration import Homography
from .errors import InvalidInput
from .strokes import (
    DEFAULT_CANVAS_MM,
    PlayerChannel,
    Point,
    Sketch,
    Stroke,
    rdp_simplify,
)

CHANNEL_ORDER = (
    PlayerChannel.BLACK,
    PlayerChannel.RED,
    PlayerChannel.GREEN,
    PlayerChannel.BLUE,
)


@dataclass(frozen=True)
class ColorPalette:
    """Reference colors plus classifier thresholds.

    Defaults suit saturated acrylic paint on a white canvas: colored
    pixels need saturation >= ``min_saturation`` and a hue within
    ``hue_tolerance_deg`` of a reference; dark low-saturation pixels are
    black; everything else is background.
    """

    colors: dict[PlayerChannel, tuple[int, int, int]] = field(
        default_factory=lambda: {
            PlayerChannel.BLACK: (15, 15, 15),
            PlayerChannel.RED: (210, 40, 40),
            PlayerChannel.GREEN: (40, 170, 60),
            PlayerChannel.BLUE: (45, 70, 200),
        }
    )
    white: tuple[int, int, int] = (255, 255, 255)
    hue_tolerance_deg: float = 50.0
    min_saturation: float = 0.25
    black_max_value: float = 0.35
    black_max_saturation: float = 0.35

    def reference_hues(self) -> dict[PlayerChannel, float]:
        out = {}
        for channel in (PlayerChannel.RED, PlayerChannel.GREEN, PlayerChannel.BLUE):
            r, g, b = (v / 255.0 for v in self.colors[channel])
            out[channel] = _rgb_hue(r, g, b)
        return out


def default_palette() -> ColorPalette:
    return ColorPalette()


def _rgb_hue(r: float, g: float, b: float) -> float:
    maxc, minc = max(r, g, b), min(r, g, b)
    delta = maxc - minc
    if delta == 0:
        return 0.0
    if maxc == r:
        hue = ((g - b) / delta) % 6
    elif maxc == g:
        hue = (b - r) / delta + 2
    else:
        hue = (r - g) / delta + 4
    return hue * 60.0


@dataclass
class ChannelMasks:
    masks: dict[PlayerChannel, np.ndarray]

    def __getitem__(self, channel: PlayerChannel) -> np.ndarray:
        return self.masks[channel]

    def pairwise_disjoint(self) -> bool:
        total = None
        for mask in self.masks.values():
            if total is None:
                total = mask.astype(np.int32)
            else:
                total = total + mask.astype(np.int32)
        return total is None or int(total.max(initial=0)) <= 1


def _validate_raster(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise InvalidInput(f"raster must be (H, W, 3), got {img.shape}")
    return img


def flat_field_correct(img: np.ndarray, window: int | None = None) -> np.ndarray:
    """Divide out a large-window background estimate per channel.

    The background is a maximum filter (strokes are darker than canvas)
    followed by an equally large mean filter, window at least 1/8 of the
    smaller image dimension. Output is rescaled to 8 bits with the
    background pushed toward white.
    """
    img = _validate_raster(img)
    h, w, _ = img.shape
    win = window or max(3, min(h, w) // 8)
    out = np.empty_like(img)
    for c in range(3):
        channel = img[:, :, c].astype(np.float64)
        background = ndimage.uniform_filter(
            ndimage.maximum_filter(channel, size=win), size=win
        )
        ratio = channel / np.maximum(background, 1.0)
        out[:, :, c] = np.clip(np.rint(ratio * 255.0), 0, 255).astype(np.uint8)
    return out


def classify_channels(img: np.ndarray, palette: ColorPalette) -> ChannelMasks:
    """Assign each pixel to background or exactly one player channel."""
    img = _validate_raster(img).astype(np.float64) / 255.0
    r, g, b = img[:, :, 0], img[:, :, 1], img[:, :, 2]
    value = np.maximum(np.maximum(r, g), b)
    minc = np.minimum(np.minimum(r, g), b)
    delta = value - minc
    saturation = np.where(value > 0, delta / np.maximum(value, 1e-12), 0.0)

    # hue in degrees, defined where delta > 0
    hue = np.zeros_like(value)
    nonzero = delta > 0
    rc = np.where(nonzero, (value - r) / np.maximum(delta, 1e-12), 0.0)
    gc = np.where(nonzero, (value - g) / np.maximum(delta, 1e-12), 0.0)
    bc = np.where(nonzero, (value - b) / np.maximum(delta, 1e-12), 0.0)
    hue = np.where(value == r, bc - gc, hue)
    hue = np.where(value == g, 2.0 + rc - bc, hue)
    hue = np.where((value == b) & (value != r) & (value != g), 4.0 + gc - rc, hue)
    hue = (hue * 60.0) % 360.0

    black = (value <= palette.black_max_value) & (
        saturation <= palette.black_max_saturation
    )
    colored = ~black & (saturation >= palette.min_saturation)

    refs = palette.reference_hues()
    distances = {}
    for channel, ref_hue in refs.items():
        diff = np.abs(hue - ref_hue)
        distances[channel] = np.minimum(diff, 360.0 - diff)
    stacked = np.stack([distances[c] for c in refs], axis=0)
    nearest = np.argmin(stacked, axis=0)
    within = np.min(stacked, axis=0) <= palette.hue_tolerance_deg

    masks = {PlayerChannel.BLACK: black}
    for index, channel in enumerate(refs):
        masks[channel] = colored & within & (nearest == index)
    return ChannelMasks(masks)


# ---------------------------------------------------------------------------
# thinning


def skeletonize(mask: np.ndarray) -> np.ndarray:
    """Zhang-Suen thinning to an 8-connected one-pixel-wide skeleton.

    Runs the two subiterations until neither deletes a pixel, so the
    result is a fixed point (idempotent under re-application).
    """
    img = np.ascontiguousarray(mask.astype(bool))
    if img.ndim != 2:
        raise InvalidInput("mask must be 2-D")
    if not img.any():
        return img.copy()
    padded = np.pad(img, 1).astype(np.uint8)

    while True:
        changed = False
        for phase in (0, 1):
            p = padded
            center = p[1:-1, 1:-1]
            p2 = p[:-2, 1:-1]
            p3 = p[:-2, 2:]
            p4 = p[1:-1, 2:]
            p5 = p[2:, 2:]
            p6 = p[2:, 1:-1]
            p7 = p[2:, :-2]
            p8 = p[1:-1, :-2]
            p9 = p[:-2, :-2]
            ring = (p2, p3, p4, p5, p6, p7, p8, p9)
            b = sum(int_arr.astype(np.int8) for int_arr in ring)
            a = np.zeros_like(b)
            for q, q_next in zip(ring, ring[1:] + ring[:1]):
                a += ((q == 0) & (q_next == 1)).astype(np.int8)
            if phase == 0:
                cond = (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
            else:
                cond = (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
            deletable = (
                (center == 1) & (b >= 2) & (b <= 6) & (a == 1) & cond
            )
            if deletable.any():
                changed = True
                padded[1:-1, 1:-1][deletable] = 0
        if not changed:
            break
    return padded[1:-1, 1:-1].astype(bool)


# ---------------------------------------------------------------------------
# tracing


_NEIGHBOR_OFFSETS = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)


def trace_strokes(
    skeleton: np.ndarray,
    px_to_mm: Homography | None = None,
    channel: PlayerChannel = PlayerChannel.BLACK,
    rdp_epsilon_px: float = 1.0,
    source_mask: np.ndarray | None = None,
) -> list[Stroke]:
    """Trace a 1-px skeleton into ordered polylines.

    Pixels form a graph under 8-neighbor adjacency; paths run between
    terminals (endpoints and junction pixels of degree >= 3), junctions
    splitting paths. Traced coordinates are pixel centers. Each pixel
    path is simplified with RDP and mapped through ``px_to_mm``. Strokes
    are returned sorted by their starting pixel in row-major order;
    within a stroke, points run from the endpoint nearer the top-left.

    ``source_mask`` (the pre-thinning stroke mask) enables tip
    extension: thinning erodes line ends, so open-path tips are marched
    back along their local direction to the mask boundary minus the
    local half-width.
    """
    skeleton = np.asarray(skeleton).astype(bool)
    coords = {(int(r), int(c)) for r, c in zip(*np.nonzero(skeleton))}

    def neighbors(p):
        # minimal 8-connectivity: a diagonal edge is redundant (and would
        # fabricate junctions) when an orthogonal elbow pixel provides the
        # same connection
        r, c = p
        for dr, dc in _NEIGHBOR_OFFSETS:
            q = (r + dr, c + dc)
            if q not in coords:
                continue
            if dr != 0 and dc != 0:
                if (r + dr, c) in coords or (r, c + dc) in coords:
                    continue
            yield q

    degree = {p: sum(1 for _ in neighbors(p)) for p in coords}
    terminals = sorted(p for p in coords if degree[p] != 2)
    visited_edges: set[frozenset] = set()
    paths: list[list[tuple[int, int]]] = []

    def edge(a, b) -> frozenset:
        return frozenset((a, b))

    def walk(start, first):
        path = [start, first]
        visited_edges.add(edge(start, first))
        prev, current = start, first
        while degree[current] == 2:
            options = [
                q for q in neighbors(current)
                if q != prev and edge(current, q) not in visited_edges
            ]
            if not options:
                break
            nxt = sorted(options)[0]
            visited_edges.add(edge(current, nxt))
            path.append(nxt)
            prev, current = current, nxt
        return path

    for terminal in terminals:
        for neighbor in sorted(neighbors(terminal)):
            if edge(terminal, neighbor) not in visited_edges:
                paths.append(walk(terminal, neighbor))

    # isolated dots
    for p in sorted(coords):
        if degree[p] == 0:
            paths.append([p])

    # remaining pixels belong to pure cycles (every degree exactly 2)
    remaining = {
        p for p in coords
        if degree[p] == 2
        and any(edge(p, q) not in visited_edges for q in neighbors(p))
    }
    while remaining:
        start = min(remaining)
        first = sorted(
            q for q in neighbors(start) if edge(start, q) not in visited_edges
        )[0]
        cycle = walk(start, first)
        if cycle[-1] != start and edge(cycle[-1], start) not in visited_edges:
            visited_edges.add(edge(cycle[-1], start))
            cycle.append(start)
        remaining = {
            p for p in remaining
            if any(edge(p, q) not in visited_edges for q in neighbors(p))
        }
        paths.append(cycle)

    edt = None
    if source_mask is not None:
        source_mask = np.asarray(source_mask).astype(bool)
        edt = ndimage.distance_transform_edt(source_mask)

    strokes = []
    for path in paths:
        if len(path) > 1 and path[-1] < path[0]:
            path = path[::-1]
        pts = [Point(c + 0.5, r + 0.5) for r, c in path]
        if edt is not None and len(pts) >= 2 and path[0] != path[-1]:
            pts = _extend_tips(pts, source_mask, edt)
        pts = rdp_simplify(pts, rdp_epsilon_px)
        if px_to_mm is not None:
            mapped = px_to_mm.apply(np.array([(p.x, p.y) for p in pts]))
            pts = [Point(float(x), float(y)) for x, y in mapped]
        strokes.append((path[0], Stroke(tuple(pts), channel)))
    strokes.sort(key=lambda item: item[0])
    return [s for _, s in strokes]


def _extend_tips(
    pts: list[Point], mask: np.ndarray, edt: np.ndarray, max_march: float = 8.0
) -> list[Point]:
    """March open-path tips outward while inside the stroke mask, pulled
    back by the local half-width so tips land near the true line ends."""
    h, w = mask.shape

    def extended(tip: Point, back: Point) -> Point:
        dx, dy = tip.x - back.x, tip.y - back.y
        norm = math.hypot(dx, dy)
        if norm < 1e-9:
            return tip
        dx, dy = dx / norm, dy / norm
        r0 = min(max(int(tip.y), 0), h - 1)
        c0 = min(max(int(tip.x), 0), w - 1)
        half_width = float(edt[r0, c0])
        t, inside = 0.0, 0.0
        while t < max_march:
            t += 0.25
            r, c = int(tip.y + dy * t), int(tip.x + dx * t)
            if r < 0 or c < 0 or r >= h or c >= w or not mask[r, c]:
                break
            inside = t
        ext = max(0.0, inside - max(half_width - 0.5, 0.0))
        return Point(tip.x + dx * ext, tip.y + dy * ext)

    k = min(4, len(pts) - 1)
    out = list(pts)
    out[0] = extended(pts[0], pts[k])
    out[-1] = extended(pts[-1], pts[-1 - k])
    return out


# ---------------------------------------------------------------------------
# full pipeline


def vectorize_capture(
    img: np.ndarray,
    palette: ColorPalette | None = None,
    calib: Homography | None = None,
    canvas_size: tuple[float, float] = DEFAULT_CANVAS_MM,
    debug_dir: str | None = None,
) -> Sketch:
    """Full raster -> Sketch recovery in canvas frame.

    ``calib`` maps camera pixels to canvas millimeters (identity when
    None, i.e. the capture is already in canvas coordinates). Strokes
    come back channel-major (black, red, green, blue), row-major within
    a channel.
    """
    palette = palette or default_palette()
    flat = flat_field_correct(img)
    masks = classify_channels(flat, palette)
    if debug_dir:
        from .render import save_png

        os.makedirs(debug_dir, exist_ok=True)
        save_png(flat, os.path.join(debug_dir, "flat_field.png"))
        for channel, mask in masks.masks.items():
            save_png(
                (mask * 255).astype(np.uint8)[..., None].repeat(3, axis=2),
                os.path.join(debug_dir, f"mask_{channel.value}.png"),
            )
    strokes: list[Stroke] = []
    for channel in CHANNEL_ORDER:
        mask = masks[channel]
        skeleton = skeletonize(mask)
        strokes.extend(trace_strokes(skeleton, calib, channel, source_mask=mask))
    return Sketch(tuple(strokes), canvas_size)


def polyline_hausdorff(a, b, sample_step: float = 0.5) -> float:
    """Symmetric Hausdorff distance between two polylines.

    Each polyline is densely sampled and measured against the other's
    segments, so the value is exact up to the sampling step.
    """
    pa = _densify([(p.x, p.y) for p in a], sample_step)
    pb = _densify([(p.x, p.y) for p in b], sample_step)
    return max(_directed_hausdorff(pa, b), _directed_hausdorff(pb, a))


def _densify(pts: list[tuple[float, float]], step: float) -> np.ndarray:
    if len(pts) == 1:
        return np.asarray(pts)
    out = []
    for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
        seg_len = math.hypot(x1 - x0, y1 - y0)
        n = max(1, int(math.ceil(seg_len / step)))
        for i in range(n):
            t = i / n
            out.append((x0 + t * (x1 - x0), y0 + t * (y1 - y0)))
    out.append(pts[-1])
    return np.asarray(out)


def _directed_hausdorff(samples: np.ndarray, polyline) -> float:
    pts = np.array([(p.x, p.y) for p in polyline])
    if len(pts) == 1:
        d = np.sqrt(((samples - pts[0]) ** 2).sum(axis=1))
        return float(d.max())
    starts, ends = pts[:-1], pts[1:]
    seg = ends - starts  # (S, 2)
    seg_len2 = np.maximum((seg**2).sum(axis=1), 1e-12)
    rel = samples[:, None, :] - starts[None, :, :]  # (N, S, 2)
    t = np.clip((rel * seg[None, :, :]).sum(axis=2) / seg_len2[None, :], 0.0, 1.0)
    proj = starts[None, :, :] + t[..., None] * seg[None, :, :]
    d2 = ((samples[:, None, :] - proj) ** 2).sum(axis=2)
    return float(np.sqrt(d2.min(axis=1)).max())


def extract_new_strokes(
    prev: Sketch,
    capture: np.ndarray,
    palette: ColorPalette | None = None,
    calib: Homography | None = None,
    tolerance_mm: float = 3.0,
) -> Sketch:
    """Strokes in the capture that are not already on the canvas.

    A recovered stroke is considered already present when its polyline
    lies within ``tolerance_mm`` (Hausdorff) of an existing same-channel
    stroke.
    """
    recovered = vectorize_capture(
        capture, palette, calib, canvas_size=prev.canvas_size
    )
    fresh = []
    for stroke in recovered.strokes:
        known = [s for s in prev.strokes if s.channel is stroke.channel]
        if not known or min(
            polyline_hausdorff(stroke.points, s.points) for s in known
        ) > tolerance_mm:
            fresh.append(stroke)
    return Sketch(tuple(fresh), prev.canvas_size)
