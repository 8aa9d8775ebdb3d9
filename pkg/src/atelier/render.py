"""Raster and SVG rendering of sketches.

Rendering serves three purposes: synthetic captures for the vision
tests, the projector overlay raster the service hands out per
suggestion, and human-facing SVG exports. Lines are drawn hard-edged
(no antialiasing) with round joints so colors stay exact for the
classifier.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np
from PIL import Image, ImageDraw

from .calibration import Homography
from .strokes import PlayerChannel, Sketch

CHANNEL_COLORS: dict[PlayerChannel, tuple[int, int, int]] = {
    PlayerChannel.BLACK: (15, 15, 15),
    PlayerChannel.RED: (210, 40, 40),
    PlayerChannel.GREEN: (40, 170, 60),
    PlayerChannel.BLUE: (45, 70, 200),
}
WHITE = (255, 255, 255)


def _transform_points(points, mm_to_px: Homography | None, scale: float):
    pts = np.array([(p.x, p.y) for p in points], dtype=np.float64)
    if mm_to_px is not None:
        pts = mm_to_px.apply(pts)
    return pts * scale


def _draw_polyline(draw: ImageDraw.ImageDraw, pts: np.ndarray, color, width: int):
    radius = width / 2.0
    if len(pts) == 1:
        x, y = pts[0]
        draw.ellipse([x - radius, y - radius, x + radius, y + radius], fill=color)
        return
    for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
        draw.line([x0, y0, x1, y1], fill=color, width=width)
    for x, y in pts:  # round caps and joints
        draw.ellipse([x - radius, y - radius, x + radius, y + radius], fill=color)


def render_sketch(
    sketch: Sketch,
    px_per_mm: float = 1.0,
    mm_to_px: Homography | None = None,
    size_px: tuple[int, int] | None = None,
    stroke_width_px: int = 3,
    background: tuple[int, int, int] = WHITE,
    colors: Mapping[PlayerChannel, tuple[int, int, int]] | None = None,
) -> np.ndarray:
    """Rasterize a sketch; returns (H, W, 3) uint8.

    Points go through ``mm_to_px`` (if given) and then ``px_per_mm``
    scaling; the image size defaults to the scaled canvas.
    """
    colors = colors or CHANNEL_COLORS
    if size_px is None:
        w = int(round(sketch.canvas_size[0] * px_per_mm))
        h = int(round(sketch.canvas_size[1] * px_per_mm))
    else:
        w, h = size_px
    img = Image.new("RGB", (max(w, 1), max(h, 1)), background)
    draw = ImageDraw.Draw(img)
    for stroke in sketch.strokes:
        pts = _transform_points(stroke.points, mm_to_px, px_per_mm)
        _draw_polyline(draw, pts, colors[stroke.channel], stroke_width_px)
    return np.asarray(img)


def render_suggestion_overlay(
    sketch: Sketch,
    mm_to_px: Homography | None,
    size_px: tuple[int, int],
    stroke_width_px: int = 5,
    color: tuple[int, int, int] = CHANNEL_COLORS[PlayerChannel.BLUE],
) -> np.ndarray:
    """Suggestion strokes on a transparent background; (H, W, 4) uint8.

    This is the raster a projector fullscreens: blue strokes in the
    projector frame, everything else transparent (black when flattened).
    """
    w, h = size_px
    img = Image.new("RGBA", (max(w, 1), max(h, 1)), (0, 0, 0, 0))
    draw = ImageDraw.Draw(img)
    for stroke in sketch.strokes:
        pts = _transform_points(stroke.points, mm_to_px, 1.0)
        _draw_polyline(draw, pts, (*color, 255), stroke_width_px)
    return np.asarray(img)


def sketch_to_svg(
    sketch: Sketch,
    stroke_width_mm: float = 3.0,
    colors: Mapping[PlayerChannel, tuple[int, int, int]] | None = None,
) -> str:
    """SVG document with one polyline per stroke in its channel color."""
    colors = colors or CHANNEL_COLORS
    w, h = sketch.canvas_size
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}mm" height="{h}mm" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
    ]
    for stroke in sketch.strokes:
        r, g, b = colors[stroke.channel]
        points = " ".join(f"{p.x:.3f},{p.y:.3f}" for p in stroke.points)
        if len(stroke.points) == 1:
            p = stroke.points[0]
            parts.append(
                f'<circle cx="{p.x:.3f}" cy="{p.y:.3f}" r="{stroke_width_mm / 2}" '
                f'fill="rgb({r},{g},{b})"/>'
            )
        else:
            parts.append(
                f'<polyline points="{points}" fill="none" stroke="rgb({r},{g},{b})" '
                f'stroke-width="{stroke_width_mm}" stroke-linecap="round" '
                f'stroke-linejoin="round"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts)


def save_png(array: np.ndarray, path: str) -> None:
    Image.fromarray(array).save(path)


def load_png(path: str) -> np.ndarray:
    return np.asarray(Image.open(path).convert("RGB"))
