"""Vector stroke data model shared by every other module.

Coordinate convention: the canvas frame has its origin at the top-left
corner, x growing rightward and y growing downward, measured in
millimeters. The default canvas is 1100 x 1600 mm.

Model-facing sequences use the stroke-5 encoding: one row per pen move,
``(dx, dy, p_down, p_up, p_end)`` with exactly one pen flag set. The flag
describes the pen state *after* the move: ``p_down`` means the stroke
continues, ``p_up`` means the point just reached ends its stroke, and
``p_end`` terminates the whole drawing. Row 0 of a full encoding is the
start token ``(0, 0, 1, 0, 0)``; an empty drawing encodes as a lone end
token.

Sketches are plain immutable values; nothing here mutates its inputs.
Canvas-bound checking is opt-in via :meth:`Sketch.validate` so that
intermediate geometry (e.g. freshly sampled model output) can exist
out-of-bounds until it is clamped.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import InvalidInput

DEFAULT_CANVAS_MM = (1100.0, 1600.0)


class PlayerChannel(str, Enum):
    """Color identity of a contributor: black theme, two humans, machine."""

    BLACK = "black"
    RED = "red"
    GREEN = "green"
    BLUE = "blue"

    def __str__(self) -> str:  # journal/JSON friendliness
        return self.value


HUMAN_CHANNELS = (PlayerChannel.RED, PlayerChannel.GREEN)
DEFAULT_TURN_ORDER = (PlayerChannel.RED, PlayerChannel.GREEN, PlayerChannel.BLUE)


class Point(NamedTuple):
    x: float
    y: float


class Stroke5Row(NamedTuple):
    """One step of the model-facing encoding."""

    dx: float
    dy: float
    p_down: int
    p_up: int
    p_end: int

    def flags(self) -> tuple[int, int, int]:
        return (self.p_down, self.p_up, self.p_end)


START_ROW = Stroke5Row(0.0, 0.0, 1, 0, 0)
END_ROW = Stroke5Row(0.0, 0.0, 0, 0, 1)


@dataclass(frozen=True)
class Stroke:
    points: tuple[Point, ...]
    channel: PlayerChannel

    def __post_init__(self) -> None:
        if len(self.points) < 1:
            raise InvalidInput("a stroke needs at least one point")
        object.__setattr__(
            self, "points", tuple(Point(float(p[0]), float(p[1])) for p in self.points)
        )
        for p in self.points:
            if not (math.isfinite(p.x) and math.isfinite(p.y)):
                raise InvalidInput(f"non-finite stroke point {p}")

    def length_mm(self) -> float:
        return arc_length(self.points)


@dataclass(frozen=True)
class Sketch:
    strokes: tuple[Stroke, ...] = ()
    canvas_size: tuple[float, float] = DEFAULT_CANVAS_MM

    def __post_init__(self) -> None:
        object.__setattr__(self, "strokes", tuple(self.strokes))
        w, h = self.canvas_size
        object.__setattr__(self, "canvas_size", (float(w), float(h)))

    def validate(self) -> "Sketch":
        """Check canvas bounds; returns self so calls can be chained."""
        w, h = self.canvas_size
        if w <= 0 or h <= 0:
            raise InvalidInput(f"degenerate canvas size {self.canvas_size}")
        for s in self.strokes:
            for p in s.points:
                if not (0.0 <= p.x <= w and 0.0 <= p.y <= h):
                    raise InvalidInput(
                        f"point {p} outside canvas [0, {w}] x [0, {h}]"
                    )
        return self

    def is_empty(self) -> bool:
        return len(self.strokes) == 0

    def channels(self) -> list[PlayerChannel]:
        return [s.channel for s in self.strokes]

    def filter_channels(self, channels: Iterable[PlayerChannel]) -> "Sketch":
        allowed = set(channels)
        return Sketch(
            tuple(s for s in self.strokes if s.channel in allowed), self.canvas_size
        )


def arc_length(points: Sequence[Point]) -> float:
    return float(
        sum(
            math.hypot(b[0] - a[0], b[1] - a[1])
            for a, b in zip(points, points[1:])
        )
    )


def merge_duplicate_points(points: Sequence[Point]) -> list[Point]:
    """Drop consecutive identical points (zero offsets corrupt statistics)."""
    out: list[Point] = []
    for p in points:
        q = Point(float(p[0]), float(p[1]))
        if not out or q != out[-1]:
            out.append(q)
    return out


# ---------------------------------------------------------------------------
# stroke-5 encoding


def to_stroke5(sketch: Sketch, max_len: int | None = 250) -> list[Stroke5Row]:
    """Encode a sketch as stroke-5 rows.

    Row 0 is the start token; row t carries the offset from point t-1 to
    point t and the pen flag after reaching point t. Every stroke's last
    point carries ``p_up``; the final row is the end token. Single-point
    strokes are closed by a zero-offset ``p_up`` row (a pen tap).

    ``max_len`` bounds the output length; whole strokes are dropped from
    the tail until the encoding fits. ``None`` means unbounded.
    """
    w, h = sketch.canvas_size
    if w <= 0 or h <= 0:
        raise InvalidInput(f"degenerate canvas size {sketch.canvas_size}")
    if max_len is not None and max_len < 2:
        raise InvalidInput(f"max_len must be >= 2, got {max_len}")

    strokes = [merge_duplicate_points(s.points) for s in sketch.strokes]
    strokes = [pts for pts in strokes if pts]
    if not strokes:
        return [END_ROW]

    rows: list[Stroke5Row] = [START_ROW]
    pos = strokes[0][0]
    kept_counts: list[int] = []  # row count after each whole stroke
    for k, pts in enumerate(strokes):
        if k > 0:
            # hop to the first point of the next stroke
            nxt = pts[0]
            rows.append(Stroke5Row(nxt.x - pos.x, nxt.y - pos.y, 1, 0, 0))
            pos = nxt
        if len(pts) == 1:
            rows.append(Stroke5Row(0.0, 0.0, 0, 1, 0))  # pen tap
        else:
            for i, p in enumerate(pts[1:], start=1):
                last = i == len(pts) - 1
                rows.append(
                    Stroke5Row(p.x - pos.x, p.y - pos.y, 0 if last else 1, 1 if last else 0, 0)
                )
                pos = p
        kept_counts.append(len(rows))

    if max_len is not None and len(rows) + 1 > max_len:
        keep = 0
        for k, count in enumerate(kept_counts):
            if count + 1 <= max_len:
                keep = k + 1
        return to_stroke5(
            Sketch(sketch.strokes[:keep], sketch.canvas_size), max_len=None
        ) if keep else [END_ROW]

    rows.append(END_ROW)
    return rows


def from_stroke5(
    rows: Sequence[Stroke5Row],
    origin: Point,
    channel: PlayerChannel,
    canvas_size: tuple[float, float] = DEFAULT_CANVAS_MM,
) -> Sketch:
    """Decode stroke-5 rows back into a sketch.

    ``origin`` is the pen position before the first row (the first point
    of the original drawing when decoding a full encoding, since the
    start token carries a zero offset). Decoding stops at the first end
    token; a missing end token closes the last stroke implicitly and
    emits a ``UserWarning``.
    """
    pos = Point(float(origin[0]), float(origin[1]))
    strokes: list[Stroke] = []
    current: list[Point] = []
    ended = False
    for r in rows:
        row = Stroke5Row(*r)
        if row.p_end:
            ended = True
            break
        pos = Point(pos.x + float(row.dx), pos.y + float(row.dy))
        if row.dx == 0.0 and row.dy == 0.0 and row.p_up and current:
            # zero-offset lift: close the stroke without duplicating its point
            strokes.append(Stroke(tuple(current), channel))
            current = []
            continue
        if not current or pos != current[-1]:
            current.append(pos)
        if row.p_up:
            strokes.append(Stroke(tuple(current), channel))
            current = []
    if current:
        strokes.append(Stroke(tuple(current), channel))
    if not ended:
        warnings.warn("stroke-5 sequence had no end token; closed implicitly")
    return Sketch(tuple(strokes), canvas_size)


def rows_to_array(rows: Sequence[Stroke5Row], dtype=np.float64) -> np.ndarray:
    return np.asarray([tuple(r) for r in rows], dtype=dtype).reshape(-1, 5)


def array_to_rows(arr: np.ndarray) -> list[Stroke5Row]:
    out = []
    for r in np.asarray(arr).reshape(-1, 5):
        flags = np.rint(r[2:5]).astype(int)
        out.append(Stroke5Row(float(r[0]), float(r[1]), *flags.tolist()))
    return out


# ---------------------------------------------------------------------------
# geometry


def _point_segment_dist2(p: Point, a: Point, b: Point) -> float:
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        ex, ey = p[0] - ax, p[1] - ay
        return ex * ex + ey * ey
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / seg2
    t = max(0.0, min(1.0, t))
    ex, ey = p[0] - (ax + t * dx), p[1] - (ay + t * dy)
    return ex * ex + ey * ey


def point_polyline_distance(p: Point, polyline: Sequence[Point]) -> float:
    if len(polyline) == 1:
        return math.hypot(p[0] - polyline[0][0], p[1] - polyline[0][1])
    return math.sqrt(
        min(_point_segment_dist2(p, a, b) for a, b in zip(polyline, polyline[1:]))
    )


def rdp_simplify(points: Sequence[Point], epsilon: float) -> list[Point]:
    """Ramer-Douglas-Peucker simplification.

    Returns a subsequence of ``points`` containing both endpoints; every
    dropped point lies within ``epsilon`` of the simplified polyline.
    ``epsilon == 0`` returns the input unchanged (collinear points are
    kept) so that lossless round trips stay lossless.
    """
    if epsilon < 0:
        raise InvalidInput(f"epsilon must be >= 0, got {epsilon}")
    pts = [Point(float(p[0]), float(p[1])) for p in points]
    if epsilon == 0 or len(pts) < 3:
        return pts

    eps2 = epsilon * epsilon
    keep = [False] * len(pts)
    keep[0] = keep[-1] = True
    stack = [(0, len(pts) - 1)]
    while stack:
        first, last = stack.pop()
        max_d2, index = eps2, -1
        a, b = pts[first], pts[last]
        for i in range(first + 1, last):
            d2 = _point_segment_dist2(pts[i], a, b)
            if d2 > max_d2:
                max_d2, index = d2, i
        if index != -1:
            keep[index] = True
            if index - first > 1:
                stack.append((first, index))
            if last - index > 1:
                stack.append((index, last))
    return [p for p, k in zip(pts, keep) if k]


def simplify_sketch(sketch: Sketch, epsilon: float) -> Sketch:
    """Per-stroke duplicate merge + RDP; drops strokes that vanish."""
    out = []
    for s in sketch.strokes:
        pts = merge_duplicate_points(s.points)
        if not pts:
            continue
        out.append(Stroke(tuple(rdp_simplify(pts, epsilon)), s.channel))
    return Sketch(tuple(out), sketch.canvas_size)


# ---------------------------------------------------------------------------
# offset conditioning


def offset_scale(rows: Sequence[Stroke5Row]) -> float:
    """Spread of the non-zero offset components, taken about zero.

    This is the population standard deviation under the zero-mean
    convention (i.e. the RMS of the non-zero dx/dy values), which keeps
    the statistic sign-invariant.
    """
    vals = [r.dx for r in rows if r.dx != 0.0] + [r.dy for r in rows if r.dy != 0.0]
    if not vals:
        return 1.0
    return math.sqrt(sum(v * v for v in vals) / len(vals))


def normalize_offsets(rows: Sequence[Stroke5Row]) -> tuple[list[Stroke5Row], float]:
    """Divide offsets by their spread; returns (rows, scale).

    ``scale * normalized == original`` and a second normalization is the
    identity with scale 1. Zero-variance input is returned unchanged with
    scale 1.
    """
    scale = offset_scale(rows)
    if scale == 1.0:
        return [Stroke5Row(*r) for r in rows], 1.0
    return scale_offsets(rows, 1.0 / scale), scale


def scale_offsets(rows: Sequence[Stroke5Row], factor: float) -> list[Stroke5Row]:
    return [
        Stroke5Row(r.dx * factor, r.dy * factor, r.p_down, r.p_up, r.p_end)
        for r in (Stroke5Row(*x) for x in rows)
    ]


def denormalize_offsets(rows: Sequence[Stroke5Row], scale: float) -> list[Stroke5Row]:
    return scale_offsets(rows, scale)


# ---------------------------------------------------------------------------
# frame changes


def _as_matrix(transform) -> np.ndarray:
    m = getattr(transform, "matrix", transform)
    m = np.asarray(m, dtype=np.float64)
    if m.shape == (2, 3):  # affine, lift to projective
        m = np.vstack([m, [0.0, 0.0, 1.0]])
    if m.shape != (3, 3):
        raise InvalidInput(f"transform must be 2x3 or 3x3, got shape {m.shape}")
    if abs(np.linalg.det(m)) < 1e-12:
        raise InvalidInput("transform is not invertible")
    return m


def transform_sketch(sketch: Sketch, transform) -> Sketch:
    """Map every point through an affine or projective transform.

    Channel and stroke structure are preserved; the canvas size is kept
    as-is (callers changing frames are expected to supply the new one).
    """
    m = _as_matrix(transform)
    strokes = []
    for s in sketch.strokes:
        pts = np.array([(p.x, p.y, 1.0) for p in s.points])
        mapped = pts @ m.T
        wcol = mapped[:, 2]
        if np.any(np.abs(wcol) < 1e-12):
            raise InvalidInput("transform sends a stroke point to infinity")
        xy = mapped[:, :2] / wcol[:, None]
        strokes.append(Stroke(tuple(Point(x, y) for x, y in xy), s.channel))
    return Sketch(tuple(strokes), sketch.canvas_size)


def clamp_to_canvas(sketch: Sketch) -> Sketch:
    """Clamp every point into the canvas rectangle."""
    w, h = sketch.canvas_size
    strokes = []
    for s in sketch.strokes:
        pts = [Point(min(max(p.x, 0.0), w), min(max(p.y, 0.0), h)) for p in s.points]
        strokes.append(Stroke(tuple(merge_duplicate_points(pts)), s.channel))
    return Sketch(tuple(strokes), sketch.canvas_size)


# ---------------------------------------------------------------------------
# JSON lingua franca


def sketch_to_json(sketch: Sketch) -> dict:
    """Sketch as the wire/file format shared by service, CLI and UI."""
    return {
        "canvas": [sketch.canvas_size[0], sketch.canvas_size[1]],
        "strokes": [
            {
                "channel": s.channel.value,
                "points": [[p.x, p.y] for p in s.points],
            }
            for s in sketch.strokes
        ],
    }


def sketch_from_json(data: dict) -> Sketch:
    try:
        canvas = data.get("canvas", list(DEFAULT_CANVAS_MM))
        strokes = tuple(
            Stroke(
                tuple(Point(float(x), float(y)) for x, y in s["points"]),
                PlayerChannel(s["channel"]),
            )
            for s in data.get("strokes", [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed sketch JSON: {exc}") from exc
    return Sketch(strokes, (float(canvas[0]), float(canvas[1])))
