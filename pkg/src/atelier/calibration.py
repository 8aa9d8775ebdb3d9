"""Projective maps among the camera, canvas, and projector frames.

The installation has three planar frames: camera pixels, canvas
millimeters, and projector pixels. Homographies between them are
estimated from point correspondences with the normalized direct linear
transform (Hartley normalization is mandatory: raw DLT is numerically
fragile and the tests depend on tight tolerances).
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, ImageDraw

from .errors import DegenerateCalibration, InvalidInput, PointAtInfinity

FRAMES = ("camera", "canvas", "projector")


@dataclass(frozen=True)
class Homography:
    """3x3 projective map, normalized so that h33 = 1."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise InvalidInput(f"homography must be 3x3, got {m.shape}")
        if abs(m[2, 2]) < 1e-12:
            raise InvalidInput("homography has vanishing h33")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) < 1e-12:
            raise InvalidInput("homography is not invertible")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def scale(cls, sx: float, sy: float | None = None) -> "Homography":
        sy = sx if sy is None else sy
        return cls(np.diag([sx, sy, 1.0]))

    @classmethod
    def translation(cls, tx: float, ty: float) -> "Homography":
        m = np.eye(3)
        m[0, 2], m[1, 2] = tx, ty
        return cls(m)

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))

    def compose(self, inner: "Homography") -> "Homography":
        """self o inner: applies ``inner`` first."""
        return Homography(self.matrix @ inner.matrix)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map an (N, 2) array of points."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        homo = np.hstack([pts, np.ones((len(pts), 1))]) @ self.matrix.T
        w = homo[:, 2]
        if np.any(np.abs(w) < 1e-12):
            raise PointAtInfinity("point maps to infinity under this homography")
        return homo[:, :2] / w[:, None]


def map_point(h: Homography, p) -> tuple[float, float]:
    x, y = h.apply(np.array([[p[0], p[1]]]))[0]
    return (float(x), float(y))


@dataclass(frozen=True)
class CalibrationSet:
    """Point correspondences between two named frames."""

    src: np.ndarray
    dst: np.ndarray
    src_frame: str = "camera"
    dst_frame: str = "canvas"

    def __post_init__(self) -> None:
        src = np.asarray(self.src, dtype=np.float64).reshape(-1, 2)
        dst = np.asarray(self.dst, dtype=np.float64).reshape(-1, 2)
        if len(src) != len(dst):
            raise InvalidInput("source and destination counts differ")
        if len(src) < 4:
            raise InvalidInput(f"need >= 4 correspondences, got {len(src)}")
        if not (np.all(np.isfinite(src)) and np.all(np.isfinite(dst))):
            raise InvalidInput("non-finite correspondence")
        triple = _collinear_triple(src)
        if triple is not None:
            raise DegenerateCalibration(
                f"source points {triple} are collinear", detail={"triple": list(triple)}
            )
        src.setflags(write=False)
        dst.setflags(write=False)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)

    def __len__(self) -> int:
        return len(self.src)


def _collinear_triple(pts: np.ndarray) -> tuple[int, int, int] | None:
    """First triple with (relative) zero triangle area, if any."""
    scale = max(float(np.ptp(pts[:, 0])), float(np.ptp(pts[:, 1])), 1e-12)
    for i, j, k in itertools.combinations(range(len(pts)), 3):
        a, b, c = pts[i], pts[j], pts[k]
        area2 = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
        if area2 / (scale * scale) < 1e-10:
            return (i, j, k)
    return None


def _hartley_normalization(pts: np.ndarray) -> np.ndarray:
    """Similarity bringing points to zero mean and mean distance sqrt(2)."""
    mean = pts.mean(axis=0)
    dist = np.sqrt(((pts - mean) ** 2).sum(axis=1)).mean()
    s = math.sqrt(2.0) / max(dist, 1e-12)
    return np.array(
        [[s, 0.0, -s * mean[0]], [0.0, s, -s * mean[1]], [0.0, 0.0, 1.0]]
    )


def solve_homography(calibration: CalibrationSet) -> Homography:
    """Least-squares DLT with Hartley normalization.

    Exact (to rounding) for four noise-free correspondences; minimizes the
    algebraic error for more.
    """
    t_src = _hartley_normalization(calibration.src)
    t_dst = _hartley_normalization(calibration.dst)
    src = (np.hstack([calibration.src, np.ones((len(calibration), 1))]) @ t_src.T)[:, :2]
    dst = (np.hstack([calibration.dst, np.ones((len(calibration), 1))]) @ t_dst.T)[:, :2]

    rows = []
    for (x, y), (u, v) in zip(src, dst):
        rows.append([0, 0, 0, -x, -y, -1, v * x, v * y, v])
        rows.append([x, y, 1, 0, 0, 0, -u * x, -u * y, -u])
    _, _, vt = np.linalg.svd(np.asarray(rows))
    h_norm = vt[-1].reshape(3, 3)
    return Homography(np.linalg.inv(t_dst) @ h_norm @ t_src)


def reprojection_rmse(h: Homography, calibration: CalibrationSet) -> float:
    mapped = h.apply(calibration.src)
    return float(np.sqrt(((mapped - calibration.dst) ** 2).sum(axis=1).mean()))


# ---------------------------------------------------------------------------
# marker grid bootstrap


@dataclass(frozen=True)
class MarkerPattern:
    points: np.ndarray  # (n, 2) projector coordinates of disc centers
    raster: np.ndarray  # (H, W, 3) uint8, white discs on black

    def save_png(self, path: str) -> None:
        Image.fromarray(self.raster).save(path)


def marker_pattern(
    n: int, projector_size: tuple[int, int], radius: int = 12
) -> MarkerPattern:
    """Deterministic grid of n high-contrast disc markers.

    Markers fill the smallest rows x cols grid holding n points, inset 10%
    from the projector edges, emitted row-major. Spacing below 4 radii
    means the grid capacity is exceeded.
    """
    if n < 4:
        raise InvalidInput(f"need at least 4 markers, got {n}")
    w, h = int(projector_size[0]), int(projector_size[1])
    cols = max(2, math.ceil(math.sqrt(n * w / h)))
    rows = max(2, math.ceil(n / cols))
    while cols > 2 and (cols - 1) * rows >= n:
        cols -= 1
    while rows > 2 and (rows - 1) * cols >= n:
        rows -= 1

    x0, x1 = 0.1 * w, 0.9 * w
    y0, y1 = 0.1 * h, 0.9 * h
    # integer pixel centers so the rasterized disc centroid is the stated point
    xs = np.rint(np.linspace(x0, x1, cols))
    ys = np.rint(np.linspace(y0, y1, rows))
    if (cols > 1 and xs[1] - xs[0] < 4 * radius) or (rows > 1 and ys[1] - ys[0] < 4 * radius):
        raise InvalidInput(
            f"{n} markers exceed grid capacity of a {w}x{h} projector at radius {radius}"
        )
    grid = [(x, y) for y in ys for x in xs][:n]

    img = Image.new("RGB", (w, h), (0, 0, 0))
    draw = ImageDraw.Draw(img)
    for x, y in grid:
        draw.ellipse([x - radius, y - radius, x + radius, y + radius], fill=(255, 255, 255))
    return MarkerPattern(np.asarray(grid, dtype=np.float64), np.asarray(img))


def detect_markers(raster: np.ndarray, min_area: int = 9) -> np.ndarray:
    """Centroids of bright blobs, row-major sorted; (n, 2) array.

    This is the same blob logic the vision pipeline relies on: threshold,
    label 8-connected components, take intensity centroids.
    """
    from scipy import ndimage

    gray = np.asarray(raster)
    if gray.ndim == 3:
        gray = gray.mean(axis=2)
    mask = gray > 127
    labels, count = ndimage.label(mask, structure=np.ones((3, 3)))
    centers = []
    for idx in range(1, count + 1):
        ys, xs = np.nonzero(labels == idx)
        if len(xs) < min_area:
            continue
        centers.append((xs.mean(), ys.mean()))
    centers.sort(key=lambda c: (c[1], c[0]))
    return np.asarray(centers, dtype=np.float64).reshape(-1, 2)


# ---------------------------------------------------------------------------
# rig: named frames with cached compositions


class CalibrationRig:
    """Pairwise homographies between named frames, composed on demand.

    Stored maps are the ones actually calibrated (e.g. camera->canvas and
    canvas->projector); anything else is derived by composition/inversion
    and cached.
    """

    def __init__(self) -> None:
        self._maps: dict[tuple[str, str], Homography] = {}
        self._rmse: dict[tuple[str, str], float] = {}
        self._cache: dict[tuple[str, str], Homography] = {}

    def set_map(self, src: str, dst: str, h: Homography, rmse: float = 0.0) -> None:
        if src not in FRAMES or dst not in FRAMES:
            raise InvalidInput(f"unknown frame in ({src}, {dst}); frames are {FRAMES}")
        self._maps[(src, dst)] = h
        self._rmse[(src, dst)] = float(rmse)
        self._cache.clear()

    def has_map(self, src: str, dst: str) -> bool:
        try:
            self.get(src, dst)
            return True
        except InvalidInput:
            return False

    def get(self, src: str, dst: str) -> Homography:
        if src == dst:
            return Homography.identity()
        key = (src, dst)
        if key in self._cache:
            return self._cache[key]
        h = self._search(src, dst)
        if h is None:
            raise InvalidInput(f"no calibration path from {src} to {dst}")
        self._cache[key] = h
        return h

    def _search(self, src: str, dst: str) -> Homography | None:
        # frames form a graph with <= 3 nodes; edges usable both ways
        edges: dict[tuple[str, str], Homography] = {}
        for (a, b), h in self._maps.items():
            edges[(a, b)] = h
            edges[(b, a)] = h.inverse()
        if (src, dst) in edges:
            return edges[(src, dst)]
        for mid in FRAMES:
            if (src, mid) in edges and (mid, dst) in edges:
                return edges[(mid, dst)].compose(edges[(src, mid)])
        return None

    def to_json(self) -> dict:
        return {
            "frames": list(FRAMES),
            "maps": [
                {
                    "src": src,
                    "dst": dst,
                    "matrix": [float(v) for v in h.matrix.flatten()],
                    "rmse": self._rmse.get((src, dst), 0.0),
                }
                for (src, dst), h in sorted(self._maps.items())
            ],
            "timestamp": time.time(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "CalibrationRig":
        rig = cls()
        for m in data.get("maps", []):
            rig.set_map(
                m["src"],
                m["dst"],
                Homography(np.asarray(m["matrix"], dtype=np.float64).reshape(3, 3)),
                m.get("rmse", 0.0),
            )
        return rig

    def save(self, path: str) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=2)

    @classmethod
    def load(cls, path: str) -> "CalibrationRig":
        with open(path) as f:
            return cls.from_json(json.load(f))
