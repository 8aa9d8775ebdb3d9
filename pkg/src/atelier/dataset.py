"""Training-data ingestion: QuickDraw NDJSON and artist capture archives.

QuickDraw drawings arrive one JSON object per line with a ``drawing``
field holding one ``[xs, ys]`` pair per stroke. Artist archives are
raster captures run through the vision pipeline and mapped to the canvas
frame. Both paths produce padded, normalized stroke-5 training examples.

Store layout (``save_dataset``): ``rows.npz`` with the padded row arrays
and true lengths, beside a ``manifest.json`` carrying
``{count, offset_scale, dropped, seed}`` plus the config used.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyDataset, InvalidInput, ParseError
from .strokes import (
    END_ROW,
    PlayerChannel,
    Point,
    Sketch,
    Stroke,
    Stroke5Row,
    offset_scale,
    rows_to_array,
    scale_offsets,
    simplify_sketch,
    to_stroke5,
)


@dataclass(frozen=True)
class DatasetConfig:
    max_seq_len: int = 250
    rdp_epsilon: float = 2.0  # in dataset units
    split: tuple[float, float] = (0.8, 0.2)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_seq_len < 2:
            raise InvalidInput("max_seq_len must be >= 2")
        if self.rdp_epsilon < 0:
            raise InvalidInput("rdp_epsilon must be >= 0")
        train_frac, val_frac = self.split
        if not (0 < train_frac < 1 and 0 < val_frac < 1):
            raise InvalidInput("split fractions must lie in (0, 1)")
        if train_frac + val_frac > 1 + 1e-9:
            raise InvalidInput("split fractions must sum to at most 1")


@dataclass(frozen=True)
class TrainingExample:
    rows: np.ndarray  # (max_seq_len, 5) float32, padded with end tokens
    true_len: int
    label: str = ""

    def __post_init__(self) -> None:
        if self.true_len > len(self.rows):
            raise InvalidInput("true_len exceeds padded length")


@dataclass
class DatasetBuild:
    train: list[TrainingExample]
    val: list[TrainingExample]
    offset_scale: float
    dropped: int  # over-length or empty sketches excluded from the build
    seed: int

    def manifest(self) -> dict:
        return {
            "count": len(self.train) + len(self.val),
            "train_count": len(self.train),
            "val_count": len(self.val),
            "offset_scale": self.offset_scale,
            "dropped": self.dropped,
            "seed": self.seed,
        }


def parse_quickdraw_line(text: str, line_no: int | None = None) -> Sketch:
    """One NDJSON drawing -> Sketch (channel Black, raw dataset units)."""
    where = f" (line {line_no})" if line_no is not None else ""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON{where}: {exc}") from exc
    if not isinstance(obj, dict) or "drawing" not in obj:
        raise ParseError(f"missing 'drawing' field{where}")
    label = obj.get("word", "")

    strokes = []
    max_x, max_y = 1.0, 1.0
    for k, arrays in enumerate(obj["drawing"]):
        if not isinstance(arrays, (list, tuple)) or len(arrays) < 2:
            raise ParseError(f"stroke {k} is not an [xs, ys] pair{where}")
        xs, ys = arrays[0], arrays[1]  # raw-format time arrays are ignored
        if len(xs) != len(ys):
            raise ParseError(
                f"stroke {k} has ragged coordinate arrays "
                f"({len(xs)} xs vs {len(ys)} ys){where}"
            )
        if not xs:
            continue
        pts = tuple(Point(float(x), float(y)) for x, y in zip(xs, ys))
        max_x = max(max_x, max(p.x for p in pts))
        max_y = max(max_y, max(p.y for p in pts))
        strokes.append(Stroke(pts, PlayerChannel.BLACK))
    sketch = Sketch(tuple(strokes), (max(255.0, max_x), max(255.0, max_y)))
    object.__setattr__(sketch, "label", label)  # carried informally for reports
    return sketch


def load_quickdraw_file(path: str, limit: int | None = None) -> list[Sketch]:
    sketches = []
    with open(path) as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            sketches.append(parse_quickdraw_line(line, line_no=line_no))
            if limit is not None and len(sketches) >= limit:
                break
    return sketches


def _encode(sketch: Sketch, cfg: DatasetConfig) -> list[Stroke5Row] | None:
    """Simplify + encode; None when empty or over the length budget."""
    if sketch.is_empty():
        return None
    simplified = simplify_sketch(sketch, cfg.rdp_epsilon)
    if simplified.is_empty():
        return None
    rows = to_stroke5(simplified, max_len=None)
    if len(rows) > cfg.max_seq_len:
        return None
    return rows


def _pad(rows: Sequence[Stroke5Row], length: int) -> np.ndarray:
    out = np.tile(np.asarray(tuple(END_ROW), dtype=np.float32), (length, 1))
    out[: len(rows)] = rows_to_array(rows, dtype=np.float32)
    return out


def build_dataset(sketches: Sequence[Sketch], cfg: DatasetConfig) -> DatasetBuild:
    """Simplify, encode, length-filter, split, and normalize sketches.

    The split is a seeded permutation (deterministic); offsets in both
    splits are normalized by the train-split scale so validation sees no
    leakage from its own statistics.
    """
    if len(sketches) < 2:
        raise InvalidInput(f"need at least 2 sketches, got {len(sketches)}")

    encoded: list[tuple[list[Stroke5Row], str]] = []
    dropped = 0
    for sketch in sketches:
        rows = _encode(sketch, cfg)
        if rows is None:
            dropped += 1
            continue
        encoded.append((rows, getattr(sketch, "label", "")))
    if not encoded:
        raise EmptyDataset(
            f"all {len(sketches)} sketches were empty or over {cfg.max_seq_len} rows"
        )

    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(len(encoded))
    train_frac, val_frac = cfg.split
    n = len(encoded)
    n_train = int(n * train_frac + 1e-9)
    if abs(train_frac + val_frac - 1.0) < 1e-9:
        n_val = n - n_train
    else:
        n_val = int(n * val_frac + 1e-9)
    if n_train == 0:
        raise EmptyDataset("train split is empty")
    train_idx = order[:n_train]
    val_idx = order[n_train : n_train + n_val]

    pooled = [r for i in train_idx for r in encoded[i][0]]
    scale = offset_scale(pooled)

    def build(indices) -> list[TrainingExample]:
        out = []
        for i in indices:
            rows, label = encoded[i]
            normalized = scale_offsets(rows, 1.0 / scale)
            out.append(
                TrainingExample(_pad(normalized, cfg.max_seq_len), len(rows), label)
            )
        return out

    return DatasetBuild(
        train=build(train_idx),
        val=build(val_idx),
        offset_scale=scale,
        dropped=dropped,
        seed=cfg.seed,
    )


def save_dataset(build: DatasetBuild, directory: str, cfg: DatasetConfig) -> None:
    os.makedirs(directory, exist_ok=True)
    np.savez_compressed(
        os.path.join(directory, "rows.npz"),
        train_rows=np.stack([e.rows for e in build.train]) if build.train else
        np.zeros((0, cfg.max_seq_len, 5), dtype=np.float32),
        train_len=np.array([e.true_len for e in build.train], dtype=np.int64),
        val_rows=np.stack([e.rows for e in build.val]) if build.val else
        np.zeros((0, cfg.max_seq_len, 5), dtype=np.float32),
        val_len=np.array([e.true_len for e in build.val], dtype=np.int64),
    )
    manifest = build.manifest()
    manifest["config"] = {
        "max_seq_len": cfg.max_seq_len,
        "rdp_epsilon": cfg.rdp_epsilon,
        "split": list(cfg.split),
        "seed": cfg.seed,
    }
    manifest["labels"] = {
        "train": [e.label for e in build.train],
        "val": [e.label for e in build.val],
    }
    with open(os.path.join(directory, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2)


def load_dataset(directory: str) -> DatasetBuild:
    with open(os.path.join(directory, "manifest.json")) as f:
        manifest = json.load(f)
    data = np.load(os.path.join(directory, "rows.npz"))
    labels = manifest.get("labels", {"train": [], "val": []})

    def unpack(rows, lens, names) -> list[TrainingExample]:
        names = list(names) + [""] * (len(rows) - len(names))
        return [
            TrainingExample(r, int(n), label)
            for r, n, label in zip(rows, lens, names)
        ]

    return DatasetBuild(
        train=unpack(data["train_rows"], data["train_len"], labels["train"]),
        val=unpack(data["val_rows"], data["val_len"], labels["val"]),
        offset_scale=float(manifest["offset_scale"]),
        dropped=int(manifest["dropped"]),
        seed=int(manifest["seed"]),
    )


@dataclass
class ArchiveIngest:
    sketches: list[Sketch]
    failures: list[tuple[int, str]]  # (capture index, message)


def ingest_artist_archive(captures, calib, palette=None) -> ArchiveIngest:
    """Vectorize raster captures into canvas-frame sketches.

    Per-capture failures are collected in the report instead of aborting
    the batch.
    """
    from .vision import default_palette, vectorize_capture

    palette = palette or default_palette()
    sketches: list[Sketch] = []
    failures: list[tuple[int, str]] = []
    for index, capture in enumerate(captures):
        try:
            sketches.append(vectorize_capture(capture, palette, calib))
        except Exception as exc:  # keep going, report at the end
            failures.append((index, str(exc)))
    return ArchiveIngest(sketches=sketches, failures=failures)
