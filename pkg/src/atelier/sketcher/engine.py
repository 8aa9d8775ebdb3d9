"""Bridge between canvas-space sketches and the model's offset space.

The engine owns loaded model parameters plus the bookkeeping needed to
condition on canvas strokes: offsets are normalized per context (the
returned scale maps sampled offsets back to millimeters), the origin for
decoding is the last pen position of the context, and decoded strokes
are clamped to the canvas and tagged Blue.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..strokes import (
    PlayerChannel,
    Point,
    Sketch,
    Stroke5Row,
    clamp_to_canvas,
    denormalize_offsets,
    from_stroke5,
    normalize_offsets,
    to_stroke5,
)
from . import checkpoint as ckpt
from .model import ModelParams, SketcherConfig, Suggestion, complete, init_params

# context spans this fraction of the smaller canvas side when the context
# itself provides no offset statistics (empty or degenerate prefix)
FALLBACK_SCALE_FRACTION = 0.02


@dataclass
class SketcherEngine:
    params: ModelParams
    config: SketcherConfig
    offset_scale: float = 1.0  # training-corpus scale, kept for provenance
    checkpoint_id: str = "uninitialized"
    max_context_len: int = 250

    @classmethod
    def from_checkpoint(cls, path: str, max_context_len: int = 250) -> "SketcherEngine":
        params, config, meta = ckpt.load_checkpoint(path)
        return cls(
            params=params,
            config=config,
            offset_scale=float(meta.get("offset_scale", 1.0)),
            checkpoint_id=meta["checkpoint_id"],
            max_context_len=max_context_len,
        )

    @classmethod
    def fresh(cls, config: SketcherConfig | None = None) -> "SketcherEngine":
        """Untrained engine (useful for tests and dry runs)."""
        config = config or SketcherConfig()
        return cls(params=init_params(config), config=config, checkpoint_id="fresh")

    def save(self, path: str) -> str:
        cid = ckpt.save_checkpoint(
            path, self.params, self.config, offset_scale=self.offset_scale
        )
        self.checkpoint_id = cid
        return cid

    def _context_rows(self, context: Sketch) -> tuple[list[Stroke5Row], float, Point]:
        rows = to_stroke5(context, max_len=self.max_context_len)
        body = [r for r in rows if not r.p_end]
        normalized, scale = normalize_offsets(body)
        if not body or scale == 1.0 and all(r.dx == 0 and r.dy == 0 for r in body):
            w, h = context.canvas_size
            scale = FALLBACK_SCALE_FRACTION * min(w, h)
        if context.strokes:
            origin = context.strokes[-1].points[-1]
        else:
            w, h = context.canvas_size
            origin = Point(w / 2.0, h / 2.0)
        return normalized, scale, origin

    def suggest(
        self,
        context: Sketch,
        amount: int,
        temperature: float,
        seed: int,
        policy: str | None = None,
    ) -> tuple[Suggestion, Sketch]:
        """Sample continuation strokes for a canvas context.

        Returns the raw suggestion (model units, reproducible from the
        context and seed) and its decoded Blue sketch in canvas frame.
        """
        rows, scale, origin = self._context_rows(context)
        suggestion = complete(
            self.params, rows, amount, temperature, seed, policy=policy
        )
        decoded = self.decode(suggestion, scale, origin, context.canvas_size)
        return suggestion, decoded

    def decode(
        self,
        suggestion: Suggestion,
        scale: float,
        origin: Point,
        canvas_size: tuple[float, float],
    ) -> Sketch:
        mm_rows = denormalize_offsets(suggestion.rows, scale)
        sketch = from_stroke5(mm_rows, origin, PlayerChannel.BLUE, canvas_size)
        return clamp_to_canvas(sketch)
