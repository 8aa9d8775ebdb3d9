"""atelier: turn-based human/machine collaborative sketching.

Humans draw colored strokes in rounds; a recurrent neural sketcher
proposes blue continuation strokes that are projected back for the
humans to accept, modify, or reject. The package also recovers vector
strokes from raster captures of the canvas and maps between camera,
canvas, and projector coordinate frames.
"""

from .strokes import (
    DEFAULT_CANVAS_MM,
    PlayerChannel,
    Point,
    Sketch,
    Stroke,
    Stroke5Row,
    from_stroke5,
    sketch_from_json,
    sketch_to_json,
    to_stroke5,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CANVAS_MM",
    "PlayerChannel",
    "Point",
    "Sketch",
    "Stroke",
    "Stroke5Row",
    "from_stroke5",
    "sketch_from_json",
    "sketch_to_json",
    "to_stroke5",
    "__version__",
]
