"""Checkpoint file format: JSON header line + flat little-endian float32
arrays in declared order.

The header is a single UTF-8 JSON line describing config, seed, offset
scale, and the array layout; the remainder of the file is the raw
concatenated array bytes. The format is language-portable and loads
bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np

from ..errors import CheckpointError

FORMAT_NAME = "atelier-sketcher"
FORMAT_VERSION = 1


def serialize_checkpoint(
    params, config, seed: int | None = None, offset_scale: float = 1.0,
    extra: dict[str, Any] | None = None,
) -> bytes:
    from .model import PARAM_NAMES

    arrays = params.arrays()
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "config": config.to_json(),
        "seed": config.seed if seed is None else seed,
        "offset_scale": float(offset_scale),
        "dtype": "<f4",
        "arrays": [
            {"name": name, "shape": list(a.shape)}
            for name, a in zip(PARAM_NAMES, arrays)
        ],
    }
    if extra:
        header["extra"] = extra
    blob = json.dumps(header, separators=(",", ":")).encode() + b"\n"
    for a in arrays:
        blob += np.ascontiguousarray(a, dtype="<f4").tobytes()
    return blob


def deserialize_checkpoint(blob: bytes):
    from .model import ModelParams, SketcherConfig

    newline = blob.find(b"\n")
    if newline < 0:
        raise CheckpointError("missing checkpoint header line")
    try:
        header = json.loads(blob[:newline].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from exc
    if header.get("format") != FORMAT_NAME:
        raise CheckpointError(f"not a sketcher checkpoint: {header.get('format')!r}")

    config = SketcherConfig.from_json(header["config"])
    body = blob[newline + 1 :]
    arrays, offset = [], 0
    for entry in header["arrays"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        nbytes = count * 4
        chunk = body[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise CheckpointError(f"truncated checkpoint array {entry['name']}")
        arrays.append(np.frombuffer(chunk, dtype="<f4").reshape(entry["shape"]).copy())
        offset += nbytes
    if offset != len(body):
        raise CheckpointError("trailing bytes after checkpoint arrays")
    params = ModelParams(*arrays)
    meta = {
        "seed": header.get("seed"),
        "offset_scale": header.get("offset_scale", 1.0),
        "extra": header.get("extra", {}),
        "checkpoint_id": checkpoint_id(blob),
    }
    return params, config, meta


def checkpoint_id(blob: bytes) -> str:
    return hashlib.sha256(blob).hexdigest()[:12]


def save_checkpoint(path: str, params, config, offset_scale: float = 1.0,
                    extra: dict[str, Any] | None = None) -> str:
    blob = serialize_checkpoint(params, config, offset_scale=offset_scale, extra=extra)
    with open(path, "wb") as f:
        f.write(blob)
    return checkpoint_id(blob)


def load_checkpoint(path: str):
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    return deserialize_checkpoint(blob)
