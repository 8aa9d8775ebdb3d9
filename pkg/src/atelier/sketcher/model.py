"""Recurrent sketch model: single-layer LSTM with a mixture-density head.

Decoder-only and autoregressive: the network consumes stroke-5 rows one
at a time and emits, for every step, the parameters of a distribution
over the next row. Completion conditions on a prefix (the strokes
already on the canvas) and then samples until the requested number of
new strokes exists.

The forward and backward passes are written out by hand in numpy; the
backward pass is verified against central finite differences (see
``training.grad_check``). All math runs in the dtype of the parameters,
float32 by default (the checkpoint format stores float32).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from ..errors import InvalidInput, NumericError
from ..strokes import END_ROW, START_ROW, Stroke5Row, rows_to_array
from . import mdn
from .mdn import MixtureParams

DEFAULT_MEAN_STROKE_ROWS = 25.0  # cap fallback when the prefix has no breaks


@dataclass(frozen=True)
class SketcherConfig:
    hidden_size: int = 256
    num_mixtures: int = 20
    learning_rate: float = 1e-3
    grad_clip: float = 1.0
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        counts = {
            "hidden_size": self.hidden_size,
            "num_mixtures": self.num_mixtures,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
        }
        for name, value in counts.items():
            if name != "epochs" and value < 1:
                raise InvalidInput(f"{name} must be >= 1, got {value}")
        if self.epochs < 0:
            raise InvalidInput(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate <= 0:
            raise InvalidInput("learning_rate must be positive")
        if self.grad_clip <= 0:
            raise InvalidInput("grad_clip must be positive")

    def to_json(self) -> dict:
        return {
            "hidden_size": self.hidden_size,
            "num_mixtures": self.num_mixtures,
            "learning_rate": self.learning_rate,
            "grad_clip": self.grad_clip,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SketcherConfig":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})


PARAM_NAMES = ("wx", "wh", "b", "wy", "by")


@dataclass
class ModelParams:
    """LSTM cell weights plus the output projection.

    Gate layout along the 4H axis is (input, forget, cell, output).
    """

    wx: np.ndarray  # (5, 4H)
    wh: np.ndarray  # (H, 4H)
    b: np.ndarray  # (4H,)
    wy: np.ndarray  # (H, 6M+3)
    by: np.ndarray  # (6M+3,)

    @property
    def hidden_size(self) -> int:
        return self.wh.shape[0]

    @property
    def num_mixtures(self) -> int:
        return (self.wy.shape[1] - 3) // 6

    @property
    def dtype(self) -> np.dtype:
        return self.wx.dtype

    def arrays(self) -> list[np.ndarray]:
        return [self.wx, self.wh, self.b, self.wy, self.by]

    def copy(self) -> "ModelParams":
        return ModelParams(*(a.copy() for a in self.arrays()))

    def astype(self, dtype) -> "ModelParams":
        return ModelParams(*(a.astype(dtype) for a in self.arrays()))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def from_vector(self, vec: np.ndarray) -> "ModelParams":
        out, offset = [], 0
        for a in self.arrays():
            out.append(vec[offset : offset + a.size].reshape(a.shape).astype(a.dtype))
            offset += a.size
        return ModelParams(*out)

    def validate_finite(self) -> None:
        if not all(np.all(np.isfinite(a)) for a in self.arrays()):
            raise NumericError("model parameters contain non-finite values")


def init_params(
    config: SketcherConfig, dtype=np.float32, rng: np.random.Generator | None = None
) -> ModelParams:
    """Seeded initialization; forget-gate bias starts at 1."""
    rng = rng or np.random.default_rng(config.seed)
    h = config.hidden_size
    k = mdn.output_width(config.num_mixtures)
    wx = rng.normal(0.0, 1.0 / math.sqrt(5), (5, 4 * h))
    wh = rng.normal(0.0, 1.0 / math.sqrt(h), (h, 4 * h))
    b = np.zeros(4 * h)
    b[h : 2 * h] = 1.0
    wy = rng.normal(0.0, 0.5 / math.sqrt(h), (h, k))
    by = np.zeros(k)
    return ModelParams(*(a.astype(dtype) for a in (wx, wh, b, wy, by)))


class RecurrentState(NamedTuple):
    h: np.ndarray
    c: np.ndarray


def init_state(params: ModelParams, batch: int | None = None) -> RecurrentState:
    shape = (params.hidden_size,) if batch is None else (batch, params.hidden_size)
    return RecurrentState(
        np.zeros(shape, dtype=params.dtype), np.zeros(shape, dtype=params.dtype)
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _lstm_step(params: ModelParams, x: np.ndarray, h: np.ndarray, c: np.ndarray):
    """One batched cell step; returns (h', c', gate cache)."""
    hs = params.hidden_size
    z = x @ params.wx + h @ params.wh + params.b
    i = _sigmoid(z[:, :hs])
    f = _sigmoid(z[:, hs : 2 * hs])
    g = np.tanh(z[:, 2 * hs : 3 * hs])
    o = _sigmoid(z[:, 3 * hs :])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    return h_new, c_new, (i, f, g, o, tc)


def forward_step(
    params: ModelParams, state: RecurrentState, row: Stroke5Row
) -> tuple[RecurrentState, MixtureParams]:
    """Advance one row; returns the next state and the distribution over
    the following row. Deterministic: identical inputs give identical
    outputs."""
    x = np.asarray(tuple(row), dtype=params.dtype)
    if not np.all(np.isfinite(x)):
        raise NumericError(f"non-finite input row {row}")
    h, c = state
    h_new, c_new, _ = _lstm_step(params, x[None, :], h[None, :], c[None, :])
    y = h_new @ params.wy + params.by
    return RecurrentState(h_new[0], c_new[0]), mdn.split_raw_output(
        y[0], params.num_mixtures
    )


# ---------------------------------------------------------------------------
# batched training path


def batch_from_rows(
    rows_list: Sequence[Sequence[Stroke5Row]], dtype=np.float32
) -> tuple[np.ndarray, np.ndarray]:
    """Pad variable-length row sequences with end tokens; returns
    (rows (B, L, 5), lengths (B,))."""
    lengths = np.array([len(r) for r in rows_list], dtype=np.int64)
    max_len = int(lengths.max())
    out = np.tile(np.asarray(tuple(END_ROW), dtype=dtype), (len(rows_list), max_len, 1))
    for b, rows in enumerate(rows_list):
        out[b, : len(rows)] = rows_to_array(rows, dtype=dtype)
    return out, lengths


def loss_and_grads(
    params: ModelParams,
    rows: np.ndarray,
    lengths: np.ndarray,
    compute_grads: bool = True,
):
    """Mean per-step NLL over the batch and its parameter gradients.

    ``rows`` is (B, L, 5); step t consumes row t and predicts row t+1,
    masked to the valid region of each sequence. Returns
    (LossTerms, ModelParams-shaped gradients or None).
    """
    rows = np.asarray(rows, dtype=params.dtype)
    b, length, _ = rows.shape
    steps = length - 1
    hs = params.hidden_size
    mix = params.num_mixtures

    if steps < 1:
        raise InvalidInput("sequences must have at least 2 rows")
    # step t targets row t+1: valid while t+1 < true_len
    mask = (np.arange(steps)[None, :] < (np.asarray(lengths)[:, None] - 1)).astype(
        params.dtype
    )
    total_steps = float(mask.sum())
    if total_steps == 0:
        zero = mdn.LossTerms(0.0, 0.0, 0.0)
        return (zero, _zero_grads(params)) if compute_grads else (zero, None)

    xs = rows[:, :-1, :]
    targets = rows[:, 1:, :].reshape(b * steps, 5)

    h = np.zeros((b, hs), dtype=params.dtype)
    c = np.zeros((b, hs), dtype=params.dtype)
    h_all = np.empty((steps, b, hs), dtype=params.dtype)
    cache = []
    for t in range(steps):
        h_prev, c_prev = h, c
        h, c, gates = _lstm_step(params, xs[:, t, :], h, c)
        h_all[t] = h
        cache.append((h_prev, c_prev, gates))

    h_flat = h_all.transpose(1, 0, 2).reshape(b * steps, hs)
    y = h_flat @ params.wy + params.by

    weights = (mask / total_steps).reshape(b * steps).astype(params.dtype)
    offset_nll, pen_nll, dy = mdn.nll_and_grad(y, targets, weights, mix)

    offset_mean = float((offset_nll * weights).sum())
    pen_mean = float((pen_nll * weights).sum())
    terms = mdn.LossTerms(offset_mean + pen_mean, offset_mean, pen_mean)
    if not compute_grads:
        return terms, None

    grads = _zero_grads(params)
    grads.wy += h_flat.T @ dy
    grads.by += dy.sum(axis=0)
    dh_all = (dy @ params.wy.T).reshape(b, steps, hs).transpose(1, 0, 2)

    dh_next = np.zeros((b, hs), dtype=params.dtype)
    dc_next = np.zeros((b, hs), dtype=params.dtype)
    for t in range(steps - 1, -1, -1):
        h_prev, c_prev, (i, f, g, o, tc) = cache[t]
        dh = dh_all[t] + dh_next
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_next = dc * f
        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        grads.wx += xs[:, t, :].T @ dz
        grads.wh += h_prev.T @ dz
        grads.b += dz.sum(axis=0)
        dh_next = dz @ params.wh.T
    return terms, grads


def _zero_grads(params: ModelParams) -> ModelParams:
    return ModelParams(*(np.zeros_like(a) for a in params.arrays()))


# ---------------------------------------------------------------------------
# completion


@dataclass(frozen=True)
class Suggestion:
    """Newly generated continuation rows plus full provenance."""

    rows: tuple[Stroke5Row, ...]
    temperature: float
    seed: int
    policy_used: str | None = None
    cap_hit: bool = False

    def to_json(self) -> dict:
        return {
            "rows": [list(r) for r in self.rows],
            "temperature": self.temperature,
            "seed": self.seed,
            "policy_used": self.policy_used,
            "cap_hit": self.cap_hit,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Suggestion":
        return cls(
            rows=tuple(
                Stroke5Row(float(r[0]), float(r[1]), int(r[2]), int(r[3]), int(r[4]))
                for r in data["rows"]
            ),
            temperature=float(data["temperature"]),
            seed=int(data["seed"]),
            policy_used=data.get("policy_used"),
            cap_hit=bool(data.get("cap_hit", False)),
        )


def _strip_terminator(rows: Sequence[Stroke5Row]) -> list[Stroke5Row]:
    out = []
    for r in rows:
        r = Stroke5Row(*r)
        if r.p_end:
            break
        out.append(r)
    return out


def mean_stroke_rows(prefix: Sequence[Stroke5Row]) -> float:
    """Rows per stroke in the prefix; fallback when it has no pen breaks."""
    body = _strip_terminator(prefix)
    breaks = sum(r.p_up for r in body)
    if breaks == 0:
        return DEFAULT_MEAN_STROKE_ROWS
    return len(body) / breaks


def complete(
    params: ModelParams,
    prefix: Sequence[Stroke5Row],
    amount: int,
    temperature: float,
    seed: int,
    policy: str | None = None,
) -> Suggestion:
    """Condition on the prefix, then sample `amount` continuation strokes.

    The prefix is fed through the cell as-is (minus any terminator); an
    empty prefix degenerates to unconditional generation from the start
    token. Sampling masks the end flag (finishing the painting is the
    humans' call) and stops after `amount` pen-up breaks or a hard cap of
    ``10 * amount * mean-stroke-rows`` rows, whichever comes first; the
    cap event is flagged. The returned rows are terminated by an end
    token and never include the prefix.
    """
    if amount < 1:
        raise InvalidInput(f"amount must be >= 1, got {amount}")
    if temperature < 0:
        raise InvalidInput(f"temperature must be >= 0, got {temperature}")

    conditioning = _strip_terminator(prefix)
    if not conditioning:
        conditioning = [START_ROW]
    cap = math.ceil(10 * amount * mean_stroke_rows(prefix))

    rng = np.random.default_rng(seed)
    state = init_state(params)
    mix = None
    for row in conditioning:
        state, mix = forward_step(params, state, row)

    out: list[Stroke5Row] = []
    breaks = 0
    cap_hit = False
    while breaks < amount:
        if len(out) >= cap:
            cap_hit = True
            break
        row = mdn.sample_next(mix, temperature, rng, allow_end=False)
        out.append(row)
        breaks += row.p_up
        if breaks < amount:
            state, mix = forward_step(params, state, row)
    out.append(END_ROW)
    return Suggestion(
        rows=tuple(out),
        temperature=temperature,
        seed=seed,
        policy_used=policy,
        cap_hit=cap_hit,
    )
