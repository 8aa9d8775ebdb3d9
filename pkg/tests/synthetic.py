"""Synthetic corpora shared by unit and acceptance tests."""

import numpy as np

from atelier.strokes import (
    PlayerChannel,
    Point,
    Sketch,
    Stroke,
    normalize_offsets,
    to_stroke5,
)

ALL_CHANNELS = (
    PlayerChannel.BLACK,
    PlayerChannel.RED,
    PlayerChannel.GREEN,
    PlayerChannel.BLUE,
)


def scattered_sketch(rng, canvas=(220.0, 300.0), cols=3, rows=4):
    """Random well-separated strokes (segments and wide Vs), one per grid
    cell, in all four channels. Separation keeps raster recovery exact:
    no two strokes merge or touch at 3 px render width."""
    cell_w, cell_h = canvas[0] / cols, canvas[1] / rows
    cells = [(i, j) for i in range(cols) for j in range(rows)]
    rng.shuffle(cells)
    count = int(rng.integers(3, 9))
    strokes = []
    for i, j in cells[:count]:
        x0, y0 = i * cell_w + 12, j * cell_h + 12
        x1, y1 = (i + 1) * cell_w - 12, (j + 1) * cell_h - 12
        if rng.integers(0, 2) == 0:
            p = rng.uniform((x0, y0), (x1, y1), (2, 2))
            while np.hypot(*(p[1] - p[0])) < 25:
                p = rng.uniform((x0, y0), (x1, y1), (2, 2))
            pts = [Point(*p[0]), Point(*p[1])]
        else:
            cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
            angle = rng.uniform(0, 2 * np.pi)
            spread = rng.uniform(np.pi * 0.6, np.pi * 0.85)
            arm1, arm2 = rng.uniform(18, min(x1 - x0, y1 - y0) / 2 - 2, 2)
            pts = [
                Point(cx + arm1 * np.cos(angle), cy + arm1 * np.sin(angle)),
                Point(cx, cy),
                Point(cx + arm2 * np.cos(angle + spread), cy + arm2 * np.sin(angle + spread)),
            ]
        strokes.append(Stroke(tuple(pts), ALL_CHANNELS[rng.integers(0, 4)]))
    return Sketch(tuple(strokes), canvas)


def square_sketch(rng, canvas=(255.0, 255.0), channel=PlayerChannel.BLACK) -> Sketch:
    """One axis-aligned square drawn as a single closed stroke."""
    size = float(rng.uniform(40, 90))
    x = float(rng.uniform(5, canvas[0] - size - 5))
    y = float(rng.uniform(5, canvas[1] - size - 5))
    pts = [(x, y), (x + size, y), (x + size, y + size), (x, y + size), (x, y)]
    return Sketch((Stroke(tuple(Point(*p) for p in pts), channel),), canvas)


def square_corpus(n: int, seed: int = 0) -> list[Sketch]:
    rng = np.random.default_rng(seed)
    return [square_sketch(rng) for _ in range(n)]


def normalized_square_rows(n: int, seed: int = 0):
    """Stroke-5 sequences of n squares, offsets normalized by the pooled scale."""
    sketches = square_corpus(n, seed)
    rows_list = [to_stroke5(s, max_len=None) for s in sketches]
    pooled = [r for rows in rows_list for r in rows]
    _, scale = normalize_offsets(pooled)
    return [
        [type(r)(r.dx / scale, r.dy / scale, r.p_down, r.p_up, r.p_end) for r in rows]
        for rows in rows_list
    ]


class ScriptedEngine:
    """Deterministic stand-in for the neural sketcher in game tests.

    suggest() is a pure function of (amount, seed): short fixed strokes
    near the canvas center, channel blue, rows consistent with the
    decode.
    """

    checkpoint_id = "scripted0000"

    def suggest(self, context, amount, temperature, seed, policy=None):
        from atelier.sketcher.model import Suggestion
        from atelier.strokes import (
            END_ROW,
            PlayerChannel,
            Sketch,
            Stroke,
            Stroke5Row,
        )

        rows = []
        strokes = []
        w, h = context.canvas_size
        x0, y0 = w / 4, h / 4
        step = 5.0 + (seed % 7)
        for k in range(amount):
            y = y0 + 10.0 * k
            rows.append(Stroke5Row(step, 0.0, 1, 0, 0))
            rows.append(Stroke5Row(step, 0.0, 0, 1, 0))
            strokes.append(
                Stroke(
                    (Point(x0, y), Point(x0 + step, y), Point(x0 + 2 * step, y)),
                    PlayerChannel.BLUE,
                )
            )
        rows.append(END_ROW)
        suggestion = Suggestion(
            rows=tuple(rows), temperature=temperature, seed=seed, policy_used=policy
        )
        return suggestion, Sketch(tuple(strokes), context.canvas_size)


def random_game(rng, ops: int = 12, engine=None, canvas=(400.0, 400.0)):
    """Drive a random but valid operation sequence; returns the session."""
    from atelier import session as game

    engine = engine or ScriptedEngine()
    theme = Sketch(
        (
            Stroke(
                (Point(50.0, 50.0), Point(150.0, 60.0)), PlayerChannel.BLACK
            ),
        ),
        canvas,
    )
    session = game.create_session(theme, session_id=f"game{rng.integers(1e9)}")
    for _ in range(ops):
        if session.status == game.CLOSED:
            break
        player = session.expected_player
        if session.pending is not None:
            decision = ["accept", "reject", "modify"][rng.integers(0, 3)]
            if decision == "modify":
                edited = Sketch(
                    (
                        Stroke(
                            (
                                Point(30.0, 30.0 + float(rng.integers(0, 50))),
                                Point(80.0, 35.0 + float(rng.integers(0, 50))),
                            ),
                            PlayerChannel.BLUE,
                        ),
                    ),
                    canvas,
                )
                session = game.resolve_suggestion(session, "modify", edited)
            else:
                session = game.resolve_suggestion(session, decision)
        elif player is PlayerChannel.BLUE:
            policy = game.EMITTER if rng.integers(0, 2) == 0 else game.RECEPTOR
            session, _ = game.request_completion(
                session, policy, int(rng.integers(1, 3)),
                float(rng.uniform(0, 1)), int(rng.integers(0, 1000)), engine
            )
        else:
            x = float(rng.uniform(10, canvas[0] - 60))
            y = float(rng.uniform(10, canvas[1] - 60))
            sketch = Sketch(
                (
                    Stroke(
                        (Point(x, y), Point(x + 40.0, y + 20.0)),
                        player,
                    ),
                ),
                canvas,
            )
            session = game.submit_strokes(session, player, sketch)
        if rng.uniform() < 0.08 and session.status == game.OPEN:
            voter = [PlayerChannel.RED, PlayerChannel.GREEN][rng.integers(0, 2)]
            session = game.signal_consensus(session, voter)
    return session
