"""Event-sourced state machine of the pictorial game.

A session is a pure fold of its journal: every operation validates
against the current state, emits exactly one event, and applies it.
Replaying the journal (from memory or from its JSON-Lines file)
reproduces the state; the service and the CLI share this fold.

Game shape: a black theme opens the canvas; humans alternate red and
green rounds; on its turn the machine is asked for a completion under a
policy (Emitter sees only its own blue strokes plus the black theme,
Receptor sees everything), and the humans accept, modify, or reject the
blue suggestion. Both humans signaling consensus closes the session.
Paint is permanent: nothing is ever removed, rejection merely consumes
the machine's turn.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

from .errors import (
    ChannelMismatch,
    EmptyContext,
    InvalidInput,
    NoPendingSuggestion,
    NotAVoter,
    PendingSuggestionExists,
    ReplayError,
    SessionClosed,
    TurnViolation,
)
from .sketcher.model import Suggestion
from .strokes import (
    DEFAULT_CANVAS_MM,
    DEFAULT_TURN_ORDER,
    HUMAN_CHANNELS,
    PlayerChannel,
    Sketch,
    Stroke,
    arc_length,
    sketch_from_json,
    sketch_to_json,
)

OPEN = "open"
CLOSED = "closed"


# ---------------------------------------------------------------------------
# completion policies


@dataclass(frozen=True)
class CompletionPolicy:
    """Which channels the sketcher may see as context."""

    kind: str  # emitter | receptor | custom
    channels: frozenset[PlayerChannel] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("emitter", "receptor", "custom"):
            raise InvalidInput(f"unknown completion policy {self.kind!r}")
        if self.kind == "custom" and not self.channels:
            raise InvalidInput("custom policy needs a nonempty channel set")

    def context_channels(self) -> frozenset[PlayerChannel]:
        if self.kind == "emitter":
            return frozenset({PlayerChannel.BLUE, PlayerChannel.BLACK})
        if self.kind == "receptor":
            return frozenset(PlayerChannel)
        return self.channels  # type: ignore[return-value]

    def to_json(self):
        if self.kind == "custom":
            return {"kind": "custom", "channels": sorted(c.value for c in self.channels)}
        return self.kind

    @classmethod
    def from_json(cls, data) -> "CompletionPolicy":
        if isinstance(data, str):
            return cls(data)
        return cls("custom", frozenset(PlayerChannel(c) for c in data["channels"]))


EMITTER = CompletionPolicy("emitter")
RECEPTOR = CompletionPolicy("receptor")


# ---------------------------------------------------------------------------
# events and rounds


@dataclass(frozen=True)
class Event:
    seq: int
    type: str
    round_index: int
    payload: dict
    timestamp: float

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "event": self.type,
            "round": self.round_index,
            "payload": self.payload,
            "ts": self.timestamp,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Event":
        return cls(
            seq=int(data["seq"]),
            type=str(data["event"]),
            round_index=int(data["round"]),
            payload=data["payload"],
            timestamp=float(data["ts"]),
        )


@dataclass(frozen=True)
class SuggestionMeta:
    policy: CompletionPolicy
    temperature: float
    amount: int
    seed: int
    decision: str | None = None  # accept | modify | reject, set on resolve
    cap_hit: bool = False
    checkpoint_id: str = ""
    original_sketch: Sketch | None = None  # pre-edit decode, kept under modify


@dataclass(frozen=True)
class Round:
    index: int
    player: PlayerChannel
    strokes: tuple[Stroke, ...]
    suggestion_meta: SuggestionMeta | None = None


@dataclass(frozen=True)
class PendingSuggestion:
    suggestion: Suggestion
    decoded: Sketch
    policy: CompletionPolicy
    amount: int
    temperature: float
    seed: int
    checkpoint_id: str
    context_channels: tuple[str, ...]
    context_stroke_count: int


@dataclass(frozen=True)
class Session:
    id: str
    canvas_size: tuple[float, float]
    theme: Sketch
    turn_order: tuple[PlayerChannel, ...]
    rounds: tuple[Round, ...] = ()
    pending: PendingSuggestion | None = None
    consensus: frozenset[PlayerChannel] = frozenset()
    status: str = OPEN
    journal: tuple[Event, ...] = ()

    @property
    def expected_player(self) -> PlayerChannel:
        return self.turn_order[len(self.rounds) % len(self.turn_order)]

    def sketch(self) -> Sketch:
        """Everything on the canvas, theme first, rounds in order."""
        strokes = list(self.theme.strokes)
        for r in self.rounds:
            strokes.extend(r.strokes)
        return Sketch(tuple(strokes), self.canvas_size)

    def policy_context(self, policy: CompletionPolicy) -> Sketch:
        return self.sketch().filter_channels(policy.context_channels())


# ---------------------------------------------------------------------------
# the fold: validate + apply one event


def apply_event(session: Session, event: Event) -> Session:
    """Validate an event against the state and fold it in."""
    if event.seq != len(session.journal):
        raise ReplayError(
            f"event seq {event.seq} does not follow journal length {len(session.journal)}"
        )
    handler = _HANDLERS.get(event.type)
    if handler is None:
        raise ReplayError(f"unknown event type {event.type!r}")
    updated = handler(session, event)
    return replace(updated, journal=session.journal + (event,))


def _event(session: Session, type_: str, payload: dict) -> Event:
    return Event(
        seq=len(session.journal),
        type=type_,
        round_index=len(session.rounds),
        payload=payload,
        timestamp=time.time(),
    )


def _require_open(session: Session) -> None:
    if session.status != OPEN:
        raise SessionClosed(f"session {session.id} is closed")


def _apply_created(session: Session, event: Event) -> Session:
    raise ReplayError("SessionCreated can only start a journal")


def _apply_strokes(session: Session, event: Event) -> Session:
    _require_open(session)
    if session.pending is not None:
        raise PendingSuggestionExists("resolve the pending suggestion first")
    player = PlayerChannel(event.payload["player"])
    if player is PlayerChannel.BLUE:
        raise ChannelMismatch(
            "blue is not assigned to any player; machine strokes enter via resolve"
        )
    if player is not session.expected_player:
        raise TurnViolation(
            f"expected {session.expected_player.value}, got {player.value}",
            detail={"expected": session.expected_player.value},
        )
    sketch = sketch_from_json(event.payload["sketch"])
    if not sketch.strokes:
        raise InvalidInput("a round must add at least one stroke")
    for stroke in sketch.strokes:
        if stroke.channel is not player:
            raise ChannelMismatch(
                f"{player.value} may only draw {player.value} strokes, "
                f"got {stroke.channel.value}"
            )
    Sketch(sketch.strokes, session.canvas_size).validate()
    round_ = Round(len(session.rounds), player, sketch.strokes)
    return replace(session, rounds=session.rounds + (round_,))


def _apply_completion_requested(session: Session, event: Event) -> Session:
    _require_open(session)
    if session.pending is not None:
        raise PendingSuggestionExists("resolve the pending suggestion first")
    if session.expected_player is not PlayerChannel.BLUE:
        raise TurnViolation(
            f"it is {session.expected_player.value}'s turn, not the machine's"
        )
    p = event.payload
    pending = PendingSuggestion(
        suggestion=Suggestion.from_json(p["suggestion"]),
        decoded=sketch_from_json(p["decoded"]),
        policy=CompletionPolicy.from_json(p["policy"]),
        amount=int(p["amount"]),
        temperature=float(p["temperature"]),
        seed=int(p["seed"]),
        checkpoint_id=p.get("checkpoint_id", ""),
        context_channels=tuple(p.get("context_channels", ())),
        context_stroke_count=int(p.get("context_stroke_count", 0)),
    )
    return replace(session, pending=pending)


def _apply_resolved(session: Session, event: Event) -> Session:
    _require_open(session)
    if session.pending is None:
        raise NoPendingSuggestion("no suggestion to resolve")
    decision = event.payload["decision"]
    pending = session.pending
    if decision == "accept":
        strokes = pending.decoded.strokes
        original = None
    elif decision == "reject":
        strokes = ()
        original = None
    elif decision == "modify":
        edited = sketch_from_json(event.payload["sketch"])
        for stroke in edited.strokes:
            if stroke.channel is not PlayerChannel.BLUE:
                raise ChannelMismatch("modified suggestion must be blue strokes")
        Sketch(edited.strokes, session.canvas_size).validate()
        strokes = edited.strokes
        original = pending.decoded
    else:
        raise InvalidInput(f"unknown decision {decision!r}")
    meta = SuggestionMeta(
        policy=pending.policy,
        temperature=pending.temperature,
        amount=pending.amount,
        seed=pending.seed,
        decision=decision,
        cap_hit=pending.suggestion.cap_hit,
        checkpoint_id=pending.checkpoint_id,
        original_sketch=original,
    )
    round_ = Round(len(session.rounds), PlayerChannel.BLUE, strokes, meta)
    return replace(session, rounds=session.rounds + (round_,), pending=None)


def _apply_consensus(session: Session, event: Event) -> Session:
    _require_open(session)
    player = PlayerChannel(event.payload["player"])
    if player not in HUMAN_CHANNELS:
        raise NotAVoter(f"{player.value} has no say in ending the painting")
    flags = session.consensus | {player}
    status = CLOSED if set(flags) == set(HUMAN_CHANNELS) else session.status
    return replace(session, consensus=flags, status=status)


_HANDLERS: dict[str, Callable[[Session, Event], Session]] = {
    "SessionCreated": _apply_created,
    "StrokesSubmitted": _apply_strokes,
    "CompletionRequested": _apply_completion_requested,
    "SuggestionResolved": _apply_resolved,
    "ConsensusSignaled": _apply_consensus,
}


# ---------------------------------------------------------------------------
# operations


def create_session(
    theme: Sketch,
    canvas_size: tuple[float, float] | None = None,
    turn_order: Sequence[PlayerChannel] = DEFAULT_TURN_ORDER,
    session_id: str | None = None,
) -> Session:
    canvas_size = canvas_size or theme.canvas_size or DEFAULT_CANVAS_MM
    order = tuple(turn_order)
    if sorted(c.value for c in order) != ["blue", "green", "red"]:
        raise InvalidInput(
            "turn order must be a permutation of red, green, blue"
        )
    for stroke in theme.strokes:
        if stroke.channel is not PlayerChannel.BLACK:
            raise ChannelMismatch(
                f"theme strokes must be black, got {stroke.channel.value}"
            )
    Sketch(theme.strokes, canvas_size).validate()
    session_id = session_id or uuid.uuid4().hex[:12]
    event = Event(
        seq=0,
        type="SessionCreated",
        round_index=0,
        payload={
            "id": session_id,
            "canvas": list(canvas_size),
            "turn_order": [c.value for c in order],
            "theme": sketch_to_json(Sketch(theme.strokes, canvas_size)),
        },
        timestamp=time.time(),
    )
    return _session_from_created(event)


def _session_from_created(event: Event) -> Session:
    p = event.payload
    theme = sketch_from_json(p["theme"])
    return Session(
        id=p["id"],
        canvas_size=(float(p["canvas"][0]), float(p["canvas"][1])),
        theme=theme,
        turn_order=tuple(PlayerChannel(c) for c in p["turn_order"]),
        journal=(event,),
    )


def submit_strokes(session: Session, player: PlayerChannel, sketch: Sketch) -> Session:
    event = _event(
        session,
        "StrokesSubmitted",
        {"player": player.value, "sketch": sketch_to_json(sketch)},
    )
    return apply_event(session, event)


def request_completion(
    session: Session,
    policy: CompletionPolicy,
    amount: int,
    temperature: float,
    seed: int,
    engine,
) -> tuple[Session, Suggestion]:
    """Ask the sketcher for a suggestion; stores it as pending.

    The event carries the sampled rows, the decoded blue sketch, and the
    full provenance (policy, temperature, amount, seed, checkpoint id,
    recorded context), so journals replay without a model.
    """
    _require_open(session)
    if session.pending is not None:
        raise PendingSuggestionExists("resolve the pending suggestion first")
    if session.expected_player is not PlayerChannel.BLUE:
        raise TurnViolation(
            f"it is {session.expected_player.value}'s turn, not the machine's"
        )
    context = session.policy_context(policy)
    if policy.kind == "emitter" and context.is_empty():
        raise EmptyContext(
            "no blue or black strokes to complete under emitter; try receptor"
        )
    suggestion, decoded = engine.suggest(
        context, amount, temperature, seed, policy=policy.kind
    )
    event = _event(
        session,
        "CompletionRequested",
        {
            "policy": policy.to_json(),
            "amount": amount,
            "temperature": temperature,
            "seed": seed,
            "suggestion": suggestion.to_json(),
            "decoded": sketch_to_json(decoded),
            "checkpoint_id": getattr(engine, "checkpoint_id", ""),
            "context_channels": [s.channel.value for s in context.strokes],
            "context_stroke_count": len(context.strokes),
        },
    )
    return apply_event(session, event), suggestion


def resolve_suggestion(
    session: Session, decision: str, modified: Sketch | None = None
) -> Session:
    payload: dict = {"decision": decision}
    if decision == "modify":
        if modified is None:
            raise InvalidInput("modify needs the edited sketch")
        payload["sketch"] = sketch_to_json(modified)
    event = _event(session, "SuggestionResolved", payload)
    return apply_event(session, event)


def signal_consensus(session: Session, player: PlayerChannel) -> Session:
    event = _event(session, "ConsensusSignaled", {"player": player.value})
    return apply_event(session, event)


# ---------------------------------------------------------------------------
# analytics


@dataclass(frozen=True)
class ChannelStats:
    stroke_count: int
    ink_length_mm: float
    rounds: int

    def to_json(self) -> dict:
        return {
            "stroke_count": self.stroke_count,
            "ink_length_mm": self.ink_length_mm,
            "rounds": self.rounds,
        }


def contribution_stats(session: Session) -> dict[PlayerChannel, ChannelStats]:
    """Per-channel stroke counts, ink length, and round counts."""
    counts = {c: 0 for c in PlayerChannel}
    lengths = {c: 0.0 for c in PlayerChannel}
    rounds = {c: 0 for c in PlayerChannel}
    for stroke in session.theme.strokes:
        counts[stroke.channel] += 1
        lengths[stroke.channel] += arc_length(stroke.points)
    for round_ in session.rounds:
        rounds[round_.player] += 1
        for stroke in round_.strokes:
            counts[stroke.channel] += 1
            lengths[stroke.channel] += arc_length(stroke.points)
    return {
        c: ChannelStats(counts[c], lengths[c], rounds[c]) for c in PlayerChannel
    }


# ---------------------------------------------------------------------------
# replay and journal IO


def replay(journal: Iterable[Event]) -> Session:
    """Fold a journal back into a session.

    Any malformed, out-of-order, or invalid event aborts with a replay
    error naming the event index.
    """
    session: Session | None = None
    for index, event in enumerate(journal):
        try:
            if index == 0:
                if event.type != "SessionCreated" or event.seq != 0:
                    raise ReplayError("journal must start with SessionCreated")
                session = _session_from_created(event)
            else:
                if event.type == "SessionCreated":
                    raise ReplayError("duplicate SessionCreated")
                session = apply_event(session, event)
        except ReplayError as exc:
            raise ReplayError(f"event {index}: {exc}", detail={"index": index}) from exc
        except Exception as exc:
            raise ReplayError(
                f"event {index}: {exc}", detail={"index": index}
            ) from exc
    if session is None:
        raise ReplayError("empty journal")
    return session


def write_journal(path: str, session: Session) -> None:
    with open(path, "w") as f:
        for event in session.journal:
            f.write(json.dumps(event.to_json(), separators=(",", ":")) + "\n")


def append_journal(path: str, events: Sequence[Event]) -> None:
    with open(path, "a") as f:
        for event in events:
            f.write(json.dumps(event.to_json(), separators=(",", ":")) + "\n")


def read_journal(path: str) -> list[Event]:
    events = []
    with open(path) as f:
        for line in f:
            if line.strip():
                events.append(Event.from_json(json.loads(line)))
    return events


def load_session(path: str) -> Session:
    return replay(read_journal(path))


# ---------------------------------------------------------------------------
# snapshots (the wire shape shared by service and CLI)


def session_snapshot(session: Session) -> dict:
    return {
        "id": session.id,
        "status": session.status,
        "canvas": list(session.canvas_size),
        "turn_order": [c.value for c in session.turn_order],
        "expected_player": session.expected_player.value
        if session.status == OPEN
        else None,
        "round_count": len(session.rounds),
        "event_count": len(session.journal),
        "consensus": sorted(c.value for c in session.consensus),
        "sketch": sketch_to_json(session.sketch()),
        "pending_suggestion": _pending_snapshot(session.pending),
        "rounds": [
            {
                "index": r.index,
                "player": r.player.value,
                "stroke_count": len(r.strokes),
                "decision": r.suggestion_meta.decision if r.suggestion_meta else None,
            }
            for r in session.rounds
        ],
    }


def _pending_snapshot(pending: PendingSuggestion | None) -> dict | None:
    if pending is None:
        return None
    return {
        "policy": pending.policy.to_json(),
        "amount": pending.amount,
        "temperature": pending.temperature,
        "seed": pending.seed,
        "cap_hit": pending.suggestion.cap_hit,
        "checkpoint_id": pending.checkpoint_id,
        "sketch": sketch_to_json(pending.decoded),
        "context_channels": list(pending.context_channels),
        "context_stroke_count": pending.context_stroke_count,
    }
