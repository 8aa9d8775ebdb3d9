"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the HTTP service
can return structured ``{code, message, detail}`` bodies without mapping
tables scattered around.
"""

from __future__ import annotations


class AtelierError(Exception):
    code = "error"

    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.detail = detail or {}


class InvalidInput(AtelierError):
    code = "invalid_input"


class ParseError(AtelierError):
    code = "parse_error"


class EmptyDataset(AtelierError):
    code = "empty_dataset"


class NumericError(AtelierError):
    code = "numeric_error"


class InvalidDistribution(AtelierError):
    code = "invalid_distribution"


class DegenerateCalibration(AtelierError):
    code = "degenerate_calibration"


class PointAtInfinity(AtelierError):
    code = "point_at_infinity"


class TurnViolation(AtelierError):
    code = "turn_violation"


class ChannelMismatch(AtelierError):
    code = "channel_mismatch"


class SessionClosed(AtelierError):
    code = "session_closed"


class PendingSuggestionExists(AtelierError):
    code = "pending_suggestion_exists"


class NoPendingSuggestion(AtelierError):
    code = "no_pending_suggestion"


class EmptyContext(AtelierError):
    code = "empty_context"


class NotAVoter(AtelierError):
    code = "not_a_voter"


class ReplayError(AtelierError):
    code = "replay_error"


class NotFound(AtelierError):
    code = "not_found"


class CheckpointError(AtelierError):
    code = "checkpoint_error"
