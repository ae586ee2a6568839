"""Response-time certainty scoring and certainty-adjusted Likert responses.

A response's certainty is c = 1 / (1 + alpha * t): answering instantly gives
full certainty 1, slower answers decay toward 0. The adjusted value is the
raw rating scaled by its certainty. Response times are clamped to a
configurable window before scoring so that outliers (a backgrounded app, a
distracted respondent) cannot silently erase a response.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime

import numpy as np


class InvalidTimingError(ValueError):
    """Response time is negative or not finite."""


class DuplicateResponseError(ValueError):
    """Two responses for the same (respondent, indicator) in one session."""


@dataclass(frozen=True)
class TimedLikertResponse:
    """A 1..5 rating plus the latency it took to give it, in seconds.

    The latency must come from the client's monotonic clock; wall-clock
    jumps would poison the certainty signal.
    """

    respondent_id: str
    indicator_id: str
    rating: int
    response_time: float
    captured_at: datetime
    session_id: str

    def __post_init__(self):
        if self.rating not in (1, 2, 3, 4, 5):
            raise ValueError(f"rating must be in 1..5, got {self.rating!r}")
        if not math.isfinite(self.response_time) or self.response_time < 0:
            raise InvalidTimingError(
                f"response_time must be finite and >= 0, got {self.response_time!r}"
            )


@dataclass(frozen=True)
class CertaintyConfig:
    """Scaling and clamping for the certainty curve.

    ``alpha_certainty`` is the sensitivity of certainty to latency; times
    are clamped into [t_floor, t_cap] seconds before scoring.
    """

    alpha_certainty: float = 1.0
    t_cap: float = 120.0
    t_floor: float = 0.0

    def __post_init__(self):
        if self.alpha_certainty <= 0:
            raise ValueError(
                f"alpha_certainty must be > 0, got {self.alpha_certainty!r}"
            )
        if not 0 <= self.t_floor < self.t_cap:
            raise ValueError(
                f"need 0 <= t_floor < t_cap, got floor={self.t_floor!r} cap={self.t_cap!r}"
            )


@dataclass(frozen=True)
class AdjustedResponse:
    respondent_id: str
    indicator_id: str
    certainty: float
    adjusted_value: float


def certainty_score(t: float, cfg: CertaintyConfig) -> float:
    """Certainty in (0, 1] for a response latency of ``t`` seconds."""
    if not math.isfinite(t) or t < 0:
        raise InvalidTimingError(f"response time must be finite and >= 0, got {t!r}")
    clamped = min(max(t, cfg.t_floor), cfg.t_cap)
    return 1.0 / (1.0 + cfg.alpha_certainty * clamped)


def adjust_response(r: TimedLikertResponse, cfg: CertaintyConfig) -> AdjustedResponse:
    """Scale one rating by its certainty."""
    c = certainty_score(r.response_time, cfg)
    return AdjustedResponse(
        respondent_id=r.respondent_id,
        indicator_id=r.indicator_id,
        certainty=c,
        adjusted_value=r.rating * c,
    )


@dataclass(frozen=True)
class AdjustedMatrix:
    """Dense respondent x indicator matrix of certainty-adjusted values.

    Rows and columns are sorted lexicographically by id; unanswered cells
    are NaN and are skipped by downstream likelihoods.
    """

    respondent_ids: tuple[str, ...]
    indicator_ids: tuple[str, ...]
    values: np.ndarray

    def to_dict(self) -> dict:
        return {
            "respondent_ids": list(self.respondent_ids),
            "indicator_ids": list(self.indicator_ids),
            "values": [
                [None if math.isnan(v) else v for v in row] for row in self.values
            ],
        }

    @classmethod
    def from_dict(cls, raw) -> "AdjustedMatrix":
        values = np.array(
            [[math.nan if v is None else float(v) for v in row] for row in raw["values"]],
            dtype=float,
        ).reshape(len(raw["respondent_ids"]), len(raw["indicator_ids"]))
        return cls(
            respondent_ids=tuple(raw["respondent_ids"]),
            indicator_ids=tuple(raw["indicator_ids"]),
            values=values,
        )


def adjust_batch(
    responses: list[TimedLikertResponse], cfg: CertaintyConfig
) -> AdjustedMatrix:
    """Assemble certainty-adjusted responses into a dense matrix.

    A second response for the same (respondent, indicator) within one
    session raises :class:`DuplicateResponseError`; across sessions the
    response with the latest ``captured_at`` wins (ties broken by
    session id).
    """
    seen_in_session: set[tuple[str, str, str]] = set()
    chosen: dict[tuple[str, str], TimedLikertResponse] = {}
    for r in responses:
        key = (r.respondent_id, r.indicator_id, r.session_id)
        if key in seen_in_session:
            raise DuplicateResponseError(
                f"duplicate response for respondent {r.respondent_id!r}, "
                f"indicator {r.indicator_id!r} in session {r.session_id!r}"
            )
        seen_in_session.add(key)
        cell = (r.respondent_id, r.indicator_id)
        current = chosen.get(cell)
        if current is None or (r.captured_at, r.session_id) > (
            current.captured_at,
            current.session_id,
        ):
            chosen[cell] = r

    respondent_ids = tuple(sorted({r for r, _ in chosen}))
    indicator_ids = tuple(sorted({i for _, i in chosen}))
    values = np.full((len(respondent_ids), len(indicator_ids)), np.nan)
    row = {r: i for i, r in enumerate(respondent_ids)}
    col = {c: j for j, c in enumerate(indicator_ids)}
    for (resp, ind), r in chosen.items():
        values[row[resp], col[ind]] = adjust_response(r, cfg).adjusted_value
    return AdjustedMatrix(respondent_ids, indicator_ids, values)
