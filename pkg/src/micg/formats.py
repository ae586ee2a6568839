"""File formats shared by the CLI, the service, and the simulator.

All JSON output is canonical (sorted keys, compact separators, trailing
newline) so that identical data always serializes to identical bytes.
Timestamps are ISO-8601 UTC. Response times travel as integer milliseconds
on the wire and in files; module code uses seconds.
"""

from __future__ import annotations

import csv
import io
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from .beliefs import GaussianBelief, LikertElicitation, beliefs_from_dict, beliefs_to_dict
from .hierarchy import HierarchyConfig, IndexReport, IndicatorVector
from .phenotyping import TimedLikertResponse


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(canonical_json(obj), encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def parse_timestamp(value: str) -> datetime:
    # Python 3.10's fromisoformat does not accept a trailing Z.
    ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    return ts if ts.tzinfo else ts.replace(tzinfo=timezone.utc)


# -- elicitations -----------------------------------------------------------

def elicitations_to_rows(elicitations: Iterable[LikertElicitation]) -> list[dict]:
    return [
        {
            "respondent_id": e.respondent_id,
            "indicator_id": e.indicator_id,
            "importance": e.importance,
            "confidence": e.confidence,
        }
        for e in elicitations
    ]


def elicitation_from_row(row) -> LikertElicitation:
    return LikertElicitation(
        respondent_id=str(row["respondent_id"]),
        indicator_id=str(row["indicator_id"]),
        importance=int(row["importance"]),
        confidence=int(row["confidence"]),
    )


def write_elicitations_json(path, elicitations) -> None:
    write_json(path, elicitations_to_rows(elicitations))


def write_elicitations_csv(path, elicitations) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["respondent_id", "indicator_id", "importance", "confidence"])
    for e in elicitations:
        writer.writerow([e.respondent_id, e.indicator_id, e.importance, e.confidence])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_elicitations(path) -> list[LikertElicitation]:
    """Reads either the JSON array or the CSV form, by extension."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path, newline="", encoding="utf-8") as fh:
            return [elicitation_from_row(row) for row in csv.DictReader(fh)]
    return [elicitation_from_row(row) for row in read_json(path)]


# -- timed responses (JSON lines) -------------------------------------------

def response_to_row(r: TimedLikertResponse) -> dict:
    return {
        "respondent_id": r.respondent_id,
        "indicator_id": r.indicator_id,
        "rating": r.rating,
        "response_time_ms": int(round(r.response_time * 1000.0)),
        "session_id": r.session_id,
        "captured_at": r.captured_at.isoformat(),
    }


def response_from_row(row) -> TimedLikertResponse:
    return TimedLikertResponse(
        respondent_id=str(row["respondent_id"]),
        indicator_id=str(row["indicator_id"]),
        rating=int(row["rating"]),
        response_time=int(row["response_time_ms"]) / 1000.0,
        captured_at=parse_timestamp(row["captured_at"]),
        session_id=str(row["session_id"]),
    )


def write_responses_jsonl(path, responses: Iterable[TimedLikertResponse]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in responses:
            fh.write(canonical_json(response_to_row(r)))


def load_responses_jsonl(path) -> list[TimedLikertResponse]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(response_from_row(json.loads(line)))
    return out


# -- indicator observations (JSON lines) -------------------------------------

def observation_to_row(x: IndicatorVector) -> dict:
    return {
        "child_id": x.child_id,
        "values": dict(x.values),
        "observed_at": x.observed_at.isoformat(),
    }


def observation_from_row(row) -> IndicatorVector:
    return IndicatorVector(
        child_id=str(row["child_id"]),
        values={k: int(v) for k, v in row["values"].items()},
        observed_at=parse_timestamp(row["observed_at"]),
    )


def write_observations_jsonl(path, observations: Iterable[IndicatorVector]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for x in observations:
            fh.write(canonical_json(observation_to_row(x)))


def load_observations_jsonl(path) -> list[IndicatorVector]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(observation_from_row(json.loads(line)))
    return out


# -- beliefs -----------------------------------------------------------------

def write_beliefs(path, beliefs: dict[str, GaussianBelief], wave: int) -> None:
    write_json(path, beliefs_to_dict(beliefs, wave))


def load_beliefs(path) -> tuple[dict[str, GaussianBelief], int]:
    return beliefs_from_dict(read_json(path))


# -- reports -----------------------------------------------------------------

def write_reports_json(path, reports: Iterable[IndexReport]) -> None:
    write_json(path, [r.to_dict() for r in reports])


def load_reports_json(path) -> list[IndexReport]:
    return [IndexReport.from_dict(raw) for raw in read_json(path)]
