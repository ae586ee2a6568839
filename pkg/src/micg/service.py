"""HTTP service: survey sessions, ingestion, inference triggers, reports.

Every mutation is an event appended (and fsynced) before acknowledgment;
in-memory state is a fold over the log, and the same fold runs at startup,
so a restart after a crash reconstructs identical beliefs, parameters, and
reports. Inference stages run synchronously on an immutable snapshot of the
state and publish their outputs as events plus snapshot files.
"""

from __future__ import annotations

import threading
from datetime import datetime, timezone
from typing import Callable

from fastapi import Depends, FastAPI, HTTPException, Request
from pydantic import BaseModel, Field

from . import formats
from .beliefs import (
    GaussianBelief,
    LikertElicitation,
    MissingElicitationError,
    PriorConfig,
    assemble_all_weights,
    beliefs_from_dict,
    beliefs_to_dict,
    divergence_report,
    elicit_prior,
    posterior_update,
)
from .config import SystemConfig
from .ga import evolve, history_to_csv
from .hierarchy import (
    HierarchyConfig,
    IndicatorVector,
    compute_micg,
    validate_hierarchy,
)
from .phenotyping import TimedLikertResponse, adjust_batch
from .store import EventRecord, EventStore
from .surrogate import LikelihoodConfig, MLPSpec, build_training_set, params_to_dict

INFERENCE_STAGES = ("posterior-update", "train-fitness", "compute-index")
QUESTIONNAIRE_ID = "micg-v1"
SCALE_ANCHORS = ("Very low", "Low", "Moderate", "High", "Very high")


class PreconditionError(RuntimeError):
    """An inference stage is missing its upstream data."""


class ServiceState:
    """Mutable fold of the event log."""

    def __init__(self):
        self.sessions: dict[str, dict] = {}
        self.idempotency: dict[str, str] = {}
        self.session_indicators: dict[str, set[str]] = {}
        self.responses: list[TimedLikertResponse] = []
        self.elicitations: list[LikertElicitation] = []
        self.observations: list[tuple[int, IndicatorVector]] = []
        self.beliefs: dict[str, GaussianBelief] | None = None
        self.wave: int = 0
        self.consumed_seq: int = 0
        self.net_params: dict | None = None
        self.training_summary: dict | None = None
        self.reports: dict[str, dict] = {}

    def apply(self, event: EventRecord) -> None:
        payload = event.payload
        kind = event.event_type
        if kind == "session-created":
            self.sessions[payload["session_id"]] = dict(payload)
            key = payload.get("idempotency_key")
            if key:
                self.idempotency[key] = payload["session_id"]
            self.session_indicators.setdefault(payload["session_id"], set())
        elif kind == "session-submitted":
            self.sessions[payload["session_id"]]["status"] = "submitted"
        elif kind == "session-expired":
            self.sessions[payload["session_id"]]["status"] = "expired"
        elif kind == "response-recorded":
            self.responses.append(formats.response_from_row(payload))
            self.session_indicators.setdefault(payload["session_id"], set()).add(
                payload["indicator_id"]
            )
        elif kind == "elicitation-recorded":
            self.elicitations.append(formats.elicitation_from_row(payload))
        elif kind == "observation-recorded":
            self.observations.append((event.seq, formats.observation_from_row(payload)))
        elif kind == "posterior-updated":
            beliefs, wave = beliefs_from_dict(payload["beliefs"])
            self.beliefs = beliefs
            self.wave = wave
            self.consumed_seq = payload["consumed_seq"]
        elif kind == "training-completed":
            self.net_params = payload["params"]
            self.training_summary = payload["summary"]
        elif kind == "index-computed":
            for report in payload["reports"]:
                self.reports[report["child_id"]] = report


class MicgService:
    """Application core behind the HTTP layer; usable directly in tests."""

    def __init__(
        self,
        config: SystemConfig,
        clock: Callable[[], datetime] | None = None,
    ):
        self.config = config
        self.hierarchy: HierarchyConfig = config.hierarchy()
        violations = validate_hierarchy(self.hierarchy)
        if violations:
            raise ValueError(f"invalid hierarchy configuration: {violations}")
        self.clock = clock or (lambda: datetime.now(timezone.utc))
        self.store = EventStore(config.data_dir, clock=self.clock)
        self.state = ServiceState()
        for event in self.store.events():
            self.state.apply(event)
        # reentrant: mutating methods hold it across their check-then-append
        self._state_lock = threading.RLock()
        self._stage_locks = {stage: threading.Lock() for stage in INFERENCE_STAGES}

    def _record(self, event_type: str, payload: dict) -> EventRecord:
        with self._state_lock:
            event = self.store.append(event_type, payload)
            self.state.apply(event)
            return event

    # -- questionnaire --------------------------------------------------------

    def questionnaire(self, questionnaire_id: str) -> dict:
        if questionnaire_id != QUESTIONNAIRE_ID:
            raise KeyError(questionnaire_id)
        return {
            "questionnaire_id": QUESTIONNAIRE_ID,
            "items": [
                {
                    "indicator_id": ind.id,
                    "prompt": ind.label,
                    "scale_labels": list(SCALE_ANCHORS),
                }
                for ind in self.hierarchy.indicators
            ],
        }

    # -- sessions -------------------------------------------------------------

    def create_session(
        self,
        respondent_id: str,
        role: str,
        questionnaire_id: str,
        idempotency_key: str | None = None,
    ) -> dict:
        if questionnaire_id != QUESTIONNAIRE_ID:
            raise KeyError(questionnaire_id)
        with self._state_lock:
            if idempotency_key and idempotency_key in self.state.idempotency:
                return dict(self.sessions()[self.state.idempotency[idempotency_key]])
            session_id = f"session-{self.store.last_seq() + 1:08d}"
            payload = {
                "session_id": session_id,
                "respondent_id": respondent_id,
                "role": role,
                "questionnaire_id": questionnaire_id,
                "started_at": self.clock().isoformat(),
                "status": "open",
                "idempotency_key": idempotency_key,
            }
            self._record("session-created", payload)
            return dict(self.state.sessions[session_id])

    def sessions(self) -> dict[str, dict]:
        return self.state.sessions

    def _open_session(self, session_id: str) -> dict:
        session = self.state.sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        if session["status"] != "open":
            raise ValueError(f"session {session_id!r} is {session['status']}")
        return session

    def submit_session(self, session_id: str) -> dict:
        with self._state_lock:
            self._open_session(session_id)
            self._record("session-submitted", {"session_id": session_id})
            return dict(self.state.sessions[session_id])

    def expire_session(self, session_id: str) -> dict:
        with self._state_lock:
            self._open_session(session_id)
            self._record("session-expired", {"session_id": session_id})
            return dict(self.state.sessions[session_id])

    # -- ingestion ------------------------------------------------------------

    def record_timed_response(
        self,
        session_id: str,
        indicator_id: str,
        rating: int,
        response_time_ms: int,
        captured_at: str | None = None,
    ) -> dict:
        with self._state_lock:
            session = self._open_session(session_id)
            if indicator_id not in self.hierarchy.indicator_ids():
                raise KeyError(indicator_id)
            if indicator_id in self.state.session_indicators.get(session_id, set()):
                raise ValueError(
                    f"indicator {indicator_id!r} already answered in session {session_id!r}"
                )
            if response_time_ms < 0:
                raise ValueError(f"response_time_ms must be >= 0, got {response_time_ms}")
            response = TimedLikertResponse(
                respondent_id=session["respondent_id"],
                indicator_id=indicator_id,
                rating=rating,
                response_time=response_time_ms / 1000.0,
                captured_at=(
                    formats.parse_timestamp(captured_at) if captured_at else self.clock()
                ),
                session_id=session_id,
            )
            event = self._record("response-recorded", formats.response_to_row(response))
            return {"session_id": session_id, "indicator_id": indicator_id, "seq": event.seq}

    def record_elicitation(
        self, respondent_id: str, indicator_id: str, importance: int, confidence: int
    ) -> dict:
        if indicator_id not in self.hierarchy.indicator_ids():
            raise KeyError(indicator_id)
        elicitation = LikertElicitation(respondent_id, indicator_id, importance, confidence)
        row = formats.elicitations_to_rows([elicitation])[0]
        event = self._record("elicitation-recorded", row)
        return {"seq": event.seq}

    def record_observation(
        self, child_id: str, values: dict[str, int], observed_at: str | None = None
    ) -> dict:
        configured = set(self.hierarchy.indicator_ids())
        if set(values) != configured:
            raise ValueError(
                "observation must cover exactly the configured indicators; "
                f"missing={sorted(configured - set(values))} "
                f"unknown={sorted(set(values) - configured)}"
            )
        vector = IndicatorVector(
            child_id=child_id,
            values={k: int(v) for k, v in values.items()},
            observed_at=(
                formats.parse_timestamp(observed_at) if observed_at else self.clock()
            ),
        )
        event = self._record("observation-recorded", formats.observation_to_row(vector))
        return {"seq": event.seq}

    # -- inference ------------------------------------------------------------

    def run_inference(self, stage: str) -> dict:
        if stage not in INFERENCE_STAGES:
            raise KeyError(stage)
        with self._stage_locks[stage]:
            if stage == "posterior-update":
                return self._run_posterior_update()
            if stage == "train-fitness":
                return self._run_train_fitness()
            return self._run_compute_index()

    def _snapshot(self) -> ServiceState:
        # events are immutable, so shallow copies give a consistent view
        with self._state_lock:
            snap = ServiceState()
            snap.__dict__.update(
                {
                    **self.state.__dict__,
                    "responses": list(self.state.responses),
                    "elicitations": list(self.state.elicitations),
                    "observations": list(self.state.observations),
                    "sessions": dict(self.state.sessions),
                    "reports": dict(self.state.reports),
                }
            )
            return snap

    def _run_posterior_update(self) -> dict:
        snap = self._snapshot()
        ids = self.hierarchy.indicator_ids()
        if snap.beliefs is None:
            if not snap.elicitations:
                raise PreconditionError(
                    "posterior-update requires elicitations (none recorded)"
                )
            try:
                priors = elicit_prior(
                    snap.elicitations,
                    PriorConfig(alpha_prior=self.config.alpha_prior),
                    indicator_ids=ids,
                )
            except MissingElicitationError as exc:
                raise PreconditionError(str(exc)) from exc
        else:
            priors = snap.beliefs
        new = [(seq, x) for seq, x in snap.observations if seq > snap.consumed_seq]
        updated: dict[str, GaussianBelief] = {}
        divergences: list[dict] = []
        for ind in ids:
            column = [x.values[ind] for _, x in new]
            updated[ind] = posterior_update(priors[ind], column)
            if column:
                divergences.append(divergence_report(priors[ind], column))
        wave = snap.wave + 1 if new else snap.wave
        consumed = max((seq for seq, _ in new), default=snap.consumed_seq)
        payload = {
            "beliefs": beliefs_to_dict(updated, wave),
            "consumed_seq": consumed,
            "n_new_observations": len(new),
            "divergence": divergences,
        }
        self._record("posterior-updated", payload)
        self.store.write_snapshot(
            "beliefs.json", formats.canonical_json(beliefs_to_dict(updated, wave))
        )
        return {
            "stage": "posterior-update",
            "wave": wave,
            "n_new_observations": len(new),
            "n_indicators": len(ids),
            "divergence": {
                "max_mean_abs_diff": max(
                    (d["mean_abs_diff"] for d in divergences), default=0.0
                ),
                "max_variance_abs_diff": max(
                    (d["variance_abs_diff"] for d in divergences), default=0.0
                ),
            },
        }

    def _run_train_fitness(self) -> dict:
        snap = self._snapshot()
        if snap.beliefs is None:
            raise PreconditionError(
                "train-fitness requires beliefs; run posterior-update first"
            )
        if not snap.responses:
            raise PreconditionError(
                "train-fitness requires timed responses (none recorded)"
            )
        ytilde = adjust_batch(snap.responses, self.config.certainty())
        likelihood = LikelihoodConfig(
            tau_sq=self.config.tau_sq, prior_beliefs=snap.beliefs
        )
        samples = build_training_set(
            self.config.seed, ytilde, likelihood, self.config.training_samples
        )
        spec = MLPSpec(
            input_dim=len(likelihood.ordered_ids),
            hidden_layers=tuple(self.config.hidden_layers),
        )
        best, history = evolve(samples, spec, self.config.ga)
        summary = {
            "stage": "train-fitness",
            "generations": len(history),
            "best_fitness": history[-1].best_fitness,
            "final_loss": -max(s.best_fitness for s in history),
            "nan_total": sum(s.nan_count for s in history),
            "n_samples": len(samples),
        }
        payload = {
            "params": params_to_dict(best),
            "history": [
                {
                    "generation": s.generation,
                    "best_fitness": s.best_fitness,
                    "mean_fitness": s.mean_fitness,
                    "nan_count": s.nan_count,
                }
                for s in history
            ],
            "summary": summary,
        }
        self._record("training-completed", payload)
        self.store.write_snapshot(
            "net_params.json", formats.canonical_json(params_to_dict(best))
        )
        self.store.write_snapshot("ga_history.csv", history_to_csv(history))
        return dict(summary, history_csv=str(self.store.data_dir / "ga_history.csv"))

    def _run_compute_index(self) -> dict:
        snap = self._snapshot()
        if snap.beliefs is None:
            raise PreconditionError(
                "compute-index requires beliefs; run posterior-update first"
            )
        if not snap.observations:
            raise PreconditionError(
                "compute-index requires observations (none recorded)"
            )
        weights = assemble_all_weights(snap.beliefs, self.hierarchy)
        latest: dict[str, tuple] = {}
        for seq, x in snap.observations:
            key = (x.observed_at, seq)
            if x.child_id not in latest or key > latest[x.child_id][0]:
                latest[x.child_id] = (key, x)
        now = self.clock()
        reports = [
            compute_micg(x, weights, self.hierarchy, computed_at=now)
            for _, (_, x) in sorted(latest.items())
        ]
        payload = {"reports": [r.to_dict() for r in reports]}
        self._record("index-computed", payload)
        self.store.write_snapshot(
            "reports.json", formats.canonical_json(payload["reports"])
        )
        return {"stage": "compute-index", "children": len(reports)}

    def get_index_report(self, child_id: str) -> dict:
        report = self.state.reports.get(child_id)
        if report is None:
            raise KeyError(child_id)
        return report


# -- HTTP layer ----------------------------------------------------------------


class SessionRequest(BaseModel):
    respondent_id: str
    role: str = Field(pattern="^(mother|child)$")
    questionnaire_id: str
    idempotency_key: str | None = None


class ResponseRequest(BaseModel):
    indicator_id: str
    rating: int = Field(ge=1, le=5)
    response_time_ms: int = Field(ge=0)
    captured_at: str | None = None


class ElicitationRequest(BaseModel):
    respondent_id: str
    indicator_id: str
    importance: int = Field(ge=1, le=5)
    confidence: int = Field(ge=1, le=5)


class ObservationRequest(BaseModel):
    child_id: str
    values: dict[str, int]
    observed_at: str | None = None


def create_app(config: SystemConfig, clock=None) -> FastAPI:
    service = MicgService(config, clock=clock)
    app = FastAPI(title="micg", version="0.1.0")
    app.state.service = service

    def require_auth(request: Request) -> None:
        if config.auth_token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {config.auth_token}":
            raise HTTPException(status_code=401, detail="invalid bearer token")

    authed = Depends(require_auth)

    @app.get("/health")
    def health():
        return {"status": "ok", "events": service.store.last_seq()}

    @app.get("/questionnaires/{questionnaire_id}", dependencies=[authed])
    def get_questionnaire(questionnaire_id: str):
        try:
            return service.questionnaire(questionnaire_id)
        except KeyError:
            raise HTTPException(404, f"unknown questionnaire {questionnaire_id!r}")

    @app.post("/sessions", dependencies=[authed])
    def post_session(body: SessionRequest):
        try:
            return service.create_session(
                body.respondent_id, body.role, body.questionnaire_id, body.idempotency_key
            )
        except KeyError as exc:
            raise HTTPException(404, f"unknown questionnaire {exc.args[0]!r}")

    @app.post("/sessions/{session_id}/responses", dependencies=[authed])
    def post_response(session_id: str, body: ResponseRequest):
        try:
            return service.record_timed_response(
                session_id,
                body.indicator_id,
                body.rating,
                body.response_time_ms,
                body.captured_at,
            )
        except KeyError as exc:
            raise HTTPException(404, f"unknown session or indicator {exc.args[0]!r}")
        except ValueError as exc:
            raise HTTPException(409, str(exc))

    @app.post("/sessions/{session_id}/submit", dependencies=[authed])
    def post_submit(session_id: str):
        try:
            return service.submit_session(session_id)
        except KeyError:
            raise HTTPException(404, f"unknown session {session_id!r}")
        except ValueError as exc:
            raise HTTPException(409, str(exc))

    @app.post("/sessions/{session_id}/expire", dependencies=[authed])
    def post_expire(session_id: str):
        try:
            return service.expire_session(session_id)
        except KeyError:
            raise HTTPException(404, f"unknown session {session_id!r}")
        except ValueError as exc:
            raise HTTPException(409, str(exc))

    @app.post("/elicitations", dependencies=[authed])
    def post_elicitation(body: ElicitationRequest):
        try:
            return service.record_elicitation(
                body.respondent_id, body.indicator_id, body.importance, body.confidence
            )
        except KeyError as exc:
            raise HTTPException(404, f"unknown indicator {exc.args[0]!r}")
        except ValueError as exc:
            raise HTTPException(409, str(exc))

    @app.post("/observations", dependencies=[authed])
    def post_observation(body: ObservationRequest):
        try:
            return service.record_observation(body.child_id, body.values, body.observed_at)
        except ValueError as exc:
            raise HTTPException(422, str(exc))

    @app.post("/inference/{stage}", dependencies=[authed])
    def post_inference(stage: str):
        try:
            return service.run_inference(stage)
        except KeyError:
            raise HTTPException(404, f"unknown inference stage {stage!r}")
        except PreconditionError as exc:
            raise HTTPException(412, str(exc))

    @app.get("/children/{child_id}/report", dependencies=[authed])
    def get_report(child_id: str):
        try:
            return service.get_index_report(child_id)
        except KeyError:
            raise HTTPException(404, f"no report computed for child {child_id!r}")

    return app
