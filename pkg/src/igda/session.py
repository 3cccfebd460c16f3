"""Human-in-the-loop session service over the discovery engine.

A session wraps one ``DiscoveryRun`` whose experiments are answered by
people through HTTP instead of an oracle.  Rounds are atomic: the run
advances only when every proposed pair has an answer.  Feedback posts
are idempotent via client-supplied request ids, and an answer may be
replaced until its round commits (that is the undo window).

Sessions persist to disk after every mutation as (graph, config,
feedback history, pending answers) and are rebuilt by replaying that
history through a fresh engine, so a service restart preserves
partially answered rounds.  Replay is deterministic for seeded offline
predictors and for gateway-backed predictors with a warm cache.
"""
from __future__ import annotations

import json
import logging
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .engine import DiscoveryConfig, DiscoveryRun
from .errors import DiscoveryError, SessionError
from .graph import GroundTruthGraph, Pair, parse_graph
from .runlog import RunLog

logger = logging.getLogger(__name__)

PredictorBuilder = Callable[[GroundTruthGraph, DiscoveryConfig], object]


def config_from_dict(data: dict, defaults: DiscoveryConfig) -> DiscoveryConfig:
    """Merge a client config dict over server defaults."""
    allowed = {
        "rounds", "per_round", "zero_shot_samples", "update_samples",
        "policy", "strategy", "seed", "adjacency_scope",
    }
    merged = defaults.to_dict()
    for key, value in (data or {}).items():
        if key not in allowed:
            raise SessionError(f"unknown config field {key!r}")
        merged[key] = value
    merged["runs"] = 1
    return DiscoveryConfig(**merged)


@dataclass
class Session:
    id: str
    graph: GroundTruthGraph
    graph_dict: dict
    config: DiscoveryConfig
    run: DiscoveryRun
    # one entry per committed answer, in submission order
    feedback_log: list[dict] = field(default_factory=list)
    pending: dict[Pair, dict] = field(default_factory=dict)
    request_log: dict[str, dict] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionManager:
    def __init__(
        self,
        out_dir: str | Path,
        predictor_builder: PredictorBuilder,
        defaults: DiscoveryConfig,
    ):
        self.dir = Path(out_dir) / "sessions"
        self.dir.mkdir(parents=True, exist_ok=True)
        self.predictor_builder = predictor_builder
        self.defaults = defaults
        self.sessions: dict[str, Session] = {}
        self._restore_all()

    # ---- persistence ----

    def _path(self, session_id: str) -> Path:
        return self.dir / f"{session_id}.json"

    def _save(self, session: Session):
        payload = {
            "id": session.id,
            "graph": session.graph_dict,
            "config": session.config.to_dict(),
            "feedback_log": session.feedback_log,
            "pending": [
                {"pair": list(pair), **entry} for pair, entry in session.pending.items()
            ],
            "request_log": session.request_log,
        }
        tmp = self._path(session.id).with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, sort_keys=True))
        tmp.replace(self._path(session.id))

    def _restore_all(self):
        for path in sorted(self.dir.glob("*.json")):
            try:
                self._restore(json.loads(path.read_text()))
            except (DiscoveryError, ValueError, KeyError) as exc:
                logger.warning("could not restore session %s: %s", path.name, exc)

    def _restore(self, payload: dict):
        graph = parse_graph(payload["graph"])
        config = DiscoveryConfig(**payload["config"])
        run = self._new_run(graph, config)
        session = Session(
            id=payload["id"],
            graph=graph,
            graph_dict=payload["graph"],
            config=config,
            run=run,
            feedback_log=list(payload.get("feedback_log", [])),
            request_log=dict(payload.get("request_log", {})),
        )
        # Replay committed answers in their original order.
        for entry in session.feedback_log:
            pair = (int(entry["pair"][0]), int(entry["pair"][1]))
            run.submit_feedback(pair, int(entry["label"]))
        # Re-stage answers from the interrupted round.
        for entry in payload.get("pending", []):
            pair = (int(entry["pair"][0]), int(entry["pair"][1]))
            session.pending[pair] = {
                "label": int(entry["label"]),
                "request_id": entry.get("request_id", ""),
            }
            run.submit_feedback(pair, int(entry["label"]))
        self.sessions[session.id] = session
        logger.info("restored session %s at round %d", session.id, run.round_index)

    def _new_run(self, graph: GroundTruthGraph, config: DiscoveryConfig) -> DiscoveryRun:
        predictor = self.predictor_builder(graph, config)
        return DiscoveryRun(graph, config, predictor)

    # ---- operations ----

    def create(self, graph_dict: dict, config_dict: dict) -> Session:
        graph = parse_graph(graph_dict, source="<session graph>")
        config = config_from_dict(config_dict, self.defaults)
        run = self._new_run(graph, config)
        session = Session(
            id=uuid.uuid4().hex[:12],
            graph=graph,
            graph_dict=graph_dict,
            config=config,
            run=run,
        )
        self.sessions[session.id] = session
        self._save(session)
        return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise SessionError(f"no session {session_id!r}")
        return session

    def submit_feedback(
        self, session: Session, pair: Pair, label: int, request_id: str
    ) -> dict:
        with session.lock:
            if request_id and request_id in session.request_log:
                return session.request_log[request_id]
            run = session.run
            if run.finished:
                raise SessionError("session already finished")
            if pair not in run.proposals():
                raise SessionError(
                    f"pair {list(pair)} is not among round {run.round_index} proposals"
                )
            round_index = run.round_index
            # Staging an answer for an already-answered pending pair
            # replaces it (undo window); the engine only sees the final
            # value of each pair at commit time.
            session.pending[pair] = {"label": label, "request_id": request_id}
            committed = False
            if set(session.pending) == set(run.proposals()):
                for p in run.proposals():
                    committed = run.submit_feedback(p, session.pending[p]["label"])
                session.feedback_log.extend(
                    {
                        "round": round_index,
                        "pair": list(p),
                        "label": session.pending[p]["label"],
                    }
                    for p in sorted(session.pending)
                )
                session.pending = {}
            response = {
                "accepted": True,
                "round": run.round_index,
                "committed": committed,
                "finished": run.finished,
                "pending": [list(p) for p in self.pending_pairs(session)],
            }
            if request_id:
                session.request_log[request_id] = response
            self._save(session)
            return response

    def pending_pairs(self, session: Session) -> list[Pair]:
        return [p for p in session.run.proposals() if p not in session.pending]

    def view(self, session: Session) -> dict:
        run = session.run
        proposals = []
        for pair in run.proposals():
            proposals.append({
                "pair": list(pair),
                "parent": session.graph.name_of(pair[0]),
                "child": session.graph.name_of(pair[1]),
                "confidence": run.state.confidence[pair],
                "rationale": run.excerpts.get(pair),
                "answered": pair in session.pending,
            })
        latest = run.log.rounds[-1].summary if run.log.rounds else run.log.initial
        return {
            "id": session.id,
            "n": session.graph.n,
            "round": run.round_index if not run.finished else run.log.rounds[-1].round_index,
            "finished": run.finished,
            "proposals": proposals,
            "pending": [list(p) for p in self.pending_pairs(session)],
            "metrics": latest.metrics.to_dict() if latest.metrics else None,
            "budget_fraction": latest.budget_fraction,
        }

    def graph_view(self, session: Session) -> dict:
        run = session.run
        n = session.graph.n
        confidences = [[None] * n for _ in range(n)]
        labels = [[None] * n for _ in range(n)]
        experimented = [[False] * n for _ in range(n)]
        for (i, j), value in run.state.confidence.items():
            confidences[i][j] = value
            labels[i][j] = 1 if value >= 0 else 0
            experimented[i][j] = (i, j) in run.state.experimented
        return {
            "n": n,
            "variables": [
                {"id": v.id, "name": v.name, "description": v.description}
                for v in session.graph.variables
            ],
            "confidences": confidences,
            "labels": labels,
            "experimented": experimented,
        }

    def history_view(self, session: Session) -> dict:
        log: RunLog = session.run.log
        return {
            "id": session.id,
            "rounds": [s.to_record() for s in log.summaries()],
        }


# ============================================================
# HTTP layer
# ============================================================

class CreateSessionBody(BaseModel):
    graph: dict
    config: dict = {}


class FeedbackBody(BaseModel):
    pair: list[int]
    label: int
    request_id: str = ""


def create_app(manager: SessionManager, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="igda sessions")

    def _get(session_id: str) -> Session:
        try:
            return manager.get(session_id)
        except SessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.post("/api/sessions")
    def create_session(body: CreateSessionBody):
        try:
            session = manager.create(body.graph, body.config)
        except DiscoveryError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"id": session.id}

    @app.get("/api/sessions")
    def list_sessions():
        return {
            "sessions": [
                {
                    "id": s.id,
                    "n": s.graph.n,
                    "round": s.run.round_index,
                    "finished": s.run.finished,
                }
                for s in manager.sessions.values()
            ]
        }

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return manager.view(_get(session_id))

    @app.post("/api/sessions/{session_id}/feedback")
    def post_feedback(session_id: str, body: FeedbackBody):
        session = _get(session_id)
        if len(body.pair) != 2:
            raise HTTPException(status_code=400, detail="pair must be [parent, child]")
        if body.label not in (0, 1):
            raise HTTPException(status_code=400, detail="label must be 0 or 1")
        try:
            return manager.submit_feedback(
                session, (body.pair[0], body.pair[1]), body.label, body.request_id
            )
        except SessionError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc

    @app.get("/api/sessions/{session_id}/graph")
    def get_graph(session_id: str):
        return manager.graph_view(_get(session_id))

    @app.get("/api/sessions/{session_id}/history")
    def get_history(session_id: str):
        return manager.history_view(_get(session_id))

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app
