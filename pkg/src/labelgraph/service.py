"""HTTP annotation service.

One process serves many sessions. Label batches are applied atomically and
acknowledged immediately; propagation runs on a background thread per
session, coalescing bursts (at most one running plus one queued run).
Every response carries the label `version` and the `soft_version` it
reflects, so clients can detect staleness instead of blocking.

All errors are JSON objects of the form ``{code, message, detail}``.
"""

from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from starlette.exceptions import HTTPException as StarletteHTTPException

from .errors import (
    FormatError,
    IntegrityError,
    LabelGraphError,
    NotFoundError,
    ParameterError,
)
from .propagation import (
    DEFAULT_ITERATIONS,
    SoftLabelMatrix,
    label_error_scores,
    label_file_lines,
    propagate,
    pseudo_labels,
    soft_label_lines,
)
from .session import Session, SessionStore

DEFAULT_K = 10
DEFAULT_TEMPERATURE = 0.01
FRESH_TIMEOUT = 120.0


class ServiceConflict(LabelGraphError):
    """Request is valid but cannot be satisfied in the current state."""


class _Runtime:
    """Mutable per-session service state guarded by one condition variable."""

    def __init__(self, session: Session, iterations: int):
        self.session = session
        self.iterations = iterations
        self.cond = threading.Condition()
        self.soft: SoftLabelMatrix | None = None
        self.soft_classes = 0
        self.soft_version = 0
        self.run_count = 0
        self.worker_running = False
        self.pending = False
        self.suggested: set[int] = set()
        seed = int.from_bytes(hashlib.sha256(session.session_id.encode()).digest()[:8], "little")
        self.rng = np.random.default_rng(seed)

    # -- propagation scheduling -------------------------------------------

    def schedule(self) -> None:
        with self.cond:
            if self.worker_running:
                self.pending = True
                return
            self.worker_running = True
        threading.Thread(target=self._run, daemon=True).start()

    def _run(self) -> None:
        while True:
            with self.cond:
                version = self.session.version
                state = self.session.label_state()
            if state.has_labels:
                soft = propagate(self.session.graph, state, iterations=self.iterations)
            else:
                soft = None
            with self.cond:
                self.soft = soft
                self.soft_classes = state.num_classes
                self.soft_version = version
                self.run_count += 1
                self.cond.notify_all()
                if self.pending:
                    self.pending = False
                    continue
                self.worker_running = False
                return

    def ensure_fresh(self, timeout: float = FRESH_TIMEOUT) -> None:
        """Block until the soft labels reflect the current label version."""
        with self.cond:
            target = self.session.version
            if self.soft_version >= target:
                return
        self.schedule()
        with self.cond:
            if not self.cond.wait_for(lambda: self.soft_version >= target, timeout):
                raise ServiceConflict("propagation did not finish in time")

    # -- snapshots -----------------------------------------------------------

    def soft_rows(self) -> tuple[np.ndarray, int]:
        """Current soft scores padded to the session's class count."""
        with self.cond:
            num_classes = self.session.num_classes
            if self.soft is None:
                return np.zeros((self.session.n, num_classes)), self.soft_version
            scores = self.soft.scores
            if scores.shape[1] < num_classes:
                pad = np.zeros((scores.shape[0], num_classes - scores.shape[1]))
                scores = np.hstack([scores, pad])
            return scores, self.soft_version


def create_app(store_root) -> FastAPI:
    """Build the service around a session store rooted at ``store_root``."""
    store = SessionStore(store_root)
    runtimes: dict[str, _Runtime] = {}
    runtimes_lock = threading.Lock()

    app = FastAPI(title="labelgraph", docs_url=None, redoc_url=None)

    def runtime(session_id: str) -> _Runtime:
        with runtimes_lock:
            found = runtimes.get(session_id)
        if found is not None:
            return found
        session = store.get(session_id)
        with runtimes_lock:
            return runtimes.setdefault(session_id, _Runtime(session, DEFAULT_ITERATIONS))

    def describe(session: Session, rt: _Runtime) -> dict:
        with rt.cond:
            labeled = int((session.given >= 0).sum())
            trusted = int(session.trusted.sum())
            return {
                "session_id": session.session_id,
                "n": session.n,
                "d": session.features.d,
                "c": session.num_classes,
                "k": session.k,
                "T": session.temperature,
                "mode": session.mode,
                "labeled": labeled,
                "trusted": trusted,
                "version": session.version,
                "soft_version": rt.soft_version,
            }

    # -- error shaping -------------------------------------------------------

    def error_response(status: int, code: str, message: str, detail=None) -> JSONResponse:
        return JSONResponse(
            status_code=status,
            content={"code": code, "message": message, "detail": detail},
        )

    @app.exception_handler(LabelGraphError)
    async def _domain_error(request: Request, exc: LabelGraphError):
        detail = None
        index = getattr(exc, "event_index", None)
        if index is not None:
            detail = {"event_index": index}
        if isinstance(exc, NotFoundError):
            if index is not None:
                return error_response(422, "invalid_event", str(exc), detail)
            return error_response(404, "not_found", str(exc), detail)
        if isinstance(exc, ParameterError):
            if index is not None:
                return error_response(422, "invalid_event", str(exc), detail)
            return error_response(400, "invalid_parameter", str(exc), detail)
        if isinstance(exc, FormatError):
            return error_response(422, "invalid_format", str(exc), detail)
        if isinstance(exc, ServiceConflict):
            return error_response(409, "conflict", str(exc), detail)
        if isinstance(exc, IntegrityError):
            return error_response(500, "integrity_error", str(exc), detail)
        return error_response(500, "internal_error", str(exc), detail)

    @app.exception_handler(RequestValidationError)
    async def _request_error(request: Request, exc: RequestValidationError):
        return error_response(422, "invalid_request", "request validation failed", exc.errors())

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(request: Request, exc: StarletteHTTPException):
        if isinstance(exc.detail, dict) and "code" in exc.detail:
            return JSONResponse(status_code=exc.status_code, content=exc.detail)
        return error_response(exc.status_code, "http_error", str(exc.detail))

    # -- endpoints -------------------------------------------------------------

    @app.post("/sessions")
    def create_session(
        features: UploadFile = File(...),
        params: str = Form("{}"),
    ):
        try:
            options = json.loads(params)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"params is not valid JSON: {exc}") from exc
        if not isinstance(options, dict):
            raise ParameterError("params must be a JSON object")
        unknown = set(options) - {"k", "temperature", "mode", "num_classes"}
        if unknown:
            raise ParameterError(f"unknown params: {sorted(unknown)}")
        try:
            k = int(options.get("k", DEFAULT_K))
            temperature = float(options.get("temperature", DEFAULT_TEMPERATURE))
        except (TypeError, ValueError) as exc:
            raise ParameterError(f"k and temperature must be numbers: {exc}") from exc
        num_classes = options.get("num_classes")
        if num_classes is not None and not isinstance(num_classes, int):
            raise ParameterError(f"num_classes must be an integer, got {num_classes!r}")
        payload = features.file.read()
        session, created = store.create_session(
            payload,
            k=k,
            temperature=temperature,
            mode=options.get("mode", "active_learning"),
            num_classes=num_classes,
        )
        rt = runtime(session.session_id)
        return JSONResponse(status_code=201 if created else 200,
                            content=describe(session, rt))

    @app.get("/sessions")
    def list_sessions():
        out = []
        for session_id in store.session_ids():
            out.append(describe(store.get(session_id), runtime(session_id)))
        return {"sessions": out}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return describe(store.get(session_id), runtime(session_id))

    @app.get("/sessions/{session_id}/next")
    def next_samples(session_id: str, count: int = 1, strategy: str = "random"):
        if strategy != "random":
            raise ParameterError(f"unknown strategy {strategy!r}")
        if count < 1:
            raise ParameterError(f"count must be >= 1, got {count}")
        session = store.get(session_id)
        rt = runtime(session_id)
        scores, soft_version = rt.soft_rows()
        classes, confidence = pseudo_labels(SoftLabelMatrix(scores, iterations=0))
        with rt.cond:
            pool = np.flatnonzero(~session.trusted)
            candidates = pool[~np.isin(pool, list(rt.suggested))] if rt.suggested else pool
            if candidates.size == 0:
                raise ServiceConflict("no unlabeled samples left to suggest")
            take = min(count, candidates.size)
            picked = rt.rng.choice(candidates, size=take, replace=False)
            rt.suggested.update(int(i) for i in picked)
            items = [
                {
                    "id": session.features.ids[i],
                    "pseudo": int(classes[i]),
                    "confidence": float(confidence[i]),
                }
                for i in picked
            ]
            body = {
                "items": items,
                "version": session.version,
                "soft_version": soft_version,
            }
        headers = {"X-Pool-Exhausted": "true"} if take < count else {}
        return JSONResponse(content=body, headers=headers)

    @app.post("/sessions/{session_id}/labels")
    def post_labels(session_id: str, body: dict):
        events = body.get("events")
        if not isinstance(events, list) or not events:
            raise ParameterError("body must contain a non-empty 'events' array")
        session = store.get(session_id)
        rt = runtime(session_id)
        with rt.cond:
            version = store.apply_events(session_id, events)
            for event in events:
                row = session.index_of.get(event.get("id"))
                if row is not None:
                    rt.suggested.discard(row)
            soft_version = rt.soft_version
        rt.schedule()
        return {
            "version": version,
            "soft_version": soft_version,
            "propagation": "scheduled",
        }

    @app.get("/sessions/{session_id}/pseudo")
    def get_pseudo(session_id: str, ids: str | None = None):
        session = store.get(session_id)
        rt = runtime(session_id)
        scores, soft_version = rt.soft_rows()
        classes, confidence = pseudo_labels(SoftLabelMatrix(scores, iterations=0))
        if ids is None:
            rows = range(session.n)
            missing: list[str] = []
        else:
            rows, missing = [], []
            for sample_id in [s for s in ids.split(",") if s]:
                row = session.index_of.get(sample_id)
                (missing if row is None else rows).append(
                    sample_id if row is None else row)
        results = [
            {
                "id": session.features.ids[i],
                "scores": [float(v) for v in scores[i]],
                "pseudo": int(classes[i]),
                "confidence": float(confidence[i]),
            }
            for i in rows
        ]
        with rt.cond:
            version = session.version
        return {
            "version": version,
            "soft_version": soft_version,
            "results": results,
            "missing": missing,
        }

    @app.get("/sessions/{session_id}/verify")
    def get_verify(session_id: str, limit: int = 50):
        if limit < 0:
            raise ParameterError(f"limit must be >= 0, got {limit}")
        session = store.get(session_id)
        rt = runtime(session_id)
        with rt.cond:
            if not (session.given >= 0).any():
                raise ServiceConflict("session has no given labels to verify")
        rt.ensure_fresh()
        scores, soft_version = rt.soft_rows()
        with rt.cond:
            state = session.label_state()
            version = session.version
        classes, _ = pseudo_labels(SoftLabelMatrix(scores, iterations=0))
        ranked = label_error_scores(SoftLabelMatrix(scores, iterations=0), state)
        # equal scores are returned in stable sample-id order
        ranked.sort(key=lambda pair: (-pair[1], session.features.ids[pair[0]]))
        items = [
            {
                "id": session.features.ids[row],
                "given": int(state.given[row]),
                "pseudo": int(classes[row]),
                "score": float(score),
            }
            for row, score in ranked[:limit]
        ]
        return {"items": items, "version": version, "soft_version": soft_version}

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str, kind: str = "labels"):
        if kind not in ("labels", "soft"):
            raise ParameterError(f"kind must be 'labels' or 'soft', got {kind!r}")
        session = store.get(session_id)
        rt = runtime(session_id)
        if kind == "soft":
            rt.ensure_fresh()
        scores, soft_version = rt.soft_rows()
        with rt.cond:
            state = session.label_state()
            version = session.version
        if kind == "labels":
            lines = label_file_lines(state, session.features.ids)
        else:
            lines = soft_label_lines(SoftLabelMatrix(scores, iterations=0),
                                     session.features.ids)
        body = "".join(line + "\n" for line in lines)
        return PlainTextResponse(
            body,
            media_type="application/jsonl",
            headers={
                "X-Label-Version": str(version),
                "X-Soft-Version": str(soft_version),
            },
        )

    @app.get("/healthz")
    def health():
        return {"status": "ok"}

    app.state.store = store
    app.state.runtime = runtime
    return app
