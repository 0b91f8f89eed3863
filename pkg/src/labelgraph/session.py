"""Durable annotation sessions: features, graph cache, and an append-only
label event log.

Layout, one directory per session::

    <root>/<session_id>/
        features.lgf   original feature payload (binary or JSON lines)
        graph.bin      cached graph (rebuildable from features + meta)
        events.jsonl   append-only label events, one JSON object per line
        meta.json      graph parameters, class count, mode, feature hash

Label state is a pure fold over the event log; replaying it reproduces the
current state exactly. Event writes per session are serialized by a
single-writer lock; acknowledged events are flushed before the call
returns.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IntegrityError, NotFoundError, ParameterError
from .features import FeatureMatrix, read_features
from .graph import KnnGraph, build_knn_graph, load_graph, save_graph
from .propagation import LabelState
from .validation import check_graph_params

META_FORMAT = "lg-session-v1"

MODES = ("active_learning", "verification")
ACTIONS = ("label", "relabel", "verify", "reject")


@dataclass
class Session:
    """In-memory handle for one annotation session."""

    session_id: str
    path: Path
    k: int
    temperature: float
    mode: str
    declared_classes: int | None
    feature_hash: str
    features: FeatureMatrix
    graph: KnnGraph
    given: np.ndarray
    trusted: np.ndarray
    version: int
    index_of: dict[str, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self.index_of:
            self.index_of = self.features.index_of()

    @property
    def n(self) -> int:
        return self.features.n

    @property
    def num_classes(self) -> int:
        """Declared class count, or the smallest count covering the labels."""
        if self.declared_classes is not None:
            return self.declared_classes
        seen = self.given[self.given >= 0]
        return max(2, int(seen.max()) + 1 if seen.size else 2)

    def label_state(self) -> LabelState:
        return LabelState(
            num_classes=self.num_classes,
            given=self.given.copy(),
            trusted=self.trusted.copy(),
        )


def _normalize_event(session: Session, event: dict) -> dict:
    """Validate one raw event dict and return its canonical record form."""
    if not isinstance(event, dict):
        raise ParameterError("event must be an object")
    action = event.get("action", "label")
    if action not in ACTIONS:
        raise ParameterError(f"unknown action {action!r}")
    sid = event.get("id")
    if not isinstance(sid, str) or sid not in session.index_of:
        raise NotFoundError(f"unknown sample id {sid!r}")
    record = {
        "id": sid,
        "action": action,
        "annotator": str(event.get("annotator", "")),
        "ts": float(event["ts"]) if "ts" in event else time.time(),
    }
    if action == "reject":
        record["class"] = None
        record["trusted"] = False
    else:
        if "class" not in event or event["class"] is None:
            raise ParameterError(f"action {action!r} requires a class")
        cls = event["class"]
        if isinstance(cls, bool) or not isinstance(cls, int):
            raise ParameterError(f"class must be an integer, got {cls!r}")
        if cls < 0:
            raise ParameterError(f"class must be >= 0, got {cls}")
        if session.declared_classes is not None and cls >= session.declared_classes:
            raise ParameterError(
                f"class {cls} out of range for {session.declared_classes} classes"
            )
        record["class"] = cls
        # an untrusted "label" imports a suspect annotation: it seeds
        # propagation but is not clamped, so disagreement can surface it
        record["trusted"] = bool(event.get("trusted", True))
    return record


def _fold_event(given: np.ndarray, trusted: np.ndarray, row: int, record: dict) -> None:
    if record["action"] == "reject":
        given[row] = -1
        trusted[row] = False
    else:
        given[row] = record["class"]
        trusted[row] = record["trusted"]


class SessionStore:
    """Filesystem-backed registry of annotation sessions."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._registry_lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.RLock] = {}

    # -- lifecycle ---------------------------------------------------------

    def create_session(
        self,
        feature_bytes: bytes,
        k: int,
        temperature: float,
        mode: str = "active_learning",
        num_classes: int | None = None,
    ) -> tuple[Session, bool]:
        """Create (or return) the session for this exact input.

        The session id is a hash of (feature hash, k, temperature, mode),
        so identical calls are idempotent. Nothing is persisted until the
        features parse and the graph parameters validate.
        """
        if mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
        if num_classes is not None and num_classes < 2:
            raise ParameterError(f"num_classes must be >= 2, got {num_classes}")
        feature_hash = hashlib.sha256(feature_bytes).hexdigest()
        key = f"{feature_hash}:{k}:{float(temperature)!r}:{mode}"
        session_id = hashlib.sha256(key.encode()).hexdigest()[:16]

        with self.lock_for(session_id):
            if (self.root / session_id).exists():
                return self.get(session_id), False

            features = read_features(feature_bytes)
            check_graph_params(features.n, k, temperature)
            graph = build_knn_graph(features, k=k, temperature=temperature)

            tmp = self.root / f".tmp-{session_id}-{os.getpid()}"
            tmp.mkdir(parents=True, exist_ok=True)
            try:
                (tmp / "features.lgf").write_bytes(feature_bytes)
                with open(tmp / "graph.bin", "wb") as fh:
                    save_graph(fh, graph, features)
                meta = {
                    "format": META_FORMAT,
                    "session_id": session_id,
                    "feature_hash": feature_hash,
                    "k": k,
                    "temperature": float(temperature),
                    "mode": mode,
                    "num_classes": num_classes,
                    "n": features.n,
                    "d": features.d,
                    "created_at": time.time(),
                }
                (tmp / "meta.json").write_text(json.dumps(meta, sort_keys=True))
                (tmp / "events.jsonl").touch()
                os.replace(tmp, self.root / session_id)
            except BaseException:
                for leftover in tmp.glob("*") if tmp.exists() else []:
                    leftover.unlink()
                if tmp.exists():
                    tmp.rmdir()
                raise

            session = Session(
                session_id=session_id,
                path=self.root / session_id,
                k=k,
                temperature=float(temperature),
                mode=mode,
                declared_classes=num_classes,
                feature_hash=feature_hash,
                features=features,
                graph=graph,
                given=np.full(features.n, -1, dtype=np.int64),
                trusted=np.zeros(features.n, dtype=bool),
                version=0,
            )
            with self._registry_lock:
                self._sessions[session_id] = session
            return session, True

    def session_ids(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir()
            if p.is_dir() and not p.name.startswith(".")
        )

    def lock_for(self, session_id: str) -> threading.RLock:
        with self._registry_lock:
            if session_id not in self._locks:
                self._locks[session_id] = threading.RLock()
            return self._locks[session_id]

    def get(self, session_id: str) -> Session:
        """Return the (cached or restored) session, or raise NotFoundError."""
        with self._registry_lock:
            cached = self._sessions.get(session_id)
        if cached is not None:
            return cached
        with self.lock_for(session_id):
            with self._registry_lock:
                cached = self._sessions.get(session_id)
            if cached is not None:
                return cached
            session = self._restore(session_id)
            with self._registry_lock:
                self._sessions[session_id] = session
            return session

    # -- events ------------------------------------------------------------

    def apply_events(self, session_id: str, events: list[dict]) -> int:
        """Validate a batch, append it atomically, fold it into the state.

        Either every event is appended or none is; the first invalid event
        aborts the batch with its index attached to the raised error.
        """
        session = self.get(session_id)
        with self.lock_for(session_id):
            records = []
            for position, event in enumerate(events):
                try:
                    records.append(_normalize_event(session, event))
                except (ParameterError, NotFoundError) as exc:
                    exc.event_index = position  # type: ignore[attr-defined]
                    raise
            version = session.version
            lines = []
            for record in records:
                version += 1
                lines.append(json.dumps({"version": version, **record}, sort_keys=True))
            if lines:
                with open(session.path / "events.jsonl", "a", encoding="utf-8") as fh:
                    fh.write("\n".join(lines) + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            for record in records:
                _fold_event(session.given, session.trusted,
                            session.index_of[record["id"]], record)
            session.version = version
            return version

    def apply_event(self, session_id: str, event: dict) -> int:
        return self.apply_events(session_id, [event])

    # -- durability --------------------------------------------------------

    def snapshot(self, session_id: str) -> Path:
        """Ensure the on-disk state is complete; returns the session path.

        Events and metadata are already durable at apply time, so this just
        verifies the directory and refreshes the graph cache if missing.
        """
        session = self.get(session_id)
        with self.lock_for(session_id):
            if not (session.path / "graph.bin").exists():
                with open(session.path / "graph.bin", "wb") as fh:
                    save_graph(fh, session.graph, session.features)
            return session.path

    def _restore(self, session_id: str) -> Session:
        path = self.root / session_id
        if not path.is_dir():
            raise NotFoundError(f"unknown session {session_id!r}")

        meta_path = path / "meta.json"
        if not meta_path.exists():
            raise IntegrityError(f"{meta_path}: missing session metadata")
        try:
            meta = json.loads(meta_path.read_text())
        except (json.JSONDecodeError, OSError) as exc:
            raise IntegrityError(f"{meta_path}: unreadable metadata ({exc})") from exc
        if meta.get("format") != META_FORMAT:
            raise IntegrityError(f"{meta_path}: unsupported format")

        features_path = path / "features.lgf"
        if not features_path.exists():
            raise IntegrityError(f"{features_path}: missing feature payload")
        payload = features_path.read_bytes()
        if hashlib.sha256(payload).hexdigest() != meta["feature_hash"]:
            raise IntegrityError(f"{features_path}: feature hash mismatch")
        features = read_features(payload)

        graph_path = path / "graph.bin"
        if graph_path.exists():
            try:
                graph, _ = load_graph(graph_path)
            except Exception as exc:
                raise IntegrityError(f"{graph_path}: corrupt graph cache ({exc})") from exc
            if graph.k != meta["k"] or graph.temperature != meta["temperature"]:
                raise IntegrityError(f"{graph_path}: parameters disagree with meta.json")
        else:
            graph = build_knn_graph(features, k=meta["k"], temperature=meta["temperature"])
            with open(graph_path, "wb") as fh:
                save_graph(fh, graph, features)

        session = Session(
            session_id=session_id,
            path=path,
            k=int(meta["k"]),
            temperature=float(meta["temperature"]),
            mode=meta["mode"],
            declared_classes=meta.get("num_classes"),
            feature_hash=meta["feature_hash"],
            features=features,
            graph=graph,
            given=np.full(features.n, -1, dtype=np.int64),
            trusted=np.zeros(features.n, dtype=bool),
            version=0,
        )
        self._replay_events(session)
        return session

    def _replay_events(self, session: Session) -> None:
        events_path = session.path / "events.jsonl"
        if not events_path.exists():
            raise IntegrityError(f"{events_path}: missing event log")
        raw = events_path.read_bytes()
        if raw and not raw.endswith(b"\n"):
            raise IntegrityError(f"{events_path}: truncated event log (no trailing newline)")
        version = 0
        for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                row = session.index_of[record["id"]]
                if record["version"] != version + 1:
                    raise ValueError(f"version gap at {record['version']}")
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                raise IntegrityError(f"{events_path}: corrupt event at line {lineno} ({exc})") from exc
            _fold_event(session.given, session.trusted, row, record)
            version = record["version"]
        session.version = version
