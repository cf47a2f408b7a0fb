"""HTTP service behind the reviewer feedback loop.

POST /api/assess segments a pasted review and scores every surviving
comment; POST /api/rescore re-scores a single edited comment inside a live
session; GET /api/health reports liveness and the build version.

Sessions live in memory only and expire after an idle TTL. Draft text is
never written to disk, and the API accepts review text alone, with no
paper upload surface. Mutations on one session are serialized by a
per-session lock; different sessions never contend.
"""

from __future__ import annotations

import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .backends import AuthError, Backend, BackendRefusal, TransportError
from .model import ASPECTS, AnnotationMode, ReviewComment
from .rubric import PromptMode
from .scorer import ParseStatus, ScoredComment, score_batch, score_comment
from .segmenter import extract_review_sections, segment_review

__all__ = ["create_app", "SESSION_TTL_SECONDS"]

SESSION_TTL_SECONDS = 3600.0

_BACKEND_ERROR_PREFIX = "backend error:"

_MODES = {"s": AnnotationMode.SCORE_ONLY, "s+r": AnnotationMode.SCORE_WITH_RATIONALE}


class AssessRequest(BaseModel):
    review_text: str
    venue: str | None = None
    mode: str = "s+r"


class RescoreRequest(BaseModel):
    session_id: str
    comment_id: str
    edited_text: str


@dataclass
class _Session:
    session_id: str
    mode: AnnotationMode
    comments: dict[str, ReviewComment]
    scored: dict[str, ScoredComment]
    touched: float
    lock: threading.Lock = field(default_factory=threading.Lock)


class _SessionStore:
    def __init__(self, ttl: float):
        self.ttl = ttl
        self._sessions: dict[str, _Session] = {}
        self._lock = threading.Lock()

    def _sweep(self, now: float) -> None:
        dead = [
            sid for sid, s in self._sessions.items() if s.touched + self.ttl < now
        ]
        for sid in dead:
            del self._sessions[sid]

    def put(self, session: _Session) -> None:
        with self._lock:
            self._sweep(time.monotonic())
            self._sessions[session.session_id] = session

    def get(self, session_id: str) -> _Session | None:
        with self._lock:
            self._sweep(time.monotonic())
            return self._sessions.get(session_id)


def _package_version() -> str:
    try:
        from importlib.metadata import version

        return version("peergauge")
    except Exception:
        return "unknown"


def _comment_payload(comment: ReviewComment, scored: ScoredComment) -> dict:
    aspects = {}
    for aspect in ASPECTS:
        score = scored.aspects[aspect]
        aspects[aspect.value] = {
            "label": score.label.as_str(),
            "rationale": score.rationale,
        }
    return {"comment_id": comment.id, "text": comment.text, "aspects": aspects}


def _failure_payload(comment: ReviewComment, scored: ScoredComment) -> dict:
    backend_error = scored.raw_output.startswith(_BACKEND_ERROR_PREFIX)
    return {
        "comment_id": comment.id,
        "text": comment.text,
        "parse_status": scored.parse_status.value,
        "missing_keys": list(scored.missing_keys),
        "error": scored.raw_output if backend_error else None,
    }


def _bad_request(message: str) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": message})


def _backend_failure(message: str, parse_failures: list[dict]) -> JSONResponse:
    return JSONResponse(
        status_code=502,
        content={"detail": message, "parse_failures": parse_failures},
    )


def create_app(
    backend: Backend,
    *,
    session_ttl: float = SESSION_TTL_SECONDS,
    static_dir: str | Path | None = None,
) -> FastAPI:
    """Build the FastAPI app around one configured backend.

    ``static_dir`` (or the PEERGAUGE_STATIC_DIR environment variable) may
    point at a built web UI; when the directory exists it is served at the
    root path. The API lives under /api either way.
    """
    app = FastAPI(title="peergauge", version=_package_version())
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[os.environ.get("PEERGAUGE_UI_ORIGIN", "*")],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = _SessionStore(ttl=session_ttl)

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "version": _package_version()}

    @app.post("/api/assess")
    def assess(request: AssessRequest):
        if not request.review_text.strip():
            return _bad_request("review_text must be non-empty")
        mode = _MODES.get(request.mode)
        if mode is None:
            return _bad_request(f"mode must be one of {sorted(_MODES)}")

        session_id = uuid.uuid4().hex
        sections = extract_review_sections(request.review_text, request.venue)
        comments, drop_report = segment_review(
            sections,
            review_id=session_id[:8],
            venue=request.venue or "",
        )

        scored: list[ScoredComment] = []
        if comments:
            try:
                scored, _ = score_batch(
                    comments,
                    backend=backend,
                    path=PromptMode.MULTI_ASPECT,
                    score_mode=mode,
                )
            except AuthError as exc:
                return _backend_failure(f"backend auth failure: {exc}", [])
            except (TransportError, BackendRefusal) as exc:
                return _backend_failure(f"backend failure: {exc}", [])

        by_id = dict(zip((c.id for c in comments), scored))
        ok_payloads = []
        failure_payloads = []
        backend_failures = 0
        for comment in comments:
            item = by_id[comment.id]
            if item.parse_status is ParseStatus.OK:
                ok_payloads.append(_comment_payload(comment, item))
            else:
                payload = _failure_payload(comment, item)
                failure_payloads.append(payload)
                if payload["error"] is not None:
                    backend_failures += 1

        if backend_failures and not ok_payloads:
            return _backend_failure("backend failure", failure_payloads)

        store.put(
            _Session(
                session_id=session_id,
                mode=mode,
                comments={c.id: c for c in comments},
                scored=dict(by_id),
                touched=time.monotonic(),
            )
        )
        return {
            "session_id": session_id,
            "comments": ok_payloads,
            "drop_report": drop_report.to_dict(),
            "parse_failures": failure_payloads,
        }

    @app.post("/api/rescore")
    def rescore(request: RescoreRequest):
        if not request.edited_text.strip():
            return _bad_request("edited_text must be non-empty")
        session = store.get(request.session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"detail": "unknown session"})
        with session.lock:
            original = session.comments.get(request.comment_id)
            if original is None:
                return JSONResponse(
                    status_code=404, content={"detail": "unknown comment"}
                )
            edited = ReviewComment(
                id=original.id,
                review_id=original.review_id,
                venue=original.venue,
                year=original.year,
                position=original.position,
                text=request.edited_text,
            )
            try:
                scored = score_comment(
                    edited,
                    backend=backend,
                    path=PromptMode.MULTI_ASPECT,
                    score_mode=session.mode,
                )
            except AuthError as exc:
                return _backend_failure(f"backend auth failure: {exc}", [])
            except (TransportError, BackendRefusal) as exc:
                return _backend_failure(f"backend failure: {exc}", [])
            if scored.parse_status is not ParseStatus.OK:
                return _backend_failure(
                    "backend output did not parse",
                    [_failure_payload(edited, scored)],
                )
            session.comments[request.comment_id] = edited
            session.scored[request.comment_id] = scored
            session.touched = time.monotonic()
            return _comment_payload(edited, scored)

    resolved_static = static_dir or os.environ.get("PEERGAUGE_STATIC_DIR")
    if resolved_static and Path(resolved_static).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=resolved_static, html=True), name="ui")

    return app
