"""HTTP JSON API over the coding store.

Thin translation layer: request bodies go to store operations, store
errors come back as structured JSON {code, message, details} with a
status that matches the failure class. Optionally requires a shared
token in the X-Auth-Token header and serves a static UI bundle.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import APIRouter, Depends, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..errors import LessonMinerError
from .store import CodingStore


class Unauthorized(LessonMinerError):
    code = "Unauthorized"


STATUS_BY_CODE = {
    "UnknownCorpus": 404,
    "UnknownFilteredSet": 404,
    "UnknownSession": 404,
    "UnknownCoder": 404,
    "UnknownItem": 404,
    "EmptyRoster": 422,
    "DoubleNeedsTwo": 422,
    "MalformedDocument": 422,
    "ValidationFailed": 422,
    "LeaseLost": 409,
    "DuplicateSubmission": 409,
    "SessionClosed": 409,
    "NotDoubleCoded": 409,
    "NoUnits": 409,
    "Unauthorized": 401,
}


class CorpusUpload(BaseModel):
    document: dict


class FilteredUpload(BaseModel):
    corpus_id: str
    document: dict


class PolicyBody(BaseModel):
    kind: str = "single"
    overlap_percent: float = 100.0


class SessionCreate(BaseModel):
    corpus_id: str
    list_name: str
    config_hash: str
    roster: list[str]
    policy: PolicyBody = Field(default_factory=PolicyBody)
    context_window: int = 1


class SpanBody(BaseModel):
    start: int
    end: int


class AnnotationSubmit(BaseModel):
    coder: str
    item_id: str
    decision: str
    category: str | None = None
    span: SpanBody | None = None
    note: str = ""


class AdjudicationBody(BaseModel):
    overrides: dict[str, str]


def create_app(
    store: CodingStore,
    auth_token: str | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="lesson coding service", docs_url=None, redoc_url=None)

    def check_token(request: Request):
        if auth_token is not None and request.headers.get("X-Auth-Token") != auth_token:
            raise Unauthorized("missing or wrong auth token")

    api = APIRouter(dependencies=[Depends(check_token)])

    @app.exception_handler(LessonMinerError)
    async def _domain_error(_request: Request, exc: LessonMinerError):
        return JSONResponse(
            status_code=STATUS_BY_CODE.get(exc.code, 400), content=exc.to_dict()
        )

    @app.exception_handler(RequestValidationError)
    async def _body_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={
                "code": "MalformedRequest",
                "message": "request body failed validation",
                "details": {"errors": exc.errors()},
            },
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @api.post("/corpora")
    def add_corpus(body: CorpusUpload):
        return {"corpus_id": store.add_corpus(body.document)}

    @api.post("/filtered")
    def add_filtered(body: FilteredUpload):
        return store.add_filtered(body.corpus_id, body.document)

    @api.post("/sessions")
    def create_session(body: SessionCreate):
        return store.create_session(
            corpus_id=body.corpus_id,
            list_name=body.list_name,
            config_hash=body.config_hash,
            roster=body.roster,
            policy=body.policy.model_dump(),
            context_window=body.context_window,
        )

    @api.get("/sessions")
    def list_sessions():
        return {"sessions": store.list_sessions()}

    @api.get("/sessions/{session_id}")
    def session_view(session_id: str):
        return store.session_view(session_id)

    @api.get("/sessions/{session_id}/next")
    def next_item(session_id: str, coder: str):
        return store.next_item(session_id, coder)

    @api.get("/sessions/{session_id}/items/{item_id}/context")
    def item_context(session_id: str, item_id: str, radius: int = 2):
        return store.item_context(session_id, item_id, radius)

    @api.post("/sessions/{session_id}/annotations")
    def submit(session_id: str, body: AnnotationSubmit):
        return store.submit_annotation(
            session_id=session_id,
            coder=body.coder,
            item_id=body.item_id,
            decision=body.decision,
            category=body.category,
            span=body.span.model_dump() if body.span else None,
            note=body.note,
        )

    @api.get("/sessions/{session_id}/progress")
    def progress(session_id: str):
        return store.progress(session_id)

    @api.get("/sessions/{session_id}/agreement")
    def agreement(session_id: str):
        return store.agreement(session_id)

    @api.get("/sessions/{session_id}/export")
    def export(session_id: str):
        return store.export(session_id)

    @api.post("/sessions/{session_id}/adjudicate")
    def adjudicate(session_id: str, body: AdjudicationBody):
        return store.adjudicate(session_id, body.overrides)

    @api.post("/sessions/{session_id}/close")
    def close_session(session_id: str):
        return store.close_session(session_id)

    app.include_router(api)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
