"""HTTP JSON API over one loaded session.

Requests are stateless: every call evaluates against the immutable session,
so identical posts return identical bodies.  Parse and validation problems
map to 400, evaluation problems to 422.
"""
from __future__ import annotations

import os

from fastapi import FastAPI, Request, Response

from .datamodel import schema_to_config
from .errors import EvaluationError, HyperError, QueryError, SchemaError
from .session import Session, dumps


def _json_response(payload: dict, status_code: int = 200) -> Response:
    return Response(content=dumps(payload), media_type="application/json", status_code=status_code)


def _error_response(exc: Exception, status_code: int) -> Response:
    return _json_response(
        {"error": type(exc).__name__, "detail": str(exc)}, status_code=status_code
    )


def create_app(session: Session, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="hypothetical query engine")

    async def _body_hql(request: Request) -> str:
        body = await request.json()
        if not isinstance(body, dict) or not isinstance(body.get("hql"), str) or not body["hql"].strip():
            raise QueryError("request body must be a JSON object with a non-empty 'hql' string")
        return body["hql"]

    def _run(fn, *args):
        try:
            return _json_response(fn(*args))
        except QueryError as exc:
            return _error_response(exc, 400)
        except (SchemaError,) as exc:
            return _error_response(exc, 400)
        except EvaluationError as exc:
            return _error_response(exc, 422)
        except HyperError as exc:
            return _error_response(exc, 422)

    @app.post("/query/whatif")
    async def query_whatif(request: Request):
        try:
            hql = await _body_hql(request)
        except (QueryError, ValueError) as exc:
            return _error_response(exc, 400)
        return _run(session.run_whatif, hql)

    @app.post("/query/howto")
    async def query_howto(request: Request):
        try:
            hql = await _body_hql(request)
        except (QueryError, ValueError) as exc:
            return _error_response(exc, 400)
        return _run(session.run_howto, hql)

    @app.post("/validate")
    async def validate(request: Request):
        try:
            hql = await _body_hql(request)
        except (QueryError, ValueError) as exc:
            return _error_response(exc, 400)
        return _run(session.run_check, hql)

    @app.get("/schema")
    def schema():
        return _json_response(schema_to_config(session.db.schema))

    @app.get("/dag")
    def dag():
        return _json_response(session.dag_json())

    @app.get("/blocks")
    def blocks():
        return _run(session.run_blocks)

    if static_dir and os.path.isdir(static_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="workbench")

    return app
