"""HTTP service exposing the command layer.

POST /v1/<command> runs a command on a scenario and returns a RunReport;
GET /v1/scenarios lists the built-ins; POST /v1/scenarios/validate checks a
scenario document without running anything.  Usage errors map to 400, domain
errors (a computation that cannot proceed) to 422, both with a structured
error body.
"""

from __future__ import annotations

import time

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import DEFAULT, ToolConfig
from ..errors import DomainError, FullerkitError, UsageError
from ..ops import RUNNERS, make_report, validate_scenario
from ..scenarios import builtin_names, load_builtin, resolve_scenario
from .models import RunReport, RunRequest, ScenarioSummary, ValidateRequest


def create_app(base_cfg: ToolConfig = DEFAULT) -> FastAPI:
    app = FastAPI(title="fullerkit", version=__version__)

    @app.exception_handler(UsageError)
    async def usage_error(request: Request, exc: UsageError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": exc.payload()})

    @app.exception_handler(RequestValidationError)
    async def bad_request(request: Request,
                          exc: RequestValidationError) -> JSONResponse:
        payload = {"code": "bad_request", "message": "invalid request body",
                   "details": {"errors": exc.errors()}}
        return JSONResponse(status_code=400, content={"error": payload})

    @app.exception_handler(DomainError)
    async def domain_error(request: Request, exc: DomainError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"error": exc.payload()})

    @app.exception_handler(FullerkitError)
    async def other_error(request: Request, exc: FullerkitError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"error": exc.payload()})

    @app.get("/healthz")
    def healthz() -> dict:
        return {"ok": True, "version": __version__}

    @app.get("/v1/scenarios", response_model=list[ScenarioSummary])
    def scenarios() -> list[ScenarioSummary]:
        out = []
        for name in builtin_names():
            sc = load_builtin(name)
            out.append(ScenarioSummary(
                name=sc.name, title=sc.title, field=sc.field_name,
                contact=sc.contact_enabled, expected_count=len(sc.expected)))
        return out

    @app.post("/v1/scenarios/validate")
    def validate(req: ValidateRequest) -> dict:
        return validate_scenario(resolve_scenario(req.scenario))

    def make_endpoint(command: str):
        runner = RUNNERS[command]

        def endpoint(req: RunRequest) -> RunReport:
            started = time.perf_counter()
            sc = resolve_scenario(req.scenario)
            cfg = base_cfg.replace(**req.config) if req.config else base_cfg
            result = runner(sc, req.options, cfg)
            return RunReport(**make_report(command, sc.name, cfg, result,
                                           started, meta=req.meta))

        endpoint.__name__ = f"run_{command.replace('-', '_')}"
        return endpoint

    for command in RUNNERS:
        app.post(f"/v1/{command}", response_model=RunReport,
                 response_model_exclude_none=True)(make_endpoint(command))

    return app
