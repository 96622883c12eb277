"""FastAPI service exposing the engine to HTTP clients.

Every endpoint takes the model document inline (as a JSON object or the
raw document text), so the service is stateless.  Validation problems
come back as 422 with the diagnostic list; degenerate inference (no
evidence, empty softmax) comes back as 409.

Run with ``uvicorn gmod.service:app``.
"""

from __future__ import annotations

from typing import Any, Optional, Union

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import dsl, reporting
from .category import GmodError
from .diagram import par_compose, seq_compose
from .dsl import ModelFormatError
from .reporting import SpecError
from .updating import AllMinusInfinityError, EmptyResultError

app = FastAPI(title="gmod", version="0.1.0")

Document = Union[str, dict]
ObservationSpec = Union[str, list[float]]


class ValidateRequest(BaseModel):
    document: Document


class DiagnosticModel(BaseModel):
    code: str
    message: str
    where: str = ""


class ValidateResponse(BaseModel):
    valid: bool
    codes: list[str]
    diagnostics: list[DiagnosticModel]


class PerceiveRequest(BaseModel):
    document: Document
    observe: ObservationSpec
    method: str = "pearl"


class PlanRequest(BaseModel):
    document: Document
    observe: ObservationSpec
    prefer: ObservationSpec
    mode: str = "exact"


class FreeEnergyRequest(BaseModel):
    document: Document
    q: Optional[ObservationSpec] = None
    observe: Optional[ObservationSpec] = None
    prefer: Optional[ObservationSpec] = None


class ComposeRequest(BaseModel):
    how: str
    first: Document
    second: Document


class ComposeResponse(BaseModel):
    document: str


class StatusResponse(BaseModel):
    status: str


def _document_text(document: Document) -> str:
    if isinstance(document, str):
        return document
    return dsl.canonical_json(document)


def _load(document: Document):
    try:
        return dsl.parse(_document_text(document))
    except ModelFormatError as exc:
        raise HTTPException(
            status_code=422,
            detail=reporting.validation_payload(exc.diagnostics)) from None


def _run(fn):
    try:
        return fn()
    except (EmptyResultError, AllMinusInfinityError) as exc:
        raise HTTPException(
            status_code=409,
            detail={"code": type(exc).__name__, "message": str(exc)}) from None
    except (SpecError, GmodError) as exc:
        raise HTTPException(
            status_code=422,
            detail={"code": "INVALID_INPUT", "message": str(exc)}) from None


@app.get("/healthz", response_model=StatusResponse)
def healthz():
    return StatusResponse(status="ok")


@app.post("/validate", response_model=ValidateResponse)
def validate(request: ValidateRequest):
    diags = dsl.validate_text(_document_text(request.document))
    payload = reporting.validation_payload(diags)
    return ValidateResponse(**{k: payload[k]
                               for k in ("valid", "codes", "diagnostics")})


@app.post("/perceive")
def perceive(request: PerceiveRequest) -> dict:
    model = _load(request.document)

    def go():
        shape = reporting.observation_shape(model)
        obs, warnings = reporting.parse_observation_spec(request.observe, shape)
        posterior = reporting.perceive_model(model, obs, request.method)
        return reporting.posterior_payload(posterior, warnings)

    return _run(go)


@app.post("/plan")
def plan(request: PlanRequest) -> dict:
    model = _load(request.document)

    def go():
        obs_shape, pref_shape = reporting.plan_shapes(model)
        obs, w1 = reporting.parse_observation_spec(request.observe, obs_shape)
        pref, w2 = reporting.parse_observation_spec(request.prefer, pref_shape)
        report = reporting.plan_model(model, obs, pref, request.mode)
        return reporting.plan_payload(report, w1 + w2)

    return _run(go)


@app.post("/fe")
def fe(request: FreeEnergyRequest) -> dict:
    model = _load(request.document)

    def go():
        shape = reporting.observation_shape(model)
        obs = pref = None
        warnings: list[str] = []
        if request.observe is not None:
            obs, warnings = reporting.parse_observation_spec(request.observe, shape)
        if request.prefer is not None:
            pref, warnings = reporting.parse_observation_spec(request.prefer, shape)
        report = reporting.fe_model(model, request.q, obs, pref)
        return reporting.fe_payload(report, warnings)

    return _run(go)


@app.post("/compose", response_model=ComposeResponse)
def compose(request: ComposeRequest):
    if request.how not in ("seq", "par"):
        raise HTTPException(status_code=422, detail={
            "code": "INVALID_INPUT", "message": "how must be 'seq' or 'par'"})
    m1 = _load(request.first)
    m2 = _load(request.second)

    def go():
        composed = seq_compose(m1, m2) if request.how == "seq" else par_compose(m1, m2)
        return ComposeResponse(document=dsl.serialize(composed))

    return _run(go)
