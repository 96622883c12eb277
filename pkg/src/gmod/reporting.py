"""Payload builders shared by the command line and the service."""

from __future__ import annotations

import json

import numpy as np

from .category import GmodError, Morphism, Shape, channel_tol
from .diagram import OpenModel, actinf_structure, total_channel
from .dsl import canonical_json, format_real, parse
from .free_energy import (
    FreeEnergyReport,
    approx_active_inference,
    efe,
    vfe,
    vfe_update,
)
from .updating import (
    AllMinusInfinityError,
    Observation,
    PlanReport,
    Posterior,
    exact_active_inference,
    jeffrey_update,
    pearl_update,
    sharp_update,
)

PERCEIVE_METHODS = ("sharp", "jeffrey", "pearl", "vfe")
PLAN_MODES = ("exact", "fe")


class SpecError(GmodError):
    """A malformed observation, preference or q specification."""


def load_model(path: str, tol_channel: float | None = None) -> OpenModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read(), tol_channel)


def parse_observation_spec(spec, shape: Shape,
                           tol_channel: float | None = None):
    """A value label (sharp) or JSON array (soft, normalised on ingestion).

    Returns the observation and a list of warnings.
    """
    tol = channel_tol() if tol_channel is None else tol_channel
    warnings: list[str] = []
    if isinstance(spec, (list, tuple, np.ndarray)):
        values = list(spec)
    else:
        text = str(spec).strip()
        if text.startswith("["):
            try:
                values = json.loads(text)
            except json.JSONDecodeError as exc:
                raise SpecError(f"invalid JSON array: {exc.msg}") from None
            if not isinstance(values, list):
                raise SpecError("a soft observation must be a JSON array")
        else:
            labels = tuple(part.strip() for part in text.split(","))
            if len(labels) != len(shape.wires):
                raise SpecError(
                    f"expected {len(shape.wires)} value labels for wires "
                    f"{shape.names}, got {len(labels)}")
            try:
                return Observation.sharp(shape, *labels), warnings
            except GmodError as exc:
                raise SpecError(str(exc)) from None
    try:
        numbers = [float(x) for x in values]
    except (TypeError, ValueError):
        raise SpecError("a soft observation must contain numbers") from None
    if len(numbers) != shape.size:
        raise SpecError(
            f"expected {shape.size} weights for wires {shape.names}, "
            f"got {len(numbers)}")
    total = sum(numbers)
    if abs(total - 1.0) > tol:
        warnings.append(
            f"observation weights sum to {total:.6g}; normalising")
    try:
        return Observation.soft(shape, numbers), warnings
    except (ValueError, GmodError) as exc:
        raise SpecError(str(exc)) from None


def parse_state_spec(spec, shape: Shape) -> Morphism:
    obs, _ = parse_observation_spec(spec, shape)
    return obs.as_state()


def perceive_model(m: OpenModel, obs: Observation, method: str) -> Posterior:
    if method not in PERCEIVE_METHODS:
        raise SpecError(f"method must be one of {PERCEIVE_METHODS}")
    joint = total_channel(m)
    if method == "sharp":
        if not obs.is_sharp:
            raise SpecError("the sharp method needs a sharp observation")
        return sharp_update(joint, obs)
    if method == "jeffrey":
        return jeffrey_update(joint, obs)
    if method == "pearl":
        return pearl_update(joint, obs)
    return vfe_update(joint, obs)


def observation_shape(m: OpenModel) -> Shape:
    return m.output_shape()


def plan_shapes(m: OpenModel) -> tuple[Shape, Shape]:
    st = actinf_structure(m)
    return st.shape_of(st.obs_wire), st.shape_of(st.future_obs_wire)


def plan_model(m: OpenModel, obs: Observation, pref: Observation,
               mode: str) -> PlanReport:
    if mode not in PLAN_MODES:
        raise SpecError(f"mode must be one of {PLAN_MODES}")
    if mode == "exact":
        exact = exact_active_inference(m, obs, pref)
        approx = None
        try:
            approx = approx_active_inference(m, obs, pref)
        except AllMinusInfinityError:
            pass
        return PlanReport(
            policies=exact.policies, habits=exact.habits, method="exact",
            exact_plan=exact.exact_plan, oracle_plan=exact.oracle_plan,
            approx_plan=None if approx is None else approx.approx_plan,
            vfe=None if approx is None else approx.vfe,
            efe=None if approx is None else approx.efe,
            oracle_skipped=exact.oracle_skipped,
            diagnostics=dict(exact.diagnostics))
    return approx_active_inference(m, obs, pref)


def fe_model(m: OpenModel, q_spec, obs: Observation | None,
             pref: Observation | None) -> FreeEnergyReport:
    if (obs is None) == (pref is None):
        raise SpecError("give exactly one of an observation or a preference")
    if not m.is_closed:
        raise SpecError("free-energy reports need a closed model")
    joint = total_channel(m)
    if pref is not None:
        if q_spec is not None:
            raise SpecError("q applies only to the observation form")
        return efe(joint, pref)
    if q_spec is None:
        raise SpecError("the observation form needs a q distribution")
    hidden = Shape(tuple(
        w for w in joint.cod.wires if w.name not in set(obs.shape.names)))
    q = parse_state_spec(q_spec, hidden)
    return vfe(q, joint, obs)


def jsonable(x):
    """Convert payload values to strict-JSON-safe types; +inf becomes "inf"."""
    if isinstance(x, dict):
        return {k: jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        if v == float("inf"):
            return "inf"
        if v == float("-inf"):
            return "-inf"
        if v != v:
            return "nan"
        return v
    if isinstance(x, np.integer):
        return int(x)
    return x


def validation_payload(diagnostics) -> dict:
    return {
        "schema": "validation-report/1",
        "valid": not diagnostics,
        "codes": [d.code for d in diagnostics],
        "diagnostics": [d.as_dict() for d in diagnostics],
    }


def posterior_payload(p: Posterior, warnings=()) -> dict:
    cod = p.morphism.cod
    payload = {
        "schema": "posterior/1",
        "method": p.method,
        "wires": list(cod.names),
        "labels": [",".join(labels) for labels in cod.all_labels()],
        "diagnostics": jsonable(p.diagnostics),
        "warnings": list(warnings),
    }
    if p.morphism.is_state:
        payload["values"] = jsonable(p.morphism.entries.reshape(-1))
    else:
        payload["inputs"] = [",".join(labels)
                             for labels in p.morphism.dom.all_labels()]
        payload["values"] = jsonable(p.morphism.entries)
    return payload


def plan_payload(report: PlanReport, warnings=()) -> dict:
    return {
        "schema": "plan-report/1",
        "mode": report.method,
        "policies": list(report.policies),
        "habits": jsonable(report.habits),
        "vfe": jsonable(report.vfe) if report.vfe is not None else None,
        "efe": jsonable(report.efe) if report.efe is not None else None,
        "exact_plan": jsonable(report.exact_plan)
        if report.exact_plan is not None else None,
        "approx_plan": jsonable(report.approx_plan)
        if report.approx_plan is not None else None,
        "plan": jsonable(report.plan),
        "tv_gap": jsonable(report.tv_gap) if report.tv_gap is not None else None,
        "oracle_plan": jsonable(report.oracle_plan)
        if report.oracle_plan is not None else None,
        "oracle_skipped": report.oracle_skipped,
        "diagnostics": jsonable(report.diagnostics),
        "warnings": list(warnings),
    }


def fe_payload(report: FreeEnergyReport, warnings=()) -> dict:
    return {
        "schema": "fe-report/1",
        "kind": report.kind,
        "total": jsonable(report.total),
        "terms": jsonable(report.terms),
        "extras": jsonable(report.extras),
        "warnings": list(warnings),
    }


def payload_text(payload: dict) -> str:
    return canonical_json(payload) + "\n"


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format_real(v) if v == v and abs(v) != float("inf") else str(v)
    return str(v)


def csv_lines(rows: list[list]) -> str:
    return "\n".join(",".join(_csv_cell(c) for c in row) for row in rows) + "\n"


def posterior_csv(payload: dict) -> str:
    rows = [["label", "probability"]]
    if "inputs" in payload:
        rows = [["input", "label", "probability"]]
        for i, row in zip(payload["inputs"], payload["values"]):
            for lab, v in zip(payload["labels"], row):
                rows.append([i, lab, v])
    else:
        for lab, v in zip(payload["labels"], payload["values"]):
            rows.append([lab, v])
    return csv_lines(rows)


def plan_csv(payload: dict) -> str:
    rows = [["policy", "habit", "vfe", "efe", "exact_plan", "approx_plan", "plan"]]
    n = len(payload["policies"])

    def col(key):
        return payload[key] if payload[key] is not None else [None] * n

    for i, pol in enumerate(payload["policies"]):
        rows.append([pol, payload["habits"][i], col("vfe")[i], col("efe")[i],
                     col("exact_plan")[i], col("approx_plan")[i],
                     payload["plan"][i]])
    return csv_lines(rows)


def fe_csv(payload: dict) -> str:
    rows = [["term", "value"], ["total", payload["total"]]]
    for k, v in payload["terms"].items():
        rows.append([k, v])
    for k, v in payload["extras"].items():
        rows.append([k, v])
    return csv_lines(rows)


def validation_csv(payload: dict) -> str:
    rows = [["code", "where", "message"]]
    for d in payload["diagnostics"]:
        rows.append([d["code"], d["where"], d["message"]])
    return csv_lines(rows)
