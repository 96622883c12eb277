"""Reading and writing the ``.gmod.json`` model format.

A model document is a JSON object with keys ``wires``, ``boxes``,
``inputs``, ``outputs`` and optional ``metadata``::

    {
      "metadata": {"title": "two-state demo"},
      "wires": [
        {"name": "S", "values": ["s0", "s1"]},
        {"name": "O", "values": ["o0", "o1"]}
      ],
      "boxes": [
        {"name": "prior", "inputs": [], "output": "S", "cpt": [[0.5, 0.5]]},
        {"name": "likelihood", "inputs": ["S"], "output": "O",
         "cpt": [[1.0, 0.0], [0.5, 0.5]]}
      ],
      "inputs": [],
      "outputs": ["O"]
    }

A box's ``cpt`` has one row per assignment of its input wires in
mixed-radix order (first input most significant), each row ranging over
the output wire's values.  Serialisation is canonical: declaration order
is kept and reals are printed with 17 significant digits, so a second
serialisation is byte-identical and parsing is lossless.

Diagnostic codes
    E001 malformed JSON or wrong document structure
    E002 bad name: unknown or duplicated wire/box/value reference
    E010 wire produced by more than one box
    E011 wires form a cycle
    E012 input wire has a producing box
    E013 wire feeds the same box twice
    E014 non-input wire with no producing box
    E020 CPT has the wrong number of rows or row length
    E021 CPT row does not sum to one
    E022 CPT entry negative or not a finite number
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .category import (GmodError, Morphism, Shape, WireType, channel_tol,
                       set_tolerances)
from .diagram import (
    Box,
    Interpretation,
    NetworkDiagram,
    OpenModel,
    validate_diagram,
)

FILE_EXTENSION = ".gmod.json"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    where: str = ""

    def as_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "where": self.where}


class ModelFormatError(GmodError):
    def __init__(self, diagnostics):
        self.diagnostics = tuple(diagnostics)
        super().__init__("; ".join(
            f"{d.code}: {d.message}" for d in self.diagnostics))


def _is_real(x) -> bool:
    return type(x) in (int, float)


def validate_text(text: str, tol_channel: float | None = None) -> list[Diagnostic]:
    """Collect every diagnostic the document produces; empty means valid."""
    model, diags = _parse(text, tol_channel)
    return diags


def parse(text: str, tol_channel: float | None = None) -> OpenModel:
    """Parse a model document, raising ``ModelFormatError`` on any defect."""
    model, diags = _parse(text, tol_channel)
    if diags:
        raise ModelFormatError(diags)
    assert model is not None
    return model


def _parse(text: str, tol_channel: float | None):
    if tol_channel is not None and tol_channel != channel_tol():
        previous = set_tolerances(channel=tol_channel)
        try:
            return _parse(text, None)
        finally:
            set_tolerances(zero=previous[0], channel=previous[1])
    tol_channel = channel_tol()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        return None, [Diagnostic(
            "E001", f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})")]
    if not isinstance(doc, dict):
        return None, [Diagnostic("E001", "document must be a JSON object")]

    diags: list[Diagnostic] = []
    for key in ("wires", "boxes", "inputs", "outputs"):
        if key not in doc:
            diags.append(Diagnostic("E001", f"missing top-level key {key!r}"))
        elif not isinstance(doc[key], list):
            diags.append(Diagnostic("E001", f"top-level key {key!r} must be a list"))
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        diags.append(Diagnostic("E001", "metadata must be an object"))
        metadata = {}
    if diags:
        return None, diags

    wire_types: dict[str, WireType] = {}
    wire_order: list[str] = []
    for j, w in enumerate(doc["wires"]):
        where = f"wires[{j}]"
        if not isinstance(w, dict) or not isinstance(w.get("name"), str) \
                or not isinstance(w.get("values"), list):
            diags.append(Diagnostic(
                "E001", "each wire needs a string name and a list of values", where))
            continue
        name, values = w["name"], w["values"]
        if name in wire_types:
            diags.append(Diagnostic("E002", f"wire {name!r} declared twice", where))
            continue
        if not values or not all(isinstance(v, str) for v in values) \
                or len(set(values)) != len(values):
            diags.append(Diagnostic(
                "E002", f"wire {name!r} needs distinct string values", where))
            continue
        wire_types[name] = WireType(name, tuple(values))
        wire_order.append(name)

    boxes: list[Box] = []
    channels: dict[str, Morphism] = {}
    box_names: set[str] = set()
    for j, b in enumerate(doc["boxes"]):
        where = f"boxes[{j}]"
        if not isinstance(b, dict) or not isinstance(b.get("name"), str) \
                or not isinstance(b.get("inputs"), list) \
                or not isinstance(b.get("output"), str) \
                or not isinstance(b.get("cpt"), list):
            diags.append(Diagnostic(
                "E001", "each box needs name, inputs, output and cpt", where))
            continue
        name = b["name"]
        where = f"boxes[{j}] ({name})"
        if name in box_names:
            diags.append(Diagnostic("E002", f"box {name!r} declared twice", where))
            continue
        box_names.add(name)
        bad_ref = False
        for w in list(b["inputs"]) + [b["output"]]:
            if not isinstance(w, str) or w not in wire_types:
                diags.append(Diagnostic(
                    "E002", f"box {name!r} references unknown wire {w!r}", where))
                bad_ref = True
        if bad_ref:
            continue
        boxes.append(Box(name, tuple(b["inputs"]), b["output"]))
        dom = Shape(tuple(wire_types[w] for w in b["inputs"]))
        cod = Shape((wire_types[b["output"]],))
        cpt = b["cpt"]
        if len(cpt) != dom.size or not all(
                isinstance(r, list) and len(r) == cod.size for r in cpt):
            diags.append(Diagnostic(
                "E020", f"box {name!r} needs {dom.size} rows of {cod.size} entries",
                where))
            continue
        bad_value = False
        for r, row in enumerate(cpt):
            for x in row:
                if not _is_real(x) or not (float(x) >= 0.0) or float(x) == float("inf"):
                    diags.append(Diagnostic(
                        "E022",
                        f"box {name!r} row {r} has a negative or non-finite entry",
                        where))
                    bad_value = True
                    break
            if bad_value:
                break
            total = float(sum(float(x) for x in row))
            if abs(total - 1.0) > tol_channel:
                diags.append(Diagnostic(
                    "E021",
                    f"box {name!r} row {r} sums to {total!r}, not 1", where))
                bad_value = True
                break
        if bad_value:
            continue
        channels[name] = Morphism(dom, cod, cpt)

    boundary: dict[str, tuple[str, ...]] = {}
    for key in ("inputs", "outputs"):
        listed = doc[key]
        ok = True
        seen = set()
        for w in listed:
            if not isinstance(w, str) or w not in wire_types:
                diags.append(Diagnostic("E002", f"{key} reference unknown wire {w!r}", key))
                ok = False
            elif w in seen:
                diags.append(Diagnostic("E002", f"{key} list wire {w!r} twice", key))
                ok = False
            seen.add(w)
        boundary[key] = tuple(listed) if ok else ()

    if diags:
        return None, diags

    diagram = NetworkDiagram(tuple(wire_order), tuple(boxes),
                             boundary["inputs"], boundary["outputs"])
    report = validate_diagram(diagram)
    if not report.ok:
        return None, [Diagnostic(v.code, v.message, v.subject)
                      for v in report.violations]
    model = OpenModel(diagram, Interpretation(wire_types, channels),
                      dict(metadata))
    return model, []


def serialize(m: OpenModel) -> str:
    """Write the canonical document for a model."""
    doc: dict = {}
    if m.metadata:
        doc["metadata"] = m.metadata
    doc["wires"] = [
        {"name": w, "values": list(m.interpretation.wire_types[w].values)}
        for w in m.diagram.wires]
    doc["boxes"] = [
        {"name": b.name, "inputs": list(b.inputs), "output": b.output,
         "cpt": [list(row) for row in m.interpretation.channels[b.name].entries]}
        for b in m.diagram.boxes]
    doc["inputs"] = list(m.diagram.inputs)
    doc["outputs"] = list(m.diagram.outputs)
    return canonical_json(doc) + "\n"


def format_real(x: float) -> str:
    """17 significant digits; enough to reproduce any double exactly."""
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError("only finite reals appear in documents")
    return format(float(x), ".17g")


def canonical_json(obj, indent: int = 0) -> str:
    """A byte-stable JSON writer with fixed float formatting."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [f'{inner}{json.dumps(k)}: {canonical_json(v, indent + 1)}'
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(parts) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        flat = all(not isinstance(v, (dict, list, tuple)) for v in obj)
        if flat:
            return "[" + ", ".join(canonical_json(v) for v in obj) + "]"
        parts = [f"{inner}{canonical_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(parts) + f"\n{pad}]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return format_real(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")
