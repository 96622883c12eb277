"""Network diagrams, open DAGs, and open generative models.

A network diagram is a wiring of single-output boxes over named wires,
with designated input and output wires; it is equivalent data to an open
DAG.  An open model attaches an interpretation (a finite value set per
wire, a stochastic channel per box) and can be evaluated to its total
channel: the channel from the inputs to every non-input wire.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .category import (
    EPS_CHANNEL,
    GmodError,
    Morphism,
    Shape,
    ShapeMismatchError,
    WireType,
    is_channel,
    marginal,
)


class InvalidDiagramError(GmodError):
    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("; ".join(v.message for v in report.violations))


class InvalidDAGError(GmodError):
    pass


class InvalidModelError(GmodError):
    pass


class BoundaryMismatchError(GmodError):
    pass


@dataclass(frozen=True)
class Box:
    """A single-output box: ordered input wires, one output wire."""

    name: str
    inputs: tuple[str, ...]
    output: str

    def __post_init__(self):
        if not isinstance(self.inputs, tuple):
            object.__setattr__(self, "inputs", tuple(self.inputs))


@dataclass(frozen=True)
class NetworkDiagram:
    wires: tuple[str, ...]
    boxes: tuple[Box, ...]
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()

    def __post_init__(self):
        for attr in ("wires", "boxes", "inputs", "outputs"):
            v = getattr(self, attr)
            if not isinstance(v, tuple):
                object.__setattr__(self, attr, tuple(v))
        known = set(self.wires)
        if len(known) != len(self.wires):
            raise ValueError("wire names must be distinct")
        names = [b.name for b in self.boxes]
        if len(set(names)) != len(names):
            raise ValueError("box names must be distinct")
        for b in self.boxes:
            for w in b.inputs + (b.output,):
                if w not in known:
                    raise ValueError(f"box {b.name!r} references unknown wire {w!r}")
        for attr in ("inputs", "outputs"):
            listed = getattr(self, attr)
            if len(set(listed)) != len(listed):
                raise ValueError(f"diagram {attr} contain a repeated wire")
            for w in listed:
                if w not in known:
                    raise ValueError(f"diagram {attr} reference unknown wire {w!r}")

    @property
    def hidden(self) -> tuple[str, ...]:
        """Non-input, non-output wires in declaration order."""
        boundary = set(self.inputs) | set(self.outputs)
        return tuple(w for w in self.wires if w not in boundary)

    def producer(self, wire: str) -> Box | None:
        for b in self.boxes:
            if b.output == wire:
                return b
        return None


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    subject: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(v.code for v in self.violations)


def validate_diagram(d: NetworkDiagram) -> ValidationReport:
    """Check the network-diagram rules; every violation is reported.

    Codes: E010 duplicate producer, E011 cycle, E012 input with a
    producing box, E013 a wire feeding the same box twice, E014 a
    non-input wire with no producing box.
    """
    out: list[Violation] = []
    producers: dict[str, list[str]] = {w: [] for w in d.wires}
    for b in d.boxes:
        producers[b.output].append(b.name)
        seen = set()
        for w in b.inputs:
            if w in seen:
                out.append(Violation(
                    "E013", f"wire {w!r} feeds box {b.name!r} twice", b.name))
            seen.add(w)
    for w, who in producers.items():
        if len(who) > 1:
            out.append(Violation(
                "E010", f"wire {w!r} is produced by boxes {who}", w))
    for w in d.inputs:
        if producers[w]:
            out.append(Violation(
                "E012", f"input wire {w!r} is produced by box {producers[w][0]!r}", w))
    for w in d.wires:
        if w not in d.inputs and not producers[w]:
            out.append(Violation(
                "E014", f"wire {w!r} is neither an input nor any box output", w))
    cycle = _find_cycle(d)
    if cycle:
        out.append(Violation(
            "E011", f"wires form a cycle: {' -> '.join(cycle)}", cycle[0]))
    return ValidationReport(tuple(out))


def _find_cycle(d: NetworkDiagram) -> list[str] | None:
    deps = {w: set() for w in d.wires}
    for b in d.boxes:
        deps[b.output].update(b.inputs)
    color: dict[str, int] = {}
    stack: list[str] = []

    def visit(w: str) -> list[str] | None:
        color[w] = 1
        stack.append(w)
        for parent in sorted(deps[w]):
            if color.get(parent) == 1:
                i = stack.index(parent)
                return stack[i:] + [parent]
            if color.get(parent, 0) == 0:
                found = visit(parent)
                if found:
                    return found
        stack.pop()
        color[w] = 2
        return None

    for w in d.wires:
        if color.get(w, 0) == 0:
            found = visit(w)
            if found:
                return found
    return None


def _wire_order(d: NetworkDiagram) -> list[str]:
    """Topological order of wires, ties broken by declaration order."""
    deps = {w: set() for w in d.wires}
    for b in d.boxes:
        deps[b.output].update(b.inputs)
    pos = {w: i for i, w in enumerate(d.wires)}
    order: list[str] = []
    done: set[str] = set()
    pending = list(d.wires)
    while pending:
        ready = [w for w in pending if deps[w] <= done]
        if not ready:
            raise InvalidDiagramError(validate_diagram(d))
        ready.sort(key=pos.get)
        order.extend(ready)
        done.update(ready)
        pending = [w for w in pending if w not in done]
    return order


@dataclass(frozen=True)
class OpenDAG:
    vertices: tuple[str, ...]
    edges: frozenset[tuple[str, str]]
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()

    def __post_init__(self):
        for attr in ("vertices", "inputs", "outputs"):
            v = getattr(self, attr)
            if not isinstance(v, tuple):
                object.__setattr__(self, attr, tuple(v))
        if not isinstance(self.edges, frozenset):
            object.__setattr__(self, "edges", frozenset(
                (a, b) for a, b in self.edges))
        known = set(self.vertices)
        if len(known) != len(self.vertices):
            raise ValueError("vertex names must be distinct")
        for a, b in self.edges:
            if a not in known or b not in known:
                raise ValueError(f"edge ({a!r}, {b!r}) references unknown vertex")
        for attr in ("inputs", "outputs"):
            listed = getattr(self, attr)
            if len(set(listed)) != len(listed):
                raise ValueError(f"DAG {attr} contain a repeated vertex")
            for w in listed:
                if w not in known:
                    raise ValueError(f"DAG {attr} reference unknown vertex {w!r}")

    def parents(self, v: str) -> tuple[str, ...]:
        return tuple(u for u in self.vertices if (u, v) in self.edges)


def dag_to_diagram(g: OpenDAG) -> NetworkDiagram:
    """One box per non-input vertex, inputs ordered by vertex declaration."""
    problems = []
    for v in g.inputs:
        if g.parents(v):
            problems.append(f"input vertex {v!r} has parents")
    if _dag_has_cycle(g):
        problems.append("graph is not acyclic")
    if problems:
        raise InvalidDAGError("; ".join(problems))
    boxes = tuple(Box(f"c_{v}", g.parents(v), v)
                  for v in g.vertices if v not in g.inputs)
    return NetworkDiagram(g.vertices, boxes, g.inputs, g.outputs)


def diagram_to_dag(d: NetworkDiagram) -> OpenDAG:
    """One vertex per wire, an edge from each box input to its output."""
    report = validate_diagram(d)
    if not report.ok:
        raise InvalidDiagramError(report)
    edges = frozenset((w, b.output) for b in d.boxes for w in b.inputs)
    return OpenDAG(d.wires, edges, d.inputs, d.outputs)


def _dag_has_cycle(g: OpenDAG) -> bool:
    done: set[str] = set()
    remaining = set(g.vertices)
    while remaining:
        ready = {v for v in remaining if set(g.parents(v)) <= done}
        if not ready:
            return True
        done |= ready
        remaining -= ready
    return False


def diagrams_match(d1: NetworkDiagram, d2: NetworkDiagram) -> bool:
    """Equality up to box renaming: same wires, boundary, and box wiring."""
    if (d1.wires, d1.inputs, d1.outputs) != (d2.wires, d2.inputs, d2.outputs):
        return False
    sig1 = sorted((b.inputs, b.output) for b in d1.boxes)
    sig2 = sorted((b.inputs, b.output) for b in d2.boxes)
    return sig1 == sig2


@dataclass(frozen=True)
class Interpretation:
    """Value sets for wires and stochastic channels for boxes."""

    wire_types: dict[str, WireType]
    channels: dict[str, Morphism]


@dataclass(frozen=True)
class OpenModel:
    diagram: NetworkDiagram
    interpretation: Interpretation
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        report = validate_diagram(self.diagram)
        if not report.ok:
            raise InvalidDiagramError(report)
        wt = self.interpretation.wire_types
        ch = self.interpretation.channels
        if set(wt) != set(self.diagram.wires):
            raise InvalidModelError(
                "interpretation must assign a value set to exactly the diagram wires")
        if set(ch) != {b.name for b in self.diagram.boxes}:
            raise InvalidModelError(
                "interpretation must assign a channel to exactly the diagram boxes")
        for b in self.diagram.boxes:
            m = ch[b.name]
            want_dom = Shape(tuple(wt[w] for w in b.inputs))
            want_cod = Shape((wt[b.output],))
            if m.dom != want_dom or m.cod != want_cod:
                raise InvalidModelError(
                    f"channel for box {b.name!r} has shape "
                    f"{m.dom.names}->{m.cod.names}, expected "
                    f"{want_dom.names}->{want_cod.names}")
            flag = is_channel(m)
            if not flag.is_channel:
                raise InvalidModelError(
                    f"box {b.name!r} is not a channel "
                    f"(max row defect {flag.max_row_defect:.3g})")

    @property
    def is_closed(self) -> bool:
        return not self.diagram.inputs

    def wire_as_type(self, wire: str) -> WireType:
        """The wire's value set, renamed to the diagram wire name."""
        return WireType(wire, self.interpretation.wire_types[wire].values)

    def boundary_shape(self, wires: Sequence[str]) -> Shape:
        return Shape(tuple(self.wire_as_type(w) for w in wires))

    def input_shape(self) -> Shape:
        return self.boundary_shape(self.diagram.inputs)

    def output_shape(self) -> Shape:
        return self.boundary_shape(self.diagram.outputs)

    def hidden_shape(self) -> Shape:
        return self.boundary_shape(self.diagram.hidden)


def total_channel(m: OpenModel) -> Morphism:
    """The channel from the inputs to every non-input wire.

    Boxes are contracted one at a time in topological order into a tensor
    holding one axis per wire; sharing an axis between consumers realises
    the copy maps.  The codomain lists hidden wires in declaration order,
    then the outputs in declared order.
    """
    d = m.diagram
    card = {w: m.interpretation.wire_types[w].cardinality for w in d.wires}
    label = {w: i for i, w in enumerate(d.wires)}
    order = _wire_order(d)
    box_by_output = {b.output: b for b in d.boxes}

    tensor_axes = [label[w] for w in d.inputs]
    acc = np.ones(tuple(card[w] for w in d.inputs))
    for w in order:
        b = box_by_output.get(w)
        if b is None:
            continue
        arr = m.interpretation.channels[b.name].entries.reshape(
            tuple(card[i] for i in b.inputs) + (card[b.output],))
        arr_axes = [label[i] for i in b.inputs] + [label[b.output]]
        out_axes = sorted(set(tensor_axes) | set(arr_axes))
        acc = np.einsum(acc, tensor_axes, arr, arr_axes, out_axes)
        tensor_axes = out_axes

    # tensor_axes is now every wire in declaration order; scatter into the
    # (input assignment, hidden+output assignment) matrix
    wire_seq = [d.wires[a] for a in tensor_axes]
    cod_wires = d.hidden + d.outputs
    dom = m.input_shape()
    cod = m.boundary_shape(cod_wires)
    flat = acc.reshape(-1)
    if flat.size == 0:
        raise InvalidModelError("model evaluates to an empty tensor")
    coords = np.unravel_index(np.arange(flat.size), acc.shape if acc.shape else (1,))
    at = {w: coords[i] for i, w in enumerate(wire_seq)}
    zero_idx = np.zeros(flat.size, dtype=np.intp)
    dom_idx = zero_idx
    if d.inputs:
        dom_idx = np.ravel_multi_index(
            [at[w] for w in d.inputs], tuple(card[w] for w in d.inputs))
    cod_idx = zero_idx
    if cod_wires:
        cod_idx = np.ravel_multi_index(
            [at[w] for w in cod_wires], tuple(card[w] for w in cod_wires))
    entries = np.zeros((dom.size, cod.size))
    entries[dom_idx, cod_idx] = flat
    return Morphism(dom, cod, entries)


def output_channel(m: OpenModel) -> Morphism:
    """The marginal of the total channel on the output wires."""
    return marginal(total_channel(m), m.diagram.outputs)


def _fresh(name: str, taken: set[str]) -> str:
    out = name
    while out in taken:
        out = out + "#2"
    return out


def _retyped(morph: Morphism, dom: Shape, cod: Shape) -> Morphism:
    if morph.dom.size != dom.size or morph.cod.size != cod.size:
        raise ShapeMismatchError("retyping must preserve cardinalities")
    return Morphism(dom, cod, morph.entries)


def seq_compose(m1: OpenModel, m2: OpenModel) -> OpenModel:
    """Feed the outputs of ``m1`` into the inputs of ``m2``.

    Boundary wires are identified positionally and must carry the same
    value labels; the identified wires keep ``m1``'s names and become
    hidden in the composite.  Clashing interior names of ``m2`` get a
    ``#2`` suffix.
    """
    d1, d2 = m1.diagram, m2.diagram
    if len(d1.outputs) != len(d2.inputs):
        raise BoundaryMismatchError(
            f"{len(d1.outputs)} outputs cannot feed {len(d2.inputs)} inputs")
    rename: dict[str, str] = {}
    for o, i in zip(d1.outputs, d2.inputs):
        t1 = m1.interpretation.wire_types[o]
        t2 = m2.interpretation.wire_types[i]
        if t1.values != t2.values:
            raise BoundaryMismatchError(
                f"boundary wire {o!r} has values {t1.values} "
                f"but {i!r} expects {t2.values}")
        rename[i] = o
    taken = set(d1.wires)
    for w in d2.wires:
        if w in rename:
            continue
        rename[w] = _fresh(w, taken)
        taken.add(rename[w])
    box_taken = {b.name for b in d1.boxes}
    box_rename = {}
    for b in d2.boxes:
        box_rename[b.name] = _fresh(b.name, box_taken)
        box_taken.add(box_rename[b.name])

    wires = d1.wires + tuple(rename[w] for w in d2.wires if w not in d2.inputs)
    boxes = d1.boxes + tuple(
        Box(box_rename[b.name], tuple(rename[w] for w in b.inputs),
            rename[b.output])
        for b in d2.boxes)
    diagram = NetworkDiagram(
        wires, boxes, d1.inputs, tuple(rename[w] for w in d2.outputs))

    wire_types = dict(m1.interpretation.wire_types)
    for w in d2.wires:
        if w not in d2.inputs:
            wire_types[rename[w]] = m2.interpretation.wire_types[w]
    channels = dict(m1.interpretation.channels)
    for b in d2.boxes:
        ch = m2.interpretation.channels[b.name]
        dom = Shape(tuple(wire_types[rename[w]] for w in b.inputs))
        cod = Shape((wire_types[rename[b.output]],))
        channels[box_rename[b.name]] = _retyped(ch, dom, cod)
    return OpenModel(diagram, Interpretation(wire_types, channels))


def par_compose(m1: OpenModel, m2: OpenModel) -> OpenModel:
    """Place two open models side by side; clashing names get ``#2``."""
    d1, d2 = m1.diagram, m2.diagram
    taken = set(d1.wires)
    rename = {}
    for w in d2.wires:
        rename[w] = _fresh(w, taken)
        taken.add(rename[w])
    box_taken = {b.name for b in d1.boxes}
    box_rename = {}
    for b in d2.boxes:
        box_rename[b.name] = _fresh(b.name, box_taken)
        box_taken.add(box_rename[b.name])
    diagram = NetworkDiagram(
        d1.wires + tuple(rename[w] for w in d2.wires),
        d1.boxes + tuple(
            Box(box_rename[b.name], tuple(rename[w] for w in b.inputs),
                rename[b.output])
            for b in d2.boxes),
        d1.inputs + tuple(rename[w] for w in d2.inputs),
        d1.outputs + tuple(rename[w] for w in d2.outputs))
    wire_types = dict(m1.interpretation.wire_types)
    for w in d2.wires:
        wire_types[rename[w]] = m2.interpretation.wire_types[w]
    channels = dict(m1.interpretation.channels)
    for b in d2.boxes:
        channels[box_rename[b.name]] = m2.interpretation.channels[b.name]
    return OpenModel(diagram, Interpretation(wire_types, channels))


def _single_wire(shape: Shape, what: str) -> WireType:
    if len(shape.wires) != 1:
        raise ShapeMismatchError(f"{what} must live on exactly one wire")
    return shape.wires[0]


def build_simple(prior: Morphism, likelihood: Morphism) -> OpenModel:
    """A prior over hidden states and a likelihood channel to observations."""
    s = _single_wire(prior.cod, "the prior")
    o = _single_wire(likelihood.cod, "the likelihood output")
    if not prior.is_state:
        raise ShapeMismatchError("the prior must be a state")
    if likelihood.dom != prior.cod:
        raise ShapeMismatchError("likelihood domain must match the prior")
    if s.name == o.name:
        raise ShapeMismatchError("state and observation wires need distinct names")
    diagram = NetworkDiagram(
        (s.name, o.name),
        (Box("prior", (), s.name), Box("likelihood", (s.name,), o.name)),
        (), (o.name,))
    interp = Interpretation({s.name: s, o.name: o},
                            {"prior": prior, "likelihood": likelihood})
    return OpenModel(diagram, interp)


def build_open_simple(prior: Morphism, likelihood: Morphism) -> OpenModel:
    """Like ``build_simple`` but with an input wire feeding both boxes."""
    i = _single_wire(prior.dom, "the open prior input")
    s = _single_wire(prior.cod, "the open prior")
    o = _single_wire(likelihood.cod, "the likelihood output")
    if likelihood.dom != Shape((i, s)):
        raise ShapeMismatchError(
            "likelihood domain must be (input, state) of the prior")
    if len({i.name, s.name, o.name}) != 3:
        raise ShapeMismatchError("wire names must be distinct")
    diagram = NetworkDiagram(
        (i.name, s.name, o.name),
        (Box("prior", (i.name,), s.name),
         Box("likelihood", (i.name, s.name), o.name)),
        (i.name,), (o.name,))
    interp = Interpretation({i.name: i, s.name: s, o.name: o},
                            {"prior": prior, "likelihood": likelihood})
    return OpenModel(diagram, interp)


def _per_step(channels, count: int, what: str) -> list[Morphism]:
    if isinstance(channels, Morphism):
        return [channels] * count
    chans = list(channels)
    if len(chans) != count:
        raise ShapeMismatchError(f"need {count} {what} channels, got {len(chans)}")
    return chans


def build_discrete_time(prior: Morphism, observe: Morphism | Sequence[Morphism],
                        transition: Morphism | Sequence[Morphism],
                        steps: int) -> OpenModel:
    """A hidden chain observed at each of ``steps`` time steps.

    ``observe`` and ``transition`` may be single channels shared across
    time (the usual case) or one channel per step.
    """
    if steps < 1:
        raise ValueError("need at least one time step")
    s = _single_wire(prior.cod, "the initial prior")
    obs = _per_step(observe, steps, "observation")
    trans = _per_step(transition, steps - 1, "transition")
    o = _single_wire(obs[0].cod, "the observation")
    for a in obs:
        if a.dom != prior.cod or a.cod != obs[0].cod:
            raise ShapeMismatchError("observation channels must map states to observations")
    for b in trans:
        if b.dom != prior.cod or b.cod != prior.cod:
            raise ShapeMismatchError("transition channels must map states to states")

    s_wires = tuple(f"{s.name}{t}" for t in range(1, steps + 1))
    o_wires = tuple(f"{o.name}{t}" for t in range(1, steps + 1))
    boxes = [Box("prior", (), s_wires[0])]
    channels = {"prior": prior}
    wire_types = {}
    for t in range(steps):
        wire_types[s_wires[t]] = s
        wire_types[o_wires[t]] = o
        boxes.append(Box(f"observe{t + 1}", (s_wires[t],), o_wires[t]))
        channels[f"observe{t + 1}"] = obs[t]
        if t + 1 < steps:
            boxes.append(Box(f"step{t + 1}", (s_wires[t],), s_wires[t + 1]))
            channels[f"step{t + 1}"] = trans[t]
    diagram = NetworkDiagram(s_wires + o_wires, tuple(boxes), (), o_wires)
    return OpenModel(diagram, Interpretation(wire_types, channels))


def build_policy_model(habits: Morphism, prior: Morphism,
                       observe: Morphism, transition: Morphism,
                       steps: int) -> OpenModel:
    """A discrete-time model whose transitions also read a hidden policy.

    ``transition`` maps (state, policy) to the next state; the policy wire
    is copied into every step.
    """
    if steps < 2:
        raise ValueError("policy models need at least two time steps")
    p = _single_wire(habits.cod, "the habit prior")
    s = _single_wire(prior.cod, "the state prior")
    o = _single_wire(observe.cod, "the observation")
    if not habits.is_state or not prior.is_state:
        raise ShapeMismatchError("habits and prior must be states")
    if observe.dom != prior.cod:
        raise ShapeMismatchError("observation channel must read the state")
    if transition.dom != Shape((s, p)) or transition.cod != prior.cod:
        raise ShapeMismatchError("transition must map (state, policy) to state")

    s_wires = tuple(f"{s.name}{t}" for t in range(1, steps + 1))
    o_wires = tuple(f"{o.name}{t}" for t in range(1, steps + 1))
    wire_types = {p.name: p}
    boxes = [Box("habits", (), p.name), Box("prior", (), s_wires[0])]
    channels = {"habits": habits, "prior": prior}
    for t in range(steps):
        wire_types[s_wires[t]] = s
        wire_types[o_wires[t]] = o
        boxes.append(Box(f"observe{t + 1}", (s_wires[t],), o_wires[t]))
        channels[f"observe{t + 1}"] = observe
        if t + 1 < steps:
            boxes.append(Box(f"step{t + 1}", (s_wires[t], p.name), s_wires[t + 1]))
            channels[f"step{t + 1}"] = transition
    diagram = NetworkDiagram(
        (p.name,) + s_wires + o_wires, tuple(boxes), (), o_wires)
    return OpenModel(diagram, Interpretation(wire_types, channels))


def build_actinf_model(habits: Morphism, transition: Morphism,
                       emission: Morphism, transition_future: Morphism,
                       emission_future: Morphism) -> OpenModel:
    """The five-box planning model: policies drive present and future.

    habits: state over policies P; transition: P -> S; emission: S -> O;
    transition_future: (S, P) -> S'; emission_future: S' -> F.  Observed
    wires are O and F.
    """
    p = _single_wire(habits.cod, "the habit prior")
    s = _single_wire(transition.cod, "the present state")
    o = _single_wire(emission.cod, "the present observation")
    s2 = _single_wire(transition_future.cod, "the future state")
    f = _single_wire(emission_future.cod, "the future observation")
    if not habits.is_state:
        raise ShapeMismatchError("habits must be a state")
    if transition.dom != habits.cod:
        raise ShapeMismatchError("transition must read the policy")
    if emission.dom != transition.cod:
        raise ShapeMismatchError("emission must read the present state")
    if transition_future.dom != Shape((s, p)):
        raise ShapeMismatchError("future transition must read (state, policy)")
    if emission_future.dom != transition_future.cod:
        raise ShapeMismatchError("future emission must read the future state")
    names = [p.name, s.name, o.name, s2.name, f.name]
    if len(set(names)) != 5:
        raise ShapeMismatchError("the five wires need distinct names")
    diagram = NetworkDiagram(
        tuple(names),
        (Box("habits", (), p.name),
         Box("transition", (p.name,), s.name),
         Box("emission", (s.name,), o.name),
         Box("transition_future", (s.name, p.name), s2.name),
         Box("emission_future", (s2.name,), f.name)),
        (), (o.name, f.name))
    interp = Interpretation(
        {p.name: p, s.name: s, o.name: o, s2.name: s2, f.name: f},
        {"habits": habits, "transition": transition, "emission": emission,
         "transition_future": transition_future,
         "emission_future": emission_future})
    return OpenModel(diagram, interp)


@dataclass(frozen=True)
class ActinfStructure:
    """The five channels of a planning model, read off its diagram."""

    policy_wire: str
    state_wire: str
    obs_wire: str
    future_state_wire: str
    future_obs_wire: str
    habits: np.ndarray            # (P,)
    transition: np.ndarray        # (P, S)
    emission: np.ndarray          # (S, O)
    transition_future: np.ndarray  # (S, P, S')
    emission_future: np.ndarray   # (S', F)
    model: OpenModel

    def shape_of(self, wire: str) -> Shape:
        return self.model.boundary_shape([wire])


def actinf_structure(m: OpenModel) -> ActinfStructure:
    """Recognise the five-box planning shape by its wiring.

    Works on any model with the right topology regardless of box or wire
    names, so models loaded from files can be planned over directly.
    """
    d = m.diagram
    if d.inputs:
        raise InvalidModelError("planning models must be closed")
    if len(d.boxes) != 5 or len(d.wires) != 5 or len(d.outputs) != 2:
        raise InvalidModelError(
            "planning models have five boxes, five wires, two outputs")
    roots = [b for b in d.boxes if not b.inputs]
    if len(roots) != 1:
        raise InvalidModelError("expected exactly one box with no inputs")
    habits = roots[0]
    p = habits.output
    singles = {b.output: b for b in d.boxes if b.inputs == (p,)}
    if len(singles) != 1:
        raise InvalidModelError("expected exactly one box reading only the policy")
    s = next(iter(singles))
    transition = singles[s]
    future_trans = [b for b in d.boxes if set(b.inputs) == {s, p}]
    if len(future_trans) != 1:
        raise InvalidModelError("expected one box reading (state, policy)")
    s2 = future_trans[0].output
    emission = [b for b in d.boxes if b.inputs == (s,)]
    if len(emission) != 1:
        raise InvalidModelError("expected one emission box reading the state")
    o = emission[0].output
    emission_future = [b for b in d.boxes if b.inputs == (s2,)]
    if len(emission_future) != 1:
        raise InvalidModelError("expected one emission box reading the future state")
    f = emission_future[0].output
    if set(d.outputs) != {o, f}:
        raise InvalidModelError("outputs must be the two observation wires")

    card = {w: m.interpretation.wire_types[w].cardinality for w in d.wires}
    ch = m.interpretation.channels
    bt = future_trans[0]
    arr = ch[bt.name].entries.reshape(card[bt.inputs[0]], card[bt.inputs[1]],
                                      card[s2])
    if bt.inputs == (p, s):
        arr = arr.transpose(1, 0, 2)
    return ActinfStructure(
        policy_wire=p, state_wire=s, obs_wire=o,
        future_state_wire=s2, future_obs_wire=f,
        habits=ch[habits.name].entries.reshape(-1),
        transition=ch[transition.name].entries.copy(),
        emission=ch[emission[0].name].entries.copy(),
        transition_future=arr,
        emission_future=ch[emission_future[0].name].entries.copy(),
        model=m)
