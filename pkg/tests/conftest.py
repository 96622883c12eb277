import pathlib

import numpy as np
import pytest

from gmod import (
    Morphism,
    Observation,
    OpenDAG,
    Shape,
    WireType,
    build_actinf_model,
    build_open_simple,
    build_simple,
    state,
)

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def ext_close(a: float, b: float, tol: float = 1e-9) -> bool:
    """Extended-real comparison: infinities match each other."""
    if np.isposinf(a) or np.isposinf(b):
        return np.isposinf(a) and np.isposinf(b)
    return abs(a - b) <= tol


def wire(name: str, card: int) -> WireType:
    return WireType(name, tuple(f"{name.lower()}{k}" for k in range(card)))


def rand_wire(rng, name: str, lo: int = 2, hi: int = 4) -> WireType:
    return wire(name, int(rng.integers(lo, hi + 1)))


def rand_state(shape: Shape, rng) -> Morphism:
    return state(shape, rng.dirichlet(np.ones(shape.size)))


def rand_channel(dom: Shape, cod: Shape, rng) -> Morphism:
    return Morphism(dom, cod, rng.dirichlet(np.ones(cod.size), size=dom.size))


def rand_morphism(dom: Shape, cod: Shape, rng, zero_rows: bool = False) -> Morphism:
    ent = rng.uniform(0.05, 2.0, size=(dom.size, cod.size))
    if zero_rows and dom.size > 1:
        ent[rng.integers(0, dom.size)] = 0.0
    return Morphism(dom, cod, ent)


def rand_open_dag(rng, max_vertices: int = 8) -> OpenDAG:
    n = int(rng.integers(2, max_vertices + 1))
    names = tuple(f"X{k + 1}" for k in range(n))
    edges = set()
    for j in range(1, n):
        for i in range(j):
            if rng.random() < 0.4:
                edges.add((names[i], names[j]))
    parentless = [v for v in names if not any(e[1] == v for e in edges)]
    n_inputs = int(rng.integers(0, len(parentless) + 1))
    inputs = tuple(v for v in parentless[:n_inputs])
    k = int(rng.integers(1, n + 1))
    outputs = tuple(v for v in names if v in set(rng.choice(names, size=k, replace=False)))
    return OpenDAG(names, frozenset(edges), inputs, outputs)


def rand_simple_model(rng, max_card: int = 4):
    s = rand_wire(rng, "S", 2, max_card)
    o = rand_wire(rng, "O", 2, max_card)
    prior = rand_state(Shape((s,)), rng)
    lik = rand_channel(Shape((s,)), Shape((o,)), rng)
    return build_simple(prior, lik)


def rand_actinf_model(rng, max_card: int = 3):
    p = rand_wire(rng, "P", 2, max_card)
    s = rand_wire(rng, "S", 2, max_card)
    o = rand_wire(rng, "O", 2, max_card)
    s2 = rand_wire(rng, "T", 2, max_card)
    f = rand_wire(rng, "F", 2, max_card)
    habits = rand_state(Shape((p,)), rng)
    trans = rand_channel(Shape((p,)), Shape((s,)), rng)
    emit = rand_channel(Shape((s,)), Shape((o,)), rng)
    trans_f = rand_channel(Shape((s, p)), Shape((s2,)), rng)
    emit_f = rand_channel(Shape((s2,)), Shape((f,)), rng)
    return build_actinf_model(habits, trans, emit, trans_f, emit_f)


def rand_open_simple(rng, in_wire: WireType, tag: str, max_card: int = 3):
    s = rand_wire(rng, f"S{tag}", 2, max_card)
    o = rand_wire(rng, f"O{tag}", 2, max_card)
    prior = rand_channel(Shape((in_wire,)), Shape((s,)), rng)
    lik = rand_channel(Shape((in_wire, s)), Shape((o,)), rng)
    return build_open_simple(prior, lik)


def rand_observation(shape: Shape, rng, sharp: bool = False) -> Observation:
    if sharp:
        idx = int(rng.integers(0, shape.size))
        return Observation.sharp(shape, *shape.labels_at(idx))
    return Observation.soft(shape, rng.dirichlet(np.ones(shape.size)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240809)
