"""Finite nonnegative matrices as a copy-discard category.

Objects are products of named finite value sets (shapes), morphisms are
dense nonnegative matrices indexed row = domain assignment, column =
codomain assignment, both in mixed-radix order with the first wire most
significant.  States are morphisms with empty domain, effects have empty
codomain, channels are row-stochastic.  Everything here is immutable and
pure; any value may be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

EPS_ZERO = 1e-12
EPS_CHANNEL = 1e-9

_TOLERANCES = {"zero": EPS_ZERO, "channel": EPS_CHANNEL}


def zero_tol() -> float:
    """Cutoff below which a weight counts as zero support."""
    return _TOLERANCES["zero"]


def channel_tol() -> float:
    """Largest row-sum defect a channel may carry."""
    return _TOLERANCES["channel"]


def set_tolerances(zero: float | None = None, channel: float | None = None):
    """Process-wide tolerance overrides; returns the previous pair."""
    previous = (_TOLERANCES["zero"], _TOLERANCES["channel"])
    for key, value in (("zero", zero), ("channel", channel)):
        if value is not None:
            if not (value > 0):
                raise ValueError(f"{key} tolerance must be positive")
            _TOLERANCES[key] = float(value)
    return previous


class GmodError(Exception):
    """Base class for engine errors."""


class ShapeMismatchError(GmodError):
    """Domain/codomain shapes do not line up for the requested operation."""


class UnknownWireError(GmodError):
    """A wire name was requested that the shape does not contain."""


@dataclass(frozen=True)
class WireType:
    """A named finite value set: one wire of a shape."""

    name: str
    values: tuple[str, ...]

    def __post_init__(self):
        if not isinstance(self.values, tuple):
            object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) < 1:
            raise ValueError(f"wire {self.name!r} needs at least one value")
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"wire {self.name!r} has repeated value labels")

    @property
    def cardinality(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Shape:
    """An ordered list of wires; the empty shape is the monoidal unit."""

    wires: tuple[WireType, ...] = ()

    def __post_init__(self):
        if not isinstance(self.wires, tuple):
            object.__setattr__(self, "wires", tuple(self.wires))

    @property
    def size(self) -> int:
        n = 1
        for w in self.wires:
            n *= w.cardinality
        return n

    @property
    def cards(self) -> tuple[int, ...]:
        return tuple(w.cardinality for w in self.wires)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(w.name for w in self.wires)

    def position(self, name: str) -> int:
        for i, w in enumerate(self.wires):
            if w.name == name:
                return i
        raise UnknownWireError(f"no wire named {name!r} in shape {self.names}")

    def index_of(self, labels: Sequence[str]) -> int:
        """Mixed-radix index of a value assignment, first wire most significant."""
        if len(labels) != len(self.wires):
            raise ShapeMismatchError(
                f"assignment has {len(labels)} labels for {len(self.wires)} wires")
        idx = 0
        for w, lab in zip(self.wires, labels):
            try:
                v = w.values.index(lab)
            except ValueError:
                raise UnknownWireError(
                    f"wire {w.name!r} has no value {lab!r}") from None
            idx = idx * w.cardinality + v
        return idx

    def labels_at(self, index: int) -> tuple[str, ...]:
        coords = np.unravel_index(index, self.cards) if self.wires else ()
        return tuple(w.values[int(c)] for w, c in zip(self.wires, coords))

    def all_labels(self) -> list[tuple[str, ...]]:
        return [self.labels_at(i) for i in range(self.size)]


UNIT = Shape(())


class Morphism:
    """A nonnegative real matrix from one shape to another.

    ``entries[x, y]`` is the weight of codomain assignment ``y`` given
    domain assignment ``x``.  The array is copied on construction and
    frozen; all operations return new morphisms.
    """

    __slots__ = ("dom", "cod", "entries")

    def __init__(self, dom: Shape, cod: Shape, entries):
        arr = np.array(entries, dtype=float, copy=True)
        if arr.size != dom.size * cod.size:
            raise ShapeMismatchError(
                f"got {arr.size} entries for a {dom.size}x{cod.size} morphism")
        arr = arr.reshape(dom.size, cod.size)
        if not np.isfinite(arr).all():
            raise ValueError("morphism entries must be finite")
        if (arr < 0).any():
            raise ValueError("morphism entries must be nonnegative")
        arr.setflags(write=False)
        self.dom = dom
        self.cod = cod
        self.entries = arr

    @property
    def is_state(self) -> bool:
        return self.dom.wires == ()

    @property
    def is_effect(self) -> bool:
        return self.cod.wires == ()

    @property
    def is_scalar(self) -> bool:
        return self.is_state and self.is_effect

    def scalar_value(self) -> float:
        if not self.is_scalar:
            raise ShapeMismatchError("not a scalar")
        return float(self.entries[0, 0])

    def __eq__(self, other) -> bool:
        return (isinstance(other, Morphism)
                and self.dom == other.dom and self.cod == other.cod
                and np.array_equal(self.entries, other.entries))

    __hash__ = None

    def allclose(self, other: "Morphism", tol: float = EPS_CHANNEL) -> bool:
        return (self.dom == other.dom and self.cod == other.cod
                and np.allclose(self.entries, other.entries, rtol=0, atol=tol))

    def __rshift__(self, other: "Morphism") -> "Morphism":
        """``f >> g`` is g after f."""
        return compose(other, self)

    def __matmul__(self, other: "Morphism") -> "Morphism":
        return tensor(self, other)

    def __repr__(self):
        return f"Morphism({self.dom.names} -> {self.cod.names}, {self.entries.shape})"


@dataclass(frozen=True)
class ChannelFlag:
    is_channel: bool
    max_row_defect: float


def compose(g: Morphism, f: Morphism) -> Morphism:
    """g after f: entries (x, z) = sum_y g(z|y) f(y|x)."""
    if f.cod != g.dom:
        raise ShapeMismatchError(
            f"cannot compose: intermediate shapes differ "
            f"({f.cod.names} vs {g.dom.names})")
    return Morphism(f.dom, g.cod, f.entries @ g.entries)


def tensor(f: Morphism, g: Morphism) -> Morphism:
    """Parallel composite; the Kronecker product of the matrices."""
    dom = Shape(f.dom.wires + g.dom.wires)
    cod = Shape(f.cod.wires + g.cod.wires)
    return Morphism(dom, cod, np.kron(f.entries, g.entries))


def identity(shape: Shape) -> Morphism:
    return Morphism(shape, shape, np.eye(shape.size))


def swap(x: Shape, y: Shape) -> Morphism:
    """The permutation channel X (x) Y -> Y (x) X."""
    a, b = x.size, y.size
    ent = np.zeros((a * b, b * a))
    i = np.repeat(np.arange(a), b)
    j = np.tile(np.arange(b), a)
    ent[i * b + j, j * a + i] = 1.0
    return Morphism(Shape(x.wires + y.wires), Shape(y.wires + x.wires), ent)


def copy(shape: Shape, n: int = 2) -> Morphism:
    """n-fold copying; n = 1 is the identity and n = 0 is discarding."""
    if n < 0:
        raise ValueError("copy needs n >= 0")
    if n == 0:
        return discard(shape)
    size = shape.size
    ent = np.zeros((size, size ** n))
    step = sum(size ** k for k in range(n))
    for x in range(size):
        ent[x, x * step] = 1.0
    return Morphism(shape, Shape(shape.wires * n), ent)


def discard(shape: Shape) -> Morphism:
    return Morphism(shape, UNIT, np.ones((shape.size, 1)))


def cap(shape: Shape) -> Morphism:
    """Effect on X (x) X checking that its two inputs agree."""
    size = shape.size
    ent = np.zeros((size * size, 1))
    ent[np.arange(size) * size + np.arange(size), 0] = 1.0
    return Morphism(Shape(shape.wires + shape.wires), UNIT, ent)


def state(shape: Shape, values) -> Morphism:
    return Morphism(UNIT, shape, np.asarray(values, dtype=float).reshape(1, -1))


def effect(shape: Shape, values) -> Morphism:
    return Morphism(shape, UNIT, np.asarray(values, dtype=float).reshape(-1, 1))


def point(shape: Shape, *labels: str) -> Morphism:
    """The sharp state at the given value assignment."""
    ent = np.zeros(shape.size)
    ent[shape.index_of(labels)] = 1.0
    return state(shape, ent)


def sharp_effect(shape: Shape, *labels: str) -> Morphism:
    return state_to_effect(point(shape, *labels))


def uniform(shape: Shape) -> Morphism:
    return state(shape, np.full(shape.size, 1.0 / shape.size))


def zero_state(shape: Shape) -> Morphism:
    return state(shape, np.zeros(shape.size))


def scalar(value: float) -> Morphism:
    return Morphism(UNIT, UNIT, [[value]])


def state_to_effect(omega: Morphism) -> Morphism:
    """Flip a state upside-down into the effect with the same table."""
    if not omega.is_state:
        raise ShapeMismatchError("state_to_effect needs a state (empty domain)")
    return Morphism(omega.cod, UNIT, omega.entries.reshape(-1, 1))


def marginal(f: Morphism, keep: Iterable[str]) -> Morphism:
    """Discard every codomain wire not named in ``keep``; order is preserved."""
    keep = set(keep)
    names = f.cod.names
    unknown = keep - set(names)
    if unknown:
        raise UnknownWireError(f"cannot keep unknown wires {sorted(unknown)}")
    kept_pos = [i for i, n in enumerate(names) if n in keep]
    dropped = tuple(1 + i for i, n in enumerate(names) if n not in keep)
    arr = f.entries.reshape((f.dom.size,) + f.cod.cards)
    if dropped:
        arr = arr.sum(axis=dropped)
    cod = Shape(tuple(f.cod.wires[i] for i in kept_pos))
    return Morphism(f.dom, cod, arr.reshape(f.dom.size, cod.size))


def normalize(f: Morphism) -> Morphism:
    """Divide each row by its sum; rows summing to zero stay zero."""
    sums = f.entries.sum(axis=1)
    out = np.zeros_like(f.entries)
    nz = sums > 0
    out[nz] = f.entries[nz] / sums[nz, None]
    return Morphism(f.dom, f.cod, out)


def is_channel(f: Morphism, tol: float | None = None) -> ChannelFlag:
    tol = channel_tol() if tol is None else tol
    defect = float(np.abs(f.entries.sum(axis=1) - 1.0).max())
    return ChannelFlag(defect <= tol, defect)


def is_sharp(omega: Morphism, tol: float | None = None) -> bool:
    """A state is sharp when copying it equals tensoring it with itself."""
    tol = zero_tol() if tol is None else tol
    if not omega.is_state:
        raise ShapeMismatchError("is_sharp needs a state")
    copied = compose(copy(omega.cod, 2), omega)
    squared = tensor(omega, omega)
    return bool(np.allclose(copied.entries, squared.entries, rtol=0, atol=tol))


def expectation(e: Morphism, omega: Morphism) -> float:
    """The scalar e after omega: sum_x e(x) omega(x)."""
    if not e.is_effect or not omega.is_state:
        raise ShapeMismatchError("expectation needs an effect and a state")
    if e.dom != omega.cod:
        raise ShapeMismatchError(
            f"effect on {e.dom.names} does not match state on {omega.cod.names}")
    return float(omega.entries.reshape(-1) @ e.entries.reshape(-1))
