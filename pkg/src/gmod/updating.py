"""Exact belief updating: conditionals, sharp, Jeffrey and Pearl rules.

All updates act on a joint state over (hidden, observed) wires, or on a
channel from inputs to such a joint, in which case they apply row by row.
Posterior rows with no support stay zero; a completely empty result
raises ``EmptyResultError``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .category import (
    GmodError,
    Morphism,
    Shape,
    ShapeMismatchError,
    UnknownWireError,
    marginal,
    state,
    zero_tol,
)
from .diagram import ActinfStructure, InvalidModelError, OpenModel, actinf_structure, total_channel

ORACLE_SIZE_LIMIT = 10 ** 6


class EmptyResultError(GmodError):
    """Every posterior row has zero evidence."""


class AllMinusInfinityError(GmodError):
    """Every candidate receives weight zero under the softmax."""


@dataclass(frozen=True)
class Observation:
    """A sharp point or a soft distribution over some target wires."""

    shape: Shape
    point: tuple[str, ...] | None = None
    dist: np.ndarray | None = None

    @classmethod
    def sharp(cls, shape: Shape, *labels: str) -> "Observation":
        shape.index_of(labels)
        return cls(shape, point=tuple(labels))

    @classmethod
    def soft(cls, shape: Shape, weights) -> "Observation":
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.size != shape.size:
            raise ShapeMismatchError(
                f"{w.size} weights for a shape of size {shape.size}")
        if (w < 0).any() or not np.isfinite(w).all():
            raise ValueError("observation weights must be finite and nonnegative")
        total = w.sum()
        if total <= 0:
            raise ValueError("observation weights must have positive mass")
        w = w / total
        w.setflags(write=False)
        return cls(shape, dist=w)

    @property
    def is_sharp(self) -> bool:
        return self.point is not None

    @property
    def weights(self) -> np.ndarray:
        if self.dist is not None:
            return self.dist
        w = np.zeros(self.shape.size)
        w[self.shape.index_of(self.point)] = 1.0
        return w

    def as_state(self) -> Morphism:
        return state(self.shape, self.weights)

    def normalization_defect(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Posterior:
    """An updated state (or channel, for open models) plus diagnostics."""

    morphism: Morphism
    method: str
    diagnostics: dict = field(default_factory=dict)


def minimal_conditional(f: Morphism, over: Sequence[str]) -> Morphism:
    """Condition the codomain of ``f`` on the wires named in ``over``.

    The result maps (dom, over-wires) to the remaining codomain wires,
    with each row normalised on its support and zero off it.
    """
    over = list(over)
    names = f.cod.names
    for w in over:
        if w not in names:
            raise UnknownWireError(f"cannot condition on unknown wire {w!r}")
    z_pos = [i for i, n in enumerate(names) if n in over]
    y_pos = [i for i, n in enumerate(names) if n not in over]
    arr = f.entries.reshape((f.dom.size,) + f.cod.cards)
    arr = arr.transpose([0] + [1 + i for i in z_pos] + [1 + i for i in y_pos])
    z_size = int(np.prod([f.cod.cards[i] for i in z_pos], initial=1))
    y_size = int(np.prod([f.cod.cards[i] for i in y_pos], initial=1))
    rows = arr.reshape(f.dom.size * z_size, y_size)
    sums = rows.sum(axis=1)
    out = np.zeros_like(rows)
    live = sums > zero_tol()
    out[live] = rows[live] / sums[live, None]
    dom = Shape(f.dom.wires + tuple(f.cod.wires[i] for i in z_pos))
    cod = Shape(tuple(f.cod.wires[i] for i in y_pos))
    return Morphism(dom, cod, out)


def bayesian_inverse(m: OpenModel, observed: Sequence[str] | None = None) -> Morphism:
    """The conditional of a closed model's total state on its outputs."""
    if not m.is_closed:
        raise InvalidModelError("bayesian_inverse needs a closed model")
    if observed is None:
        observed = m.diagram.outputs
    return minimal_conditional(total_channel(m), observed)


def _split_axes(m: Morphism, obs: Observation):
    """Reshape a joint (or channel into a joint) as (rows, states, observations)."""
    names = m.cod.names
    obs_names = obs.shape.names
    for w in obs_names:
        if w not in names:
            raise UnknownWireError(f"observed wire {w!r} is not in the codomain")
    o_pos = [i for i, n in enumerate(names) if n in obs_names]
    s_pos = [i for i, n in enumerate(names) if n not in obs_names]
    got = Shape(tuple(m.cod.wires[i] for i in o_pos))
    if got != obs.shape:
        raise ShapeMismatchError(
            f"observation shape {obs.shape.names} does not match wires {got.names}")
    arr = m.entries.reshape((m.dom.size,) + m.cod.cards)
    arr = arr.transpose([0] + [1 + i for i in s_pos] + [1 + i for i in o_pos])
    s_cards = tuple(m.cod.cards[i] for i in s_pos)
    s_size = int(np.prod(s_cards, initial=1))
    arr = arr.reshape(m.dom.size, s_size, obs.shape.size)
    cod = Shape(tuple(m.cod.wires[i] for i in s_pos))
    return arr, cod


def _as_posterior(m: Morphism, rows: np.ndarray, cod: Shape, method: str,
                  diagnostics: dict) -> Posterior:
    out = Morphism(m.dom, cod, rows)
    return Posterior(out, method, diagnostics)


def sharp_update(m: Morphism, obs: Observation) -> Posterior:
    """Bayesian update at a single observed point.

    A zero evidence column yields the zero state together with an
    ``out_of_support`` diagnostic rather than an error.
    """
    if not obs.is_sharp:
        raise ValueError("sharp_update needs a sharp observation")
    arr, cod = _split_axes(m, obs)
    col = arr[:, :, obs.shape.index_of(obs.point)]
    sums = col.sum(axis=1)
    rows = np.zeros_like(col)
    live = sums > zero_tol()
    rows[live] = col[live] / sums[live, None]
    diag: dict = {"evidence": sums.tolist() if m.dom.wires else float(sums[0])}
    if not live.all():
        diag["out_of_support"] = True
    return _as_posterior(m, rows, cod, "sharp", diag)


def jeffrey_update(m: Morphism, obs: Observation) -> Posterior:
    """Average the Bayesian inverse under the observation, then renormalise.

    Observation mass on zero-probability columns is dropped before the
    final normalisation (the conditional is minimal there).
    """
    arr, cod = _split_axes(m, obs)
    col_sums = arr.sum(axis=1)
    live = col_sums > zero_tol()
    safe = np.where(live, col_sums, 1.0)
    cond = np.where(live[:, None, :], arr / safe[:, None, :], 0.0)
    w = obs.weights
    mixed = np.einsum("rso,o->rs", cond, w)
    sums = mixed.sum(axis=1)
    if not (sums > zero_tol()).any():
        raise EmptyResultError("observation has no mass inside the model support")
    rows = np.zeros_like(mixed)
    live_rows = sums > zero_tol()
    rows[live_rows] = mixed[live_rows] / sums[live_rows, None]
    dead_mass = [float(w[~live[r]].sum()) for r in range(arr.shape[0])]
    diag = {"mass_before_renormalization":
            sums.tolist() if m.dom.wires else float(sums[0]),
            "dropped_observation_mass":
            dead_mass if m.dom.wires else dead_mass[0]}
    return _as_posterior(m, rows, cod, "jeffrey", diag)


def pearl_update(m: Morphism, obs: Observation) -> Posterior:
    """Contract the joint with the observation effect, then normalise once."""
    arr, cod = _split_axes(m, obs)
    w = obs.weights
    mixed = np.einsum("rso,o->rs", arr, w)
    sums = mixed.sum(axis=1)
    if not (sums > zero_tol()).any():
        raise EmptyResultError("total evidence for the observation is zero")
    rows = np.zeros_like(mixed)
    live = sums > zero_tol()
    rows[live] = mixed[live] / sums[live, None]
    diag = {"evidence": sums.tolist() if m.dom.wires else float(sums[0])}
    return _as_posterior(m, rows, cod, "pearl", diag)


@dataclass(frozen=True)
class PlanReport:
    """Per-policy quantities produced by a planning run."""

    policies: tuple[str, ...]
    habits: np.ndarray
    method: str
    exact_plan: np.ndarray | None = None
    approx_plan: np.ndarray | None = None
    oracle_plan: np.ndarray | None = None
    vfe: np.ndarray | None = None
    efe: np.ndarray | None = None
    oracle_skipped: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def plan(self) -> np.ndarray:
        primary = self.approx_plan if self.method == "fe" else self.exact_plan
        assert primary is not None
        return primary

    @property
    def tv_gap(self) -> float | None:
        if self.exact_plan is None or self.approx_plan is None:
            return None
        return float(0.5 * np.abs(self.exact_plan - self.approx_plan).sum())


def _check_observation(obs: Observation, structure: ActinfStructure,
                       wire: str, what: str) -> np.ndarray:
    want = structure.shape_of(wire)
    if obs.shape.cards != want.cards or \
            tuple(w.values for w in obs.shape.wires) != tuple(w.values for w in want.wires):
        raise ShapeMismatchError(f"{what} does not match wire {wire!r}")
    return obs.weights


def exact_active_inference(m: OpenModel, obs: Observation, pref: Observation,
                           method: str = "pearl") -> PlanReport:
    """The factored exact plan over policies, checked against a full joint.

    The plan weights each policy by its habit, the evidence the present
    part of the model gives the observation, and the preference evidence
    of the future part run from the Pearl-updated present posterior.  The
    report also carries the plan obtained by updating the full joint over
    (policy, observation, future observation) directly; the two agree.
    ``method="jeffrey"`` is experimental and runs the full-joint Jeffrey
    update instead.
    """
    st = actinf_structure(m)
    wo = _check_observation(obs, st, st.obs_wire, "the observation")
    wf = _check_observation(pref, st, st.future_obs_wire, "the preference")
    habit = st.habits
    trans, emit = st.transition, st.emission
    trans_f, emit_f = st.transition_future, st.emission_future
    policies = m.interpretation.wire_types[st.policy_wire].values

    n_cells = habit.size * trans.shape[1] * emit.shape[1] * \
        trans_f.shape[2] * emit_f.shape[1]

    if method == "jeffrey":
        joint = np.einsum("p,ps,so,spt,tf->pof", habit, trans, emit,
                          trans_f, emit_f)
        p_size, o_size, f_size = joint.shape
        flat = joint.reshape(p_size, o_size * f_size)
        col_sums = flat.sum(axis=0)
        cond = np.zeros_like(flat)
        live = col_sums > zero_tol()
        cond[:, live] = flat[:, live] / col_sums[live]
        w_of = np.outer(wo, wf).reshape(-1)
        score = cond @ w_of
        total = score.sum()
        if total <= zero_tol():
            raise EmptyResultError("joint evidence for observation and preference is zero")
        plan = score / total
        return PlanReport(policies, habit.copy(), "jeffrey", exact_plan=plan,
                          diagnostics={"experimental": True})

    if method != "pearl":
        raise ValueError(f"unknown planning method {method!r}")

    present_evidence = np.einsum("ps,so,o->p", trans, emit, wo)
    numer = np.einsum("ps,so,o->ps", trans, emit, wo)
    q_pearl = np.zeros_like(numer)
    live = present_evidence > zero_tol()
    q_pearl[live] = numer[live] / present_evidence[live, None]
    future_obs = np.einsum("spt,tf->spf", trans_f, emit_f)
    future_evidence = np.einsum("ps,spf,f->p", q_pearl, future_obs, wf)
    score = habit * present_evidence * future_evidence
    total = score.sum()
    if total <= zero_tol():
        raise EmptyResultError("joint evidence for observation and preference is zero")
    plan = score / total

    oracle = None
    skipped = n_cells > ORACLE_SIZE_LIMIT
    diag: dict = {}
    if not skipped:
        joint = np.einsum("p,ps,so,spt,tf->pof", habit, trans, emit,
                          trans_f, emit_f)
        oracle_score = np.einsum("pof,o,f->p", joint, wo, wf)
        oracle = oracle_score / oracle_score.sum()
        diag["factored_vs_oracle_gap"] = float(np.abs(plan - oracle).max())
    return PlanReport(policies, habit.copy(), "exact", exact_plan=plan,
                      oracle_plan=oracle, oracle_skipped=skipped,
                      diagnostics=diag)
