"""Surprise, entropy, KL, and the free-energy toolkit.

Extended-real conventions used throughout: ``-log x`` is ``+inf`` when
``x`` is below the zero cutoff, weights at or below the cutoff contribute
nothing to an expectation (so ``0 * inf == 0``), and a sum containing
``+inf`` with positive weight is ``+inf``.  Log-boxes evaluate diagrams
of negative logarithms where wire composition is read as summation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .category import (
    Morphism,
    Shape,
    ShapeMismatchError,
    channel_tol,
    marginal,
    state,
    state_to_effect,
    zero_tol,
)
from .diagram import OpenModel, actinf_structure
from .updating import (
    AllMinusInfinityError,
    EmptyResultError,
    Observation,
    PlanReport,
    Posterior,
    _check_observation,
    _split_axes,
    exact_active_inference,
)


def neg_log(values) -> np.ndarray:
    """Entrywise -log with the zero cutoff mapped to +inf."""
    v = np.asarray(values, dtype=float)
    out = np.full(v.shape, np.inf)
    m = v > zero_tol()
    out[m] = -np.log(v[m])
    return out


def _expect(weights, table) -> float:
    """Expectation of an extended-real table; zero weights kill infinities."""
    w = np.asarray(weights, dtype=float).reshape(-1)
    t = np.asarray(table, dtype=float).reshape(-1)
    m = w > zero_tol()
    if not m.any():
        return 0.0
    sel = t[m]
    if np.isposinf(sel).any():
        return float("inf")
    return float(w[m] @ sel)


def _check_normalized(omega: Morphism, what: str) -> np.ndarray:
    if not omega.is_state:
        raise ShapeMismatchError(f"{what} must be a state")
    v = omega.entries.reshape(-1)
    if abs(v.sum() - 1.0) > channel_tol():
        raise ValueError(f"{what} must be normalised (sums to {v.sum()!r})")
    return v


def cross_surprise(omega: Morphism, sigma: Morphism) -> float:
    """-E_{x ~ omega} log sigma(x), in (-inf, +inf]."""
    w = _check_normalized(omega, "the weighting state")
    if sigma.cod != omega.cod or not sigma.is_state:
        raise ShapeMismatchError("surprise needs two states on the same shape")
    return _expect(w, neg_log(sigma.entries))


def entropy(omega: Morphism) -> float:
    """Self-surprise; always finite and nonnegative."""
    return cross_surprise(omega, omega)


def kl(omega: Morphism, sigma: Morphism) -> float:
    _check_normalized(sigma, "the reference state")
    return cross_surprise(omega, sigma) - entropy(omega)


@dataclass(frozen=True)
class LogEffect:
    """An effect viewed through a log-box: the table -log e(x)."""

    base: Morphism
    values: np.ndarray

    @classmethod
    def of_effect(cls, e: Morphism) -> "LogEffect":
        if not e.is_effect:
            raise ShapeMismatchError("log-boxes apply to effects")
        return cls(e, neg_log(e.entries.reshape(-1)))

    @classmethod
    def of_state(cls, omega: Morphism) -> "LogEffect":
        return cls.of_effect(state_to_effect(omega))

    def expected(self, weights) -> float:
        return _expect(weights, self.values)


@dataclass(frozen=True)
class FreeEnergyReport:
    kind: str
    total: float
    terms: dict[str, float]
    extras: dict[str, float] = field(default_factory=dict)


def _joint_blocks(m: Morphism, obs_names) -> tuple[np.ndarray, Shape, Shape]:
    """A joint state regrouped as a (hidden, observed) matrix."""
    fake = Observation.soft(
        Shape(tuple(w for w in m.cod.wires if w.name in set(obs_names))),
        np.ones(int(np.prod([w.cardinality for w in m.cod.wires
                             if w.name in set(obs_names)], initial=1))))
    arr, cod = _split_axes(m, fake)
    return arr[0], cod, fake.shape


def _agree(a: float, b: float, what: str):
    if np.isposinf(a) and np.isposinf(b):
        return
    if np.isposinf(a) != np.isposinf(b) or abs(a - b) > 1e-9 * max(1.0, abs(a)):
        raise ArithmeticError(f"{what} disagree: {a!r} vs {b!r}")


def free_energy(q_joint: Morphism, m_joint: Morphism,
                state_wires) -> FreeEnergyReport:
    """Cross-surprise of Q against M minus the entropy of Q's state marginal.

    Also evaluates the conditional three-term split and checks the two
    routes agree.
    """
    _check_normalized(q_joint, "Q")
    _check_normalized(m_joint, "M")
    if q_joint.cod != m_joint.cod:
        raise ShapeMismatchError("Q and M must share a shape")
    state_wires = list(state_wires)
    obs_names = [n for n in m_joint.cod.names if n not in set(state_wires)]
    q_s = marginal(q_joint, state_wires)
    cross = cross_surprise(q_joint, m_joint)
    h_s = entropy(q_s)
    total = cross - h_s

    q_so, _, _ = _joint_blocks(q_joint, obs_names)
    m_so, _, _ = _joint_blocks(m_joint, obs_names)
    m_o = m_so.sum(axis=0)
    live = m_o > zero_tol()
    cond = np.where(live[None, :], m_so / np.where(live, m_o, 1.0)[None, :], 0.0)
    cond_surprise = _expect(q_so, neg_log(cond))
    obs_surprise = _expect(q_so.sum(axis=0), neg_log(m_o))
    split = cond_surprise + obs_surprise - h_s
    _agree(total, split, "free-energy decompositions")
    return FreeEnergyReport(
        "free-energy", total,
        {"cross_surprise": cross, "negative_state_entropy": -h_s},
        {"conditional_surprise": cond_surprise,
         "observation_surprise": obs_surprise,
         "state_entropy": h_s})


def vfe(q: Morphism, m_joint: Morphism, obs: Observation) -> FreeEnergyReport:
    """Free energy of q (x) obs against the joint; the variational objective.

    The report's terms carry the expected-KL plus observation-surprise
    split, which is checked against the defining form.
    """
    qv = _check_normalized(q, "q")
    _check_normalized(m_joint, "M")
    arr, s_cod = _split_axes(m_joint, obs)
    m_so = arr[0]
    if q.cod != s_cod:
        raise ShapeMismatchError(
            f"q lives on {q.cod.names}, the model's hidden part is {s_cod.names}")
    w = obs.weights
    nl = neg_log(m_so)
    cross = 0.0
    for o in np.nonzero(w > zero_tol())[0]:
        cross = cross + w[o] * _expect(qv, nl[:, o])
    h_q = _expect(qv, neg_log(qv))
    total = cross - h_q

    m_o = m_so.sum(axis=0)
    live = m_o > zero_tol()
    cond = np.where(live[None, :], m_so / np.where(live, m_o, 1.0)[None, :], 0.0)
    expected_kl = 0.0
    for o in np.nonzero(w > zero_tol())[0]:
        expected_kl = expected_kl + w[o] * (_expect(qv, neg_log(cond[:, o])) - h_q)
    obs_surprise = _expect(w, neg_log(m_o))
    split = expected_kl + obs_surprise
    _agree(total, split, "VFE decompositions")
    return FreeEnergyReport(
        "vfe", total,
        {"expected_kl": expected_kl, "observation_surprise": obs_surprise},
        {"posterior_entropy": h_q})


def vfe_update(m: Morphism, obs: Observation) -> Posterior:
    """Softmax over states of the observation-expected log conditional.

    Observation columns with no model mass are excluded from the
    expectation and flagged; states ruled out by any surviving column get
    weight zero.  Raises ``AllMinusInfinityError`` when nothing survives.
    """
    arr, cod = _split_axes(m, obs)
    w = obs.weights
    col_sums = arr.sum(axis=1)
    rows = np.zeros((arr.shape[0], arr.shape[1]))
    dropped: list[float] = []
    failed_rows = 0
    for r in range(arr.shape[0]):
        live = col_sums[r] > zero_tol()
        use = (w > zero_tol()) & live
        dropped.append(float(w[~live & (w > zero_tol())].sum()))
        if not use.any():
            failed_rows += 1
            continue
        cond = arr[r][:, use] / col_sums[r][use]
        logs = np.where(cond > zero_tol(), np.log(np.where(cond > zero_tol(), cond, 1.0)),
                        -np.inf)
        score = logs @ w[use]
        finite = np.isfinite(score)
        if not finite.any():
            failed_rows += 1
            continue
        z = np.zeros_like(score)
        z[finite] = np.exp(score[finite] - score[finite].max())
        rows[r] = z / z.sum()
    if failed_rows == arr.shape[0]:
        raise AllMinusInfinityError(
            "no state has positive weight under any usable observation column")
    diag: dict = {"dropped_observation_mass":
                  dropped if m.dom.wires else dropped[0]}
    if failed_rows:
        diag["undefined_rows"] = failed_rows
    return Posterior(Morphism(m.dom, cod, rows), "vfe", diag)


def efe(m_joint: Morphism, pref: Observation) -> FreeEnergyReport:
    """Expected free energy: ambiguity plus risk, checked definitionally.

    Ambiguity is the expected entropy of the per-state observation
    distribution; risk is the divergence of the predicted observations
    from the preferences.
    """
    _check_normalized(m_joint, "M")
    arr, s_cod = _split_axes(m_joint, pref)
    m_so = arr[0]
    w = pref.weights
    m_s = m_so.sum(axis=1)
    m_o = m_so.sum(axis=0)
    live_s = m_s > zero_tol()
    cond_o = np.where(live_s[:, None], m_so / np.where(live_s, m_s, 1.0)[:, None], 0.0)
    ambiguity = 0.0
    for s in np.nonzero(live_s)[0]:
        ambiguity += m_s[s] * _expect(cond_o[s], neg_log(cond_o[s]))
    risk = _expect(m_o, neg_log(w)) - _expect(m_o, neg_log(m_o))
    total = risk + ambiguity

    live_o = m_o > zero_tol()
    cond_s = np.where(live_o[None, :], m_so / np.where(live_o, m_o, 1.0)[None, :], 0.0)
    tilde = cond_s * w[None, :]
    definitional = _expect(m_so, neg_log(tilde)) - _expect(m_s, neg_log(m_s))
    _agree(total, definitional, "EFE forms")
    return FreeEnergyReport(
        "efe", total, {"ambiguity": float(ambiguity), "risk": risk},
        {"definitional_total": definitional,
         "preference_surprise_bound": _expect(m_o, neg_log(w))})


def open_vfe(m: Morphism, q: Morphism, obs: Observation) -> float:
    """Variational free energy of a channel with inputs.

    ``m`` maps inputs to (hidden, observed); ``q`` is a joint state over
    (inputs, hidden).  Evaluates the log-box diagram
    E_{(i,s) ~ q, o ~ obs}[log q(i, s) - log m(s, o | i)] and coincides
    with ``vfe`` when there are no inputs.
    """
    _check_normalized(q, "q")
    arr, s_cod = _split_axes(m, obs)
    want = Shape(m.dom.wires + s_cod.wires)
    if q.cod != want:
        raise ShapeMismatchError(
            f"q lives on {q.cod.names}, expected {want.names}")
    qv = q.entries.reshape(m.dom.size, s_cod.size)
    w = obs.weights
    term_q = -_expect(qv, neg_log(qv))
    nl = neg_log(arr)
    use = w > zero_tol()
    weighted = np.zeros((arr.shape[0], arr.shape[1]))
    inf_mask = np.zeros_like(weighted, dtype=bool)
    nl_sel = nl[:, :, use]
    inf_mask = np.isposinf(nl_sel).any(axis=2)
    weighted[~inf_mask] = np.where(np.isposinf(nl_sel), 0.0, nl_sel)[~inf_mask] @ w[use]
    q_mask = qv > zero_tol()
    if (q_mask & inf_mask).any():
        return float("inf")
    term_m = float((qv[q_mask] * weighted[q_mask]).sum()) if q_mask.any() else 0.0
    return term_q + term_m


def induced_observation(m2: Morphism, q2: Morphism, boundary) -> Observation:
    """The belief a downstream model holds about its inputs, passed down.

    The marginal of ``q2`` on the boundary wires serves the upstream model
    as its observation.
    """
    boundary = list(boundary)
    marg = marginal(q2, boundary)
    if marg.cod.cards != m2.dom.cards or \
            tuple(w.values for w in marg.cod.wires) != tuple(w.values for w in m2.dom.wires):
        raise ShapeMismatchError(
            "the boundary marginal does not match the downstream inputs")
    return Observation.soft(marg.cod, marg.entries)


def softmax(logits) -> np.ndarray:
    """Stable softmax over extended-real scores; -inf maps to weight zero."""
    x = np.asarray(logits, dtype=float).reshape(-1)
    finite = np.isfinite(x)
    if not finite.any():
        raise AllMinusInfinityError("every candidate has weight zero")
    z = np.zeros_like(x)
    z[finite] = np.exp(x[finite] - x[finite].max())
    return z / z.sum()


def approx_active_inference(m: OpenModel, obs: Observation,
                            pref: Observation) -> PlanReport:
    """Plan by free energy: perceive the present, predict the future.

    Per policy, the present part of the model is updated variationally
    against the observation (value F), the future part is rolled forward
    from that posterior and scored against the preferences (value G), and
    the plan is softmax(log habits - F - G).  The exact plan is attached
    for comparison when small enough to compute.
    """
    st = actinf_structure(m)
    _check_observation(obs, st, st.obs_wire, "the observation")
    _check_observation(pref, st, st.future_obs_wire, "the preference")
    habit = st.habits
    n = habit.size
    s_cod = st.shape_of(st.state_wire)
    present_cod = Shape(s_cod.wires + st.shape_of(st.obs_wire).wires)
    future_cod = Shape(st.shape_of(st.future_state_wire).wires
                       + st.shape_of(st.future_obs_wire).wires)

    f_vals = np.zeros(n)
    g_vals = np.zeros(n)
    posteriors = []
    for p in range(n):
        joint_so = st.transition[p][:, None] * st.emission
        m1 = state(present_cod, joint_so.reshape(-1))
        try:
            post = vfe_update(m1, obs)
        except AllMinusInfinityError:
            f_vals[p] = np.inf
            g_vals[p] = np.inf
            posteriors.append(np.zeros(s_cod.size))
            continue
        qv = post.morphism.entries.reshape(-1)
        posteriors.append(qv)
        f_vals[p] = vfe(post.morphism, m1, obs).total
        mq = np.einsum("s,st,tf->tf", qv, st.transition_future[:, p, :],
                       st.emission_future)
        g_vals[p] = efe(state(future_cod, mq.reshape(-1)), pref).total

    logits = np.where(habit > zero_tol(), np.log(np.where(habit > zero_tol(), habit, 1.0)),
                      -np.inf) - f_vals - g_vals
    plan = softmax(logits)

    exact_plan = None
    oracle_plan = None
    diag: dict = {"perception": [row.tolist() for row in posteriors]}
    try:
        exact = exact_active_inference(m, obs, pref)
        exact_plan = exact.exact_plan
        oracle_plan = exact.oracle_plan
    except EmptyResultError as exc:
        diag["exact_comparison_failed"] = str(exc)
    return PlanReport(
        policies=m.interpretation.wire_types[st.policy_wire].values,
        habits=habit.copy(), method="fe", exact_plan=exact_plan,
        approx_plan=plan, oracle_plan=oracle_plan,
        vfe=f_vals, efe=g_vals, diagnostics=diag)
