import itertools

import numpy as np
import pytest

from gmod import (
    BoundaryMismatchError,
    Box,
    Interpretation,
    InvalidDAGError,
    InvalidModelError,
    Morphism,
    NetworkDiagram,
    OpenDAG,
    OpenModel,
    Shape,
    ShapeMismatchError,
    build_actinf_model,
    build_discrete_time,
    build_open_simple,
    build_policy_model,
    build_simple,
    dag_to_diagram,
    diagram_to_dag,
    diagrams_match,
    identity,
    is_channel,
    marginal,
    output_channel,
    par_compose,
    point,
    seq_compose,
    state,
    total_channel,
    uniform,
    validate_diagram,
)
from conftest import (
    rand_channel,
    rand_observation,
    rand_open_dag,
    rand_state,
    wire,
)

S = Shape((wire("S", 2),))
O = Shape((wire("O", 2),))


def enumerate_total(m: OpenModel) -> dict:
    """Independent oracle: the product over boxes, by explicit enumeration."""
    d = m.diagram
    types = {w: m.interpretation.wire_types[w] for w in d.wires}
    result = {}
    for combo in itertools.product(*(range(types[w].cardinality) for w in d.wires)):
        at = dict(zip(d.wires, combo))
        weight = 1.0
        for b in d.boxes:
            ch = m.interpretation.channels[b.name]
            row = 0
            for w in b.inputs:
                row = row * types[w].cardinality + at[w]
            weight *= ch.entries[row, at[b.output]]
        key_in = tuple(at[w] for w in d.inputs)
        key_out = tuple(at[w] for w in d.hidden + d.outputs)
        result[(key_in, key_out)] = result.get((key_in, key_out), 0.0) + weight
    return result


def assert_matches_enumeration(m: OpenModel, tol=1e-9):
    tc = total_channel(m)
    oracle = enumerate_total(m)
    dom, cod = tc.dom, tc.cod
    for (key_in, key_out), weight in oracle.items():
        i = np.ravel_multi_index(key_in, dom.cards) if key_in else 0
        j = np.ravel_multi_index(key_out, cod.cards) if key_out else 0
        assert abs(tc.entries[i, j] - weight) <= tol
    assert abs(tc.entries.sum() - sum(oracle.values())) <= tol


class TestValidation:
    def example_dag_diagram(self):
        return NetworkDiagram(
            ("X1", "X2", "X3", "X4"),
            (Box("f", (), "X1"), Box("g", ("X1",), "X2"),
             Box("h", ("X1",), "X3"), Box("i", ("X2", "X3"), "X4")),
            (), ("X2", "X3"))

    def test_four_wire_example_is_valid(self):
        assert validate_diagram(self.example_dag_diagram()).ok

    def test_duplicate_producer(self):
        d = NetworkDiagram(
            ("S",), (Box("a", (), "S"), Box("b", (), "S")), (), ("S",))
        assert "E010" in validate_diagram(d).codes

    def test_two_box_cycle(self):
        d = NetworkDiagram(
            ("X", "Y"), (Box("f", ("X",), "Y"), Box("g", ("Y",), "X")),
            (), ("Y",))
        assert "E011" in validate_diagram(d).codes

    def test_input_with_producer(self):
        d = NetworkDiagram(("S",), (Box("a", (), "S"),), ("S",), ("S",))
        assert "E012" in validate_diagram(d).codes

    def test_repeated_box_input(self):
        d = NetworkDiagram(
            ("S", "O"), (Box("a", (), "S"), Box("b", ("S", "S"), "O")),
            (), ("O",))
        assert "E013" in validate_diagram(d).codes

    def test_missing_producer(self):
        d = NetworkDiagram(("S", "H"), (Box("a", (), "S"),), (), ("S",))
        assert "E014" in validate_diagram(d).codes

    def test_unknown_wire_rejected_at_construction(self):
        with pytest.raises(ValueError):
            NetworkDiagram(("S",), (Box("a", (), "Z"),), (), ("S",))


class TestDagCorrespondence:
    def test_four_vertex_example_round_trips(self):
        g = OpenDAG(
            ("X1", "X2", "X3", "X4"),
            frozenset({("X1", "X2"), ("X1", "X3"), ("X2", "X4"), ("X3", "X4")}),
            (), ("X2", "X3"))
        d = dag_to_diagram(g)
        assert len(d.boxes) == 4
        assert d.outputs == ("X2", "X3")
        assert diagram_to_dag(d) == g

    def test_five_vertex_open_example_round_trips(self):
        g = OpenDAG(
            ("X1", "X2", "X3", "X4", "X5"),
            frozenset({("X1", "X4"), ("X2", "X4"), ("X3", "X5"), ("X4", "X5")}),
            ("X2", "X3"), ("X3", "X5"))
        d = dag_to_diagram(g)
        assert len(d.boxes) == 3  # X1, X4, X5 get boxes
        assert d.inputs == ("X2", "X3")
        assert d.outputs == ("X3", "X5")
        assert diagram_to_dag(d) == g

    def test_isolated_output_vertex_becomes_a_state_box(self):
        g = OpenDAG(("X1",), frozenset(), (), ("X1",))
        d = dag_to_diagram(g)
        assert d.boxes[0].inputs == ()

    def test_input_with_parents_is_rejected(self):
        g = OpenDAG(("X1", "X2"), frozenset({("X1", "X2")}), ("X2",), ("X2",))
        with pytest.raises(InvalidDAGError):
            dag_to_diagram(g)

    @pytest.mark.parametrize("seed", range(25))
    def test_random_round_trips(self, seed):
        rng = np.random.default_rng(seed)
        g = rand_open_dag(rng)
        d = dag_to_diagram(g)
        assert validate_diagram(d).ok
        assert diagram_to_dag(d) == g
        assert diagrams_match(dag_to_diagram(diagram_to_dag(d)), d)


class TestTotalChannel:
    def test_simple_model_product_form(self, rng):
        prior = rand_state(S, rng)
        lik = rand_channel(S, O, rng)
        m = build_simple(prior, lik)
        tc = total_channel(m)
        assert tc.cod.names == ("S", "O")
        for s in range(2):
            for o in range(2):
                expected = prior.entries[0, s] * lik.entries[s, o]
                assert tc.entries[0, 2 * s + o] == pytest.approx(expected)

    def test_total_channel_is_a_channel(self, rng):
        m = build_open_simple(
            rand_channel(Shape((wire("I", 3),)), S, rng),
            rand_channel(Shape((wire("I", 3),) + S.wires), O, rng))
        assert is_channel(total_channel(m)).is_channel

    def test_open_simple_against_enumeration(self, rng):
        i = wire("I", 2)
        m = build_open_simple(
            rand_channel(Shape((i,)), S, rng),
            rand_channel(Shape((i,) + S.wires), O, rng))
        assert_matches_enumeration(m)
        tc = total_channel(m)
        for ii in range(2):
            for s in range(2):
                for o in range(2):
                    sigma = m.interpretation.channels["prior"].entries[ii, s]
                    c = m.interpretation.channels["likelihood"].entries[2 * ii + s, o]
                    assert tc.entries[ii, 2 * s + o] == pytest.approx(sigma * c)

    def test_cbn_joint_is_the_product_of_mechanisms(self, rng):
        # diamond network: X1 -> X2, X1 -> X3, (X2, X3) -> X4
        w = [wire(f"X{k}", 2) for k in range(1, 5)]
        d = NetworkDiagram(
            tuple(x.name for x in w),
            (Box("f", (), "X1"), Box("g", ("X1",), "X2"),
             Box("h", ("X1",), "X3"), Box("i", ("X2", "X3"), "X4")),
            (), ("X2", "X3"))
        interp = Interpretation(
            {x.name: x for x in w},
            {"f": rand_state(Shape((w[0],)), rng),
             "g": rand_channel(Shape((w[0],)), Shape((w[1],)), rng),
             "h": rand_channel(Shape((w[0],)), Shape((w[2],)), rng),
             "i": rand_channel(Shape((w[1], w[2])), Shape((w[3],)), rng)})
        m = OpenModel(d, interp)
        assert_matches_enumeration(m)

    def test_input_copied_to_output(self, rng):
        # a single box whose input wire is also a diagram output
        i, o = wire("I", 2), wire("O", 2)
        d = NetworkDiagram(("I", "O"), (Box("c", ("I",), "O"),), ("I",),
                           ("I", "O"))
        c = rand_channel(Shape((i,)), Shape((o,)), rng)
        m = OpenModel(d, Interpretation({"I": i, "O": o}, {"c": c}))
        tc = total_channel(m)
        assert tc.cod.names == ("I", "O")
        for ii in range(2):
            for jj in range(2):
                for o_ in range(2):
                    expected = c.entries[ii, o_] if ii == jj else 0.0
                    assert tc.entries[ii, 2 * jj + o_] == pytest.approx(expected)

    def test_output_channel_is_the_hidden_marginal(self, rng):
        m = build_discrete_time(
            rand_state(S, rng), rand_channel(S, O, rng),
            rand_channel(S, S, rng), 3)
        tc = total_channel(m)
        assert output_channel(m) == marginal(tc, m.diagram.outputs)

    def test_hmm_output_distribution_matches_chain_enumeration(self, rng):
        prior = rand_state(S, rng)
        a = rand_channel(S, O, rng)
        b = rand_channel(S, S, rng)
        m = build_discrete_time(prior, a, b, 3)
        got = output_channel(m).entries.reshape(2, 2, 2)
        expected = np.zeros((2, 2, 2))
        for s1, s2, s3 in itertools.product(range(2), repeat=3):
            path = prior.entries[0, s1] * b.entries[s1, s2] * b.entries[s2, s3]
            for o1, o2, o3 in itertools.product(range(2), repeat=3):
                expected[o1, o2, o3] += path * a.entries[s1, o1] \
                    * a.entries[s2, o2] * a.entries[s3, o3]
        assert np.allclose(got, expected, atol=1e-12)

    def test_evaluation_matches_enumeration_on_random_models(self):
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            g = rand_open_dag(rng, max_vertices=5)
            d = dag_to_diagram(g)
            types = {w: wire(w, int(rng.integers(2, 4))) for w in d.wires}
            channels = {
                b.name: rand_channel(
                    Shape(tuple(types[i] for i in b.inputs)),
                    Shape((types[b.output],)), rng)
                for b in d.boxes}
            m = OpenModel(d, Interpretation(types, channels))
            assert_matches_enumeration(m)
            assert is_channel(total_channel(m)).is_channel


class TestBuilders:
    def test_discrete_time_single_step_is_simple(self, rng):
        prior = rand_state(S, rng)
        a = rand_channel(S, O, rng)
        m1 = build_discrete_time(prior, a, identity(S), 1)
        simple = build_simple(prior, a)
        assert np.allclose(total_channel(m1).entries,
                           total_channel(simple).entries)

    def test_identity_dynamics_keeps_marginals(self, rng):
        prior = rand_state(S, rng)
        m = build_discrete_time(prior, rand_channel(S, O, rng), identity(S), 3)
        tc = total_channel(m)
        for t in (1, 2, 3):
            got = marginal(tc, [f"S{t}"])
            assert np.allclose(got.entries, prior.entries, atol=1e-12)

    def test_two_step_total_matches_enumeration(self, rng):
        m = build_discrete_time(rand_state(S, rng), rand_channel(S, O, rng),
                                rand_channel(S, S, rng), 2)
        assert_matches_enumeration(m)

    def test_per_step_channels(self, rng):
        a1 = rand_channel(S, O, rng)
        a2 = rand_channel(S, O, rng)
        m = build_discrete_time(rand_state(S, rng), [a1, a2],
                                rand_channel(S, S, rng), 2)
        assert m.interpretation.channels["observe1"] == a1
        assert m.interpretation.channels["observe2"] == a2

    def test_policy_model_ignoring_policy_equals_plain_chain(self, rng):
        p = wire("P", 2)
        prior = rand_state(S, rng)
        a = rand_channel(S, O, rng)
        b = rand_channel(S, S, rng)
        # embed b as (S, P) -> S constant in P
        bp = Morphism(Shape((S.wires[0], p)), S,
                      np.repeat(b.entries, 2, axis=0))
        habits = rand_state(Shape((p,)), rng)
        m = build_policy_model(habits, prior, a, bp, 3)
        plain = build_discrete_time(prior, a, b, 3)
        got = output_channel(m)
        want = output_channel(plain)
        assert np.allclose(got.entries, want.entries, atol=1e-12)

    def test_policy_model_matches_enumeration(self, rng):
        p = wire("P", 2)
        bp = rand_channel(Shape((S.wires[0], p)), S, rng)
        m = build_policy_model(rand_state(Shape((p,)), rng), rand_state(S, rng),
                               rand_channel(S, O, rng), bp, 2)
        assert_matches_enumeration(m)

    def test_sharp_habits_condition_the_policy_slice(self, rng):
        p = wire("P", 2)
        bp = rand_channel(Shape((S.wires[0], p)), S, rng)
        prior = rand_state(S, rng)
        a = rand_channel(S, O, rng)
        m_sharp = build_policy_model(point(Shape((p,)), "p1"), prior, a, bp, 2)
        b_slice = Morphism(S, S, bp.entries[1::2])
        plain = build_discrete_time(prior, a, b_slice, 2)
        assert np.allclose(output_channel(m_sharp).entries,
                           output_channel(plain).entries, atol=1e-12)

    def test_actinf_collapses_to_policy_to_observation_channel(self, rng):
        p = wire("P", 2)
        habits = rand_state(Shape((p,)), rng)
        trans = rand_channel(Shape((p,)), S, rng)
        emit = rand_channel(S, O, rng)
        s2 = wire("T", 2)
        f = wire("F", 2)
        trans_f = rand_channel(Shape((S.wires[0], p)), Shape((s2,)), rng)
        emit_f = rand_channel(Shape((s2,)), Shape((f,)), rng)
        m = build_actinf_model(habits, trans, emit, trans_f, emit_f)
        assert_matches_enumeration(m)
        got = output_channel(m).entries.reshape(2, 2)
        expected = np.einsum("p,ps,so,spt,tf->of", habits.entries.reshape(-1),
                             trans.entries, emit.entries,
                             trans_f.entries.reshape(2, 2, 2), emit_f.entries)
        assert np.allclose(got, expected, atol=1e-12)

    def test_deterministic_actinf_is_a_point_mass(self):
        p, s2, f = wire("P", 2), wire("T", 2), wire("F", 2)
        habits = point(Shape((p,)), "p0")
        trans = Morphism(Shape((p,)), S, [[1, 0], [0, 1]])
        emit = identity(S)
        emit2 = Morphism(S, O, [[1, 0], [0, 1]])
        trans_f = Morphism(Shape((S.wires[0], p)), Shape((s2,)),
                           [[1, 0], [0, 1], [1, 0], [0, 1]])
        emit_f = Morphism(Shape((s2,)), Shape((f,)), [[1, 0], [0, 1]])
        m = build_actinf_model(habits, trans, emit2, trans_f, emit_f)
        tc = total_channel(m)
        nz = np.nonzero(tc.entries.reshape(-1))[0]
        assert len(nz) == 1
        assert tc.entries.reshape(-1)[nz[0]] == 1.0

    def test_bad_shapes_rejected(self, rng):
        with pytest.raises(ShapeMismatchError):
            build_simple(rand_state(S, rng), rand_channel(O, S, rng))
        with pytest.raises(InvalidModelError):
            OpenModel(
                NetworkDiagram(("S",), (Box("a", (), "S"),), (), ("S",)),
                Interpretation({"S": S.wires[0]},
                               {"a": state(S, [0.4, 0.4])}))


class TestComposition:
    def seq_pair(self, rng):
        i1 = wire("I1", 2)
        m1 = build_open_simple(
            rand_channel(Shape((i1,)), Shape((wire("S1", 3),)), rng),
            rand_channel(Shape((i1, wire("S1", 3))), Shape((wire("B", 2),)), rng))
        b = wire("B", 2)
        m2 = build_open_simple(
            rand_channel(Shape((b,)), Shape((wire("S2", 2),)), rng),
            rand_channel(Shape((b, wire("S2", 2))), Shape((wire("O2", 3),)), rng))
        return m1, m2

    def test_sequential_against_component_algebra(self, rng):
        m1, m2 = self.seq_pair(rng)
        comp = seq_compose(m1, m2)
        assert comp.diagram.inputs == ("I1",)
        assert comp.diagram.outputs == ("O2",)
        assert set(comp.diagram.hidden) == {"S1", "B", "S2"}
        tc = total_channel(comp)
        t1 = total_channel(m1).entries.reshape(2, 3, 2)   # i1 -> (s1, b)
        t2 = total_channel(m2).entries.reshape(2, 2, 3)   # b -> (s2, o2)
        want = np.einsum("isb,bto->isbto", t1, t2)        # (i1, s1, b, s2, o2)
        got = tc.entries.reshape(2, 3, 2, 2, 3)
        assert np.allclose(got, want, atol=1e-9)

    def test_sequential_identity_wrapper_marginalises_back(self, rng):
        m1, _ = self.seq_pair(rng)
        b = wire("B", 2)
        passthrough = build_open_simple(
            rand_channel(Shape((b,)), Shape((wire("S2", 2),)), rng),
            Morphism(Shape((b, wire("S2", 2))), Shape((wire("O2", 2),)),
                     np.array([[1, 0], [1, 0], [0, 1], [0, 1.0]])))
        comp = seq_compose(m1, passthrough)
        got = marginal(total_channel(comp), ["S1", "B"])
        assert np.allclose(got.entries, total_channel(m1).entries, atol=1e-12)

    def test_boundary_mismatch(self, rng):
        m1, _ = self.seq_pair(rng)
        bad = build_open_simple(
            rand_channel(Shape((wire("B", 3),)), S, rng),
            rand_channel(Shape((wire("B", 3),) + S.wires), O, rng))
        with pytest.raises(BoundaryMismatchError):
            seq_compose(m1, bad)

    def test_parallel_total_is_the_tensor(self, rng):
        m1, m2 = self.seq_pair(rng)
        par = par_compose(m1, m2)
        assert is_channel(total_channel(par)).is_channel
        t1 = total_channel(m1).entries.reshape(2, 3, 2)
        t2 = total_channel(m2).entries.reshape(2, 2, 3)
        got = total_channel(par).entries.reshape(2, 2, 3, 2, 2, 3)
        # composite dom (I1, B), cod hidden (S1, S2) then outputs (B_out?, O2)
        want = np.einsum("iab,jcd->ijacbd", t1, t2)
        assert np.allclose(got.reshape(-1), want.reshape(-1), atol=1e-9)

    def test_parallel_with_renaming_keeps_both_channels(self, rng):
        m1, _ = self.seq_pair(rng)
        par = par_compose(m1, m1)
        assert len(par.diagram.wires) == 6
        assert len(set(par.diagram.wires)) == 6

    def test_parallel_with_trivial_model(self, rng):
        m1, _ = self.seq_pair(rng)
        s = wire("Q", 2)
        trivial = build_simple(rand_state(Shape((s,)), rng),
                               rand_channel(Shape((s,)), Shape((wire("R", 2),)), rng))
        par = par_compose(m1, trivial)
        got = marginal(total_channel(par), ["S1", "B"])
        assert np.allclose(got.entries, total_channel(m1).entries, atol=1e-12)

    def test_hierarchical_two_layer_from_paper_shape(self, rng):
        m1, m2 = self.seq_pair(rng)
        comp = seq_compose(m1, m2)
        assert validate_diagram(comp.diagram).ok
        assert len(comp.diagram.boxes) == 4
        assert_matches_enumeration(comp)
