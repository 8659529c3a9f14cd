import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from domcert.automata import (
    Automaton,
    SwitchingSignal,
    Transition,
    check_admissible,
    enumerate_cycles,
    generate_signal,
    path_complete_check,
    trim_core,
)
from domcert.errors import AdmissibilityError, BudgetError, EmptyLanguageError, InvalidInputError


@st.composite
def automata(draw):
    n_states = draw(st.integers(1, 5))
    states = [f"q{i}" for i in range(n_states)]
    size = draw(st.integers(1, 3))
    candidates = [Transition(s, l, d) for s in states for l in range(1, size + 1) for d in states]
    trans = draw(st.lists(st.sampled_from(candidates), unique=True, max_size=12))
    return Automaton(tuple(states), size, tuple(trans))


class TestValidation:
    def test_duplicate_transition(self):
        with pytest.raises(InvalidInputError):
            Automaton(("a",), 1, (("a", 1, "a"), ("a", 1, "a")))

    def test_undeclared_state(self):
        with pytest.raises(InvalidInputError):
            Automaton(("a",), 1, (("a", 1, "b"),))

    def test_label_range(self):
        with pytest.raises(InvalidInputError):
            Automaton(("a",), 2, (("a", 3, "a"),))


class TestTrim:
    def test_five_state_unchanged(self, five_state):
        core = trim_core(five_state.automaton)
        assert core == five_state.automaton
        assert "d" in core.states

    def test_lone_state_is_empty(self):
        with pytest.raises(EmptyLanguageError):
            trim_core(Automaton(("a",), 1, ()))

    def test_free_language_unchanged(self, langs):
        assert trim_core(langs["free"]) == langs["free"]

    def test_removes_source_and_sink(self):
        aut = Automaton(("s", "a", "t"), 1, (("s", 1, "a"), ("a", 1, "a"), ("a", 1, "t")))
        core = trim_core(aut)
        assert core.states == ("a",)
        assert core.transitions == (Transition("a", 1, "a"),)

    @settings(max_examples=80, deadline=None)
    @given(automata())
    def test_idempotent_and_monotone(self, aut):
        try:
            core = trim_core(aut)
        except EmptyLanguageError:
            return
        assert set(core.transitions) <= set(aut.transitions)
        assert trim_core(core) == core
        for q in core.states:
            assert core.outgoing(q)
            assert any(t.dst == q for t in core.transitions)


class TestPathComplete:
    def test_alternating_in_no11(self, langs):
        assert path_complete_check(langs["alternating"], langs["no11"]).complete

    def test_alternating_in_free(self, langs):
        assert path_complete_check(langs["alternating"], langs["free"]).complete

    def test_no11_not_in_alternating(self, langs):
        result = path_complete_check(langs["no11"], langs["alternating"])
        assert not result.complete
        assert result.counterexample == (2, 2)
        # the counterexample is a path in the language but not in the candidate
        assert langs["no11"].successors(langs["no11"].successors({"a", "b"}, 2), 2)
        assert not langs["alternating"].successors(langs["alternating"].successors({"a", "b"}, 2), 2)

    def test_free_not_in_no11(self, langs):
        result = path_complete_check(langs["free"], langs["no11"])
        assert result.counterexample == (1, 1)

    def test_alphabet_mismatch(self, langs):
        with pytest.raises(InvalidInputError):
            path_complete_check(langs["alternating"], Automaton(("a",), 3, (("a", 1, "a"),)))

    @settings(max_examples=60, deadline=None)
    @given(automata())
    def test_reflexive(self, aut):
        try:
            core = trim_core(aut)
        except EmptyLanguageError:
            return
        assert path_complete_check(core, core).complete


class TestCycles:
    def test_five_state(self, five_state):
        cycles = enumerate_cycles(five_state.automaton)
        assert [c.states for c in cycles] == [("e",), ("a", "c"), ("a", "b", "c")]
        assert [c.labels for c in cycles] == [(7,), (4, 3), (1, 2, 3)]

    def test_bacteria(self, bacteria):
        cycles = enumerate_cycles(bacteria.automaton)
        assert [(c.states, c.labels) for c in cycles] == [
            (("a",), (2,)),
            (("b",), (1,)),
            (("b",), (3,)),
            (("a", "b"), (1, 2)),
        ]

    def test_single_self_loop(self):
        cycles = enumerate_cycles(Automaton(("a",), 1, (("a", 1, "a"),)))
        assert len(cycles) == 1 and len(cycles[0]) == 1

    def test_budget(self, bacteria):
        with pytest.raises(BudgetError, match="3"):
            enumerate_cycles(bacteria.automaton, max_cycles=3)

    @settings(max_examples=60, deadline=None)
    @given(automata())
    def test_cycles_close_and_exist(self, aut):
        delta = set(aut.transitions)
        for c in enumerate_cycles(aut):
            assert set(c.transitions) <= delta
            for a, b in zip(c.transitions, c.transitions[1:] + c.transitions[:1]):
                assert a.dst == b.src
            assert len(set(c.states)) == len(c)
            assert c.states[0] == min(c.states)


class TestSignals:
    @pytest.mark.parametrize("seed", [0, 1, 7])
    def test_alternation(self, langs, seed):
        sig = generate_signal(langs["alternating"], 6, seed)
        assert all(a != b for a, b in zip(sig.labels, sig.labels[1:]))

    def test_self_loop(self):
        sig = generate_signal(Automaton(("a",), 1, (("a", 1, "a"),)), 3, 0)
        assert sig.labels == (1, 1, 1)

    def test_mode3_follows_1_or_3(self, bacteria):
        for seed in range(20):
            labels = generate_signal(bacteria.automaton, 10, seed).labels
            for prev, cur in zip(labels, labels[1:]):
                if cur == 3:
                    assert prev in (1, 3)

    def test_reproducible(self, bacteria):
        assert generate_signal(bacteria.automaton, 30, 5) == generate_signal(bacteria.automaton, 30, 5)

    def test_witness_path(self, bacteria):
        sig = generate_signal(bacteria.automaton, 25, 11)
        for t, label in enumerate(sig.labels):
            assert Transition(sig.states[t], label, sig.states[t + 1]) in bacteria.automaton.transitions

    @settings(max_examples=60, deadline=None)
    @given(automata(), st.integers(1, 20), st.integers(0, 2**32 - 1))
    def test_generated_signals_replay(self, aut, length, seed):
        try:
            core = trim_core(aut)
        except EmptyLanguageError:
            return
        check_admissible(core, generate_signal(core, length, seed))

    def test_inadmissible_position(self, bacteria):
        with pytest.raises(AdmissibilityError) as info:
            check_admissible(bacteria.automaton, SwitchingSignal((1, 2, 3), "finite"))
        assert info.value.position == 2

    def test_periodic_wraparound(self, bacteria):
        # 3 followed by 2 is fine, but the repetition puts 3 right after 2
        with pytest.raises(AdmissibilityError):
            check_admissible(bacteria.automaton, SwitchingSignal((3, 2), "periodic"))
        check_admissible(bacteria.automaton, SwitchingSignal((2, 1, 3), "periodic"))
