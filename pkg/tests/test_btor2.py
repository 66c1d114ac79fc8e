import pytest

from qubot.btor2 import (ArrayValue, Btor2Error, EnumerationLimitError, MissingInputError, brute_force_reachability,
                         evaluate_nodes, first_bad, format_btor2, initial_state, parse_btor2, step_model)
from qubot import fixture_names, fixture_text


@pytest.mark.parametrize("text, message", [
    ("1 sort bitvec 0", "width"),
    ("1 sort bitvec 4\n1 input 1", "duplicate"),
    ("2 sort bitvec 4\n1 input 2", "smaller"),
    ("1 sort bitvec 4\n2 add 1 3 3", "undefined"),
    ("1 sort bitvec 4\n2 frobnicate 1", "unknown"),
    ("1 sort bitvec 4\n2 constd 1 16", "fit"),
    ("1 sort bitvec 4\n2 const 1 102", "malformed"),
    ("1 sort bitvec 4\n2 sort bitvec 1\n3 input 1\n4 input 2\n5 add 1 3 4", "sort mismatch"),
    ("1 sort bitvec 4\n2 input 1\n3 bad 2", "1-bit"),
    ("1 sort bitvec 4\n2 input 1\n3 add 1 2 -2", "negated"),
    ("x sort bitvec 4", "integer"),
])
def test_parse_errors(text, message):
    with pytest.raises(Btor2Error) as info:
        parse_btor2(text)
    assert message in str(info.value).lower()


def test_error_carries_line():
    with pytest.raises(Btor2Error) as info:
        parse_btor2("; comment\n1 sort bitvec 4\n2 add 1 7 7")
    assert info.value.line == 3


@pytest.mark.parametrize("name", [n for n in fixture_names() if n.endswith(".btor2")])
def test_format_round_trip(name):
    model = parse_btor2(fixture_text(name))
    text = format_btor2(model)
    again = parse_btor2(text)
    assert format_btor2(again) == text
    assert [n.op for n in again.nodes.values()] == [n.op for n in model.nodes.values()]


def test_constant_literal_forms():
    model = parse_btor2("1 sort bitvec 8\n2 const 1 101\n3 consth 1 ff\n4 constd 1 -1")
    assert [model.nodes[i].literals[0] for i in (2, 3, 4)] == [5, 255, 255]


def test_division_by_zero_follows_riscv():
    model = parse_btor2("1 sort bitvec 4\n2 input 1\n3 zero 1\n4 udiv 1 2 3\n5 urem 1 2 3")
    memo = evaluate_nodes(model, {}, {2: 9}, [4, 5])
    assert memo[4] == 15 and memo[5] == 9


def test_lazy_ite_skips_unselected_branch():
    text = "1 sort bitvec 1\n2 sort bitvec 4\n3 one 1\n4 constd 2 3\n5 input 2\n6 ite 2 3 4 5"
    model = parse_btor2(text)
    assert evaluate_nodes(model, {}, {}, [6])[6] == 3  # input 5 is never demanded


def test_and_short_circuit():
    text = "1 sort bitvec 1\n2 zero 1\n3 input 1\n4 and 1 2 3"
    assert evaluate_nodes(parse_btor2(text), {}, {}, [4])[4] == 0


def test_missing_input():
    model = parse_btor2(fixture_text("guess4.btor2"))
    with pytest.raises(MissingInputError):
        first_bad(model, [{}])


def test_counter_reaches_bad_at_seven(load_model):
    model = load_model("counter3.btor2")
    assert first_bad(model, [{}] * 7) is None
    assert first_bad(model, [{}] * 8) == (7, (11,))


def test_bad_flags_use_pre_state(load_model):
    model = load_model("toggle.btor2")
    state = initial_state(model)
    flips = [1, 0, 0]
    for f in flips:
        state, flags = step_model(model, state, {5: f})
        assert not any(flags.values())
    _, flags = step_model(model, state, {5: 0})
    assert flags == {18: True}


def test_array_values():
    a = ArrayValue(0).write(3, 7)
    assert a.read(3) == 7 and a.read(2) == 0
    assert a == ArrayValue(0, {3: 7})
    assert ArrayValue(0).write(1, 0) == ArrayValue(0)


def test_brute_force_witnesses(load_model):
    model = load_model("guess4.btor2")
    witnesses = brute_force_reachability(model, 1)
    assert [w.inputs for w in witnesses if w.step == 0] == [({3: 10},)]
    assert len([w for w in witnesses if w.step == 1]) == 15
    assert brute_force_reachability(load_model("counter3.btor2"), 6) == []


def test_brute_force_limit(load_model):
    with pytest.raises(EnumerationLimitError):
        brute_force_reachability(load_model("guess4.btor2"), 10)


def test_uninitialized_state_is_enumerated(load_model):
    model = load_model("accumulator.btor2")
    with pytest.raises(Exception):
        initial_state(model)
    witnesses = brute_force_reachability(model, 0, input_domain={model.inputs[0]: [0]})
    assert [w.initial for w in witnesses] == [{model.states[0]: 200}]


@pytest.mark.parametrize("name", ["counter3.btor2", "memory4.btor2", "twobad.btor2", "accumulator.btor2",
                                  "running_example.s", "services.s"])
def test_compiled_step_matches_demand_evaluation(name):
    import random
    from qubot import fixture_text
    from qubot.beator.riscu import assemble
    from qubot.beator.translate import translate_beator
    from qubot.btor2 import evaluate_nodes, initial_state, step_model
    text = fixture_text(name)
    model = parse_btor2(translate_beator(assemble(text)) if name.endswith(".s") else text)
    rng = random.Random(3)
    free = {s: rng.randrange(1 << model.width(s)) for s in model.states
            if s not in model.init_of and not model.sort_of(s).is_array}
    state = initial_state(model, free)
    conds = [model.bad_condition(b) for b in model.bads]
    for _ in range(30):
        inputs = {i: rng.randrange(1 << model.width(i)) for i in model.inputs}
        memo = evaluate_nodes(model, state.assignment, inputs,
                              conds + [model.next_of[s] for s in model.states if s in model.next_of])
        nxt, flags = step_model(model, state, inputs)
        assert flags == {b: bool(memo[c]) for b, c in zip(model.bads, conds)}
        assert all(nxt.assignment[s] == memo[model.next_of[s]] for s in model.states if s in model.next_of)
        state = nxt


def test_compiled_step_rejects_wide_input(load_model):
    from qubot.btor2 import SimulationError, initial_state, step_model
    model = load_model("guess4.btor2")
    with pytest.raises(SimulationError):
        step_model(model, initial_state(model), {3: 16})
