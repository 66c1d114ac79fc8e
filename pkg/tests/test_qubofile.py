import pytest

from qubot.bqm import evaluate_energy, forward_assignment
from qubot.qubofile import FormatError, QuboFile, WitnessFile
from qubot.solve import solve_exhaustive
from qubot.unroll import translate


@pytest.mark.parametrize("name, n", [("guess4.btor2", 2), ("memory4.btor2", 1), ("accumulator.btor2", 1)])
def test_round_trip_is_byte_identical(load_model, name, n):
    qf = QuboFile.from_unrolled(translate(load_model(name), n))
    text = qf.dumps()
    again = QuboFile.loads(text)
    assert again.dumps() == text
    assert again.bqm.num_vars == qf.bqm.num_vars


def test_loaded_file_rebuilds_assignments(load_model):
    model = load_model("guess4.btor2")
    qf = QuboFile.loads(QuboFile.from_unrolled(translate(model, 1)).dumps())
    free = qf.free_assignment([{3: 1}, {3: 10}])
    assignment = forward_assignment(qf.bqm, free, qf.bqm.num_vars)
    assert evaluate_energy(qf.bqm, assignment) == 0
    assert qf.decode_inputs(assignment) == [{3: 1}, {3: 10}]
    assert qf.true_bads(assignment) == [(1, "guessed")]


def test_decode_initial(load_model):
    qf = QuboFile.from_unrolled(translate(load_model("accumulator.btor2"), 0))
    free = qf.free_assignment([{}], {3: 77})
    assert qf.decode_initial(forward_assignment(qf.bqm, free, qf.bqm.num_vars)) == {3: 77}


def test_solution_survives_round_trip(load_model):
    qf = QuboFile.from_unrolled(translate(load_model("toggle.btor2"), 3))
    again = QuboFile.loads(qf.dumps())
    assert solve_exhaustive(again.bqm).best_energy == solve_exhaustive(qf.bqm).best_energy == 0


@pytest.mark.parametrize("text, line", [
    ("", 1),
    ("qubo 2\nend\n", 1),
    ("qubo 2 0\nlin 5 1\nend\n", 2),
    ("qubo 2 0\nquad 1 0 3\nend\n", 2),
    ("qubo 2 0\nlin x 1\nend\n", 2),
    ("qubo 2 0\ngate FOO 0 1\nend\n", 2),
    ("qubo 2 0\nbogus\nend\n", 2),
    ("qubo 2 0\nend\nlin 0 1\n", 3),
    ("qubo 2 0\n", None),
])
def test_qubo_format_errors(text, line):
    with pytest.raises(FormatError) as info:
        QuboFile.loads(text)
    assert info.value.line == line


def test_witness_round_trip():
    w = WitnessFile(2, [{3: 1}, {3: 10}, {}], energy=0, bad="guessed", bad_step=1, initial={4: 7, 9: {2: 5}})
    again = WitnessFile.loads(w.dumps())
    assert again == w
    assert again.dumps() == w.dumps()
    none = WitnessFile.loads(WitnessFile(0, [{}], energy=3).dumps())
    assert none.bad is None and none.energy == 3


@pytest.mark.parametrize("text", [
    "nope\n",
    "witness\nbound 1\ninput 5 3 1\nend\n",
    "witness\nbound 1\ninput 0 3 -1\nend\n",
    "witness\nbound 1\n",
    "witness\nbound 1\nfoo\nend\n",
])
def test_witness_format_errors(text):
    with pytest.raises(FormatError):
        WitnessFile.loads(text)


def test_witness_width_check():
    w = WitnessFile(0, [{3: 16}])
    with pytest.raises(FormatError):
        w.check_widths({3: 4})
    w.check_widths({3: 5})
