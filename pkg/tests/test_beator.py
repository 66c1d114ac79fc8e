import pytest

from qubot.beator.riscu import CODE_START, AssemblyError, assemble, emulate
from qubot.beator.translate import INPUT_NIDS, input_schedule, reachable_pcs, translate_beator, witness_to_bytes
from qubot.btor2 import first_bad, initial_state, parse_btor2, step_model

PROGRAMS = ["running_example.s", "exit_code.s", "division.s", "services.s"]
BYTES = [0, 7, 48, 49, 50, 51, 65, 66, 67, 68, 255]


@pytest.fixture(scope="module")
def models(request):
    from qubot import fixture_text
    out = {}
    for name in PROGRAMS:
        program = assemble(fixture_text(name))
        out[name] = (program, parse_btor2(translate_beator(program)))
    return out


def test_assemble_addi():
    program = assemble(".text\naddi t1,zero,48\n")
    ins = program.code[0]
    assert (ins.op, ins.rd, ins.rs1, ins.imm) == ("addi", 6, 0, 48)


def test_branch_with_instruction_count_and_label():
    program = assemble(".text\nbeq t0,zero,2[R0]\nnop\nR0: addi a7,zero,93\necall\n")
    assert program.code[0].imm == 8
    with pytest.raises(AssemblyError, match="does not reach"):
        assemble(".text\nbeq t0,zero,3[R0]\nnop\nR0: ecall\n")


@pytest.mark.parametrize("text, match", [
    (".text\njalr t0,4(t1)\n", "jalr"),
    (".text\naddi t0,zero,5000\n", "range"),
    (".text\nfoo t0,t1,t2\n", "unknown"),
    (".text\nadd t0,t1\n", "operand"),
    (".text\nx: nop\nx: nop\n", "duplicate"),
    (".text\naddi q9,zero,1\n", "register"),
    (".text\nbeq t0,zero,MISSING\n", "MISSING"),
])
def test_assembly_errors(text, match):
    with pytest.raises(AssemblyError, match=match):
        assemble(text)


def test_assembly_error_line_number():
    with pytest.raises(AssemblyError) as info:
        assemble(".text\nnop\nbogus\n")
    assert info.value.line == 3


def test_layout(load_program):
    program = load_program("running_example.s")
    assert program.code_start == CODE_START
    assert program.data_start % 4096 == 0 and program.data_start >= program.code_end
    assert program.heap_start == program.initial_break
    assert program.allowed_heap_end == program.heap_start + 4
    assert program.allowed_stack_start == 0xFFFFFFFC - 4
    assert len(program.physical_addresses()) == len(set(program.physical_addresses()))


def test_emulate_running_example(load_program):
    program = load_program("running_example.s")
    zero = emulate(program, b"0")
    one = emulate(program, b"1")
    assert (zero.kind, zero.exit_code) == ("exit", 0)
    assert (one.kind, one.bad) == ("bad", "b8")
    assert one.transitions == 62


def test_emulate_exit_code(load_program):
    out = emulate(load_program("exit_code.s"))
    assert (out.kind, out.bad, out.transitions) == ("bad", "b1", 2)


def test_emulate_division(load_program):
    program = load_program("division.s")
    assert emulate(program, b"0").bad == "b2"
    assert emulate(program, b"3").bad == "b1"
    assert emulate(program, b"1").kind == "exit"


def test_emulate_services(load_program):
    program = load_program("services.s")
    assert emulate(program, b"A").bad == "b4"
    assert emulate(program, b"B").bad == "b10"
    assert emulate(program, b"C").bad == "b0"
    assert emulate(program, b"D").bad == "b1"
    ok = emulate(program, b"Z")
    assert ok.kind == "exit" and ok.output


def test_step_limit(load_program):
    out = emulate(load_program("running_example.s"), b"1", step_limit=10)
    assert out.kind == "limit" and out.transitions == 10


@pytest.mark.parametrize("name", PROGRAMS)
def test_lockstep_with_emulator(models, name):
    program, model = models[name]
    for b in BYTES:
        out = emulate(program, bytes([b, 9]))
        schedule = input_schedule(out.schedule, out.transitions + 3)
        hit = first_bad(model, schedule)
        if out.kind == "bad":
            assert hit is not None and hit[0] == out.transitions
            assert sorted(model.label(x) for x in hit[1]) == sorted(out.bads)
        else:
            assert hit is None


@pytest.mark.parametrize("name", PROGRAMS)
def test_pc_flags_one_hot_outside_kernel(models, name):
    program, model = models[name]
    flags = [s for s in model.states if (model.nodes[s].symbol or "").startswith("pc-flag-")]
    kernel = [s for s in model.states if (model.nodes[s].symbol or "").startswith("kernel-mode-pc-flag-")]
    mode = model.find_symbol("kernel-mode")
    out = emulate(program, b"1A")
    state = initial_state(model)
    for inputs in input_schedule(out.schedule, out.transitions):
        values = state.assignment
        if not values[mode] and not any(values[k] for k in kernel):
            assert sum(values[f] for f in flags) == 1
        state, _ = step_model(model, state, inputs)


def test_register_zero_is_constant(models):
    _, model = models["running_example.s"]
    zero = model.find_symbol("zero")
    assert model.nodes[zero].op == "zero"
    assert zero not in model.states


def test_translation_is_deterministic(load_program):
    program = load_program("services.s")
    assert translate_beator(program) == translate_beator(load_program("services.s"))


def test_header_and_memory_states(models, load_program):
    text = translate_beator(load_program("running_example.s"))
    lines = text.splitlines()
    assert "60 state 1 kernel-mode" in lines
    assert any(line.startswith("61 init 1 60 10 kernel-mode") for line in lines)
    _, model = models["running_example.s"]
    words = [s for s in model.states if (model.nodes[s].symbol or "").startswith("RAM-word-")]
    program = load_program("running_example.s")
    assert len(words) == len(program.physical_addresses())
    assert all(w in model.init_of and w in model.next_of for w in words)
    assert not any(sort.is_array for sort in model.sorts.values())
    labels = {model.label(b) for b in model.bads}
    assert labels == {f"b{i}" for i in range(12)} - {"b5"}


def test_only_reachable_code_is_translated():
    program = assemble(".text\naddi a7,zero,93\necall\nnop\n")
    assert reachable_pcs(program) == [CODE_START, CODE_START + 4, CODE_START + 8]
    program = assemble(".text\njal zero,2[END]\nnop\nEND: addi a7,zero,93\necall\n")
    assert CODE_START + 4 not in reachable_pcs(program)


def test_witness_to_bytes_round_trip(load_program):
    program = load_program("services.s")
    out = emulate(program, b"Bq")
    inputs = input_schedule(out.schedule, out.transitions + 1)
    assert witness_to_bytes(program, inputs) == b"Bq"
    assert set(inputs[0]) == set(INPUT_NIDS.values())
