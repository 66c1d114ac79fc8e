import subprocess
import sys

import pytest

from qubot import fixture_text
from qubot.cli import EXIT_NONE, EXIT_USAGE, EXIT_WITNESS, main
from qubot.qubofile import QuboFile, WitnessFile


@pytest.fixture
def fixtures(tmp_path):
    def path(name):
        p = tmp_path / name
        if not p.exists():
            p.write_text(fixture_text(name))
        return str(p)
    return path


def test_assemble_listing(fixtures, capsys):
    assert main(["assemble", fixtures("exit_code.s")]) == 0
    out = capsys.readouterr().out
    assert "0x10000: addi a0,zero,1" in out


def test_emulate(fixtures, capsys):
    assert main(["emulate", fixtures("running_example.s"), "--input", "1"]) == EXIT_WITNESS
    assert "bad b8" in capsys.readouterr().out
    assert main(["emulate", fixtures("running_example.s"), "--input", "0"]) == EXIT_NONE
    assert "exit 0" in capsys.readouterr().out


def test_emulate_input_escape_and_file(fixtures, tmp_path, capsys):
    assert main(["emulate", fixtures("services.s"), "--input", "\\x41"]) == EXIT_WITNESS
    assert "b4" in capsys.readouterr().out
    data = tmp_path / "in.bin"
    data.write_bytes(b"B")
    assert main(["emulate", fixtures("services.s"), "--input-file", str(data)]) == EXIT_WITNESS
    assert "b10" in capsys.readouterr().out


def test_beator_output_file(fixtures, tmp_path):
    out = tmp_path / "m.btor2"
    assert main(["beator", fixtures("exit_code.s"), "-o", str(out)]) == 0
    assert "60 state 1 kernel-mode" in out.read_text()


def test_qubot_solve_validate(fixtures, tmp_path, capsys):
    qubo, witness = tmp_path / "g.qubo", tmp_path / "g.witness"
    assert main(["qubot", fixtures("guess4.btor2"), "--bound", "1", "-o", str(qubo)]) == 0
    assert QuboFile.read(qubo).bound == 1
    assert main(["solve", str(qubo), "-o", str(witness)]) == EXIT_WITNESS
    w = WitnessFile.read(witness)
    assert w.energy == 0 and w.bad == "guessed"
    capsys.readouterr()
    assert main(["validate", fixtures("guess4.btor2"), str(witness)]) == EXIT_WITNESS
    out = capsys.readouterr().out
    assert "energy 0" in out and "agreement yes" in out
    assert main(["validate", str(qubo), str(witness), "--btor2", fixtures("guess4.btor2")]) == EXIT_WITNESS


def test_solve_without_witness(fixtures, tmp_path, capsys):
    qubo = tmp_path / "c.qubo"
    main(["qubot", fixtures("counter3.btor2"), "--bound", "6", "-o", str(qubo)])
    assert main(["solve", str(qubo)]) == EXIT_NONE
    assert "energy 1" in capsys.readouterr().out


def test_anneal_needs_seed(fixtures, tmp_path):
    qubo = tmp_path / "g.qubo"
    main(["qubot", fixtures("guess4.btor2"), "--bound", "0", "-o", str(qubo)])
    assert main(["solve", str(qubo), "--method", "anneal"]) == EXIT_USAGE
    assert main(["solve", str(qubo), "--method", "anneal", "--seed", "3", "--restarts", "32"]) == EXIT_WITNESS


def test_validate_disagreeing_bound(fixtures, tmp_path):
    w = tmp_path / "w"
    WitnessFile(3, [{}, {}, {}, {}]).write(w)
    qubo = tmp_path / "g.qubo"
    main(["qubot", fixtures("guess4.btor2"), "--bound", "1", "-o", str(qubo)])
    assert main(["validate", str(qubo), str(w)]) == EXIT_USAGE


def test_stats_csv(fixtures, tmp_path):
    out = tmp_path / "s.csv"
    assert main(["stats", fixtures("accumulator.btor2"), "--bound", "4", "-o", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "step,new_vars,cumulative_vars,nonconstant_pc_flags"
    assert len(rows) == 6
    assert len({r.split(",")[1] for r in rows[2:]}) == 1


def test_pipeline_assembly(fixtures, tmp_path, capsys):
    outdir = tmp_path / "art"
    code = main(["pipeline", fixtures("division.s"), "--bound", "14", "--output-dir", str(outdir)])
    out = capsys.readouterr().out
    assert code == EXIT_WITNESS and "validated" in out and "emulator bad b2" in out
    assert {p.suffix for p in outdir.iterdir()} == {".btor2", ".qubo", ".witness"}


def test_pipeline_no_witness(fixtures):
    assert main(["pipeline", fixtures("division.s"), "--bound", "13"]) == EXIT_NONE


def test_pipeline_input_search(fixtures, capsys):
    assert main(["pipeline", fixtures("services.s"), "--bound", "21", "--method", "inputs"]) == EXIT_WITNESS
    assert "validated" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    [],
    ["qubot", "missing.btor2", "--bound", "1"],
    ["bogus"],
])
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_negative_bound(fixtures):
    assert main(["qubot", fixtures("guess4.btor2"), "--bound", "-1"]) == EXIT_USAGE


def test_assembly_error_exit_code(tmp_path):
    bad = tmp_path / "bad.s"
    bad.write_text(".text\nbogus\n")
    assert main(["assemble", str(bad)]) == EXIT_USAGE


def test_module_entry_point(fixtures):
    proc = subprocess.run([sys.executable, "-m", "qubot", "emulate", fixtures("exit_code.s")],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_WITNESS and "b1" in proc.stdout
