"""Command-line front end.

Exit status: 0 when a witness (bad state) is found, 1 when none is found at
the bound, 2 for usage or format errors. Diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import sys
from pathlib import Path

from .beator.riscu import BAD_LABELS, AssemblyError, assemble, emulate
from .beator.translate import TranslationError, input_schedule, translate_beator, witness_to_bytes
from .bitblast import ExpansionLimitError, WidthError
from .bqm import evaluate_energy, forward_assignment
from .btor2 import Btor2Error, first_bad, parse_btor2
from .qubofile import FormatError, QuboFile, WitnessFile
from .solve import (AnnealParams, VariableLimitError, solve_anneal, solve_exhaustive, solve_free,
                    validate_many, var_limit)
from .unroll import frame_stats, translate

EXIT_WITNESS, EXIT_NONE, EXIT_USAGE = 0, 1, 2
ANNEAL_AUTO_LIMIT = 4096
FREE_AUTO_BITS = 20


class UsageError(Exception):
    pass


def _err(*parts):
    print(*parts, file=sys.stderr)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write_or_print(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _is_assembly(path: str) -> bool:
    return Path(path).suffix.lower() in (".s", ".asm")


def _load_model(path: str):
    """(transition model, program or None) from BTOR2 or assembly source."""
    text = _read_text(path)
    if _is_assembly(path):
        program = assemble(text)
        return parse_btor2(translate_beator(program)), program
    return parse_btor2(text), None


def _input_bytes(args) -> bytes:
    if getattr(args, "input_file", None):
        try:
            return Path(args.input_file).read_bytes()
        except OSError as exc:
            raise UsageError(f"cannot read {args.input_file}: {exc.strerror}") from None
    raw = getattr(args, "input", None) or ""
    return raw.encode("latin-1").decode("unicode_escape").encode("latin-1")


# --------------------------------------------------------------------------
# subcommands


def cmd_assemble(args) -> int:
    program = assemble(_read_text(args.source))
    lines = [f"; code 0x{program.code_start:X}..0x{program.code_end:X} entry 0x{program.entry:X}",
             f"; data 0x{program.data_start:X}..0x{program.data_end:X}",
             f"; heap 0x{program.heap_start:X}..0x{program.allowed_heap_end:X} (allowed)",
             f"; stack 0x{program.allowed_stack_start:X}..0x{program.initial_sp:X} (allowed)"]
    for i, ins in enumerate(program.code):
        lines.append(f"0x{program.code_start + 4 * i:X}: {ins}")
    for i, word in enumerate(program.data):
        lines.append(f"0x{program.data_start + 4 * i:X}: .word {word}")
    _write_or_print("\n".join(lines) + "\n", args.output)
    return 0


def cmd_emulate(args) -> int:
    program = assemble(_read_text(args.source))
    outcome = emulate(program, _input_bytes(args), args.step_limit)
    if outcome.kind == "bad":
        names = ", ".join(f"{b} ({BAD_LABELS[b]})" for b in outcome.bads)
        print(f"bad {names} at transition {outcome.transitions} "
              f"after {outcome.instructions_executed} instructions")
    elif outcome.kind == "exit":
        print(f"exit {outcome.exit_code} at transition {outcome.transitions} "
              f"after {outcome.instructions_executed} instructions")
    else:
        print(f"step limit reached after {outcome.instructions_executed} instructions")
    if outcome.output:
        _err(f"output: {outcome.output!r}")
    return EXIT_WITNESS if outcome.kind == "bad" else EXIT_NONE


def cmd_beator(args) -> int:
    _write_or_print(translate_beator(assemble(_read_text(args.source))), args.output)
    return 0


def _unroll(args):
    model, program = _load_model(args.model)
    if args.bound < 0:
        raise UsageError("--bound must be non-negative")
    unrolled = translate(model, args.bound, strength=args.strength, zero_divisor=args.zero_divisor)
    return model, program, unrolled


def cmd_qubot(args) -> int:
    _, _, unrolled = _unroll(args)
    qf = QuboFile.from_unrolled(unrolled)
    _write_or_print(qf.dumps(), args.output)
    _err(f"{qf.bqm.num_vars} variables, {len(qf.bqm.quadratic)} couplings, "
         f"{len(qf.bqm.trace.free)} free at bound {qf.bound}")
    return 0


def _solve(bqm, method: str, seed: int | None, sweeps: int, restarts: int):
    if method == "auto":
        if bqm.num_vars <= var_limit():
            method = "exhaustive"
        elif len(bqm.trace.free) <= FREE_AUTO_BITS:
            method = "free"
        elif bqm.num_vars <= ANNEAL_AUTO_LIMIT:
            method = "anneal"
            seed = 0 if seed is None else seed
        else:
            raise VariableLimitError(f"{bqm.num_vars} variables are beyond every automatic method")
    if method == "exhaustive":
        return solve_exhaustive(bqm)
    if method == "free":
        return solve_free(bqm, limit=1 << FREE_AUTO_BITS)
    if seed is None:
        raise UsageError("--method anneal requires --seed")
    return solve_anneal(bqm, AnnealParams(sweeps=sweeps, restarts=restarts, seed=seed, stop_energy=0))


def _witness_from(qf: QuboFile, assignment, energy: int) -> WitnessFile:
    bads = qf.true_bads(assignment) if energy == 0 else []
    first = min(bads) if bads else None
    return WitnessFile(qf.bound, qf.decode_inputs(assignment), energy,
                       first[1] if first else None, first[0] if first else None,
                       qf.decode_initial(assignment))


def cmd_solve(args) -> int:
    qf = QuboFile.loads(_read_text(args.qubo))
    if args.method == "anneal" and args.seed is None:
        raise UsageError("--method anneal requires --seed")
    result = _solve(qf.bqm, args.method, args.seed, args.sweeps, args.restarts)
    assignment = result.best_assignment
    witness = _witness_from(qf, assignment, result.best_energy)
    print(f"energy {result.best_energy} ({result.method}, {result.samples_taken} samples)")
    if args.output:
        witness.write(args.output)
    elif result.best_energy == 0:
        sys.stdout.write(witness.dumps())
    return EXIT_WITNESS if result.best_energy == 0 else EXIT_NONE


def cmd_validate(args) -> int:
    witness = WitnessFile.loads(_read_text(args.witness))
    if args.model.endswith(".qubo"):
        qf = QuboFile.loads(_read_text(args.model))
        model = parse_btor2(_read_text(args.btor2)) if args.btor2 else None
    else:
        model, _ = _load_model(args.model)
        qf = QuboFile.from_unrolled(translate(model, witness.bound, strength=args.strength))
    if witness.bound != qf.bound:
        raise UsageError(f"witness bound {witness.bound} differs from model bound {qf.bound}")
    witness.check_widths(qf.widths)
    free = qf.free_assignment(witness.inputs, witness.initial)
    energy = evaluate_energy(qf.bqm, forward_assignment(qf.bqm, free, qf.bqm.num_vars))
    print(f"energy {energy}")
    if model is None:
        return EXIT_WITNESS if energy == 0 else EXIT_NONE
    hit = first_bad(model, witness.inputs, witness.initial)
    if hit:
        labels = " ".join(model.label(b) for b in hit[1])
        print(f"simulator bad {labels} at step {hit[0]}")
    else:
        print("simulator no bad")
    agrees = (energy == 0) == (hit is not None)
    print("agreement yes" if agrees else "agreement NO")
    if not agrees:
        return EXIT_USAGE
    return EXIT_WITNESS if energy == 0 else EXIT_NONE


def cmd_stats(args) -> int:
    _, _, unrolled = _unroll(args)
    rows = frame_stats(unrolled)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["step", "new_vars", "cumulative_vars", "nonconstant_pc_flags"])
        for r in rows:
            writer.writerow([r.step, r.new_vars, r.cumulative_vars, r.nonconstant_pc_flags])
    finally:
        if args.output:
            out.close()
    return 0


def _search_inputs(unrolled, program, width: int):
    """Enumerate all ``width``-byte console inputs; first energy-0 one confirmed by the simulator."""
    candidates = [bytes(c) for c in itertools.product(range(256), repeat=width)]
    steps = len(unrolled.frames)
    sequences = [input_schedule(emulate(program, c, steps).schedule, steps) for c in candidates]
    results = validate_many(unrolled, sequences, check_simulator=False)
    for data, seq, res in zip(candidates, sequences, results):
        if res.energy == 0:
            return data, seq
    return None, None


def cmd_pipeline(args) -> int:
    model, program, unrolled = _unroll(args)
    qf = QuboFile.from_unrolled(unrolled)
    outdir = Path(args.output_dir) if args.output_dir else None
    if outdir:
        outdir.mkdir(parents=True, exist_ok=True)
        stem = Path(args.model).stem
        if program is not None:
            (outdir / f"{stem}.btor2").write_text(translate_beator(program))
        qf.write(outdir / f"{stem}.qubo")
    _err(f"bound {args.bound}: {qf.bqm.num_vars} variables, {len(qf.bqm.trace.free)} free")

    method = args.method
    energy = None
    if method == "anneal" and args.seed is None:
        raise UsageError("--method anneal requires --seed")
    if method != "inputs":
        try:
            result = _solve(qf.bqm, method, args.seed, args.sweeps, args.restarts)
        except VariableLimitError:
            if method != "auto" or program is None:
                raise
        else:
            assignment, energy = result.best_assignment, result.best_energy
            _err(f"{result.method}: energy {energy}")
    if method == "inputs" or (method == "auto" and program is not None and energy != 0):
        # heuristic solvers may miss the ground state; console inputs are few enough to enumerate
        if program is None:
            raise UsageError("--method inputs needs an assembly source")
        data, inputs = _search_inputs(unrolled, program, args.input_width)
        if data is None:
            print(f"energy {energy if energy is not None else 'unknown'}")
            print(f"no {args.input_width}-byte input reaches energy 0 at bound {args.bound}")
            return EXIT_NONE
        assignment = forward_assignment(qf.bqm, qf.free_assignment(inputs), qf.bqm.num_vars)
        energy = evaluate_energy(qf.bqm, assignment)
        _err(f"input search: {data!r} has energy {energy}")
    witness = _witness_from(qf, assignment, energy)
    print(f"energy {energy}")
    if energy != 0:
        print(f"no witness at bound {args.bound}")
        return EXIT_NONE
    if outdir:
        witness.write(outdir / f"{Path(args.model).stem}.witness")

    hit = first_bad(model, witness.inputs, witness.initial)
    if hit is None:
        print("simulator rejects the witness")
        return EXIT_USAGE
    labels = " ".join(model.label(b) for b in hit[1])
    print(f"simulator bad {labels} at step {hit[0]}")
    if program is not None:
        data = witness_to_bytes(program, witness.inputs)
        outcome = emulate(program, data, args.bound + 1)
        print(f"witness bytes {list(data)} {data!r}")
        if outcome.kind != "bad":
            print("emulator does not confirm the witness")
            return EXIT_USAGE
        print(f"emulator bad {' '.join(outcome.bads)} at transition {outcome.transitions}")
    print("validated")
    return EXIT_WITNESS


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qubot", description="Bounded bad-state search through QUBO models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assemble", help="assemble RISC-U text and print a listing")
    p.add_argument("source")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("emulate", help="run a RISC-U program on console input")
    p.add_argument("source")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--input", help="input bytes (backslash escapes allowed)")
    group.add_argument("--input-file")
    p.add_argument("--step-limit", type=int, default=100_000)
    p.set_defaults(func=cmd_emulate)

    p = sub.add_parser("beator", help="translate RISC-U assembly to BTOR2")
    p.add_argument("source")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_beator)

    def model_options(p):
        p.add_argument("model", help="BTOR2 model or RISC-U assembly (.s)")
        p.add_argument("--bound", type=int, required=True)
        p.add_argument("--strength", type=int, default=1, help="pin strength of the bad-state constraint")
        p.add_argument("--zero-divisor", choices=["riscv", "infeasible"], default="riscv")

    def solver_options(p, methods):
        p.add_argument("--method", choices=methods, default="auto")
        p.add_argument("--seed", type=int)
        p.add_argument("--sweeps", type=int, default=1000)
        p.add_argument("--restarts", type=int, default=8)

    p = sub.add_parser("qubot", help="unroll a model into a QUBO file")
    model_options(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_qubot)

    p = sub.add_parser("solve", help="minimize a QUBO file")
    p.add_argument("qubo")
    solver_options(p, ["auto", "exhaustive", "free", "anneal"])
    p.add_argument("-o", "--output", help="witness file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="check a witness against a model")
    p.add_argument("model", help="QUBO file (.qubo), BTOR2 model or RISC-U assembly")
    p.add_argument("witness")
    p.add_argument("--btor2", help="BTOR2 model for the simulator when MODEL is a QUBO file")
    p.add_argument("--strength", type=int, default=1)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="per-step variable counts as CSV")
    model_options(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("pipeline", help="translate, unroll, solve and validate")
    model_options(p)
    solver_options(p, ["auto", "exhaustive", "free", "anneal", "inputs"])
    p.add_argument("--input-width", type=int, default=1, help="console bytes enumerated by --method inputs")
    p.add_argument("--output-dir", help="directory for the generated artifacts")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    try:
        return args.func(args)
    except (UsageError, AssemblyError, TranslationError, Btor2Error, FormatError, VariableLimitError,
            ExpansionLimitError, WidthError) as exc:
        _err(f"qubot {args.command}: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
