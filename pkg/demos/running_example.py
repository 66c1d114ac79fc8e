"""Find the console byte that makes the running example fault.

Assembles the bundled program, translates it to BTOR2, unrolls it to the
bound measured by the emulator and evaluates the QUBO energy for every
one-byte input.
"""
from qubot import fixture_text
from qubot.beator.riscu import assemble, emulate
from qubot.beator.translate import input_schedule, translate_beator
from qubot.btor2 import parse_btor2
from qubot.solve import validate_many
from qubot.unroll import translate


def main():
    program = assemble(fixture_text("running_example.s"))
    model = parse_btor2(translate_beator(program))
    bound = emulate(program, b"1").transitions
    unrolled = translate(model, bound)
    print(f"bound {bound}: {unrolled.bqm.num_vars} variables, {len(unrolled.bqm.quadratic)} couplings")
    candidates = [bytes([b]) for b in range(256)]
    sequences = [input_schedule(emulate(program, c, bound + 1).schedule, bound + 1) for c in candidates]
    results = validate_many(unrolled, sequences)
    for data, result in zip(candidates, results):
        if result.energy == 0:
            print(f"input {data!r}: energy 0, simulator bad at step {result.bad_step}")
    print(f"input b'0': energy {results[ord('0')].energy}")


if __name__ == "__main__":
    main()
