"""Anneal the guess4 model for a few seeds and decode the witnesses."""
from qubot import fixture_text
from qubot.btor2 import first_bad, parse_btor2
from qubot.solve import AnnealParams, solve_anneal
from qubot.unroll import decode_witness, translate


def main():
    model = parse_btor2(fixture_text("guess4.btor2"))
    unrolled = translate(model, 2)
    for seed in range(4):
        result = solve_anneal(unrolled.bqm, AnnealParams(sweeps=300, restarts=16, seed=seed))
        inputs = decode_witness(unrolled, result.best_assignment)
        hit = first_bad(model, inputs)
        print(f"seed {seed}: energy {result.best_energy}, inputs {[s[3] for s in inputs]}, "
              f"simulator bad at step {hit[0] if hit else None}")


if __name__ == "__main__":
    main()
