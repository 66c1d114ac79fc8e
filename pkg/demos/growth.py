"""Per-step variable counts for a constant-memory and a growing-memory model."""
from qubot import fixture_text
from qubot.btor2 import parse_btor2
from qubot.unroll import frame_stats, translate


def main():
    for name in ("accumulator.btor2", "growing_memory.btor2"):
        unrolled = translate(parse_btor2(fixture_text(name)), 12)
        counts = [row.new_vars for row in frame_stats(unrolled)]
        print(f"{name}: {counts}")


if __name__ == "__main__":
    main()
