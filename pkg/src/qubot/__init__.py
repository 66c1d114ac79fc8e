"""Bounded model checking of BTOR2 transition systems through QUBO models."""
from importlib import resources

__version__ = "0.1.0"


def fixture_text(name: str) -> str:
    """Text of a bundled fixture (``counter3.btor2``, ``running_example.s``, ...)."""
    return resources.files(__package__).joinpath("data", name).read_text()


def fixture_names() -> list[str]:
    return sorted(p.name for p in resources.files(__package__).joinpath("data").iterdir()
                  if p.is_file() and not p.name.startswith("_"))
