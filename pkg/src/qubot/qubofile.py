"""Text formats for QUBO models and witnesses.

QUBO file::

    qubo <num_vars> <offset>
    bound <n>
    strength <s>
    or-output <bit>
    lin <var> <coef>
    quad <u> <v> <coef>                      u < v
    input <step> <nid> <bit index> <var>
    initial <nid> <address or -1> <bit index> <var>
    bad <step> <label> <bit>
    width <nid> <bits>
    free <var> ...
    gate <kind> <input bits> <output vars>   comma separated lists
    end

Bits are variable ids or the constants ``c0``/``c1``. The gate lines record
how every non-free variable is computed from the free ones, which lets
solvers and validators rebuild full assignments from a file.

Witness file::

    witness
    bound <n>
    energy <e>
    bad <label> <step>                       or "bad none"
    input <step> <nid> <value>
    initial <nid> <address or -1> <value>
    end
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .bqm import DIVMOD, ONE, ZERO, BinaryQuadraticModel, Bit, GateTrace, is_const
from .unroll import UnrolledModel

FREE_PER_LINE = 32


class FormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _bit_text(bit: Bit) -> str:
    return f"c{bit.value}" if is_const(bit) else str(bit)


def _parse_bit(token: str, line: int) -> Bit:
    if token == "c0":
        return ZERO
    if token == "c1":
        return ONE
    return _parse_int(token, line)


def _parse_int(token: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise FormatError(f"expected an integer, got {token!r}", line) from None


@dataclass
class QuboFile:
    bqm: BinaryQuadraticModel
    bound: int
    strength: int = 1
    or_output: Bit = ZERO
    inputs: list[tuple[int, int, int, int]] = field(default_factory=list)
    initial: list[tuple[int, int, int, int]] = field(default_factory=list)
    bads: list[tuple[int, str, Bit]] = field(default_factory=list)
    widths: dict[int, int] = field(default_factory=dict)

    @classmethod
    def from_unrolled(cls, unrolled: UnrolledModel) -> "QuboFile":
        model = unrolled.model
        bads = [(step, model.label(b), bit) for step, b, bit in unrolled.bad_vars()]
        widths = {nid: model.width(nid) for nid in model.inputs}
        return cls(unrolled.bqm, unrolled.bound, unrolled.strength, unrolled.or_output,
                   unrolled.input_map(), unrolled.initial_map(), bads, widths)

    def dumps(self) -> str:
        m = self.bqm
        out = [f"qubo {m.num_vars} {m.offset}", f"bound {self.bound}", f"strength {self.strength}",
               f"or-output {_bit_text(self.or_output)}"]
        out += [f"lin {v} {c}" for v, c in sorted(m.linear.items())]
        out += [f"quad {u} {v} {c}" for (u, v), c in sorted(m.quadratic.items())]
        out += [f"width {nid} {w}" for nid, w in sorted(self.widths.items())]
        out += ["input {} {} {} {}".format(*row) for row in self.inputs]
        out += ["initial {} {} {} {}".format(*row) for row in self.initial]
        out += [f"bad {step} {label} {_bit_text(bit)}" for step, label, bit in self.bads]
        free = m.trace.free
        for i in range(0, len(free), FREE_PER_LINE):
            out.append("free " + " ".join(map(str, free[i:i + FREE_PER_LINE])))
        for kind, inputs, outputs in m.trace.gates:
            out.append(f"gate {kind} {','.join(map(_bit_text, inputs))} {','.join(map(str, outputs))}")
        out.append("end")
        return "\n".join(out) + "\n"

    @classmethod
    def loads(cls, text: str) -> "QuboFile":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("qubo "):
            raise FormatError("missing 'qubo' header", 1)
        head = lines[0].split()
        if len(head) != 3:
            raise FormatError("header must be 'qubo <num_vars> <offset>'", 1)
        bqm = BinaryQuadraticModel()
        bqm.num_vars = _parse_int(head[1], 1)
        bqm.offset = _parse_int(head[2], 1)
        qf = cls(bqm, 0)
        trace = GateTrace()
        ended = False
        for lineno, raw in enumerate(lines[1:], start=2):
            tokens = raw.split()
            if not tokens:
                continue
            if ended:
                raise FormatError("content after 'end'", lineno)
            key, args = tokens[0], tokens[1:]
            expected = {"bound": 1, "strength": 1, "or-output": 1, "lin": 2, "quad": 3, "input": 4,
                        "initial": 4, "bad": 3, "width": 2, "gate": 3, "end": 0}
            if key != "free" and (key not in expected or len(args) != expected[key]):
                raise FormatError(f"malformed {key!r} line", lineno)
            if key == "bound":
                qf.bound = _parse_int(args[0], lineno)
            elif key == "strength":
                qf.strength = _parse_int(args[0], lineno)
            elif key == "or-output":
                qf.or_output = _parse_bit(args[0], lineno)
            elif key == "lin":
                v, c = (_parse_int(a, lineno) for a in args)
                _check_var(v, bqm.num_vars, lineno)
                bqm.linear[v] = c
            elif key == "quad":
                u, v, c = (_parse_int(a, lineno) for a in args)
                if not u < v:
                    raise FormatError("quad terms need u < v", lineno)
                _check_var(v, bqm.num_vars, lineno)
                bqm.quadratic[(u, v)] = c
            elif key == "width":
                qf.widths[_parse_int(args[0], lineno)] = _parse_int(args[1], lineno)
            elif key == "input":
                qf.inputs.append(tuple(_parse_int(a, lineno) for a in args))
            elif key == "initial":
                qf.initial.append(tuple(_parse_int(a, lineno) for a in args))
            elif key == "bad":
                qf.bads.append((_parse_int(args[0], lineno), args[1], _parse_bit(args[2], lineno)))
            elif key == "free":
                trace.free.extend(_parse_int(a, lineno) for a in args)
            elif key == "gate":
                kind = args[0]
                inputs = tuple(_parse_bit(t, lineno) for t in args[1].split(","))
                outputs = tuple(_parse_int(t, lineno) for t in args[2].split(","))
                if kind != DIVMOD and kind not in ("NOT", "AND", "NAND", "OR", "INHIBIT", "XOR"):
                    raise FormatError(f"unknown gate kind {kind!r}", lineno)
                trace.gates.append((kind, inputs, outputs))
            else:
                ended = True
        if not ended:
            raise FormatError("missing 'end' line")
        bqm.trace = trace
        return qf

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def read(cls, path: str | Path) -> "QuboFile":
        return cls.loads(Path(path).read_text())

    def free_assignment(self, inputs: list[dict[int, int]], initial: dict | None = None) -> dict[int, int]:
        """Free-variable values for concrete per-step inputs (missing values read as 0)."""
        free = {v: 0 for v in self.bqm.trace.free}
        for step, nid, bit, var in self.inputs:
            value = inputs[step].get(nid, 0) if step < len(inputs) else 0
            free[var] = value >> bit & 1
        initial = initial or {}
        for nid, address, bit, var in self.initial:
            value = initial.get(nid, 0)
            if isinstance(value, dict):
                value = value.get(address, 0)
            free[var] = value >> bit & 1
        return free

    def decode_inputs(self, assignment) -> list[dict[int, int]]:
        out = [dict.fromkeys(self.widths, 0) for _ in range(self.bound + 1)]
        for step, nid, bit, var in self.inputs:
            out[step][nid] = out[step].get(nid, 0) | (assignment[var] & 1) << bit
        return out

    def decode_initial(self, assignment) -> dict[int, int | dict[int, int]]:
        out: dict = {}
        for nid, address, bit, var in self.initial:
            if address < 0:
                out[nid] = out.get(nid, 0) | (assignment[var] & 1) << bit
            else:
                words = out.setdefault(nid, {})
                words[address] = words.get(address, 0) | (assignment[var] & 1) << bit
        return out

    def true_bads(self, assignment) -> list[tuple[int, str]]:
        def value(bit):
            return bit.value if is_const(bit) else assignment[bit]
        return [(step, label) for step, label, bit in self.bads if value(bit)]


def _check_var(v: int, num_vars: int, line: int) -> None:
    if not 0 <= v < num_vars:
        raise FormatError(f"variable {v} outside 0..{num_vars - 1}", line)


@dataclass
class WitnessFile:
    bound: int
    inputs: list[dict[int, int]]
    energy: int | None = None
    bad: str | None = None
    bad_step: int | None = None
    initial: dict[int, int | dict[int, int]] = field(default_factory=dict)

    def dumps(self) -> str:
        out = ["witness", f"bound {self.bound}"]
        if self.energy is not None:
            out.append(f"energy {self.energy}")
        out.append(f"bad {self.bad} {self.bad_step}" if self.bad is not None else "bad none")
        for step, values in enumerate(self.inputs):
            out += [f"input {step} {nid} {value}" for nid, value in sorted(values.items())]
        for nid, value in sorted(self.initial.items()):
            if isinstance(value, dict):
                out += [f"initial {nid} {a} {v}" for a, v in sorted(value.items())]
            else:
                out.append(f"initial {nid} -1 {value}")
        out.append("end")
        return "\n".join(out) + "\n"

    @classmethod
    def loads(cls, text: str) -> "WitnessFile":
        lines = text.splitlines()
        if not lines or lines[0].strip() != "witness":
            raise FormatError("missing 'witness' header", 1)
        w = cls(0, [])
        ended = False
        for lineno, raw in enumerate(lines[1:], start=2):
            tokens = raw.split()
            if not tokens:
                continue
            if ended:
                raise FormatError("content after 'end'", lineno)
            key, args = tokens[0], tokens[1:]
            if key == "bound" and len(args) == 1:
                w.bound = _parse_int(args[0], lineno)
                w.inputs = [{} for _ in range(w.bound + 1)]
            elif key == "energy" and len(args) == 1:
                w.energy = _parse_int(args[0], lineno)
            elif key == "bad" and args == ["none"]:
                w.bad = w.bad_step = None
            elif key == "bad" and len(args) == 2:
                w.bad, w.bad_step = args[0], _parse_int(args[1], lineno)
            elif key == "input" and len(args) == 3:
                step, nid, value = (_parse_int(a, lineno) for a in args)
                if not 0 <= step < len(w.inputs):
                    raise FormatError(f"step {step} outside the bound", lineno)
                if value < 0:
                    raise FormatError("input values must be non-negative", lineno)
                w.inputs[step][nid] = value
            elif key == "initial" and len(args) == 3:
                nid, address, value = (_parse_int(a, lineno) for a in args)
                if address < 0:
                    w.initial[nid] = value
                else:
                    w.initial.setdefault(nid, {})[address] = value
            elif key == "end" and not args:
                ended = True
            else:
                raise FormatError(f"malformed {key!r} line", lineno)
        if not ended:
            raise FormatError("missing 'end' line")
        return w

    def check_widths(self, widths: dict[int, int]) -> None:
        for step, values in enumerate(self.inputs):
            for nid, value in values.items():
                if nid in widths and value >> widths[nid]:
                    raise FormatError(f"input {nid} at step {step} does not fit {widths[nid]} bits")

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def read(cls, path: str | Path) -> "WitnessFile":
        return cls.loads(Path(path).read_text())
