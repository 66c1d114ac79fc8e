"""Binary quadratic models built from logic-gate penalty functions.

A bit is either a constant (``ZERO``/``ONE``) or a variable id (a plain
non-negative ``int``). Every gate adds a penalty polynomial with integer
coefficients that is 0 exactly when the gate relation holds and at least 1
otherwise, and records itself in a gate trace so that a full assignment can be
recomputed functionally from the free variables.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np


class Const:
    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = value

    def __repr__(self):
        return f"Const({self.value})"

    def __reduce__(self):
        return (const, (self.value,))


ZERO = Const(0)
ONE = Const(1)

Bit = Union[int, Const]


def const(value: int) -> Const:
    return ONE if value else ZERO


def is_const(bit: Bit) -> bool:
    return type(bit) is Const


# Penalty tables: (coefficient, roles). Roles index into the gate's
# (inputs..., output, ancilla) tuple; () is the constant term.
NOT = "NOT"
AND = "AND"
NAND = "NAND"
OR = "OR"
INHIBIT = "INHIBIT"  # out = (not x) and y
XOR = "XOR"
DIVMOD = "DIVMOD"  # pseudo gate: computes quotient/remainder bits during forward evaluation

PENALTIES: dict[str, tuple[tuple[int, tuple[int, ...]], ...]] = {
    # x -> y
    NOT: ((2, ()), (-2, (0,)), (-2, (1,)), (4, (0, 1))),
    # (x, y) -> z
    AND: ((6, (2,)), (2, (0, 1)), (-4, (0, 2)), (-4, (1, 2))),
    OR: ((2, (0,)), (2, (1,)), (2, (2,)), (2, (0, 1)), (-4, (0, 2)), (-4, (1, 2))),
    NAND: ((6, ()), (-4, (0,)), (-4, (1,)), (-6, (2,)), (2, (0, 1)), (4, (0, 2)), (4, (1, 2))),
    INHIBIT: ((2, (1,)), (2, (2,)), (-2, (0, 1)), (4, (0, 2)), (-4, (1, 2))),
    # (x, y) -> z with ancilla a: (x + y - z - 2a)^2
    XOR: (
        (1, (0,)), (1, (1,)), (1, (2,)), (4, (3,)),
        (2, (0, 1)), (-2, (0, 2)), (-2, (1, 2)),
        (-4, (0, 3)), (-4, (1, 3)), (4, (2, 3)),
    ),
}
ARITY = {NOT: 1, AND: 2, OR: 2, NAND: 2, INHIBIT: 2, XOR: 2}
COMMUTATIVE = frozenset({AND, OR, NAND, XOR})

_TRUTH = {
    NOT: lambda x: 1 - x,
    AND: lambda x, y: x & y,
    OR: lambda x, y: x | y,
    NAND: lambda x, y: 1 - (x & y),
    INHIBIT: lambda x, y: (1 - x) & y,
    XOR: lambda x, y: x ^ y,
}


def truth(kind: str, *inputs: int) -> int:
    return _TRUTH[kind](*inputs)


def penalty_value(kind: str, values: Sequence[int]) -> int:
    """Evaluate a gate's penalty polynomial on concrete role values."""
    total = 0
    for coef, roles in PENALTIES[kind]:
        term = coef
        for r in roles:
            term *= values[r]
        total += term
    return total


class ArityError(ValueError):
    pass


@dataclass
class GateTrace:
    """Gates in construction order: (kind, input bits, output vars)."""

    gates: list[tuple[str, tuple[Bit, ...], tuple[int, ...]]] = field(default_factory=list)
    free: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.gates)


class BinaryQuadraticModel:
    def __init__(self):
        self.offset = 0
        self.linear: dict[int, int] = {}
        self.quadratic: dict[tuple[int, int], int] = {}
        self.num_vars = 0
        self.trace = GateTrace()
        self._consed: dict[tuple, Bit] = {}
        self._negation: dict[int, int] = {}
        self.divmod_memo: dict[tuple, tuple] = {}

    # --- variables and raw terms

    def new_var(self, free: bool = False) -> int:
        v = self.num_vars
        self.num_vars += 1
        if free:
            self.trace.free.append(v)
        return v

    def new_vars(self, count: int, free: bool = False) -> list[int]:
        return [self.new_var(free) for _ in range(count)]

    def add_offset(self, coef: int) -> None:
        self.offset += coef

    def add_linear(self, v: int, coef: int) -> None:
        c = self.linear.get(v, 0) + coef
        if c:
            self.linear[v] = c
        else:
            self.linear.pop(v, None)

    def add_quadratic(self, u: int, v: int, coef: int) -> None:
        if u == v:  # x*x == x for binary x
            self.add_linear(u, coef)
            return
        key = (u, v) if u < v else (v, u)
        c = self.quadratic.get(key, 0) + coef
        if c:
            self.quadratic[key] = c
        else:
            self.quadratic.pop(key, None)

    def add_term(self, coef: int, bits: Sequence[Bit]) -> None:
        """Add ``coef * prod(bits)``; constant bits are folded in."""
        vars_ = []
        for b in bits:
            if is_const(b):
                if not b.value:
                    return
            else:
                vars_.append(b)
        if not vars_:
            self.offset += coef
        elif len(vars_) == 1:
            self.add_linear(vars_[0], coef)
        elif len(vars_) == 2:
            self.add_quadratic(vars_[0], vars_[1], coef)
        else:
            raise ValueError("terms above degree 2 are not representable")

    # --- gates

    def complement(self, a: Bit, b: Bit) -> bool:
        return not is_const(a) and self._negation.get(a) == b

    def gate(self, kind: str, *inputs: Bit) -> Bit:
        if kind not in ARITY:
            raise ArityError(f"unknown gate {kind}")
        if len(inputs) != ARITY[kind]:
            raise ArityError(f"{kind} takes {ARITY[kind]} inputs, got {len(inputs)}")
        simplified = self._simplify(kind, inputs)
        if simplified is not None:
            return simplified
        if kind in COMMUTATIVE and inputs[0] > inputs[1]:
            inputs = (inputs[1], inputs[0])
        key = (kind,) + inputs
        hit = self._consed.get(key)
        if hit is not None:
            return hit
        out = self.new_var()
        outputs = (out, self.new_var()) if kind == XOR else (out,)
        roles = inputs + outputs
        for coef, idx in PENALTIES[kind]:
            self.add_term(coef, [roles[i] for i in idx])
        self.trace.gates.append((kind, inputs, outputs))
        self._consed[key] = out
        if kind == NOT:
            self._negation[inputs[0]] = out
            self._negation[out] = inputs[0]
        return out

    def _simplify(self, kind: str, inputs: tuple[Bit, ...]) -> Bit | None:
        if kind == NOT:
            x = inputs[0]
            if is_const(x):
                return const(1 - x.value)
            return self._negation.get(x)
        x, y = inputs
        cx, cy = is_const(x), is_const(y)
        if cx and cy:
            return const(truth(kind, x.value, y.value))
        if kind == INHIBIT:
            if cx:
                return ZERO if x.value else y
            if cy:
                return self.gate(NOT, x) if y.value else ZERO
            if x == y:
                return ZERO
            if self.complement(x, y):
                return y
            return None
        if cx:
            x, y, cy = y, x, True
        if cy:
            v = y.value
            if kind == AND:
                return x if v else ZERO
            if kind == OR:
                return ONE if v else x
            if kind == NAND:
                return self.gate(NOT, x) if v else ONE
            return self.gate(NOT, x) if v else x  # XOR
        if x == y:
            if kind == NAND:
                return self.gate(NOT, x)
            return ZERO if kind == XOR else x
        if self.complement(x, y):
            return {AND: ZERO, OR: ONE, NAND: ONE, XOR: ONE}[kind]
        return None

    # --- convenience wrappers

    def not_(self, x: Bit) -> Bit:
        return self.gate(NOT, x)

    def and_(self, x: Bit, y: Bit) -> Bit:
        return self.gate(AND, x, y)

    def or_(self, x: Bit, y: Bit) -> Bit:
        return self.gate(OR, x, y)

    def xor(self, x: Bit, y: Bit) -> Bit:
        return self.gate(XOR, x, y)

    def mux(self, c: Bit, x: Bit, y: Bit) -> Bit:
        """``x`` if ``c`` else ``y``."""
        if is_const(c):
            return x if c.value else y
        if x == y:
            return x
        if is_const(x) and is_const(y):
            return c if x.value else self.gate(NOT, c)
        return self.gate(OR, self.gate(AND, c, x), self.gate(INHIBIT, c, y))

    def pin(self, bit: Bit, value: int, strength: int = 1) -> None:
        pin_bit(self, bit, value, strength)

    # --- inspection

    def terms(self):
        return self.offset, dict(self.linear), dict(self.quadratic)

    def __repr__(self):
        return (f"BinaryQuadraticModel(num_vars={self.num_vars}, offset={self.offset}, "
                f"linear={len(self.linear)}, quadratic={len(self.quadratic)})")


def emit_gate(model: BinaryQuadraticModel, kind: str, inputs: Sequence[Bit]) -> Bit:
    return model.gate(kind, *inputs)


def pin_bit(model: BinaryQuadraticModel, bit: Bit, value: int, strength: int = 1) -> None:
    if strength <= 0:
        raise ValueError("pin strength must be positive")
    if is_const(bit):
        if bit.value != value:
            model.offset += strength
    elif value:
        model.offset += strength
        model.add_linear(bit, -strength)
    else:
        model.add_linear(bit, strength)


# --------------------------------------------------------------------------
# evaluation


class MissingVariableError(KeyError):
    pass


def evaluate_energy(model: BinaryQuadraticModel, assignment: Mapping[int, int] | Sequence[int]) -> int:
    try:
        if len(assignment) < model.num_vars:
            raise MissingVariableError(f"assignment covers {len(assignment)} of {model.num_vars} variables")
        energy = model.offset
        for v, c in model.linear.items():
            if assignment[v]:
                energy += c
        for (u, v), c in model.quadratic.items():
            if assignment[u] and assignment[v]:
                energy += c
    except (KeyError, IndexError) as exc:
        raise MissingVariableError(f"missing variable {exc}") from None
    return energy


def _divmod_lanes(inputs, lane_bits, width, lanes):
    """Per-lane unsigned quotient/remainder; zero divisors follow RISC-V."""
    n = len(inputs) // 2
    mask = (1 << n) - 1
    dividend = [0] * lanes
    divisor = [0] * lanes
    for i in range(n):
        a, b = lane_bits[i], lane_bits[n + i]
        for lane in range(lanes):
            if a >> lane & 1:
                dividend[lane] |= 1 << i
            if b >> lane & 1:
                divisor[lane] |= 1 << i
    q_bits = [0] * n
    r_bits = [0] * n
    for lane in range(lanes):
        d = divisor[lane]
        x = dividend[lane]
        q, r = (x // d, x % d) if d else (mask, x)
        for i in range(n):
            if q >> i & 1:
                q_bits[i] |= 1 << lane
            if r >> i & 1:
                r_bits[i] |= 1 << lane
    return q_bits + r_bits


def forward_lanes(
    model: BinaryQuadraticModel | GateTrace,
    free: Mapping[int, int],
    lanes: int = 1,
    num_vars: int | None = None,
) -> list[int]:
    """Bit-sliced forward evaluation.

    ``free[v]`` is an integer whose bit ``k`` is the value of variable ``v`` in
    lane ``k``. Returns one such integer per variable.
    """
    trace = model.trace if isinstance(model, BinaryQuadraticModel) else model
    if num_vars is None:
        num_vars = model.num_vars if isinstance(model, BinaryQuadraticModel) else None
    full = (1 << lanes) - 1
    values: dict[int, int] | list[int]
    values = [0] * num_vars if num_vars is not None else {}
    for v in trace.free:
        try:
            values[v] = free[v] & full
        except KeyError:
            raise MissingVariableError(f"missing free variable {v}") from None

    def val(b):
        if type(b) is Const:
            return full if b.value else 0
        return values[b]

    for kind, inputs, outputs in trace.gates:
        if kind == DIVMOD:
            results = _divmod_lanes(inputs, [val(b) for b in inputs], len(inputs) // 2, lanes)
            for v, r in zip(outputs, results):
                values[v] = r
            continue
        x = val(inputs[0])
        if kind == NOT:
            values[outputs[0]] = full ^ x
            continue
        y = val(inputs[1])
        if kind == AND:
            values[outputs[0]] = x & y
        elif kind == OR:
            values[outputs[0]] = x | y
        elif kind == NAND:
            values[outputs[0]] = full ^ (x & y)
        elif kind == INHIBIT:
            values[outputs[0]] = (full ^ x) & y
        else:
            values[outputs[0]] = x ^ y
            values[outputs[1]] = x & y
    if isinstance(values, dict):
        return [values.get(v, 0) for v in range(max(values, default=-1) + 1)]
    return values


def forward_assignment(model: BinaryQuadraticModel | GateTrace, free_vars: Mapping[int, int],
                       num_vars: int | None = None) -> list[int]:
    """Full single assignment computed from the free variables."""
    return [v & 1 for v in forward_lanes(model, free_vars, 1, num_vars)]


def lanes_to_matrix(values: Sequence[int], lanes: int) -> np.ndarray:
    """``(lanes, len(values))`` uint8 matrix from bit-sliced values."""
    nbytes = (lanes + 7) // 8
    out = np.empty((lanes, len(values)), dtype=np.uint8)
    for v, mask in enumerate(values):
        raw = np.frombuffer(mask.to_bytes(nbytes, "little"), dtype=np.uint8)
        out[:, v] = np.unpackbits(raw, bitorder="little")[:lanes]
    return out


def energies(model: BinaryQuadraticModel, samples: np.ndarray) -> np.ndarray:
    """Energies of each row of a 0/1 ``(count, num_vars)`` matrix (int64)."""
    x = samples.astype(np.int64, copy=False)
    e = np.full(x.shape[0], model.offset, dtype=np.int64)
    if model.linear:
        idx = np.fromiter(model.linear.keys(), dtype=np.int64, count=len(model.linear))
        coef = np.fromiter(model.linear.values(), dtype=np.int64, count=len(model.linear))
        e += x[:, idx] @ coef
    if model.quadratic:
        keys = np.array(list(model.quadratic.keys()), dtype=np.int64).reshape(-1, 2)
        coef = np.fromiter(model.quadratic.values(), dtype=np.int64, count=len(model.quadratic))
        e += (x[:, keys[:, 0]] & x[:, keys[:, 1]]) @ coef
    return e


def lane_energies(model: BinaryQuadraticModel, values: Sequence[int], lanes: int) -> np.ndarray:
    return energies(model, lanes_to_matrix(values, lanes))


def gate_penalties(model: BinaryQuadraticModel, assignment: Sequence[int]) -> Iterable[int]:
    """Penalty of each recorded logic gate under ``assignment``."""
    def val(b):
        return b.value if is_const(b) else assignment[b]

    for kind, inputs, outputs in model.trace.gates:
        if kind == DIVMOD:
            continue
        yield penalty_value(kind, [val(b) for b in inputs + outputs])
