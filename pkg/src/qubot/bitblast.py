"""Word-level operators blasted into gate circuits.

Words are tuples of bits, least significant bit first. Constant inputs fold
through the gate library, so a fully constant operation allocates nothing.

Variables allocated per call are bounded by ``c*w`` for the linear operators
and ``c*w*w`` for ``mul``/``udiv``/``urem`` with ``c = 11`` (a full adder costs
7 variables, a comparator stage 5, a multiplier row one AND plus a full adder
per bit). ``read``/``write`` over ``m`` entries with a symbolic address cost at
most ``c*m*w``.
"""
from __future__ import annotations

import os
from typing import Sequence

from .bqm import (AND, DIVMOD, INHIBIT, NOT, ONE, OR, XOR, ZERO, BinaryQuadraticModel, Bit,
                  const, is_const)

DEFAULT_EXPANSION_LIMIT = 12


def expansion_limit() -> int:
    return int(os.environ.get("QUBOT_EXPANSION_LIMIT", DEFAULT_EXPANSION_LIMIT))


class WidthError(ValueError):
    pass


class ExpansionLimitError(ValueError):
    pass


class Word(tuple):
    """Fixed-width bit vector, index 0 is the least significant bit."""

    __slots__ = ()

    @property
    def width(self) -> int:
        return len(self)

    @property
    def bits(self) -> tuple:
        return tuple(self)

    def value(self) -> int | None:
        """Integer value when every bit is constant, else ``None``."""
        v = 0
        for i, b in enumerate(self):
            if not is_const(b):
                return None
            v |= b.value << i
        return v

    def num_free(self) -> int:
        return sum(1 for b in self if not is_const(b))

    def __repr__(self):
        return "Word(" + "".join("1" if b is ONE else "0" if b is ZERO else f"<{b}>"
                                 for b in reversed(self)) + ")"


def const_word(value: int, width: int) -> Word:
    return Word(const(value >> i & 1) for i in range(width))


def var_word(m: BinaryQuadraticModel, width: int, free: bool = True) -> Word:
    return Word(m.new_vars(width, free))


def _same(*words: Sequence[Bit]) -> int:
    w = len(words[0])
    if any(len(x) != w for x in words):
        raise WidthError(f"width mismatch: {[len(x) for x in words]}")
    return w


# --------------------------------------------------------------------------
# reductions and bitwise operators


def or_reduce(m: BinaryQuadraticModel, bits: Sequence[Bit]) -> Bit:
    """Balanced OR tree."""
    layer = [b for b in bits if b is not ZERO]
    if any(b is ONE for b in layer):
        return ONE
    if not layer:
        return ZERO
    while len(layer) > 1:
        nxt = [m.gate(OR, layer[i], layer[i + 1]) for i in range(0, len(layer) - 1, 2)]
        if len(layer) % 2:
            nxt.append(layer[-1])
        layer = nxt
    return layer[0]


def and_reduce(m: BinaryQuadraticModel, bits: Sequence[Bit]) -> Bit:
    layer = [b for b in bits if b is not ONE]
    if any(b is ZERO for b in layer):
        return ZERO
    if not layer:
        return ONE
    while len(layer) > 1:
        nxt = [m.gate(AND, layer[i], layer[i + 1]) for i in range(0, len(layer) - 1, 2)]
        if len(layer) % 2:
            nxt.append(layer[-1])
        layer = nxt
    return layer[0]


def bitwise_not(m, a: Word) -> Word:
    return Word(m.gate(NOT, x) for x in a)


def bitwise_and(m, a: Word, b: Word) -> Word:
    _same(a, b)
    return Word(m.gate(AND, x, y) for x, y in zip(a, b))


def ite(m, c: Bit, a: Word, b: Word) -> Word:
    _same(a, b)
    if is_const(c):
        return a if c.value else b
    return Word(m.mux(c, x, y) for x, y in zip(a, b))


def uext(a: Word, amount: int) -> Word:
    return Word(tuple(a) + (ZERO,) * amount)


def slice_word(a: Word, upper: int, lower: int) -> Word:
    if not 0 <= lower <= upper < len(a):
        raise WidthError(f"slice {upper}..{lower} out of range for width {len(a)}")
    return Word(a[lower:upper + 1])


# --------------------------------------------------------------------------
# arithmetic


def full_adder(m, x: Bit, y: Bit, c: Bit) -> tuple[Bit, Bit]:
    h = m.gate(XOR, x, y)
    s = m.gate(XOR, h, c)
    carry = m.gate(OR, m.gate(AND, x, y), m.gate(AND, h, c))
    return s, carry


def add_with_carry(m, a: Sequence[Bit], b: Sequence[Bit], carry: Bit = ZERO,
                   need_carry: bool = False) -> tuple[Word, Bit]:
    w = _same(a, b)
    out = []
    for i, (x, y) in enumerate(zip(a, b)):
        if i == w - 1 and not need_carry:
            out.append(m.gate(XOR, m.gate(XOR, x, y), carry))
            break
        s, carry = full_adder(m, x, y, carry)
        out.append(s)
    return Word(out), carry


def add(m, a: Word, b: Word) -> Word:
    return add_with_carry(m, a, b)[0]


def sub(m, a: Word, b: Word) -> Word:
    return add_with_carry(m, a, bitwise_not(m, b), ONE)[0]


def inc(m, a: Word) -> Word:
    return add(m, a, const_word(1, len(a)))


def dec(m, a: Word) -> Word:
    return sub(m, a, const_word(1, len(a)))


def mul(m, a: Word, b: Word, width: int | None = None) -> Word:
    """Shift-and-add product truncated to ``width`` bits (default: operand width)."""
    w = _same(a, b)
    width = w if width is None else width
    a = tuple(a) + (ZERO,) * max(0, width - w)
    acc: list[Bit] = [ZERO] * width
    for i, bi in enumerate(b):
        if i >= width or bi is ZERO:
            continue
        row = [ZERO] * i + [m.gate(AND, a[j], bi) for j in range(width - i)]
        if all(x is ZERO for x in acc):
            acc = row
            continue
        # bits below i are unaffected by this partial product
        high, _ = add_with_carry(m, acc[i:], row[i:])
        acc = acc[:i] + list(high)
    return Word(acc)


# --------------------------------------------------------------------------
# comparisons


def ult(m, a: Word, b: Word) -> Bit:
    _same(a, b)
    lt: Bit = ZERO
    for x, y in zip(a, b):
        lt = m.mux(m.gate(XOR, x, y), y, lt)
    return lt


def eq(m, a: Word, b: Word) -> Bit:
    _same(a, b)
    return m.gate(NOT, or_reduce(m, [m.gate(XOR, x, y) for x, y in zip(a, b)]))


def neq(m, a: Word, b: Word) -> Bit:
    _same(a, b)
    return or_reduce(m, [m.gate(XOR, x, y) for x, y in zip(a, b)])


def eq_const(m, a: Word, value: int) -> Bit:
    """``a == value`` as an AND of literals (no XOR ancillas)."""
    return and_reduce(m, [x if value >> i & 1 else m.gate(NOT, x) for i, x in enumerate(a)])


# --------------------------------------------------------------------------
# division


def blast_udiv_urem(m: BinaryQuadraticModel, dividend: Word, divisor: Word,
                    zero_divisor: str = "riscv") -> tuple[Word, Word]:
    """Quotient and remainder as constrained free words.

    The constraint ``quotient*divisor + remainder == dividend`` is built at
    double width with the high half pinned to 0, and ``remainder < divisor`` is
    pinned true. With ``zero_divisor="riscv"`` a zero divisor is admitted with
    quotient all ones and remainder equal to the dividend (matching the
    simulator); with ``"infeasible"`` a zero divisor cannot reach energy 0.
    """
    w = _same(dividend, divisor)
    if zero_divisor not in ("riscv", "infeasible"):
        raise ValueError(f"unknown zero_divisor mode {zero_divisor!r}")
    x, d = dividend.value(), divisor.value()
    if d is not None and x is not None and (d or zero_divisor == "riscv"):
        if d == 0:
            return const_word((1 << w) - 1, w), dividend
        return const_word(x // d, w), const_word(x % d, w)
    if d == 0 and zero_divisor == "riscv":
        return const_word((1 << w) - 1, w), dividend
    if d == 1:
        return dividend, const_word(0, w)

    memo = m.divmod_memo
    key = (tuple(dividend), tuple(divisor), zero_divisor)
    if key in memo:
        return memo[key]
    q = Word(m.new_vars(w))
    r = Word(m.new_vars(w))
    m.trace.gates.append((DIVMOD, tuple(dividend) + tuple(divisor), tuple(q) + tuple(r)))

    product = mul(m, uext(q, w), uext(divisor, w), 2 * w)
    total = add(m, product, uext(r, w))
    for s, xb in zip(total[:w], dividend):
        m.pin(m.gate(XOR, s, xb), 0)
    for s in total[w:]:
        m.pin(s, 0)
    below = ult(m, r, divisor)
    if zero_divisor == "riscv":
        is_zero = m.gate(NOT, or_reduce(m, divisor))
        m.pin(m.gate(OR, below, is_zero), 1)
        m.pin(m.gate(INHIBIT, and_reduce(m, q), is_zero), 0)
    else:
        m.pin(below, 1)
    memo[key] = (q, r)
    return q, r


# --------------------------------------------------------------------------
# memory


class MemoryImage(list):
    """Expanded array contents as ``(address, Word)`` pairs in ascending address order."""

    def lookup(self, address: int) -> Word | None:
        for a, word in self:
            if a == address:
                return word
        return None


def memory_image(index_width: int, element: Word | list[Word], limit: int | None = None) -> MemoryImage:
    limit = expansion_limit() if limit is None else limit
    if index_width > limit:
        raise ExpansionLimitError(
            f"array index width {index_width} exceeds the expansion limit {limit}")
    size = 1 << index_width
    if isinstance(element, Word):
        return MemoryImage((a, element) for a in range(size))
    return MemoryImage(zip(range(size), element))


def _address_match(m, address: Word, a: int) -> Bit:
    return eq_const(m, address, a)


def blast_read(m, memory: MemoryImage, address: Word) -> Word:
    if not memory:
        raise ValueError("empty memory image")
    width = len(memory[0][1])
    a = address.value()
    if a is not None:
        word = memory.lookup(a)
        return word if word is not None else const_word(0, width)
    entries = list(memory)
    if len(entries) == 1 << len(address):
        acc = entries.pop()[1]  # some entry must match: last one is the fallback
    else:
        acc = const_word(0, width)
    for addr, word in reversed(entries):
        if tuple(word) == tuple(acc):
            continue
        acc = ite(m, _address_match(m, address, addr), word, acc)
    return acc


def blast_write(m, memory: MemoryImage, address: Word, value: Word) -> MemoryImage:
    a = address.value()
    if a is not None:
        out = MemoryImage((addr, value if addr == a else word) for addr, word in memory)
        if memory.lookup(a) is None:
            out.append((a, value))
            out.sort(key=lambda e: e[0])
        return out
    return MemoryImage((addr, ite(m, _address_match(m, address, addr), value, word))
                       for addr, word in memory)


def blast_memory_op(m, kind: str, memory: MemoryImage, address: Word, value: Word | None = None):
    if kind == "read":
        return blast_read(m, memory, address)
    if kind == "write":
        if value is None:
            raise ValueError("write needs a value")
        return blast_write(m, memory, address, value)
    raise ValueError(f"unknown memory operation {kind!r}")


# --------------------------------------------------------------------------
# dispatcher


def blast_word_op(m: BinaryQuadraticModel, kind: str, operands: Sequence, literals: Sequence[int] = (),
                  zero_divisor: str = "riscv"):
    o = operands
    if kind == "add":
        return add(m, *o)
    if kind == "sub":
        return sub(m, *o)
    if kind == "mul":
        return mul(m, *o)
    if kind == "inc":
        return inc(m, *o)
    if kind == "dec":
        return dec(m, *o)
    if kind == "and":
        return bitwise_and(m, *o)
    if kind == "not":
        return bitwise_not(m, *o)
    if kind == "udiv":
        return blast_udiv_urem(m, o[0], o[1], zero_divisor)[0]
    if kind == "urem":
        return blast_udiv_urem(m, o[0], o[1], zero_divisor)[1]
    if kind == "ult":
        return Word((ult(m, o[0], o[1]),))
    if kind == "ugt":
        return Word((ult(m, o[1], o[0]),))
    if kind == "ulte":
        return Word((m.gate(NOT, ult(m, o[1], o[0])),))
    if kind == "ugte":
        return Word((m.gate(NOT, ult(m, o[0], o[1])),))
    if kind == "eq":
        return Word((eq(m, *o),))
    if kind == "neq":
        return Word((neq(m, *o),))
    if kind == "ite":
        c = o[0]
        if isinstance(c, (tuple, list)):
            if len(c) != 1:
                raise WidthError("ite condition must be a single bit")
            c = c[0]
        return ite(m, c, o[1], o[2])
    if kind == "uext":
        return uext(o[0], literals[0])
    if kind == "slice":
        return slice_word(o[0], literals[0], literals[1])
    raise ValueError(f"unknown word operator {kind!r}")
