"""Unrolling a transition model into a single binary quadratic model.

Frame ``i`` holds the bit-level value of every state after ``i`` transitions.
Each frame gets fresh variables for the model inputs; the next-state circuits
of frame ``i`` become the state words of frame ``i+1``. The bad bits of all
frames are OR-reduced and the result is pinned to 1, so the model reaches
energy 0 exactly when some input sequence hits a bad state within the bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .bitblast import (MemoryImage, Word, blast_read, blast_word_op, blast_write, const_word,
                       expansion_limit, ite, memory_image, or_reduce, var_word)
from .btor2 import CONST_OPS, Node, TransitionModel, demand_evaluate
from .bqm import BinaryQuadraticModel, Bit, is_const, pin_bit

Value = Word | MemoryImage


@dataclass
class Frame:
    step: int
    state_words: dict[int, Value]
    input_vars: dict[int, Word]
    bad_bits: dict[int, Bit]
    memo: dict[int, Value] | None = field(default=None, repr=False)


@dataclass
class UnrolledModel:
    model: TransitionModel
    bqm: BinaryQuadraticModel
    frames: list[Frame]
    or_output: Bit
    per_step_var_counts: list[int]
    initial_vars: dict[int, Value] = field(default_factory=dict)
    strength: int = 1
    final_vars: int = 0

    @property
    def trace(self):
        return self.bqm.trace

    @property
    def bound(self) -> int:
        return len(self.frames) - 1

    def input_map(self) -> list[tuple[int, int, int, int]]:
        """``(step, input nid, bit index, var)`` for every input variable."""
        out = []
        for frame in self.frames:
            for nid, word in frame.input_vars.items():
                out.extend((frame.step, nid, i, v) for i, v in enumerate(word))
        return out

    def initial_map(self) -> list[tuple[int, int, int, int]]:
        """``(state nid, entry address or -1, bit index, var)`` for uninitialized states."""
        out = []
        for nid, value in self.initial_vars.items():
            if isinstance(value, MemoryImage):
                for addr, word in value:
                    out.extend((nid, addr, i, v) for i, v in enumerate(word))
            else:
                out.extend((nid, -1, i, v) for i, v in enumerate(value))
        return out

    def bad_vars(self) -> list[tuple[int, int, Bit]]:
        return [(f.step, b, bit) for f in self.frames for b, bit in f.bad_bits.items()]


def _known_bit(value):
    if isinstance(value, Word) and len(value) == 1 and is_const(value[0]):
        return value[0].value
    return None


class Unroller:
    def __init__(self, model: TransitionModel, bqm: BinaryQuadraticModel | None = None,
                 zero_divisor: str = "riscv", limit: int | None = None):
        self.model = model
        self.bqm = bqm if bqm is not None else BinaryQuadraticModel()
        self.zero_divisor = zero_divisor
        self.limit = expansion_limit() if limit is None else limit
        self.initial_vars: dict[int, Value] = {}

    # --- blasting

    def _compute(self, frame: Frame):
        m = self.bqm
        model = self.model
        sorts = model.sorts

        def compute(node: Node, memo: dict) -> Value:
            op = node.op
            if op == "state":
                return frame.state_words[node.nid]
            if op == "input":
                return frame.input_vars[node.nid]
            sort = sorts[node.sort]
            if op in CONST_OPS:
                value = {"zero": 0, "one": 1}.get(op, node.literals[0] if node.literals else 0)
                return const_word(value, sort.width)
            args = [memo.get(a) for a in node.args]
            if op == "read":
                return blast_read(m, args[0], args[1])
            if op == "write":
                return blast_write(m, args[0], args[1], args[2])
            if op == "ite":
                c = args[0][0]
                if is_const(c):
                    return args[1] if c.value else args[2]
                if sort.is_array:
                    return MemoryImage((a, ite(m, c, x, y))
                                       for (a, x), (_, y) in zip(args[1], args[2]))
                return ite(m, c, args[1], args[2])
            if op == "and" and args[1] is None:  # short-circuited by a constant 0
                return const_word(0, sort.width)
            return blast_word_op(m, op, args, node.literals, self.zero_divisor)

        return compute

    def blast(self, frame: Frame, roots: Sequence[int]) -> None:
        if frame.memo is None:
            frame.memo = {}
        demand_evaluate(self.model, roots, frame.memo, self._compute(frame), _known_bit)

    def _init_value(self, state: int) -> Value:
        model = self.model
        sort = model.sort_of(state)
        if state in model.init_of:
            scratch = Frame(-1, {}, {}, {})
            self.blast(scratch, [model.init_of[state]])
            value = scratch.memo[model.init_of[state]]
            if sort.is_array and isinstance(value, Word):
                index = model.sorts[sort.index].width
                value = memory_image(index, value, self.limit)
            return value
        if sort.is_array:
            index = model.sorts[sort.index].width
            element = model.sorts[sort.element].width
            words = [var_word(self.bqm, element) for _ in range(1 << min(index, self.limit))]
            value = memory_image(index, words, self.limit)
        else:
            value = var_word(self.bqm, sort.width)
        self.initial_vars[state] = value
        return value

    def _fresh_inputs(self) -> dict[int, Word]:
        return {i: var_word(self.bqm, self.model.width(i)) for i in self.model.inputs}

    def _finish(self, frame: Frame) -> Frame:
        conds = [self.model.bad_condition(b) for b in self.model.bads]
        self.blast(frame, conds)
        frame.bad_bits = {b: frame.memo[c][0] for b, c in zip(self.model.bads, conds)}
        return frame

    # --- frames

    def initial_frame(self) -> Frame:
        states = {s: self._init_value(s) for s in self.model.states}
        frame = Frame(0, states, self._fresh_inputs(), {})
        return self._finish(frame)

    def advance(self, frame: Frame, keep_memo: bool = False) -> Frame:
        model = self.model
        nexts = [model.next_of[s] for s in model.states if s in model.next_of]
        self.blast(frame, nexts)
        states = {s: frame.memo[model.next_of[s]] if s in model.next_of else frame.state_words[s]
                  for s in model.states}
        if not keep_memo:
            frame.memo = None
        return self._finish(Frame(frame.step + 1, states, self._fresh_inputs(), {}))


def build_initial_frame(model: TransitionModel, bqm: BinaryQuadraticModel | None = None) -> Frame:
    return Unroller(model, bqm).initial_frame()


def advance_frame(model: TransitionModel, frame: Frame, bqm: BinaryQuadraticModel) -> Frame:
    """Next frame; ``bqm`` must be the model ``frame`` was built in."""
    return Unroller(model, bqm).advance(frame, keep_memo=True)


def translate(model: TransitionModel, n: int, strength: int = 1, zero_divisor: str = "riscv",
              limit: int | None = None, keep_memo: bool = False) -> UnrolledModel:
    if n < 0:
        raise ValueError("bound must be non-negative")
    unroller = Unroller(model, zero_divisor=zero_divisor, limit=limit)
    bqm = unroller.bqm
    counts = []
    before = 0
    frame = unroller.initial_frame()
    frames = [frame]
    counts.append(bqm.num_vars - before)
    for _ in range(n):
        before = bqm.num_vars
        frame = unroller.advance(frame, keep_memo)
        frames.append(frame)
        counts.append(bqm.num_vars - before)
    if not keep_memo:
        frame.memo = None
    before = bqm.num_vars
    or_output = or_reduce(bqm, [bit for f in frames for bit in f.bad_bits.values()])
    pin_bit(bqm, or_output, 1, strength)
    return UnrolledModel(model, bqm, frames, or_output, counts, unroller.initial_vars,
                         strength, bqm.num_vars - before)


def _word_value(word: Word, assignment: Sequence[int] | Mapping[int, int]) -> int:
    v = 0
    for i, b in enumerate(word):
        bit = b.value if is_const(b) else assignment[b]
        v |= (bit & 1) << i
    return v


def decode_witness(unrolled: UnrolledModel, assignment: Sequence[int] | Mapping[int, int]) -> list[dict[int, int]]:
    """Concrete input values per step."""
    return [{nid: _word_value(w, assignment) for nid, w in f.input_vars.items()}
            for f in unrolled.frames]


def decode_initial(unrolled: UnrolledModel, assignment) -> dict[int, int | dict[int, int]]:
    out = {}
    for nid, value in unrolled.initial_vars.items():
        if isinstance(value, MemoryImage):
            out[nid] = {a: _word_value(w, assignment) for a, w in value}
        else:
            out[nid] = _word_value(value, assignment)
    return out


def free_assignment(unrolled: UnrolledModel, inputs: Sequence[Mapping[int, int]],
                    initial: Mapping[int, int] | None = None) -> dict[int, int]:
    """Free-variable values that encode a concrete input sequence."""
    free: dict[int, int] = {}
    if len(inputs) < len(unrolled.frames) and unrolled.model.inputs:
        raise KeyError(f"inputs cover {len(inputs)} of {len(unrolled.frames)} steps")
    for frame in unrolled.frames:
        for nid, word in frame.input_vars.items():
            value = inputs[frame.step][nid]
            for i, v in enumerate(word):
                free[v] = value >> i & 1
    initial = initial or {}
    for nid, word in unrolled.initial_vars.items():
        value = initial.get(nid, 0)
        if isinstance(word, MemoryImage):
            for a, w in word:
                entry = value.get(a, 0) if isinstance(value, Mapping) else value
                for i, v in enumerate(w):
                    free[v] = entry >> i & 1
        else:
            for i, v in enumerate(word):
                free[v] = value >> i & 1
    return free


@dataclass(frozen=True)
class StepStats:
    step: int
    new_vars: int
    cumulative_vars: int
    nonconstant_pc_flags: int
    nonconstant_bads: int


def _is_pc_flag(model: TransitionModel, nid: int) -> bool:
    symbol = model.nodes[nid].symbol or ""
    return symbol.startswith("pc-flag")


def frame_stats(unrolled: UnrolledModel) -> list[StepStats]:
    model = unrolled.model
    flags = [s for s in model.states if _is_pc_flag(model, s)]
    rows = []
    total = 0
    for frame, new in zip(unrolled.frames, unrolled.per_step_var_counts):
        total += new
        pcs = sum(1 for s in flags if not is_const(frame.state_words[s][0]))
        bads = sum(1 for b in frame.bad_bits.values() if not is_const(b))
        rows.append(StepStats(frame.step, new, total, pcs, bads))
    return rows
