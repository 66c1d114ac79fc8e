"""Parser, printer and concrete simulator for a bitvector/array subset of BTOR2.

Values in the simulator are plain Python integers reduced modulo ``2**width``.
Arrays are sparse: unwritten indices read as the array's default element.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

CONST_OPS = frozenset({"zero", "one", "constd", "const", "consth"})
UNARY_OPS = frozenset({"not", "inc", "dec"})
ARITH_OPS = frozenset({"add", "sub", "mul", "udiv", "urem", "and"})
COMPARE_OPS = frozenset({"ult", "ulte", "ugt", "ugte", "eq", "neq"})
COMBINATIONAL_OPS = (
    UNARY_OPS | ARITH_OPS | COMPARE_OPS | {"ite", "uext", "slice", "read", "write"}
)
SEQUENTIAL_OPS = frozenset({"state", "input", "init", "next", "bad"})
KEYWORDS = CONST_OPS | COMBINATIONAL_OPS | SEQUENTIAL_OPS | {"sort"}

# number of nid operands (after the sort) per operator
_NID_ARITY = {op: 1 for op in UNARY_OPS}
_NID_ARITY.update({op: 2 for op in ARITH_OPS | COMPARE_OPS})
_NID_ARITY.update({"ite": 3, "uext": 1, "slice": 1, "read": 2, "write": 3, "init": 2, "next": 2})


class Btor2Error(ValueError):
    """Malformed or unsupported model text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SimulationError(RuntimeError):
    pass


class MissingInputError(SimulationError, KeyError):
    pass


@dataclass(frozen=True)
class Sort:
    nid: int
    width: int | None = None
    index: int | None = None
    element: int | None = None

    @property
    def is_array(self) -> bool:
        return self.width is None


@dataclass(frozen=True)
class Node:
    nid: int
    op: str
    sort: int | None
    args: tuple[int, ...] = ()
    literals: tuple[int, ...] = ()
    symbol: str | None = None


@dataclass
class TransitionModel:
    sorts: dict[int, Sort] = field(default_factory=dict)
    nodes: dict[int, Node] = field(default_factory=dict)
    states: list[int] = field(default_factory=list)
    inputs: list[int] = field(default_factory=list)
    bads: list[int] = field(default_factory=list)
    init_of: dict[int, int] = field(default_factory=dict)
    next_of: dict[int, int] = field(default_factory=dict)
    _compiled: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def sort_of(self, nid: int) -> Sort:
        return self.sorts[self.nodes[nid].sort]

    def width(self, nid: int) -> int:
        sort = self.sort_of(nid)
        if sort.is_array:
            raise Btor2Error(f"node {nid} has array sort")
        return sort.width

    def bad_condition(self, bad: int) -> int:
        return self.nodes[bad].args[0]

    def find_symbol(self, symbol: str) -> int:
        for node in self.nodes.values():
            if node.symbol == symbol:
                return node.nid
        raise KeyError(symbol)

    def label(self, bad: int) -> str:
        return self.nodes[bad].symbol or str(bad)

    def sort_key(self, sid: int):
        sort = self.sorts[sid]
        if sort.is_array:
            return ("array", self.sort_key(sort.index), self.sort_key(sort.element))
        return ("bitvec", sort.width)


# --------------------------------------------------------------------------
# parsing


def _int_token(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise Btor2Error(f"malformed integer literal {token!r}", lineno) from None


def parse_btor2(text: str) -> TransitionModel:
    model = TransitionModel()
    last = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split(";", 1)[0].strip()
        if not body:
            continue
        tokens = body.split()
        nid = _int_token(tokens[0], lineno)
        if nid <= 0:
            raise Btor2Error(f"nid must be positive, got {nid}", lineno)
        if nid in model.nodes or nid in model.sorts:
            raise Btor2Error(f"duplicate nid {nid}", lineno)
        if nid < last:
            raise Btor2Error(f"nid {nid} is smaller than previous nid {last}", lineno)
        last = nid
        if len(tokens) < 2:
            raise Btor2Error("missing keyword", lineno)
        op = tokens[1]
        if op not in KEYWORDS:
            raise Btor2Error(f"unknown or unsupported keyword {op!r}", lineno)
        rest = tokens[2:]
        if op == "sort":
            model.sorts[nid] = _parse_sort(model, nid, rest, lineno)
        else:
            _add_node(model, _parse_node(model, nid, op, rest, lineno), lineno)
    return model


def _parse_sort(model: TransitionModel, nid: int, rest: list[str], lineno: int) -> Sort:
    if rest[:1] == ["bitvec"] and len(rest) >= 2:
        width = _int_token(rest[1], lineno)
        if width < 1:
            raise Btor2Error("bitvec width must be at least 1", lineno)
        return Sort(nid, width=width)
    if rest[:1] == ["array"] and len(rest) >= 3:
        index, element = (_int_token(t, lineno) for t in rest[1:3])
        for sid in (index, element):
            if sid not in model.sorts:
                raise Btor2Error(f"unknown sort {sid}", lineno)
            if model.sorts[sid].is_array:
                raise Btor2Error("nested array sorts are not supported", lineno)
        return Sort(nid, index=index, element=element)
    raise Btor2Error("malformed sort declaration", lineno)


def _ref(model: TransitionModel, token: str, lineno: int) -> int:
    ref = _int_token(token, lineno)
    if ref <= 0:
        raise Btor2Error(f"negated or invalid operand {token}", lineno)
    if ref not in model.nodes:
        if ref in model.sorts:
            raise Btor2Error(f"operand {ref} is a sort", lineno)
        raise Btor2Error(f"reference to undefined (forward) nid {ref}", lineno)
    return ref


def _sort_ref(model: TransitionModel, token: str, lineno: int) -> int:
    sid = _int_token(token, lineno)
    if sid not in model.sorts:
        raise Btor2Error(f"unknown sort {sid}", lineno)
    return sid


def _parse_node(model: TransitionModel, nid: int, op: str, rest: list[str], lineno: int) -> Node:
    if op == "bad":
        if not rest:
            raise Btor2Error("bad needs a condition", lineno)
        return Node(nid, op, None, (_ref(model, rest[0], lineno),), symbol=_symbol(rest[1:]))
    if not rest:
        raise Btor2Error(f"{op} needs a sort", lineno)
    sid = _sort_ref(model, rest[0], lineno)
    rest = rest[1:]
    if op in ("state", "input", "zero", "one"):
        return Node(nid, op, sid, symbol=_symbol(rest))
    if op in ("constd", "const", "consth"):
        if not rest:
            raise Btor2Error(f"{op} needs a value", lineno)
        return Node(nid, op, sid, literals=(_const_value(model, sid, op, rest[0], lineno),),
                    symbol=_symbol(rest[1:]))
    arity = _NID_ARITY[op]
    if len(rest) < arity:
        raise Btor2Error(f"{op} expects {arity} operands", lineno)
    args = tuple(_ref(model, t, lineno) for t in rest[:arity])
    rest = rest[arity:]
    literals: tuple[int, ...] = ()
    if op == "uext":
        literals = (_int_token(rest[0], lineno),) if rest else ()
        rest = rest[1:]
    elif op == "slice":
        if len(rest) < 2:
            raise Btor2Error("slice expects upper and lower bit", lineno)
        literals = (_int_token(rest[0], lineno), _int_token(rest[1], lineno))
        rest = rest[2:]
    if op == "uext" and not literals:
        raise Btor2Error("uext expects an extension amount", lineno)
    return Node(nid, op, sid, args, literals, _symbol(rest))


def _symbol(rest: Sequence[str]) -> str | None:
    return " ".join(rest) if rest else None


def _const_value(model: TransitionModel, sid: int, op: str, token: str, lineno: int) -> int:
    sort = model.sorts[sid]
    if sort.is_array:
        raise Btor2Error("constants must have bitvec sort", lineno)
    width = sort.width
    try:
        if op == "constd":
            value = int(token, 10)
        elif op == "const":
            if set(token) - {"0", "1"}:
                raise ValueError
            value = int(token, 2)
        else:
            value = int(token, 16)
    except ValueError:
        raise Btor2Error(f"malformed {op} literal {token!r}", lineno) from None
    if op == "constd" and value < 0:
        if value < -(1 << (width - 1)) and width > 1 or value < -1:
            raise Btor2Error(f"constant {value} does not fit {width} bits", lineno)
        value &= (1 << width) - 1
    if value >= 1 << width:
        raise Btor2Error(f"constant {value} does not fit {width} bits", lineno)
    return value


def _add_node(model: TransitionModel, node: Node, lineno: int) -> None:
    _check_sorts(model, node, lineno)
    model.nodes[node.nid] = node
    if node.op == "state":
        model.states.append(node.nid)
    elif node.op == "input":
        if model.sorts[node.sort].is_array:
            raise Btor2Error("array inputs are not supported", lineno)
        model.inputs.append(node.nid)
    elif node.op == "bad":
        model.bads.append(node.nid)
    elif node.op in ("init", "next"):
        state = node.args[0]
        table = model.init_of if node.op == "init" else model.next_of
        if state in table:
            raise Btor2Error(f"state {state} already has an {node.op}", lineno)
        table[state] = node.args[1]


def _check_sorts(model: TransitionModel, node: Node, lineno: int) -> None:
    def fail(msg):
        raise Btor2Error(f"sort mismatch in {node.op}: {msg}", lineno)

    key = model.sort_key
    sorts = model.sorts
    op = node.op
    if op == "bad":
        cond = model.nodes[node.args[0]]
        if cond.sort is None or key(cond.sort) != ("bitvec", 1):
            fail("bad condition must be 1-bit")
        return
    if op in ("state", "input") or op in CONST_OPS:
        return
    sort = sorts[node.sort]
    arg_sorts = []
    for a in node.args:
        if model.nodes[a].sort is None:
            fail(f"operand {a} has no value")
        arg_sorts.append(model.nodes[a].sort)
    if op in ("init", "next"):
        state = model.nodes[node.args[0]]
        if state.op != "state":
            fail(f"{node.args[0]} is not a state")
        if key(state.sort) != key(node.sort):
            fail("declared sort differs from state sort")
        value_key = key(arg_sorts[1])
        if value_key != key(state.sort):
            ok = (op == "init" and sorts[state.sort].is_array
                  and value_key == key(sorts[state.sort].element))
            if not ok:
                fail("value sort differs from state sort")
        return
    if op in ARITH_OPS or op in UNARY_OPS:
        if sort.is_array or any(key(s) != key(node.sort) for s in arg_sorts):
            fail("operands and result must share one bitvec sort")
    elif op in COMPARE_OPS:
        if key(node.sort) != ("bitvec", 1):
            fail("comparison result must be 1-bit")
        if key(arg_sorts[0]) != key(arg_sorts[1]) or sorts[arg_sorts[0]].is_array:
            fail("compared operands must share one bitvec sort")
    elif op == "ite":
        if key(arg_sorts[0]) != ("bitvec", 1):
            fail("ite condition must be 1-bit")
        if key(arg_sorts[1]) != key(node.sort) or key(arg_sorts[2]) != key(node.sort):
            fail("ite branches must match result sort")
    elif op == "uext":
        src = sorts[arg_sorts[0]]
        if sort.is_array or src.is_array or node.literals[0] < 0:
            fail("uext operands must be bitvecs")
        if sort.width != src.width + node.literals[0]:
            fail("result width must equal operand width plus extension")
    elif op == "slice":
        src = sorts[arg_sorts[0]]
        upper, lower = node.literals
        if src.is_array or sort.is_array:
            fail("slice operands must be bitvecs")
        if not 0 <= lower <= upper < src.width:
            fail(f"slice bounds {upper}..{lower} out of range")
        if sort.width != upper - lower + 1:
            fail("result width must equal upper - lower + 1")
    elif op == "read":
        mem = sorts[arg_sorts[0]]
        if not mem.is_array:
            fail("first operand must be an array")
        if key(arg_sorts[1]) != key(mem.index) or key(node.sort) != key(mem.element):
            fail("index/element sorts do not match array")
    elif op == "write":
        mem = sorts[arg_sorts[0]]
        if not mem.is_array or key(node.sort) != key(arg_sorts[0]):
            fail("result and first operand must be the same array sort")
        if key(arg_sorts[1]) != key(mem.index) or key(arg_sorts[2]) != key(mem.element):
            fail("index/element sorts do not match array")


# --------------------------------------------------------------------------
# printing


def format_btor2(model: TransitionModel) -> str:
    lines = []
    for nid in sorted(itertools.chain(model.sorts, model.nodes)):
        if nid in model.sorts:
            s = model.sorts[nid]
            if s.is_array:
                lines.append(f"{nid} sort array {s.index} {s.element}")
            else:
                lines.append(f"{nid} sort bitvec {s.width}")
            continue
        node = model.nodes[nid]
        parts = [str(nid), node.op]
        if node.sort is not None:
            parts.append(str(node.sort))
        parts.extend(str(a) for a in node.args)
        if node.op in ("constd", "const", "consth"):
            width = model.sorts[node.sort].width
            value = node.literals[0]
            if node.op == "const":
                parts.append(format(value, f"0{width}b"))
            elif node.op == "consth":
                parts.append(format(value, "x"))
            else:
                parts.append(str(value))
        else:
            parts.extend(str(v) for v in node.literals)
        if node.symbol:
            parts.append(node.symbol)
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# demand-driven evaluation shared by the simulator and the bit blaster


def demand_evaluate(
    model: TransitionModel,
    roots: Iterable[int],
    memo: dict,
    compute: Callable[[Node, dict], object],
    known_bit: Callable[[object], int | None],
) -> None:
    """Evaluate ``roots`` into ``memo`` without recursion.

    ``known_bit(value)`` returns 0/1 when a 1-bit value is statically known;
    ``ite`` then only demands the selected branch and a 1-bit ``and`` skips
    its second operand when the first one is known to be 0.
    """
    nodes = model.nodes
    stack = [r for r in reversed(list(roots)) if r not in memo]
    while stack:
        nid = stack[-1]
        if nid in memo:
            stack.pop()
            continue
        node = nodes[nid]
        args = node.args
        op = node.op
        if op == "ite":
            cond = args[0]
            if cond not in memo:
                stack.append(cond)
                continue
            k = known_bit(memo[cond])
            need = (args[1], args[2]) if k is None else ((args[1],) if k else (args[2],))
        elif op == "and" and model.sorts[node.sort].width == 1:
            if args[0] not in memo:
                stack.append(args[0])
                continue
            need = () if known_bit(memo[args[0]]) == 0 else args
        elif op in ("state", "input", "init", "next", "bad"):
            need = ()
        else:
            need = args
        pending = [a for a in need if a not in memo]
        if pending:
            stack.extend(reversed(pending))
            continue
        stack.pop()
        memo[nid] = compute(node, memo)


# --------------------------------------------------------------------------
# concrete simulation


class ArrayValue:
    """Sparse array with a default element."""

    __slots__ = ("default", "entries")

    def __init__(self, default: int = 0, entries: Mapping[int, int] | None = None):
        self.default = default
        self.entries = dict(entries or {})

    def read(self, index: int) -> int:
        return self.entries.get(index, self.default)

    def write(self, index: int, value: int) -> "ArrayValue":
        entries = dict(self.entries)
        entries[index] = value
        return ArrayValue(self.default, entries)

    def __eq__(self, other):
        if not isinstance(other, ArrayValue):
            return NotImplemented
        keys = self.entries.keys() | other.entries.keys()
        return self.default == other.default and all(self.read(k) == other.read(k) for k in keys)

    def __repr__(self):
        return f"ArrayValue(default={self.default}, entries={self.entries})"


@dataclass
class SimState:
    assignment: dict[int, int | ArrayValue]
    step_index: int = 0


def _sim_known_bit(value):
    return value if isinstance(value, int) else None


def _udiv(a: int, b: int, mask: int) -> int:
    return a // b if b else mask


def _urem(a: int, b: int) -> int:
    return a % b if b else a


def evaluate_nodes(
    model: TransitionModel,
    state: Mapping[int, int | ArrayValue],
    inputs: Mapping[int, int],
    roots: Iterable[int],
    memo: dict | None = None,
) -> dict:
    """Concrete values of ``roots`` (and everything they demand)."""
    memo = {} if memo is None else memo
    sorts = model.sorts

    def compute(node: Node, memo: dict):
        op = node.op
        a = node.args
        if op == "state":
            try:
                return state[node.nid]
            except KeyError:
                raise SimulationError(f"state {node.nid} has no value") from None
        if op == "input":
            try:
                value = inputs[node.nid]
            except KeyError:
                raise MissingInputError(f"missing value for input {node.nid}") from None
            width = sorts[node.sort].width
            if not 0 <= value < 1 << width:
                raise SimulationError(f"input {node.nid} value {value} does not fit {width} bits")
            return value
        if op == "zero":
            return 0
        if op == "one":
            return 1
        if op in ("constd", "const", "consth"):
            return node.literals[0]
        sort = sorts[node.sort]
        if op == "ite":
            c = memo[a[0]]
            return memo[a[1]] if c else memo[a[2]]
        if op == "read":
            return memo[a[0]].read(memo[a[1]])
        if op == "write":
            return memo[a[0]].write(memo[a[1]], memo[a[2]])
        mask = (1 << sort.width) - 1
        x = memo[a[0]]
        if op == "not":
            return ~x & mask
        if op == "inc":
            return (x + 1) & mask
        if op == "dec":
            return (x - 1) & mask
        if op == "uext":
            return x
        if op == "slice":
            return (x >> node.literals[1]) & mask
        if op == "and":
            if a[1] not in memo:  # short-circuited 1-bit and
                return 0
            return x & memo[a[1]]
        y = memo[a[1]]
        if op == "add":
            return (x + y) & mask
        if op == "sub":
            return (x - y) & mask
        if op == "mul":
            return (x * y) & mask
        if op == "udiv":
            return _udiv(x, y, mask)
        if op == "urem":
            return _urem(x, y)
        if op == "ult":
            return int(x < y)
        if op == "ulte":
            return int(x <= y)
        if op == "ugt":
            return int(x > y)
        if op == "ugte":
            return int(x >= y)
        if op == "eq":
            return int(x == y)
        if op == "neq":
            return int(x != y)
        raise SimulationError(f"cannot evaluate {op}")

    demand_evaluate(model, roots, memo, compute, _sim_known_bit)
    return memo


def initial_state(model: TransitionModel, free: Mapping[int, int | ArrayValue] | None = None) -> SimState:
    """Initial state from ``init`` lines; uninitialized states come from ``free``."""
    free = free or {}
    assignment: dict[int, int | ArrayValue] = {}
    for s in model.states:
        sort = model.sort_of(s)
        if s in model.init_of:
            value = evaluate_nodes(model, {}, {}, [model.init_of[s]])[model.init_of[s]]
            if sort.is_array and isinstance(value, int):
                value = ArrayValue(value)
        elif s in free:
            value = free[s]
            if sort.is_array and isinstance(value, int):
                value = ArrayValue(value)
        else:
            raise SimulationError(f"state {s} has no init and no free value")
        assignment[s] = value
    return SimState(assignment, 0)


_EXPRESSIONS = {
    "not": "~{0} & {mask}", "inc": "({0} + 1) & {mask}", "dec": "({0} - 1) & {mask}", "uext": "{0}",
    "slice": "({0} >> {lo}) & {mask}", "and": "{0} & {1}", "add": "({0} + {1}) & {mask}",
    "sub": "({0} - {1}) & {mask}", "mul": "({0} * {1}) & {mask}", "udiv": "({0} // {1} if {1} else {mask})",
    "urem": "({0} % {1} if {1} else {0})", "ult": "int({0} < {1})", "ulte": "int({0} <= {1})",
    "ugt": "int({0} > {1})", "ugte": "int({0} >= {1})", "eq": "int({0} == {1})", "neq": "int({0} != {1})",
    "ite": "({1} if {0} else {2})", "read": "{0}.read({1})", "write": "{0}.write({1}, {2})",
}


def _compiled_step(model: TransitionModel, with_next: bool):
    """Straight-line evaluator for bad flags (and next values) with every input present.

    All operators are total, so evaluating eagerly gives the demand-driven
    results; a missing input surfaces as ``KeyError``.
    """
    if with_next in model._compiled:
        return model._compiled[with_next]
    conds = [model.bad_condition(b) for b in model.bads]
    nexts = [(s, model.next_of[s]) for s in model.states if s in model.next_of] if with_next else []
    needed: set[int] = set()
    todo = conds + [v for _, v in nexts]
    while todo:
        nid = todo.pop()
        if nid not in needed:
            needed.add(nid)
            if model.nodes[nid].op not in ("state", "input"):
                todo.extend(model.nodes[nid].args)
    lines = ["def step(S, I):"]
    for nid in sorted(needed):
        node = model.nodes[nid]
        op = node.op
        if op == "state":
            expr = f"S[{nid}]"
        elif op == "input":
            width = model.sorts[node.sort].width
            lines.append(f"    v{nid} = I[{nid}]")
            lines.append(f"    if not 0 <= v{nid} < {1 << width}: _range({nid}, v{nid}, {width})")
            continue
        elif op in ("zero", "one", "constd", "const", "consth"):
            expr = str({"zero": 0, "one": 1}.get(op, node.literals[0] if node.literals else 0))
        elif op in _EXPRESSIONS:
            sort = model.sorts[node.sort]
            mask = (1 << sort.width) - 1 if sort.width else 0
            lo = node.literals[1] if op == "slice" else 0
            expr = _EXPRESSIONS[op].format(*(f"v{a}" for a in node.args), mask=mask, lo=lo)
        else:
            model._compiled[with_next] = None
            return None
        lines.append(f"    v{nid} = {expr}")
    flags = ", ".join(f"{b}: bool(v{c})" for b, c in zip(model.bads, conds))
    values = ", ".join(f"{s}: v{v}" for s, v in nexts)
    lines.append(f"    return {{{flags}}}, {{{values}}}")
    namespace = {"_range": _input_range_error}
    exec(compile("\n".join(lines), "<btor2 step>", "exec"), namespace)
    model._compiled[with_next] = namespace["step"]
    return namespace["step"]


def _input_range_error(nid: int, value: int, width: int):
    raise SimulationError(f"input {nid} value {value} does not fit {width} bits")


def step_model(
    model: TransitionModel, state: SimState, inputs: Mapping[int, int]
) -> tuple[SimState, dict[int, bool]]:
    """One transition. Bad flags are evaluated on the pre-transition state."""
    fast = _compiled_step(model, True)
    if fast is not None:
        try:
            flags, values = fast(state.assignment, inputs)
        except KeyError:
            pass  # a missing input; the demand-driven path only fails if the input is needed
        else:
            assignment = dict(state.assignment)
            assignment.update(values)
            return SimState(assignment, state.step_index + 1), flags
    memo: dict = {}
    conds = [model.bad_condition(b) for b in model.bads]
    nexts = [model.next_of[s] for s in model.states if s in model.next_of]
    evaluate_nodes(model, state.assignment, inputs, conds + nexts, memo)
    flags = {b: bool(memo[c]) for b, c in zip(model.bads, conds)}
    assignment = dict(state.assignment)
    for s in model.states:
        if s in model.next_of:
            assignment[s] = memo[model.next_of[s]]
    return SimState(assignment, state.step_index + 1), flags


def bad_flags(model: TransitionModel, state: SimState, inputs: Mapping[int, int]) -> dict[int, bool]:
    fast = _compiled_step(model, False)
    if fast is not None:
        try:
            return fast(state.assignment, inputs)[0]
        except KeyError:
            pass
    conds = [model.bad_condition(b) for b in model.bads]
    memo = evaluate_nodes(model, state.assignment, inputs, conds)
    return {b: bool(memo[c]) for b, c in zip(model.bads, conds)}


def first_bad(
    model: TransitionModel,
    inputs: Sequence[Mapping[int, int]],
    initial: Mapping[int, int] | None = None,
) -> tuple[int, tuple[int, ...]] | None:
    """Run the model on ``inputs`` (one map per step, steps ``0..len-1``).

    Returns ``(step, bad nids)`` for the first step with a true bad flag.
    """
    state = initial_state(model, initial)
    for step, step_inputs in enumerate(inputs):
        if step == len(inputs) - 1:
            flags = bad_flags(model, state, step_inputs)
        else:
            nxt, flags = step_model(model, state, step_inputs)
        hit = tuple(b for b, f in flags.items() if f)
        if hit:
            return step, hit
        if step < len(inputs) - 1:
            state = nxt
    return None


# --------------------------------------------------------------------------
# exhaustive reachability oracle


class EnumerationLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class Witness:
    step: int
    inputs: tuple[dict[int, int], ...]
    bads: tuple[int, ...]
    initial: dict[int, int] = field(default_factory=dict)


def brute_force_reachability(
    model: TransitionModel,
    n: int,
    input_domain: Mapping[int, Sequence[int]] | None = None,
    limit: int = 1 << 20,
) -> list[Witness]:
    """All input prefixes that hit a bad state within ``n`` transitions.

    Each witness ends at its earliest bad step; longer sequences sharing that
    prefix are not reported again. Uninitialized states are enumerated as
    part of the initial choice.
    """
    input_domain = dict(input_domain or {})

    def domain(nid):
        if nid in input_domain:
            return list(input_domain[nid])
        if model.sort_of(nid).is_array:
            raise EnumerationLimitError(f"cannot enumerate array state {nid}")
        return range(1 << model.width(nid))

    free_states = [s for s in model.states if s not in model.init_of]
    initial_choices = [domain(s) for s in free_states]
    step_choices = [domain(i) for i in model.inputs]
    total = 1
    for d in initial_choices:
        total *= len(d)
    per_step = 1
    for d in step_choices:
        per_step *= len(d)
    total *= per_step ** (n + 1)
    if total > limit:
        raise EnumerationLimitError(f"{total} sequences exceed the limit of {limit}")

    witnesses: list[Witness] = []
    combos = [dict(zip(model.inputs, values)) for values in itertools.product(*step_choices)]

    def explore(state: SimState, prefix: list[dict[int, int]], initial: dict[int, int]):
        step = len(prefix)
        for inputs in combos:
            if step < n:
                nxt, flags = step_model(model, state, inputs)
            else:
                flags = bad_flags(model, state, inputs)
            hit = tuple(b for b, f in flags.items() if f)
            if hit:
                witnesses.append(Witness(step, tuple(prefix + [inputs]), hit, dict(initial)))
            elif step < n:
                explore(nxt, prefix + [inputs], initial)

    for values in itertools.product(*initial_choices):
        initial = dict(zip(free_states, values))
        explore(initial_state(model, initial), [], initial)
    return witnesses
