"""RISC-U (32-bit) assembler and emulator.

Assembly grammar, one statement per line::

    label:                      define a label (may precede a statement)
    .text / .data               switch section
    .word <int|label>           one 32-bit data word
    .heap <bytes>               heap allowance beyond the initial break
    .stack <bytes>              stack allowance below the initial stack pointer
    .entry <label>              entry point (default: first instruction)
    lui rd,imm                  addi rd,rs1,imm
    lw rd,imm(rs1)              sw rs2,imm(rs1)
    add|sub|mul|divu|remu|sltu rd,rs1,rs2
    beq rs1,rs2,target          jal rd,target
    jalr zero,0(ra)             ecall

A branch target is a label, a byte offset, or ``N[LABEL]`` meaning ``N``
instructions away (the label is checked). Pseudo instructions ``li``, ``la``,
``mv``, ``j``, ``call``, ``ret`` and ``nop`` expand to fixed-length sequences.
Comments start with ``#``, ``;`` or ``//``.

The emulator counts model transitions rather than instructions: an ecall
spends extra transitions in kernel mode exactly as the generated model does,
so its step counts and bad labels line up with the simulator.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

WORD = 32
MASK = (1 << WORD) - 1
PAGE = 4096
CODE_START = 0x10000
HIGHEST_ADDRESS = 0xFFFFFFFC
INITIAL_SP = 0xFFFFFFFC

SYSCALL_EXIT = 93
SYSCALL_READ = 63
SYSCALL_WRITE = 64
SYSCALL_OPENAT = 56
SYSCALL_BRK = 214
SYSCALLS = (SYSCALL_EXIT, SYSCALL_READ, SYSCALL_WRITE, SYSCALL_OPENAT, SYSCALL_BRK)

REGISTER_NAMES = ["zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1",
                  "a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7",
                  "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11",
                  "t3", "t4", "t5", "t6"]
REGISTERS = {name: i for i, name in enumerate(REGISTER_NAMES)}
REGISTERS.update({f"x{i}": i for i in range(32)})
REGISTERS["fp"] = 8

ARITHMETIC = ("add", "sub", "mul", "divu", "remu", "sltu")
MNEMONICS = ("lui", "addi", "lw", "sw", "beq", "jal", "jalr", "ecall") + ARITHMETIC

BAD_LABELS = {
    "b0": "unknown syscall number",
    "b1": "exit with nonzero status",
    "b2": "divu by zero",
    "b3": "remu by zero",
    "b4": "address not a multiple of 4",
    "b6": "address under the data segment",
    "b7": "address past the data segment but under the heap",
    "b8": "address between the program break and the stack pointer",
    "b9": "address between the heap allowance and the program break",
    "b10": "address between the stack pointer and the stack allowance",
    "b11": "address above the top word",
}


class AssemblyError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Instruction:
    op: str
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: int = 0
    line: int = 0

    def __str__(self):
        r = REGISTER_NAMES
        if self.op == "lui":
            return f"lui {r[self.rd]},{self.imm}"
        if self.op == "addi":
            return f"addi {r[self.rd]},{r[self.rs1]},{self.imm}"
        if self.op == "lw":
            return f"lw {r[self.rd]},{self.imm}({r[self.rs1]})"
        if self.op == "sw":
            return f"sw {r[self.rs2]},{self.imm}({r[self.rs1]})"
        if self.op in ARITHMETIC:
            return f"{self.op} {r[self.rd]},{r[self.rs1]},{r[self.rs2]}"
        if self.op == "beq":
            return f"beq {r[self.rs1]},{r[self.rs2]},{self.imm}"
        if self.op == "jal":
            return f"jal {r[self.rd]},{self.imm}"
        if self.op == "jalr":
            return f"jalr {r[self.rd]},{self.imm}({r[self.rs1]})"
        return "ecall"


@dataclass
class RiscUProgram:
    code: list[Instruction]
    data: list[int]
    labels: dict[str, int]
    entry: int = CODE_START
    heap_allowance: int = 0
    stack_allowance: int = 0
    initial_sp: int = INITIAL_SP

    @property
    def code_start(self) -> int:
        return CODE_START

    @property
    def code_end(self) -> int:
        return CODE_START + 4 * len(self.code)

    @property
    def data_start(self) -> int:
        return _page_align(self.code_end)

    @property
    def data_end(self) -> int:
        return self.data_start + 4 * len(self.data)

    @property
    def heap_start(self) -> int:
        return _page_align(self.data_end)

    @property
    def initial_break(self) -> int:
        return self.heap_start

    @property
    def allowed_heap_end(self) -> int:
        return self.heap_start + self.heap_allowance

    @property
    def allowed_stack_start(self) -> int:
        return self.initial_sp - self.stack_allowance

    def instruction_at(self, pc: int) -> Instruction | None:
        if pc % 4 or not CODE_START <= pc < self.code_end:
            return None
        return self.code[(pc - CODE_START) // 4]

    def initial_registers(self) -> list[int]:
        regs = [0] * 32
        regs[2] = self.initial_sp
        return regs

    def initial_memory(self) -> dict[int, int]:
        memory = {a: 0 for a in self.physical_addresses()}
        for i, word in enumerate(self.data):
            memory[self.data_start + 4 * i] = word & MASK
        return memory

    def physical_addresses(self) -> list[int]:
        """Word addresses backed by model state: data, allowed heap, allowed stack."""
        out = []
        v = self.data_start
        while v <= HIGHEST_ADDRESS:
            if v == self.data_end:
                v = self.heap_start
            if v == self.allowed_heap_end:
                v = self.allowed_stack_start
            if v > HIGHEST_ADDRESS:
                break
            out.append(v)
            v += 4
        return out


def _page_align(address: int) -> int:
    return (address + PAGE - 1) // PAGE * PAGE


# --------------------------------------------------------------------------
# assembler

_COMMENT = re.compile(r"(#|;|//).*$")
_MEMORY_OPERAND = re.compile(r"^(-?(?:0x[0-9a-fA-F]+|\d+))?\((\w+)\)$")
_RELATIVE = re.compile(r"^(-?\d+)\[(\w+)\]$")


def _register(token: str, line: int) -> int:
    try:
        return REGISTERS[token.strip()]
    except KeyError:
        raise AssemblyError(f"unknown register {token!r}", line) from None


def _integer(token: str, line: int) -> int:
    try:
        return int(token.strip(), 0)
    except ValueError:
        raise AssemblyError(f"malformed integer {token!r}", line) from None


def _check_range(value: int, bits: int, line: int, what: str, signed: bool = True) -> int:
    lo, hi = (-(1 << (bits - 1)), (1 << (bits - 1)) - 1) if signed else (0, (1 << bits) - 1)
    if not lo <= value <= hi:
        raise AssemblyError(f"{what} {value} out of range [{lo}, {hi}]", line)
    return value


def _split_hi_lo(value: int) -> tuple[int, int]:
    value &= MASK
    hi = ((value + 0x800) >> 12) & 0xFFFFF
    lo = value - (hi << 12)
    if lo >= 0x800:
        lo -= 1 << 32
    lo = ((lo + 0x800) & 0xFFF) - 0x800
    return hi, lo


@dataclass
class _Pending:
    op: str
    args: list[str]
    line: int
    pc: int


def _expand(op: str, args: list[str]) -> list[tuple[str, list[str]]]:
    """Pseudo instructions as (mnemonic, args) sequences of fixed length."""
    if op == "nop":
        return [("addi", ["zero", "zero", "0"])]
    if op == "mv":
        return [("addi", [args[0], args[1], "0"])]
    if op == "j":
        return [("jal", ["zero", args[0]])]
    if op == "call":
        return [("jal", ["ra", args[0]])]
    if op == "ret":
        return [("jalr", ["zero", "0(ra)"])]
    if op in ("li", "la"):
        return [("%hi", args), ("%lo", args)]
    return [(op, args)]


def assemble(text: str) -> RiscUProgram:
    section = "text"
    labels: dict[str, int] = {}
    pending: list[_Pending] = []
    data_items: list[tuple[str, int]] = []
    heap = stack = 0
    entry_label = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _COMMENT.sub("", raw).strip()
        while True:
            m = re.match(r"^([A-Za-z_.$][\w.$]*):\s*(.*)$", body)
            if not m:
                break
            name = m.group(1)
            if name in labels:
                raise AssemblyError(f"duplicate label {name!r}", lineno)
            labels[name] = ("text", len(pending)) if section == "text" else ("data", len(data_items))
            body = m.group(2).strip()
        if not body:
            continue
        parts = body.split(None, 1)
        op = parts[0].lower()
        args = [a.strip() for a in parts[1].split(",")] if len(parts) > 1 else []
        if op == ".text":
            section = "text"
        elif op == ".data":
            section = "data"
        elif op == ".word":
            if section != "data":
                raise AssemblyError(".word outside .data", lineno)
            data_items.extend((a, lineno) for a in args)
        elif op in (".heap", ".stack"):
            amount = _integer(args[0], lineno) if args else -1
            if amount < 0 or amount % 4:
                raise AssemblyError(f"{op} needs a non-negative multiple of 4", lineno)
            if op == ".heap":
                heap = amount
            else:
                stack = amount
        elif op == ".entry":
            entry_label = args[0] if args else None
        elif op.startswith("."):
            raise AssemblyError(f"unknown directive {op}", lineno)
        else:
            if section != "text":
                raise AssemblyError("instruction outside .text", lineno)
            expanded = _expand(op, args)
            for mnemonic, margs in expanded:
                if mnemonic not in MNEMONICS and mnemonic not in ("%hi", "%lo"):
                    raise AssemblyError(f"unknown mnemonic {op!r}", lineno)
                pending.append(_Pending(mnemonic, margs, lineno, CODE_START + 4 * len(pending)))

    code_end = CODE_START + 4 * len(pending)
    data_start = _page_align(code_end)
    if not data_items:
        data_items = [("0", 0)]  # keeps the default access address inside the data segment
    resolved = {}
    for name, (sect, index) in labels.items():
        resolved[name] = CODE_START + 4 * index if sect == "text" else data_start + 4 * index

    def value_of(token: str, line: int) -> int:
        token = token.strip()
        if token in resolved:
            return resolved[token]
        if re.match(r"^-?(0x[0-9a-fA-F]+|\d+)$", token):
            return _integer(token, line)
        raise AssemblyError(f"undefined label {token!r}", line)

    data = [value_of(tok, line) & MASK for tok, line in data_items]
    code = [_encode(p, resolved, value_of) for p in pending]
    entry = CODE_START
    if entry_label is not None:
        if resolved.get(entry_label, -1) not in range(CODE_START, code_end, 4):
            raise AssemblyError(f"entry {entry_label!r} is not a code label")
        entry = resolved[entry_label]
    program = RiscUProgram(code, data, resolved, entry, heap, stack)
    if program.allowed_stack_start <= program.allowed_heap_end:
        raise AssemblyError("heap and stack allowances overlap")
    return program


def _operands(p: _Pending, count: int) -> list[str]:
    if len(p.args) != count:
        raise AssemblyError(f"{p.op} expects {count} operands, got {len(p.args)}", p.line)
    return p.args


def _branch_offset(p: _Pending, token: str, labels: dict[str, int], value_of) -> int:
    token = token.strip()
    m = _RELATIVE.match(token)
    if m:
        offset = int(m.group(1)) * 4
        label = m.group(2)
        if label in labels and labels[label] != p.pc + offset:
            raise AssemblyError(f"offset {m.group(1)} does not reach label {label!r}", p.line)
        return offset
    if token in labels:
        return labels[token] - p.pc
    if re.match(r"^-?(0x[0-9a-fA-F]+|\d+)$", token):
        return _integer(token, p.line)
    raise AssemblyError(f"undefined label {token!r}", p.line)


def _encode(p: _Pending, labels: dict[str, int], value_of) -> Instruction:
    op, line = p.op, p.line
    if op in ("%hi", "%lo"):
        rd = _register(p.args[0], line)
        hi, lo = _split_hi_lo(value_of(p.args[1], line))
        if op == "%hi":
            return Instruction("lui", rd=rd, imm=hi, line=line)
        return Instruction("addi", rd=rd, rs1=rd, imm=lo, line=line)
    if op == "lui":
        rd, imm = _operands(p, 2)
        value = value_of(imm, line)
        if value < 0:
            _check_range(value, 20, line, "lui immediate")
            value &= 0xFFFFF
        imm = _check_range(value, 20, line, "lui immediate", False)
        return Instruction("lui", rd=_register(rd, line), imm=imm, line=line)
    if op == "addi":
        rd, rs1, imm = _operands(p, 3)
        return Instruction("addi", _register(rd, line), _register(rs1, line),
                           imm=_check_range(value_of(imm, line), 12, line, "addi immediate"), line=line)
    if op in ("lw", "sw", "jalr"):
        reg, mem = _operands(p, 2)
        m = _MEMORY_OPERAND.match(mem.replace(" ", ""))
        if not m:
            raise AssemblyError(f"malformed memory operand {mem!r}", line)
        imm = _check_range(_integer(m.group(1) or "0", line), 12, line, f"{op} offset")
        base = _register(m.group(2), line)
        if op == "lw":
            return Instruction("lw", rd=_register(reg, line), rs1=base, imm=imm, line=line)
        if op == "sw":
            return Instruction("sw", rs1=base, rs2=_register(reg, line), imm=imm, line=line)
        rd = _register(reg, line)
        if rd != 0 or imm != 0 or base != REGISTERS["ra"]:
            raise AssemblyError("only 'jalr zero,0(ra)' is supported (rd update unsupported)", line)
        return Instruction("jalr", rd=0, rs1=base, imm=0, line=line)
    if op in ARITHMETIC:
        rd, rs1, rs2 = _operands(p, 3)
        return Instruction(op, _register(rd, line), _register(rs1, line), _register(rs2, line), line=line)
    if op == "beq":
        rs1, rs2, target = _operands(p, 3)
        imm = _branch_offset(p, target, labels, value_of)
        if imm % 4:
            raise AssemblyError("branch offset must be a multiple of 4", line)
        _check_range(imm, 13, line, "beq offset")
        return Instruction("beq", rs1=_register(rs1, line), rs2=_register(rs2, line), imm=imm, line=line)
    if op == "jal":
        if len(p.args) == 1:
            rd, target = "ra", p.args[0]
        else:
            rd, target = _operands(p, 2)
        imm = _branch_offset(p, target, labels, value_of)
        if imm % 4:
            raise AssemblyError("jump offset must be a multiple of 4", line)
        _check_range(imm, 21, line, "jal offset")
        return Instruction("jal", rd=_register(rd, line), imm=imm, line=line)
    if op == "ecall":
        _operands(p, 0)
        return Instruction("ecall", line=line)
    raise AssemblyError(f"unknown mnemonic {op!r}", line)


# --------------------------------------------------------------------------
# emulator


@dataclass
class MachineState:
    pc: int
    regs: list[int]
    memory: dict[int, int]
    brk: int
    fd: int = 1
    kernel_mode: bool = False


@dataclass
class Outcome:
    kind: str  # "exit", "bad" or "limit"
    transitions: int
    instructions_executed: int
    exit_code: int | None = None
    bads: tuple[str, ...] = ()
    pc: int | None = None
    schedule: list[tuple[int, int, int]] = field(default_factory=list)
    output: bytes = b""

    @property
    def bad(self) -> str | None:
        return self.bads[0] if self.bads else None


def access_bads(program: RiscUProgram, state: MachineState, address: int) -> list[str]:
    """Alignment and segment checks for an access starting at ``address``."""
    sp = state.regs[2]
    out = []
    if address & 3:
        out.append("b4")
    if address < program.data_start:
        out.append("b6")
    if program.data_end <= address < program.heap_start:
        out.append("b7")
    if state.brk <= address < sp:
        out.append("b8")
    if program.allowed_heap_end <= address < state.brk:
        out.append("b9")
    if sp <= address < program.allowed_stack_start:
        out.append("b10")
    if address > HIGHEST_ADDRESS:
        out.append("b11")
    return out


def initial_machine(program: RiscUProgram) -> MachineState:
    return MachineState(program.entry, program.initial_registers(), program.initial_memory(),
                        program.initial_break)


def emulate(program: RiscUProgram, input_bytes: bytes = b"", step_limit: int = 100_000) -> Outcome:
    """Run until exit, a bad condition, or ``step_limit`` transitions.

    Missing input bytes read as zero, as in the model where every chunk is a
    free input.
    """
    state = initial_machine(program)
    regs, memory = state.regs, state.memory
    t = 0
    executed = 0
    cursor = 0
    schedule: list[tuple[int, int, int]] = []
    output = bytearray()

    def stop(kind, **kw):
        return Outcome(kind, t, executed, pc=state.pc, schedule=schedule, output=bytes(output), **kw)

    while t <= step_limit:
        ins = program.instruction_at(state.pc)
        if ins is None:
            return stop("limit")
        pc = state.pc
        op = ins.op
        next_pc = pc + 4
        if op == "lui":
            if ins.rd:
                regs[ins.rd] = (ins.imm << 12) & MASK
        elif op == "addi":
            if ins.rd:
                regs[ins.rd] = (regs[ins.rs1] + ins.imm) & MASK
        elif op == "lw":
            if ins.rd:
                address = (regs[ins.rs1] + ins.imm) & MASK
                bads = access_bads(program, state, address)
                if bads:
                    return stop("bad", bads=tuple(bads))
                regs[ins.rd] = memory.get(address, 0)
        elif op == "sw":
            address = (regs[ins.rs1] + ins.imm) & MASK
            bads = access_bads(program, state, address)
            if bads:
                return stop("bad", bads=tuple(bads))
            if address in memory:
                memory[address] = regs[ins.rs2]
        elif op in ARITHMETIC:
            if ins.rd:
                a, b = regs[ins.rs1], regs[ins.rs2]
                if op == "add":
                    v = a + b
                elif op == "sub":
                    v = a - b
                elif op == "mul":
                    v = a * b
                elif op == "divu":
                    if b == 0:
                        return stop("bad", bads=("b2",))
                    v = a // b
                elif op == "remu":
                    if b == 0:
                        return stop("bad", bads=("b3",))
                    v = a % b
                else:
                    v = int(a < b)
                regs[ins.rd] = v & MASK
        elif op == "beq":
            if regs[ins.rs1] == regs[ins.rs2]:
                next_pc = pc + ins.imm
        elif op == "jal":
            if ins.rd:
                regs[ins.rd] = (pc + 4) & MASK
            next_pc = pc + ins.imm
        elif op == "jalr":
            next_pc = (regs[ins.rs1] + ins.imm) & MASK & ~1
        else:
            a7 = regs[17]
            a0, a1, a2 = regs[10], regs[11], regs[12]
            if a7 not in SYSCALLS:
                return stop("bad", bads=("b0",))
            if a7 == SYSCALL_EXIT:
                executed += 1
                if a0:
                    return stop("bad", bads=("b1",), exit_code=a0)
                return stop("exit", exit_code=0)
            if a7 in (SYSCALL_READ, SYSCALL_WRITE, SYSCALL_OPENAT):
                bads = access_bads(program, state, a1)
                if bads:
                    return stop("bad", bads=tuple(bads))
            if a7 == SYSCALL_READ:
                # kernel loop: one transition per chunk of up to 4 bytes
                done = 0
                t += 1  # ecall step; a0 is reset to 0
                while done < a2:
                    if t > step_limit:
                        regs[10] = done
                        return stop("limit")
                    inc = min(4, a2 - done)
                    chunk = input_bytes[cursor:cursor + inc]
                    cursor += inc
                    value = int.from_bytes(chunk.ljust(inc, b"\0"), "little")
                    schedule.append((t, inc, value))
                    target = (a1 + done) & MASK
                    if target in memory:
                        memory[target] = value
                    done += inc
                    t += 1
                regs[10] = done & MASK
                t += 1  # leave kernel mode
            elif a7 == SYSCALL_WRITE:
                for i in range(a2):
                    word = memory.get((a1 + i) & ~3 & MASK, 0)
                    output.append(word >> 8 * ((a1 + i) & 3) & 0xFF)
                regs[10] = a2
            elif a7 == SYSCALL_OPENAT:
                state.fd = (state.fd + 1) & MASK
                regs[10] = state.fd
            else:
                sp = regs[2]
                if state.brk <= a0 < sp and a0 & 3 == 0:
                    state.brk = a0
                else:
                    regs[10] = state.brk
            if a7 != SYSCALL_READ:
                t += 1  # ecall step
            # the successor instruction is activated one transition later
        regs[0] = 0
        state.pc = next_pc & MASK
        executed += 1
        t += 1
    t = step_limit
    return stop("limit")
