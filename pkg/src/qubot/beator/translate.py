"""Translate a RISC-U program into a 32-bit per-word-memory BTOR2 model.

Registers, memory words, pc flags, the kernel-mode flag and the brk/fd bump
pointers are bitvector states. Every memory word the program may touch (the
data segment, the heap up to its allowance and the stack down to its
allowance) is its own 32-bit state, so no array sorts are emitted. Loads and
stores compare the access address against every word address.

Header nids are fixed (1 .. 94); every other line is numbered sequentially
from 100 in emission order, which makes the output deterministic.
"""
from __future__ import annotations

from collections import defaultdict

from .riscu import (ARITHMETIC, BAD_LABELS, CODE_START, HIGHEST_ADDRESS, REGISTER_NAMES, SYSCALL_BRK,
                    SYSCALL_EXIT, SYSCALL_OPENAT, SYSCALL_READ, SYSCALL_WRITE, RiscUProgram, emulate)

FIRST_NID = 100

SORT_BOOL, SORT_WORD, SORT_PHYSICAL = 1, 2, 6
FALSE, TRUE = 10, 11
ZERO, ONE, TWO, THREE, FOUR = 20, 21, 22, 23, 24
DATA_START, DATA_END, HEAP_START, INITIAL_BREAK, ALLOWED_HEAP_END, ALLOWED_STACK_START = 30, 31, 32, 33, 34, 35
HIGHEST = 50
KERNEL_MODE, NOT_KERNEL_MODE = 60, 62
INPUT_1_BYTE, INPUT_2_BYTES, INPUT_3_BYTES, INPUT_4_BYTES = 81, 82, 83, 94
UEXT_1_BYTE, UEXT_2_BYTES, UEXT_3_BYTES = 91, 92, 93
INPUT_NIDS = {1: INPUT_1_BYTE, 2: INPUT_2_BYTES, 3: INPUT_3_BYTES, 4: INPUT_4_BYTES}

A0, A1, A2, A7, SP, RA = 10, 11, 12, 17, 2, 1


class TranslationError(ValueError):
    pass


class _Emitter:
    def __init__(self):
        self.lines: list[str] = []
        self.next_nid = FIRST_NID

    def fixed(self, nid: int, text: str, comment: str | None = None) -> int:
        self.lines.append(f"{nid} {text}" + (f" ; {comment}" if comment else ""))
        return nid

    def __call__(self, *fields, comment: str | None = None) -> int:
        nid = self.next_nid
        self.next_nid += 1
        self.fixed(nid, " ".join(str(f) for f in fields), comment)
        return nid

    def blank(self, comment: str | None = None):
        self.lines.append(f"; {comment}" if comment else "")


def reachable_pcs(program: RiscUProgram) -> list[int]:
    """Static control-flow closure from the entry point."""
    seen = set()
    todo = [program.entry]
    while todo:
        pc = todo.pop()
        if pc in seen or program.instruction_at(pc) is None:
            continue
        seen.add(pc)
        ins = program.instruction_at(pc)
        if ins.op == "beq":
            todo += [pc + ins.imm, pc + 4]
        elif ins.op == "jal":
            todo.append(pc + ins.imm)
            if ins.rd:
                todo.append(pc + 4)
        elif ins.op != "jalr":
            todo.append(pc + 4)
    return sorted(seen)


def translate_beator(program: RiscUProgram) -> str:
    e = _Emitter()
    reachable = reachable_pcs(program)
    is_reachable = set(reachable).__contains__
    physical = program.physical_addresses()

    # header
    e.fixed(1, "sort bitvec 1", "flag")
    e.fixed(2, "sort bitvec 32", "register width")
    e.fixed(6, f"sort bitvec {max(1, (len(physical) - 1).bit_length())}", "bits to index every memory word")
    e.blank()
    e.fixed(FALSE, "zero 1")
    e.fixed(TRUE, "one 1")
    e.blank()
    e.fixed(ZERO, "zero 2")
    e.fixed(ONE, "one 2")
    e.fixed(TWO, "constd 2 2")
    e.fixed(THREE, "constd 2 3")
    e.fixed(FOUR, "constd 2 4")
    e.blank()
    e.fixed(DATA_START, f"constd 2 {program.data_start}", f"data start 0x{program.data_start:X}")
    e.fixed(DATA_END, f"constd 2 {program.data_end}", f"data end 0x{program.data_end:X}")
    e.fixed(HEAP_START, f"constd 2 {program.heap_start}", f"heap start 0x{program.heap_start:X}")
    e.fixed(INITIAL_BREAK, f"constd 2 {program.initial_break}", f"initial break 0x{program.initial_break:X}")
    e.fixed(ALLOWED_HEAP_END, f"constd 2 {program.allowed_heap_end}",
            f"heap limit 0x{program.allowed_heap_end:X}")
    e.fixed(ALLOWED_STACK_START, f"constd 2 {program.allowed_stack_start}",
            f"stack limit 0x{program.allowed_stack_start:X}")
    e.blank()
    e.fixed(HIGHEST, f"constd 2 {HIGHEST_ADDRESS}", "top word 0xFFFFFFFC")
    e.blank()
    e.fixed(KERNEL_MODE, "state 1 kernel-mode")
    e.fixed(61, f"init 1 {KERNEL_MODE} {FALSE} kernel-mode", "user mode at start")
    e.fixed(NOT_KERNEL_MODE, f"not 1 {KERNEL_MODE}")
    e.blank()
    e.fixed(71, "sort bitvec 8")
    e.fixed(72, "sort bitvec 16")
    e.fixed(73, "sort bitvec 24")
    e.blank()
    e.fixed(INPUT_1_BYTE, "input 71 1-byte-input")
    e.fixed(INPUT_2_BYTES, "input 72 2-byte-input")
    e.fixed(INPUT_3_BYTES, "input 73 3-byte-input")
    e.blank()
    e.fixed(UEXT_1_BYTE, f"uext 2 {INPUT_1_BYTE} 24", "zero-extended 1-byte chunk")
    e.fixed(UEXT_2_BYTES, f"uext 2 {INPUT_2_BYTES} 16", "zero-extended 2-byte chunk")
    e.fixed(UEXT_3_BYTES, f"uext 2 {INPUT_3_BYTES} 8", "zero-extended 3-byte chunk")
    e.fixed(INPUT_4_BYTES, "input 2 4-byte-input")

    # registers; every register gets an init so no register is left free
    e.blank("registers")
    values = program.initial_registers()
    initial_value = {r: e("constd 2", values[r]) for r in range(1, 32) if values[r]}
    register = {0: e("zero 2 zero", comment="hard-wired zero")}
    for r in range(1, 32):
        register[r] = e("state 2", REGISTER_NAMES[r])
    flow = dict(register)
    for r in range(1, 32):
        e("init 2", register[r], initial_value.get(r, ZERO), REGISTER_NAMES[r])

    # pc flags
    e.blank("one flag per instruction address")
    flag = {}
    for pc in reachable:
        flag[pc] = e("state 1", f"pc-flag-0x{pc:X}")
        e("init 1", flag[pc], TRUE if pc == program.entry else FALSE)

    # physical memory
    e.blank("memory words")
    vaddr, ram = [], []
    memory = program.initial_memory()
    for p, v in enumerate(physical):
        vaddr.append(e("constd 2", v, comment=f"vaddr 0x{v:X}"))
        value = e("constd 2", memory[v])
        ram.append(e("state 2", f"RAM-word-{p}"))
        e("init 2", ram[p], value)
    write_flow = list(ram)

    # data flow
    e.blank("data flow")
    division_flow = ONE
    remainder_flow = ONE
    access_flow = DATA_START
    ecall_flow = FALSE
    beq_eq, beq_neq, link = {}, {}, {}
    for pc in reachable:
        ins = program.instruction_at(pc)
        op, rd, rs1, rs2 = ins.op, ins.rd, ins.rs1, ins.rs2
        f = flag[pc]
        if op == "lui":
            if rd:
                c = e("constd 2", (ins.imm << 12) & 0xFFFFFFFF)
                flow[rd] = e("ite 2", f, c, flow[rd])
        elif op == "addi":
            if rd:
                c = e("constd 2", ins.imm & 0xFFFFFFFF)
                s = e("add 2", register[rs1], c)
                flow[rd] = e("ite 2", f, s, flow[rd])
        elif op in ARITHMETIC:
            if rd:
                if op == "divu":
                    division_flow = e("ite 2", f, register[rs2], division_flow)
                elif op == "remu":
                    remainder_flow = e("ite 2", f, register[rs2], remainder_flow)
                if op == "sltu":
                    lt = e("ult 1", register[rs1], register[rs2])
                    result = e("uext 2", lt, 31)
                else:
                    word_op = {"divu": "udiv", "remu": "urem"}.get(op, op)
                    result = e(f"{word_op} 2", register[rs1], register[rs2])
                flow[rd] = e("ite 2", f, result, flow[rd])
        elif op == "lw":
            if rd:
                imm = e("constd 2", ins.imm & 0xFFFFFFFF)
                address = e("add 2", register[rs1], imm)
                access_flow = e("ite 2", f, address, access_flow)
                read_flow = ZERO  # segmentation fault checks flag unmapped accesses
                for p in range(len(physical)):
                    at = e("eq 1", address, vaddr[p])
                    read_flow = e("ite 2", at, ram[p], read_flow)
                flow[rd] = e("ite 2", f, read_flow, flow[rd])
        elif op == "sw":
            imm = e("constd 2", ins.imm & 0xFFFFFFFF)
            address = e("add 2", register[rs1], imm)
            access_flow = e("ite 2", f, address, access_flow)
            for p in range(len(physical)):
                at = e("eq 1", address, vaddr[p])
                to = e("ite 2", at, register[rs2], write_flow[p])
                write_flow[p] = e("ite 2", f, to, write_flow[p])
        elif op == "beq":
            beq_eq[pc] = e("eq 1", register[rs1], register[rs2])
            beq_neq[pc] = e("not 1", beq_eq[pc])
        elif op == "jal":
            if rd:
                link[pc] = e("constd 2", pc + 4)
                flow[rd] = e("ite 2", f, link[pc], flow[rd])
        elif op == "ecall":
            ecall_flow = e("ite 1", f, TRUE, ecall_flow)

    # control flow preparation
    control_in: dict[int, list[tuple[str, int, int]]] = defaultdict(list)
    call_return: dict[int, int] = {}
    current_callee = CODE_START
    reg_a7 = 0
    for pc in range(CODE_START, program.code_end, 4):
        ins = program.instruction_at(pc)
        op = ins.op
        if op == "addi" and ins.rs1 == 0 and ins.imm != 0 and ins.rd == A7:
            reg_a7 = ins.imm
        if op == "jalr":
            call_return[current_callee] = pc
            current_callee = pc + 4
        elif op == "ecall":
            if reg_a7 == SYSCALL_EXIT:
                current_callee = pc + 4
            reg_a7 = 0
        if not is_reachable(pc):
            continue
        if op == "beq":
            control_in[pc + ins.imm].append(("beq", pc, beq_eq[pc]))
            control_in[pc + 4].append(("beq", pc, beq_neq[pc]))
        elif op == "jal":
            control_in[pc + ins.imm].append(("jal", pc, 0))
            if ins.rd:
                control_in[pc + 4].append(("jalr", pc + ins.imm, link[pc]))
        elif op != "jalr":
            control_in[pc + 4].append((op, pc, 0))

    # syscalls
    e.blank("syscalls")
    ids = {name: e("constd 2", number, comment=f"SYSCALL_{name.upper()}")
           for name, number in (("exit", SYSCALL_EXIT), ("read", SYSCALL_READ), ("write", SYSCALL_WRITE),
                                ("openat", SYSCALL_OPENAT), ("brk", SYSCALL_BRK))}
    is_syscall = {name: e("eq 1", register[A7], nid) for name, nid in ids.items()}

    exit_active = e("and 1", ecall_flow, is_syscall["exit"], comment="exit requested")
    kernel_flow = e("ite 1", KERNEL_MODE, is_syscall["exit"], exit_active,
                    comment="halted for good once exit runs")

    read_active = e("and 1", ecall_flow, is_syscall["read"], comment="read requested")
    access_flow = e("ite 2", read_active, register[A1], access_flow)
    kernel_flow = e("ite 1", read_active, TRUE, kernel_flow)
    flow[A0] = e("ite 2", read_active, ZERO, flow[A0])
    remaining = e("sub 2", register[A2], register[A0])
    full = e("ugte 1", remaining, FOUR)
    increment = e("ite 2", full, FOUR, remaining)
    is2 = e("eq 1", increment, TWO)
    chunk = e("ite 2", is2, UEXT_2_BYTES, UEXT_1_BYTE)
    is3 = e("eq 1", increment, THREE)
    chunk = e("ite 2", is3, UEXT_3_BYTES, chunk)
    is4 = e("eq 1", increment, FOUR)
    chunk = e("ite 2", is4, INPUT_4_BYTES, chunk)
    cursor = e("add 2", register[A1], register[A0], comment="a1 + a0")
    more = e("ult 1", register[A0], register[A2], comment="a0 < a2")
    go_on = e("and 1", is_syscall["read"], more)
    active_kernel = e("and 1", KERNEL_MODE, go_on, comment="read loop still copying")
    positive = e("ugt 1", increment, ZERO)
    kernel_inc = e("and 1", active_kernel, positive)
    for p in range(len(physical)):
        at = e("eq 1", cursor, vaddr[p])
        into = e("ite 2", at, chunk, write_flow[p])
        write_flow[p] = e("ite 2", kernel_inc, into, write_flow[p])
    moved = e("add 2", register[A0], increment)
    flow[A0] = e("ite 2", active_kernel, moved, flow[A0])
    kernel_flow = e("ite 1", active_kernel, TRUE, kernel_flow)

    write_active = e("and 1", ecall_flow, is_syscall["write"], comment="write requested")
    access_flow = e("ite 2", write_active, register[A1], access_flow)
    flow[A0] = e("ite 2", write_active, register[A2], flow[A0])

    openat_active = e("and 1", ecall_flow, is_syscall["openat"], comment="openat requested")
    access_flow = e("ite 2", openat_active, register[A1], access_flow)
    fd_bump = e("state 2 fd-bump-pointer")
    e("init 2", fd_bump, ONE)
    fd_inc = e("inc 2", fd_bump)
    new_fd = e("ite 2", openat_active, fd_inc, fd_bump)
    e("next 2", fd_bump, new_fd)
    flow[A0] = e("ite 2", openat_active, fd_inc, flow[A0])

    brk_active = e("and 1", ecall_flow, is_syscall["brk"], comment="brk requested")
    brk_bump = e("state 2 brk-bump-pointer")
    e("init 2", brk_bump, INITIAL_BREAK)
    shrink = e("ulte 1", brk_bump, register[A0], comment="brk <= a0")
    free = e("ult 1", register[A0], register[SP], comment="a0 < sp")
    segment = e("and 1", shrink, free)
    low_bits = e("and 2", register[A0], THREE)
    aligned = e("eq 1", low_bits, ZERO)
    valid = e("and 1", segment, aligned)
    ok = e("and 1", brk_active, valid)
    new_brk = e("ite 2", ok, register[A0], brk_bump)
    e("next 2", brk_bump, new_brk)
    invalid = e("not 1", valid)
    fail = e("and 1", brk_active, invalid)
    flow[A0] = e("ite 2", fail, brk_bump, flow[A0])

    e("next 1", KERNEL_MODE, kernel_flow, comment="kernel-mode transition")

    # control flow
    e.blank("control flow")
    for pc in reachable:
        control = FALSE
        for from_is, from_pc, condition in reversed(control_in.get(pc, [])):
            if from_is == "beq":
                active = e("and 1", flag[from_pc], condition)
            elif from_is == "jalr":
                if from_pc not in call_return:
                    raise TranslationError(f"no return instruction found for callee 0x{from_pc:X}")
                ret_pc = call_return[from_pc]
                if not is_reachable(ret_pc):
                    continue
                mask = e("not 2", ONE)
                lsb_reset = e("and 2", register[RA], mask)
                equal = e("eq 1", lsb_reset, condition)
                active = e("and 1", flag[ret_pc], equal)
            elif from_is == "ecall":
                kernel = e("state 1", f"kernel-mode-pc-flag-0x{from_pc:X}")
                e("init 1", kernel, FALSE, comment="not waiting at start")
                stay = e("ite 1", kernel, KERNEL_MODE, flag[from_pc])
                e("next 1", kernel, stay, comment="held while the kernel runs")
                active = e("and 1", kernel, NOT_KERNEL_MODE)
            else:
                active = flag[from_pc]
            control = active if control == FALSE else e("ite 1", active, TRUE, control)
        e("next 1", flag[pc], control)

    # register and memory updates
    e.blank("register transitions")
    for r in range(1, 32):
        e("next 2", register[r], flow[r], REGISTER_NAMES[r])
    e.blank("memory word transitions")
    for p in range(len(physical)):
        e("next 2", ram[p], write_flow[p], f"RAM-word-{p}")

    # bad states
    e.blank("syscall number check")
    check = None
    for name in ("exit", "read", "write", "openat", "brk"):
        other = e("not 1", is_syscall[name])
        check = other if check is None else e("and 1", check, other)
    invalid_id = e("and 1", ecall_flow, check)
    e("bad", invalid_id, "b0", comment=BAD_LABELS["b0"])
    nonzero = e("neq 1", register[A0], ZERO)
    bad_exit = e("and 1", exit_active, nonzero)
    e("bad", bad_exit, "b1", comment=BAD_LABELS["b1"])
    e("bad", e("eq 1", division_flow, ZERO), "b2", comment=BAD_LABELS["b2"])
    e("bad", e("eq 1", remainder_flow, ZERO), "b3", comment=BAD_LABELS["b3"])
    low = e("and 2", access_flow, THREE)
    e("bad", e("neq 1", low, ZERO), "b4", comment=BAD_LABELS["b4"])

    e.blank("segment bounds checks")
    e("bad", e("ult 1", access_flow, DATA_START), "b6", comment=BAD_LABELS["b6"])
    above_data = e("ugte 1", access_flow, DATA_END)
    below_heap = e("ult 1", access_flow, HEAP_START)
    e("bad", e("and 1", above_data, below_heap), "b7",
      comment=BAD_LABELS["b7"])
    above_brk = e("ugte 1", access_flow, brk_bump)
    below_sp = e("ult 1", access_flow, register[SP])
    e("bad", e("and 1", above_brk, below_sp), "b8",
      comment=BAD_LABELS["b8"])
    above_allowed = e("ugte 1", access_flow, ALLOWED_HEAP_END)
    below_brk = e("ult 1", access_flow, brk_bump)
    e("bad", e("and 1", above_allowed, below_brk), "b9",
      comment=BAD_LABELS["b9"])
    above_sp = e("ugte 1", access_flow, register[SP])
    below_allowed = e("ult 1", access_flow, ALLOWED_STACK_START)
    e("bad", e("and 1", above_sp, below_allowed), "b10",
      comment=BAD_LABELS["b10"])
    e("bad", e("ugt 1", access_flow, HIGHEST), "b11", comment=BAD_LABELS["b11"])
    return "\n".join(e.lines) + "\n"


def input_schedule(schedule, steps: int) -> list[dict[int, int]]:
    """Per-step input maps for ``steps`` model steps from an emulator read schedule."""
    out = [{nid: 0 for nid in INPUT_NIDS.values()} for _ in range(steps)]
    for step, nbytes, value in schedule:
        if step < steps:
            out[step][INPUT_NIDS[nbytes]] = value
    return out


def witness_to_bytes(program: RiscUProgram, inputs, step_limit: int | None = None) -> bytes:
    """Console bytes that a model witness feeds to ``program``.

    Which steps read (and how many bytes) depends on earlier bytes, so the
    emulator is rerun until the read schedule stops changing.
    """
    limit = len(inputs) if step_limit is None else step_limit
    data = b""
    for _ in range(len(inputs) + 1):
        outcome = emulate(program, data, limit)
        chunks = bytearray()
        for step, nbytes, _ in outcome.schedule:
            if step >= len(inputs):
                break
            value = inputs[step].get(INPUT_NIDS[nbytes], 0)
            chunks += value.to_bytes(nbytes, "little")
        if bytes(chunks) == data:
            return data
        data = bytes(chunks)
    return data
