"""Instruction semantics written once against :class:`MachineInterface`,
plus trap entry and the fetch-decode-execute drivers."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

from . import isa
from .decode import Decoder, encode
from .isa import Cause, CSRField, ExceptionCause, Instruction, PrivMode, SourceType
from .machine import (
    COMPLETED,
    EARLY_EXIT,
    EndCycle,
    HardFailure,
    Layer,
    MachineInterface,
    Outcome,
    StepOutcome,
)
from .xword import ops as xword_ops
from .xword import sign_extend

EXECUTE = SourceType.EXECUTE

# A handler returns True when it has set the PC itself; otherwise the driver
# advances to pc+4.
Handler = Callable[[MachineInterface, Instruction], "bool | None"]
_HANDLERS: dict[type, Handler] = {}


def _semantics(*classes: type):
    def register(fn: Handler) -> Handler:
        for cls in classes:
            _HANDLERS[cls] = fn
        return fn
    return register


def raise_exception(m: MachineInterface, cause: ExceptionCause):
    """Enter the machine-mode trap handler and abandon the instruction."""
    o = m.ops
    pc = m.get_pc()
    m.set_csr_field(CSRField.MEPC, pc)
    m.set_csr_field(CSRField.MCAUSE_INTERRUPT, 0)
    m.set_csr_field(CSRField.MCAUSE_CODE, int(cause.code))
    m.set_csr_field(CSRField.MTVAL, cause.info & o.mask)
    m.set_csr_field(CSRField.MSTATUS_MPP, int(m.get_priv_mode()))
    m.set_csr_field(CSRField.MSTATUS_MPIE, m.get_csr_field(CSRField.MSTATUS_MIE))
    m.set_csr_field(CSRField.MSTATUS_MIE, 0)
    m.set_priv_mode(PrivMode.MACHINE)
    m.set_pc((m.get_csr_field(CSRField.MTVEC_BASE) << 2) & o.mask)
    m.end_cycle_early()
    raise EndCycle()  # end_cycle_early diverges; guard against platforms that return


def _trap(m: MachineInterface, code: Cause, info: int = 0):
    raise_exception(m, ExceptionCause(code, info))


# --------------------------------------------------------------------------
# RV32I / RV64I


@_semantics(isa.Lui)
def _lui(m, i):
    m.set_register(i.rd, m.ops.from_imm(i.imm20 << 12))


@_semantics(isa.Auipc)
def _auipc(m, i):
    o = m.ops
    m.set_register(i.rd, o.add(m.get_pc(), o.from_imm(i.imm20 << 12)))


@_semantics(isa.Jal)
def _jal(m, i):
    mask = m.ops.mask
    pc = m.get_pc()
    new_pc = (pc + i.jimm20) & mask
    if new_pc & 3:
        _trap(m, Cause.INSTRUCTION_ADDRESS_MISALIGNED, new_pc)
    m.set_register(i.rd, (pc + 4) & mask)
    m.set_pc(new_pc)
    return True


@_semantics(isa.Jalr)
def _jalr(m, i):
    o = m.ops
    x = m.get_register(i.rs1)
    pc = m.get_pc()
    new_pc = o.add(x, o.from_imm(i.oimm12)) & ~1
    if o.remu(new_pc, 4) != 0:
        _trap(m, Cause.INSTRUCTION_ADDRESS_MISALIGNED, new_pc)
    m.set_register(i.rd, o.add(pc, 4))
    m.set_pc(new_pc)
    return True


def _take_branch(m, i):
    o = m.ops
    new_pc = o.add(m.get_pc(), o.from_imm(i.sbimm12))
    if new_pc & 3:
        _trap(m, Cause.INSTRUCTION_ADDRESS_MISALIGNED, new_pc)
    m.set_pc(new_pc)
    return True


@_semantics(isa.Beq)
def _beq(m, i):
    if m.get_register(i.rs1) == m.get_register(i.rs2):
        return _take_branch(m, i)


@_semantics(isa.Bne)
def _bne(m, i):
    if m.get_register(i.rs1) != m.get_register(i.rs2):
        return _take_branch(m, i)


@_semantics(isa.Blt)
def _blt(m, i):
    if m.ops.slt(m.get_register(i.rs1), m.get_register(i.rs2)):
        return _take_branch(m, i)


@_semantics(isa.Bge)
def _bge(m, i):
    if not m.ops.slt(m.get_register(i.rs1), m.get_register(i.rs2)):
        return _take_branch(m, i)


@_semantics(isa.Bltu)
def _bltu(m, i):
    if m.get_register(i.rs1) < m.get_register(i.rs2):
        return _take_branch(m, i)


@_semantics(isa.Bgeu)
def _bgeu(m, i):
    if m.get_register(i.rs1) >= m.get_register(i.rs2):
        return _take_branch(m, i)


# (primitive name, access size, sign-extend?)
_LOADS = {
    isa.Lb: ("load_byte", 1, True),
    isa.Lh: ("load_half", 2, True),
    isa.Lw: ("load_word", 4, True),
    isa.Ld: ("load_double", 8, False),
    isa.Lbu: ("load_byte", 1, False),
    isa.Lhu: ("load_half", 2, False),
    isa.Lwu: ("load_word", 4, False),
}


@_semantics(*_LOADS)
def _load(m, i):
    o = m.ops
    primitive, size, signed = _LOADS[type(i)]
    addr = o.add(m.get_register(i.rs1), o.from_imm(i.oimm12))
    if addr & (size - 1):
        _trap(m, Cause.LOAD_ADDRESS_MISALIGNED, addr)
    value = getattr(m, primitive)(EXECUTE, addr)
    if signed:
        value = sign_extend(value, 8 * size) & o.mask
    m.set_register(i.rd, value)


_STORES = {
    isa.Sb: ("store_byte", 1),
    isa.Sh: ("store_half", 2),
    isa.Sw: ("store_word", 4),
    isa.Sd: ("store_double", 8),
}


@_semantics(*_STORES)
def _store(m, i):
    o = m.ops
    primitive, size = _STORES[type(i)]
    addr = o.add(m.get_register(i.rs1), o.from_imm(i.simm12))
    if addr & (size - 1):
        _trap(m, Cause.STORE_ADDRESS_MISALIGNED, addr)
    value = m.get_register(i.rs2) & ((1 << (8 * size)) - 1)
    getattr(m, primitive)(EXECUTE, addr, value)


_IMM_OPS = {
    isa.Addi: "add", isa.Slti: "slt", isa.Sltiu: "sltu",
    isa.Xori: "xor", isa.Ori: "or_", isa.Andi: "and_",
}


@_semantics(isa.Addi)
def _addi(m, i):
    # hot path of every counting loop, kept free of dictionary lookups
    m.set_register(i.rd, (m.get_register(i.rs1) + i.imm12) & m.ops.mask)


@_semantics(isa.Slti, isa.Sltiu, isa.Xori, isa.Ori, isa.Andi)
def _imm_op(m, i):
    o = m.ops
    op = getattr(o, _IMM_OPS[type(i)])
    m.set_register(i.rd, op(m.get_register(i.rs1), o.from_imm(i.imm12)))


_SHIFT_IMM_OPS = {isa.Slli: "sll", isa.Srli: "srl", isa.Srai: "sra"}


@_semantics(*_SHIFT_IMM_OPS)
def _shift_imm(m, i):
    o = m.ops
    op = getattr(o, _SHIFT_IMM_OPS[type(i)])
    m.set_register(i.rd, op(m.get_register(i.rs1), i.shamt))


_REG_OPS = {
    isa.Add: "add", isa.Sub: "sub", isa.Sll: "sll", isa.Slt: "slt", isa.Sltu: "sltu",
    isa.Xor: "xor", isa.Srl: "srl", isa.Sra: "sra", isa.Or: "or_", isa.And: "and_",
    isa.Mul: "mul", isa.Mulh: "mulh", isa.Mulhsu: "mulhsu", isa.Mulhu: "mulhu",
    isa.Div: "div", isa.Divu: "divu", isa.Rem: "rem", isa.Remu: "remu",
}


@_semantics(*_REG_OPS)
def _reg_op(m, i):
    op = getattr(m.ops, _REG_OPS[type(i)])
    x = m.get_register(i.rs1)
    y = m.get_register(i.rs2)
    m.set_register(i.rd, op(x, y))


# The *W instructions operate on the low 32 bits and sign-extend the result.
_W32 = xword_ops(32)
_W_OPS = {
    isa.Addw: _W32.add, isa.Subw: _W32.sub, isa.Sllw: _W32.sll, isa.Srlw: _W32.srl,
    isa.Sraw: _W32.sra, isa.Mulw: _W32.mul, isa.Divw: _W32.div, isa.Divuw: _W32.divu,
    isa.Remw: _W32.rem, isa.Remuw: _W32.remu,
}


@_semantics(*_W_OPS)
def _reg_op_w(m, i):
    o = m.ops
    x = m.get_register(i.rs1) & 0xFFFFFFFF
    y = m.get_register(i.rs2) & 0xFFFFFFFF
    m.set_register(i.rd, o.sign_extend_w(_W_OPS[type(i)](x, y)))


_W_IMM_OPS = {isa.Addiw: _W32.add, isa.Slliw: _W32.sll, isa.Srliw: _W32.srl, isa.Sraiw: _W32.sra}


@_semantics(*_W_IMM_OPS)
def _imm_op_w(m, i):
    o = m.ops
    imm = i.imm12 if isinstance(i, isa.IType) else i.shamt
    x = m.get_register(i.rs1) & 0xFFFFFFFF
    m.set_register(i.rd, o.sign_extend_w(_W_IMM_OPS[type(i)](x, imm & 0xFFFFFFFF)))


@_semantics(isa.Fence)
def _fence(m, i):
    m.fence(i.pred, i.succ, i.fm)


@_semantics(isa.Ecall)
def _ecall(m, i):
    if m.get_priv_mode() is PrivMode.USER:
        _trap(m, Cause.ECALL_FROM_U)
    _trap(m, Cause.ECALL_FROM_M)


@_semantics(isa.Ebreak)
def _ebreak(m, i):
    _trap(m, Cause.BREAKPOINT)


@_semantics(isa.InvalidInstruction)
def _invalid(m, i):
    _trap(m, Cause.ILLEGAL_INSTRUCTION, i.raw)


# --------------------------------------------------------------------------
# Zicsr and machine mode


def _illegal(m, i):
    _trap(m, Cause.ILLEGAL_INSTRUCTION, encode(i))


def read_csr(m: MachineInterface, csr12: int) -> int | None:
    """Assemble a CSR register from its fields; None if unsupported."""
    g = m.get_csr_field
    if csr12 == isa.CSR_MSTATUS:
        return g(CSRField.MSTATUS_MIE) << 3 | g(CSRField.MSTATUS_MPIE) << 7 | g(CSRField.MSTATUS_MPP) << 11
    if csr12 == isa.CSR_MTVEC:
        return g(CSRField.MTVEC_BASE) << 2
    if csr12 == isa.CSR_MSCRATCH:
        return g(CSRField.MSCRATCH)
    if csr12 == isa.CSR_MEPC:
        return g(CSRField.MEPC)
    if csr12 == isa.CSR_MCAUSE:
        return g(CSRField.MCAUSE_INTERRUPT) << (m.xlen - 1) | g(CSRField.MCAUSE_CODE)
    if csr12 == isa.CSR_MTVAL:
        return g(CSRField.MTVAL)
    return None


def write_csr(m: MachineInterface, csr12: int, value: int) -> None:
    s = m.set_csr_field
    if csr12 == isa.CSR_MSTATUS:
        s(CSRField.MSTATUS_MIE, value >> 3 & 1)
        s(CSRField.MSTATUS_MPIE, value >> 7 & 1)
        if value >> 11 & 3 in (PrivMode.USER, PrivMode.MACHINE):
            s(CSRField.MSTATUS_MPP, value >> 11 & 3)
    elif csr12 == isa.CSR_MTVEC:
        s(CSRField.MTVEC_BASE, value >> 2)
    elif csr12 == isa.CSR_MSCRATCH:
        s(CSRField.MSCRATCH, value)
    elif csr12 == isa.CSR_MEPC:
        s(CSRField.MEPC, value)
    elif csr12 == isa.CSR_MCAUSE:
        s(CSRField.MCAUSE_INTERRUPT, value >> (m.xlen - 1) & 1)
        s(CSRField.MCAUSE_CODE, value)
    elif csr12 == isa.CSR_MTVAL:
        s(CSRField.MTVAL, value)


_CSR_SOURCES = {
    isa.Csrrw: "w", isa.Csrrs: "s", isa.Csrrc: "c",
    isa.Csrrwi: "w", isa.Csrrsi: "s", isa.Csrrci: "c",
}


@_semantics(*_CSR_SOURCES)
def _csr(m, i):
    if m.get_priv_mode() is not PrivMode.MACHINE:
        _illegal(m, i)
    old = read_csr(m, i.csr12)
    if old is None:
        _illegal(m, i)
    kind = _CSR_SOURCES[type(i)]
    if isinstance(i, isa.CsrImmType):
        src_is_zero, operand = i.zimm == 0, i.zimm
    else:
        src_is_zero, operand = i.rs1 == 0, m.get_register(i.rs1)
    if kind == "w":
        write_csr(m, i.csr12, operand)
    elif not src_is_zero:
        write_csr(m, i.csr12, old | operand if kind == "s" else old & ~operand & m.ops.mask)
    m.set_register(i.rd, old)


@_semantics(isa.Mret)
def _mret(m, i):
    if m.get_priv_mode() is not PrivMode.MACHINE:
        _illegal(m, i)
    m.set_pc(m.get_csr_field(CSRField.MEPC))
    m.set_priv_mode(PrivMode(m.get_csr_field(CSRField.MSTATUS_MPP)))
    m.set_csr_field(CSRField.MSTATUS_MIE, m.get_csr_field(CSRField.MSTATUS_MPIE))
    m.set_csr_field(CSRField.MSTATUS_MPIE, 1)
    m.set_csr_field(CSRField.MSTATUS_MPP, int(PrivMode.USER))
    return True


# --------------------------------------------------------------------------
# drivers


def execute_inst(m: MachineInterface, inst: Instruction) -> bool:
    """Run the semantics of ``inst``; True if it set the PC.

    Traps and platform refusals propagate as :class:`EndCycle` and
    :class:`HardFailure`.
    """
    return bool(_HANDLERS[type(inst)](m, inst))


def execute(m: MachineInterface, inst: Instruction) -> StepOutcome:
    try:
        _HANDLERS[type(inst)](m, inst)
    except EndCycle:
        return EARLY_EXIT
    except HardFailure as exc:
        return StepOutcome(Outcome.HARD_FAILURE, exc.reason)
    return COMPLETED


def run1(m: MachineInterface, decoder: Decoder) -> StepOutcome:
    """Fetch, decode and execute one instruction."""
    try:
        pc = m.get_pc()
        if pc & 3:
            _trap(m, Cause.INSTRUCTION_ADDRESS_MISALIGNED, pc)
        inst = decoder(m.load_word(SourceType.FETCH, pc))
        if not _HANDLERS[type(inst)](m, inst):
            m.set_pc((m.get_pc() + 4) & m.ops.mask)
    except EndCycle:
        return EARLY_EXIT
    except HardFailure as exc:
        return StepOutcome(Outcome.HARD_FAILURE, exc.reason)
    return COMPLETED


class Halt(enum.Enum):
    MAX_STEPS = "MaxSteps"
    HARD_FAILURE = "HardFailure"
    TOHOST_WRITE = "TohostWrite"


@dataclass
class RunResult:
    steps_taken: int
    halt_reason: Halt
    value: int | None = None  # tohost value
    reason: str | None = None  # hard-failure code

    def summary(self) -> str:
        line = f"halt={self.halt_reason.value} steps={self.steps_taken}"
        if self.halt_reason is Halt.TOHOST_WRITE:
            line += f" tohost={self.value}"
        elif self.halt_reason is Halt.HARD_FAILURE:
            line += f" reason={self.reason}"
        return line


def run(m: MachineInterface, decoder: Decoder, max_steps: int) -> RunResult:
    """Step until ``max_steps``, a hard failure, or a tohost write.

    Equivalent to calling :func:`run1` repeatedly; the loop body is inlined
    so that a step costs no more than the primitives it calls.  Platforms
    with a tohost address expose ``tohost_value`` (0 until the program writes
    a nonzero word there).
    """
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")
    base = m
    while isinstance(base, Layer):
        base = base.inner
    watch_tohost = getattr(base, "tohost_value", None) is not None
    hook = m.step_started
    if getattr(hook, "__func__", None) is MachineInterface.step_started:
        hook = None
    get_pc, set_pc, load_word = m.get_pc, m.set_pc, m.load_word
    # re-reading the PC is unobservable unless some layer intercepts it
    reuse_pc = getattr(get_pc, "__self__", None) is base
    handlers = _HANDLERS
    decoded: dict[int, tuple[Handler, Instruction]] = {}
    mask = m.ops.mask
    fetch = SourceType.FETCH
    step = 0
    while step < max_steps:
        try:
            while step < max_steps:
                if hook is not None:
                    hook(step)
                step += 1
                pc = get_pc()
                if pc & 3:
                    _trap(m, Cause.INSTRUCTION_ADDRESS_MISALIGNED, pc)
                word = load_word(fetch, pc)
                try:
                    handler, inst = decoded[word]
                except KeyError:
                    inst = decoder(word)
                    handler, inst = decoded[word] = handlers[inst.__class__], inst
                if not handler(m, inst):
                    set_pc(((pc if reuse_pc else get_pc()) + 4) & mask)
                if watch_tohost and base.tohost_value:
                    return RunResult(step, Halt.TOHOST_WRITE, value=base.tohost_value)
        except EndCycle:
            pass
        except HardFailure as exc:
            return RunResult(step, Halt.HARD_FAILURE, reason=exc.reason)
        if watch_tohost and base.tohost_value:
            return RunResult(step, Halt.TOHOST_WRITE, value=base.tohost_value)
    return RunResult(max_steps, Halt.MAX_STEPS)


def register_dump(m: MachineInterface) -> list[str]:
    width = m.xlen // 4
    lines = [f"x{r}={m.get_register(r):0{width}x}" for r in range(32)]
    lines.append(f"pc={m.get_pc():0{width}x}")
    return lines
