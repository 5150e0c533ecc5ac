"""Shared vocabulary: registers, CSR fields, exception causes and the
decoded-instruction datatype."""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields

# ABI register numbers used throughout the handler and tests
ZERO, RA, SP, GP, TP = 0, 1, 2, 3, 4
T0, T1, T2 = 5, 6, 7
A0, A1 = 10, 11
T3, T4, T5, T6 = 28, 29, 30, 31

ABI_NAMES = (
    "zero ra sp gp tp t0 t1 t2 s0 s1 a0 a1 a2 a3 a4 a5 a6 a7 "
    "s2 s3 s4 s5 s6 s7 s8 s9 s10 s11 t3 t4 t5 t6"
).split()


class SourceType(enum.Enum):
    VIRTUAL_MEMORY = "VirtualMemory"
    FETCH = "Fetch"
    EXECUTE = "Execute"


class PrivMode(enum.IntEnum):
    USER = 0
    MACHINE = 3


class CSRField(enum.Enum):
    MTVEC_BASE = "MTVecBase"
    MEPC = "MEPC"
    MCAUSE_CODE = "MCauseCode"
    MCAUSE_INTERRUPT = "MCauseInterrupt"
    MTVAL = "MTVal"
    MSCRATCH = "MScratch"
    MSTATUS_MPP = "MStatusMPP"
    MSTATUS_MPIE = "MStatusMPIE"
    MSTATUS_MIE = "MStatusMIE"

    def width(self, xlen: int) -> int:
        return {
            CSRField.MTVEC_BASE: xlen - 2,
            CSRField.MEPC: xlen,
            CSRField.MCAUSE_CODE: xlen - 1,
            CSRField.MCAUSE_INTERRUPT: 1,
            CSRField.MTVAL: xlen,
            CSRField.MSCRATCH: xlen,
            CSRField.MSTATUS_MPP: 2,
            CSRField.MSTATUS_MPIE: 1,
            CSRField.MSTATUS_MIE: 1,
        }[self]


# 12-bit CSR addresses understood by the Zicsr instructions
CSR_MSTATUS = 0x300
CSR_MTVEC = 0x305
CSR_MSCRATCH = 0x340
CSR_MEPC = 0x341
CSR_MCAUSE = 0x342
CSR_MTVAL = 0x343
SUPPORTED_CSRS = frozenset(
    {CSR_MSTATUS, CSR_MTVEC, CSR_MSCRATCH, CSR_MEPC, CSR_MCAUSE, CSR_MTVAL}
)


class Cause(enum.IntEnum):
    INSTRUCTION_ADDRESS_MISALIGNED = 0
    ILLEGAL_INSTRUCTION = 2
    BREAKPOINT = 3
    LOAD_ADDRESS_MISALIGNED = 4
    STORE_ADDRESS_MISALIGNED = 6
    ECALL_FROM_U = 8
    ECALL_FROM_M = 11


@dataclass(frozen=True)
class ExceptionCause:
    code: Cause
    info: int = 0


# --------------------------------------------------------------------------
# Instruction datatype.  Each concrete class is one variant; operand fields
# are inherited from the format base class.  ``ext`` names the decoder that
# produces it.


@dataclass(frozen=True)
class Instruction:
    ext = "I"

    @property
    def mnemonic(self) -> str:
        return type(self).__name__.lower()

    def operands(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class RType(Instruction):
    rd: int
    rs1: int
    rs2: int


@dataclass(frozen=True)
class IType(Instruction):
    rd: int
    rs1: int
    imm12: int


@dataclass(frozen=True)
class LoadType(Instruction):
    rd: int
    rs1: int
    oimm12: int


@dataclass(frozen=True)
class ShiftType(Instruction):
    rd: int
    rs1: int
    shamt: int


@dataclass(frozen=True)
class StoreType(Instruction):
    rs1: int
    rs2: int
    simm12: int


@dataclass(frozen=True)
class BranchType(Instruction):
    rs1: int
    rs2: int
    sbimm12: int


@dataclass(frozen=True)
class CsrType(Instruction):
    ext = "CSR"
    rd: int
    rs1: int
    csr12: int


@dataclass(frozen=True)
class CsrImmType(Instruction):
    ext = "CSR"
    rd: int
    zimm: int
    csr12: int


@dataclass(frozen=True)
class NoOperands(Instruction):
    pass


# RV32I
@dataclass(frozen=True)
class Lui(Instruction):
    rd: int
    imm20: int


@dataclass(frozen=True)
class Auipc(Instruction):
    rd: int
    imm20: int


@dataclass(frozen=True)
class Jal(Instruction):
    rd: int
    jimm20: int


@dataclass(frozen=True)
class Jalr(Instruction):
    rd: int
    rs1: int
    oimm12: int


class Beq(BranchType): pass
class Bne(BranchType): pass
class Blt(BranchType): pass
class Bge(BranchType): pass
class Bltu(BranchType): pass
class Bgeu(BranchType): pass

class Lb(LoadType): pass
class Lh(LoadType): pass
class Lw(LoadType): pass
class Lbu(LoadType): pass
class Lhu(LoadType): pass

class Sb(StoreType): pass
class Sh(StoreType): pass
class Sw(StoreType): pass

class Addi(IType): pass
class Slti(IType): pass
class Sltiu(IType): pass
class Xori(IType): pass
class Ori(IType): pass
class Andi(IType): pass

class Slli(ShiftType): pass
class Srli(ShiftType): pass
class Srai(ShiftType): pass

class Add(RType): pass
class Sub(RType): pass
class Sll(RType): pass
class Slt(RType): pass
class Sltu(RType): pass
class Xor(RType): pass
class Srl(RType): pass
class Sra(RType): pass
class Or(RType): pass
class And(RType): pass


@dataclass(frozen=True)
class Fence(Instruction):
    """``fm`` distinguishes FENCE.TSO (fm=0b1000) from ordinary fences."""

    pred: int
    succ: int
    fm: int = 0


FENCE_TSO_FM = 0b1000

class Ecall(NoOperands): pass
class Ebreak(NoOperands): pass


# RV64I additions
class _I64:
    ext = "I64"

class Lwu(_I64, LoadType): pass
class Ld(_I64, LoadType): pass
class Sd(_I64, StoreType): pass
class Addiw(_I64, IType): pass
class Slliw(_I64, ShiftType): pass
class Srliw(_I64, ShiftType): pass
class Sraiw(_I64, ShiftType): pass
class Addw(_I64, RType): pass
class Subw(_I64, RType): pass
class Sllw(_I64, RType): pass
class Srlw(_I64, RType): pass
class Sraw(_I64, RType): pass


# M
class _M:
    ext = "M"

class Mul(_M, RType): pass
class Mulh(_M, RType): pass
class Mulhsu(_M, RType): pass
class Mulhu(_M, RType): pass
class Div(_M, RType): pass
class Divu(_M, RType): pass
class Rem(_M, RType): pass
class Remu(_M, RType): pass


class _M64:
    ext = "M64"

class Mulw(_M64, RType): pass
class Divw(_M64, RType): pass
class Divuw(_M64, RType): pass
class Remw(_M64, RType): pass
class Remuw(_M64, RType): pass


# Zicsr
class Csrrw(CsrType): pass
class Csrrs(CsrType): pass
class Csrrc(CsrType): pass
class Csrrwi(CsrImmType): pass
class Csrrsi(CsrImmType): pass
class Csrrci(CsrImmType): pass


# machine mode
class Mret(NoOperands):
    ext = "Machine"


@dataclass(frozen=True)
class InvalidInstruction(Instruction):
    ext = "Invalid"
    raw: int
