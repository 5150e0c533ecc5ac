"""Decoding 32-bit instruction words into :mod:`riscvsem.isa` values, and
the inverse encoder."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from . import isa
from .isa import Instruction, InvalidInstruction
from .xword import sign_extend

OPCODE_LOAD = 0x03
OPCODE_MISC_MEM = 0x0F
OPCODE_OP_IMM = 0x13
OPCODE_AUIPC = 0x17
OPCODE_OP_IMM_32 = 0x1B
OPCODE_STORE = 0x23
OPCODE_OP = 0x33
OPCODE_LUI = 0x37
OPCODE_OP_32 = 0x3B
OPCODE_BRANCH = 0x63
OPCODE_JALR = 0x67
OPCODE_JAL = 0x6F
OPCODE_SYSTEM = 0x73

WORD_ECALL = 0x00000073
WORD_EBREAK = 0x00100073
WORD_MRET = 0x30200073


class EncodingError(ValueError):
    """An instruction operand cannot be represented in its encoding."""

    def __init__(self, inst: Instruction, field: str, reason: str):
        super().__init__(f"{inst!r}: field {field} {reason}")
        self.field = field


@dataclass(frozen=True)
class ExtensionSet:
    has_m: bool = False
    has_zicsr: bool = True
    xlen: int = 64
    has_i: bool = True

    def __post_init__(self):
        if not self.has_i:
            raise ValueError("the base integer ISA is mandatory")
        if self.xlen not in (32, 64):
            raise ValueError(f"unsupported xlen {self.xlen}")

    @classmethod
    def from_isa_string(cls, isa_string: str) -> "ExtensionSet":
        """Parse strings like ``rv32im`` or ``rv64i_zicsr``."""
        s = isa_string.strip().lower()
        if not (s.startswith("rv32") or s.startswith("rv64")):
            raise ValueError(f"bad ISA string {isa_string!r}")
        xlen = int(s[2:4])
        base, *multi = s[4:].split("_")
        if not base.startswith(("i", "g")):
            raise ValueError(f"bad ISA string {isa_string!r}")
        letters = set(base[1:])
        unknown = letters - {"m"}
        bad_multi = set(multi) - {"zicsr", ""}
        if unknown or bad_multi:
            raise ValueError(f"unsupported extensions in {isa_string!r}")
        # Zicsr is always on: trap handling needs it
        return cls(has_m="m" in letters or base.startswith("g"), xlen=xlen)

    @property
    def isa_string(self) -> str:
        return f"rv{self.xlen}i{'m' if self.has_m else ''}_zicsr"

    def enabled(self, ext: str) -> bool:
        if ext in ("I", "Machine"):
            return True
        if ext == "I64":
            return self.xlen == 64
        if ext == "M":
            return self.has_m
        if ext == "M64":
            return self.has_m and self.xlen == 64
        if ext == "CSR":
            return self.has_zicsr
        return False


def bit_slice(word: int, lo: int, hi: int) -> int:
    """Bits ``[lo, hi)`` of ``word``, right-aligned."""
    return (word >> lo) & ((1 << (hi - lo)) - 1)


_BRANCH = {0: isa.Beq, 1: isa.Bne, 4: isa.Blt, 5: isa.Bge, 6: isa.Bltu, 7: isa.Bgeu}
_LOAD = {0: isa.Lb, 1: isa.Lh, 2: isa.Lw, 3: isa.Ld, 4: isa.Lbu, 5: isa.Lhu, 6: isa.Lwu}
_STORE = {0: isa.Sb, 1: isa.Sh, 2: isa.Sw, 3: isa.Sd}
_OP_IMM = {0: isa.Addi, 2: isa.Slti, 3: isa.Sltiu, 4: isa.Xori, 6: isa.Ori, 7: isa.Andi}
_OP = {
    (0x00, 0): isa.Add, (0x20, 0): isa.Sub, (0x00, 1): isa.Sll, (0x00, 2): isa.Slt,
    (0x00, 3): isa.Sltu, (0x00, 4): isa.Xor, (0x00, 5): isa.Srl, (0x20, 5): isa.Sra,
    (0x00, 6): isa.Or, (0x00, 7): isa.And,
    (0x01, 0): isa.Mul, (0x01, 1): isa.Mulh, (0x01, 2): isa.Mulhsu, (0x01, 3): isa.Mulhu,
    (0x01, 4): isa.Div, (0x01, 5): isa.Divu, (0x01, 6): isa.Rem, (0x01, 7): isa.Remu,
}
_OP_32 = {
    (0x00, 0): isa.Addw, (0x20, 0): isa.Subw, (0x00, 1): isa.Sllw, (0x00, 5): isa.Srlw,
    (0x20, 5): isa.Sraw,
    (0x01, 0): isa.Mulw, (0x01, 4): isa.Divw, (0x01, 5): isa.Divuw, (0x01, 6): isa.Remw,
    (0x01, 7): isa.Remuw,
}
_CSR = {1: isa.Csrrw, 2: isa.Csrrs, 3: isa.Csrrc, 5: isa.Csrrwi, 6: isa.Csrrsi, 7: isa.Csrrci}


def _decode_any(xlen: int, inst: int) -> Instruction | None:
    """Match ``inst`` against every known pattern; extension gating happens
    in :func:`decode`."""
    opcode = bit_slice(inst, 0, 7)
    rd = bit_slice(inst, 7, 12)
    funct3 = bit_slice(inst, 12, 15)
    rs1 = bit_slice(inst, 15, 20)
    rs2 = bit_slice(inst, 20, 25)
    funct7 = bit_slice(inst, 25, 32)
    imm12 = sign_extend(bit_slice(inst, 20, 32), 12)

    if opcode == OPCODE_LUI:
        return isa.Lui(rd, sign_extend(bit_slice(inst, 12, 32), 20))
    if opcode == OPCODE_AUIPC:
        return isa.Auipc(rd, sign_extend(bit_slice(inst, 12, 32), 20))
    if opcode == OPCODE_JAL:
        jimm20 = sign_extend(
            bit_slice(inst, 31, 32) << 20
            | bit_slice(inst, 21, 31) << 1
            | bit_slice(inst, 20, 21) << 11
            | bit_slice(inst, 12, 20) << 12,
            21,
        )
        return isa.Jal(rd, jimm20)
    if opcode == OPCODE_JALR:
        return isa.Jalr(rd, rs1, imm12) if funct3 == 0 else None
    if opcode == OPCODE_BRANCH:
        cls = _BRANCH.get(funct3)
        if cls is None:
            return None
        sbimm12 = sign_extend(
            bit_slice(inst, 31, 32) << 12
            | bit_slice(inst, 25, 31) << 5
            | bit_slice(inst, 8, 12) << 1
            | bit_slice(inst, 7, 8) << 11,
            13,
        )
        return cls(rs1, rs2, sbimm12)
    if opcode == OPCODE_LOAD:
        cls = _LOAD.get(funct3)
        return cls(rd, rs1, imm12) if cls else None
    if opcode == OPCODE_STORE:
        cls = _STORE.get(funct3)
        simm12 = sign_extend(funct7 << 5 | rd, 12)
        return cls(rs1, rs2, simm12) if cls else None
    if opcode == OPCODE_OP_IMM:
        if funct3 in _OP_IMM:
            return _OP_IMM[funct3](rd, rs1, imm12)
        shamt_hi = bit_slice(inst, 26, 32)
        shamt = bit_slice(inst, 20, 26)
        if xlen == 32 and shamt >= 32:
            return None
        if funct3 == 1 and shamt_hi == 0:
            return isa.Slli(rd, rs1, shamt)
        if funct3 == 5 and shamt_hi == 0:
            return isa.Srli(rd, rs1, shamt)
        if funct3 == 5 and shamt_hi == 0x10:
            return isa.Srai(rd, rs1, shamt)
        return None
    if opcode == OPCODE_OP:
        cls = _OP.get((funct7, funct3))
        return cls(rd, rs1, rs2) if cls else None
    if opcode == OPCODE_OP_IMM_32:
        if funct3 == 0:
            return isa.Addiw(rd, rs1, imm12)
        if funct3 == 1 and funct7 == 0:
            return isa.Slliw(rd, rs1, rs2)
        if funct3 == 5 and funct7 == 0:
            return isa.Srliw(rd, rs1, rs2)
        if funct3 == 5 and funct7 == 0x20:
            return isa.Sraiw(rd, rs1, rs2)
        return None
    if opcode == OPCODE_OP_32:
        cls = _OP_32.get((funct7, funct3))
        return cls(rd, rs1, rs2) if cls else None
    if opcode == OPCODE_MISC_MEM:
        if funct3 == 0:
            return isa.Fence(
                pred=bit_slice(inst, 24, 28), succ=bit_slice(inst, 20, 24), fm=bit_slice(inst, 28, 32)
            )
        return None
    if opcode == OPCODE_SYSTEM:
        if funct3 == 0:
            return {WORD_ECALL: isa.Ecall(), WORD_EBREAK: isa.Ebreak(), WORD_MRET: isa.Mret()}.get(inst)
        cls = _CSR.get(funct3)
        csr12 = bit_slice(inst, 20, 32)
        return cls(rd, rs1, csr12) if cls else None
    return None


def decode(ext: ExtensionSet, word: int) -> Instruction:
    """Decode a zero-extended 32-bit word.  Never raises: anything outside
    the enabled extensions becomes :class:`InvalidInstruction`."""
    word &= 0xFFFFFFFF
    if word & 0b11 != 0b11:
        return InvalidInstruction(word)
    inst = _decode_any(ext.xlen, word)
    if inst is None or not ext.enabled(inst.ext):
        return InvalidInstruction(word)
    return inst


Decoder = Callable[[int], Instruction]


def make_decoder(ext: ExtensionSet) -> Decoder:
    """A memoizing decoder closed over one extension set."""
    cache: dict[int, Instruction] = {}

    def decoder(word: int) -> Instruction:
        try:
            return cache[word]
        except KeyError:
            inst = cache[word] = decode(ext, word)
            return inst

    decoder.ext = ext  # type: ignore[attr-defined]
    return decoder


# --------------------------------------------------------------------------
# encoder

_R_CODES: dict[type, tuple[int, int, int]] = {
    cls: (OPCODE_OP, f3, f7) for (f7, f3), cls in _OP.items()
} | {cls: (OPCODE_OP_32, f3, f7) for (f7, f3), cls in _OP_32.items()}
_I_CODES: dict[type, tuple[int, int]] = (
    {cls: (OPCODE_OP_IMM, f3) for f3, cls in _OP_IMM.items()}
    | {cls: (OPCODE_LOAD, f3) for f3, cls in _LOAD.items()}
    | {isa.Addiw: (OPCODE_OP_IMM_32, 0), isa.Jalr: (OPCODE_JALR, 0)}
)
_SHIFT_CODES = {
    isa.Slli: (OPCODE_OP_IMM, 1, 0, 63), isa.Srli: (OPCODE_OP_IMM, 5, 0, 63),
    isa.Srai: (OPCODE_OP_IMM, 5, 0x400, 63), isa.Slliw: (OPCODE_OP_IMM_32, 1, 0, 31),
    isa.Srliw: (OPCODE_OP_IMM_32, 5, 0, 31), isa.Sraiw: (OPCODE_OP_IMM_32, 5, 0x400, 31),
}
_S_CODES = {cls: f3 for f3, cls in _STORE.items()}
_B_CODES = {cls: f3 for f3, cls in _BRANCH.items()}
_CSR_CODES = {cls: f3 for f3, cls in _CSR.items()}


def _check(inst: Instruction, field: str, lo: int, hi: int, align: int = 1) -> int:
    value = getattr(inst, field)
    if not isinstance(value, int) or not lo <= value <= hi:
        raise EncodingError(inst, field, f"= {value} outside [{lo}, {hi}]")
    if value % align:
        raise EncodingError(inst, field, f"= {value} not a multiple of {align}")
    return value


def _reg(inst: Instruction, field: str) -> int:
    return _check(inst, field, 0, 31)


def encode(inst: Instruction) -> int:
    """Encode ``inst`` as a 32-bit word; raises :class:`EncodingError`."""
    cls = type(inst)
    if cls in _R_CODES:
        opcode, f3, f7 = _R_CODES[cls]
        return f7 << 25 | _reg(inst, "rs2") << 20 | _reg(inst, "rs1") << 15 | f3 << 12 | _reg(inst, "rd") << 7 | opcode
    if cls in _I_CODES:
        opcode, f3 = _I_CODES[cls]
        field = "imm12" if isinstance(inst, isa.IType) else "oimm12"
        imm = _check(inst, field, -2048, 2047) & 0xFFF
        return imm << 20 | _reg(inst, "rs1") << 15 | f3 << 12 | _reg(inst, "rd") << 7 | opcode
    if cls in _SHIFT_CODES:
        opcode, f3, hi, max_shamt = _SHIFT_CODES[cls]
        shamt = _check(inst, "shamt", 0, max_shamt)
        return (hi | shamt) << 20 | _reg(inst, "rs1") << 15 | f3 << 12 | _reg(inst, "rd") << 7 | opcode
    if cls in _S_CODES:
        imm = _check(inst, "simm12", -2048, 2047) & 0xFFF
        return ((imm >> 5) << 25 | _reg(inst, "rs2") << 20 | _reg(inst, "rs1") << 15
                | _S_CODES[cls] << 12 | (imm & 0x1F) << 7 | OPCODE_STORE)
    if cls in _B_CODES:
        imm = _check(inst, "sbimm12", -4096, 4094, align=2) & 0x1FFF
        return (
            (imm >> 12) << 31 | bit_slice(imm, 5, 11) << 25 | _reg(inst, "rs2") << 20
            | _reg(inst, "rs1") << 15 | _B_CODES[cls] << 12 | bit_slice(imm, 1, 5) << 8
            | bit_slice(imm, 11, 12) << 7 | OPCODE_BRANCH
        )
    if cls in _CSR_CODES:
        src = "zimm" if isinstance(inst, isa.CsrImmType) else "rs1"
        return (_check(inst, "csr12", 0, 0xFFF) << 20 | _reg(inst, src) << 15
                | _CSR_CODES[cls] << 12 | _reg(inst, "rd") << 7 | OPCODE_SYSTEM)
    if cls in (isa.Lui, isa.Auipc):
        imm = _check(inst, "imm20", -(1 << 19), (1 << 19) - 1) & 0xFFFFF
        return imm << 12 | _reg(inst, "rd") << 7 | (OPCODE_LUI if cls is isa.Lui else OPCODE_AUIPC)
    if cls is isa.Jal:
        imm = _check(inst, "jimm20", -(1 << 20), (1 << 20) - 2, align=2) & 0x1FFFFF
        return (
            (imm >> 20) << 31 | bit_slice(imm, 1, 11) << 21 | bit_slice(imm, 11, 12) << 20
            | bit_slice(imm, 12, 20) << 12 | _reg(inst, "rd") << 7 | OPCODE_JAL
        )
    if cls is isa.Fence:
        return (_check(inst, "fm", 0, 15) << 28 | _check(inst, "pred", 0, 15) << 24
                | _check(inst, "succ", 0, 15) << 20 | OPCODE_MISC_MEM)
    if cls is isa.Ecall:
        return WORD_ECALL
    if cls is isa.Ebreak:
        return WORD_EBREAK
    if cls is isa.Mret:
        return WORD_MRET
    raise EncodingError(inst, "opcode", "has no encoding")
