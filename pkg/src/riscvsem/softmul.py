"""Software multiplication through the illegal-instruction trap.

An I+M machine ``H`` runs a program natively; an I-only machine ``L`` runs the
same program with a hand-assembled trap handler that emulates MUL.  The two
are co-simulated instruction by instruction and :func:`related` is checked at
every synchronization point.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable

from . import isa
from .decode import ExtensionSet, encode, make_decoder
from .execute import run1
from .isa import (
    A0, A1, CSR_MEPC, CSR_MSCRATCH, CSR_MTVAL, RA, SP, T0, T1, T2, T3, ZERO,
    CSRField, Instruction, PrivMode,
)
from .machine import Outcome, PlatformConfig
from .sim import MachineState, simulator
from .xword import sign_extend

XLEN = 32
SCRATCH_SIZE = 128  # 32 slots of 4 bytes
STEP_BUDGET = 10_000  # L steps allowed per H instruction
BUGS = ("mscratch", "sp-result", "sp-early-restore", "sp-offset")

A2 = 12
NOP = isa.Addi(ZERO, ZERO, 0)


@dataclass(frozen=True)
class HandlerLayout:
    handler_base: int
    scratch_end: int
    scratch_size: int = SCRATCH_SIZE
    handler_code: tuple[Instruction, ...] = ()

    @property
    def scratch_base(self) -> int:
        return self.scratch_end - self.scratch_size

    @property
    def handler_end(self) -> int:
        return self.handler_base + 4 * len(self.handler_code)


class LayoutError(ValueError):
    pass


def handler_init(*, reset_mscratch: bool = True) -> list[Instruction]:
    """The seven entry instructions; ``Csrr``/``Csrw`` are the usual
    ``csrrs rd, x0`` and ``csrrw x0, rs1`` forms."""
    restore = isa.Csrrw(ZERO, SP, CSR_MSCRATCH) if reset_mscratch else NOP
    return [
        isa.Csrrw(SP, SP, CSR_MSCRATCH),  # swap sp and MScratch
        isa.Sw(SP, ZERO, -128),           # x0, for uniformity
        isa.Sw(SP, RA, -124),
        isa.Csrrs(RA, ZERO, CSR_MSCRATCH),
        isa.Sw(SP, RA, -120),             # original sp
        restore,
        isa.Addi(SP, SP, -128),
    ]


def _field_addr(dst: int, inst_reg: int, lsb: int) -> list[Instruction]:
    # dst = sp + ((inst >> lsb) & 31) << 2
    return [
        isa.Srli(dst, inst_reg, lsb),
        isa.Andi(dst, dst, 31),
        isa.Slli(dst, dst, 2),
        isa.Add(dst, dst, SP),
    ]


def _rpmul() -> list[Instruction]:
    # a2 = a0 * a1 by shift-and-add; clobbers a0, a1, t3
    return [
        isa.Addi(A2, ZERO, 0),
        isa.Beq(A1, ZERO, 28),     # loop: done when multiplier exhausted
        isa.Andi(T3, A1, 1),
        isa.Beq(T3, ZERO, 8),
        isa.Add(A2, A2, A0),
        isa.Slli(A0, A0, 1),
        isa.Srli(A1, A1, 1),
        isa.Jal(ZERO, -24),
    ]


def build_handler(layout: HandlerLayout, inject_bug: str | None = None) -> list[Instruction]:
    """Emit the trap handler for ``layout``.

    ``inject_bug`` reintroduces one of the historical handler mistakes:
    ``mscratch`` (MScratch never restored), ``sp-result`` (sp taken back from
    MScratch, losing a MUL result written to sp), ``sp-early-restore`` (sp
    restored before the other registers) or ``sp-offset`` (operand slots read
    one word too high).
    """
    _check_layout(layout)
    if inject_bug not in (None, *BUGS):
        raise ValueError(f"unknown bug {inject_bug!r}; choose from {', '.join(BUGS)}")
    keep_mscratch = inject_bug not in ("mscratch", "sp-result")
    operand_off = 4 if inject_bug == "sp-offset" else 0

    code = handler_init(reset_mscratch=keep_mscratch)
    code += [isa.Sw(SP, r, 4 * r) for r in range(3, 32)]
    code.append(isa.Csrrs(T0, ZERO, CSR_MTVAL))
    code += _field_addr(T1, T0, 15) + [isa.Lw(A0, T1, operand_off)]
    code += _field_addr(T1, T0, 20) + [isa.Lw(A1, T1, operand_off)]
    code += _field_addr(T2, T0, 7)
    code += _rpmul()
    code.append(isa.Sw(T2, A2, 0))
    # resume one past the trapping instruction
    code += [
        isa.Csrrs(T0, ZERO, CSR_MEPC),
        isa.Addi(T0, T0, 4),
        isa.Csrrw(ZERO, T0, CSR_MEPC),
    ]
    if keep_mscratch:
        code += [isa.Addi(T0, SP, SCRATCH_SIZE), isa.Csrrw(ZERO, T0, CSR_MSCRATCH)]
    else:
        code += [NOP, NOP]

    restores = [isa.Lw(RA, SP, 4)] + [isa.Lw(r, SP, 4 * r) for r in range(3, 32)]
    if inject_bug == "sp-early-restore":
        code += [isa.Lw(SP, SP, 8)] + restores
    elif inject_bug == "sp-result":
        code += restores + [isa.Addi(SP, SP, SCRATCH_SIZE), isa.Csrrw(SP, SP, CSR_MSCRATCH)]
    else:
        code += restores + [isa.Lw(SP, SP, 8)]
    code.append(isa.Mret())
    return code


def _check_layout(layout: HandlerLayout) -> None:
    if layout.handler_base % 4:
        raise LayoutError("handler_base must be 4-byte aligned")
    if layout.scratch_size != SCRATCH_SIZE:
        raise LayoutError("scratch space must be 32 words")
    if layout.scratch_end % 4:
        raise LayoutError("scratch_end must be 4-byte aligned")


# --------------------------------------------------------------------------
# the two machines and the relation between them


@dataclass(frozen=True)
class Platform:
    """Memory map shared by H and L: L extends H's memory with the handler
    and the scratch space."""

    memory_base: int = 0x80000000
    program_size: int = 0x1000
    data_size: int = 0x1000
    extra_size: int = 0x1000

    @property
    def data_base(self) -> int:
        return self.memory_base + self.program_size

    @property
    def h_size(self) -> int:
        return self.program_size + self.data_size

    @property
    def handler_base(self) -> int:
        return self.memory_base + self.h_size

    @property
    def scratch_end(self) -> int:
        return self.handler_base + self.extra_size


DEFAULT_PLATFORM = Platform()


def make_layout(platform: Platform = DEFAULT_PLATFORM, inject_bug: str | None = None) -> HandlerLayout:
    bare = HandlerLayout(platform.handler_base, platform.scratch_end)
    layout = HandlerLayout(platform.handler_base, platform.scratch_end,
                           handler_code=tuple(build_handler(bare, inject_bug)))
    if layout.handler_end > layout.scratch_base:
        raise LayoutError("handler code overlaps the scratch space")
    return layout


def _words(code: Iterable[Instruction]) -> bytes:
    return b"".join(encode(i).to_bytes(4, "little") for i in code)


@dataclass
class Related:
    """Truthy iff every clause holds; otherwise names the first failing one."""

    clause: str | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.clause is None


def related(h: MachineState, l: MachineState, layout: HandlerLayout) -> Related:
    if h.xlen != XLEN or l.xlen != XLEN:
        return Related("xlen", f"H={h.xlen} L={l.xlen}")
    if h.regs != l.regs:
        r = next(i for i in range(32) if h.regs[i] != l.regs[i])
        return Related("regs", f"x{r}: H={h.regs[r]:#x} L={l.regs[r]:#x}")
    if h.pc != l.pc:
        return Related("pc", f"H={h.pc:#x} L={l.pc:#x}")
    lo = h.memory_base - l.memory_base
    if lo < 0 or lo + len(h.mem) > len(l.mem) or l.mem[lo:lo + len(h.mem)] != h.mem:
        return Related("memory", _first_diff(h, l))
    h_end = h.memory_base + len(h.mem)
    if not (l.contains(layout.handler_base, 4 * len(layout.handler_code))
            and _disjoint(layout.handler_base, layout.handler_end, h.memory_base, h_end)
            and l.read_bytes(layout.handler_base, 4 * len(layout.handler_code)) == _words(layout.handler_code)):
        return Related("handler-code")
    if not (l.contains(layout.scratch_base, layout.scratch_size)
            and _disjoint(layout.scratch_base, layout.scratch_end, h.memory_base, h_end)
            and _disjoint(layout.scratch_base, layout.scratch_end, layout.handler_base, layout.handler_end)):
        return Related("scratch")
    if l.csr[CSRField.MTVEC_BASE] << 2 != layout.handler_base:
        return Related("mtvec", f"{l.csr[CSRField.MTVEC_BASE] << 2:#x}")
    if l.csr[CSRField.MSCRATCH] != layout.scratch_end:
        return Related("mscratch", f"{l.csr[CSRField.MSCRATCH]:#x}")
    if l.priv is not PrivMode.MACHINE:
        return Related("priv", l.priv.name)
    return Related()


def _disjoint(a_lo: int, a_hi: int, b_lo: int, b_hi: int) -> bool:
    return a_hi <= b_lo or b_hi <= a_lo


def _first_diff(h: MachineState, l: MachineState) -> str:
    for off, byte in enumerate(h.mem):
        addr = h.memory_base + off
        if not l.contains(addr) or l.read_bytes(addr, 1)[0] != byte:
            return f"byte {addr:#x}"
    return "range"


# --------------------------------------------------------------------------
# differential run


@dataclass
class Verdict:
    passed: bool
    step: int = 0
    clause: str | None = None
    detail: str = ""

    def line(self, seed: int, idx: int) -> str:
        if self.passed:
            return f"seed={seed} idx={idx} PASS"
        return f"seed={seed} idx={idx} FAIL {self.clause}"


@dataclass
class Machines:
    h: object
    l: object
    layout: HandlerLayout


def make_machines(program: list[Instruction], regs: list[int] | None = None,
                  platform: Platform = DEFAULT_PLATFORM, inject_bug: str | None = None,
                  data: bytes = b"") -> Machines:
    """Build a related pair: identical programs and registers, plus the
    handler, scratch space and CSR set-up in L."""
    layout = make_layout(platform, inject_bug)
    image = _words(program)
    if len(image) > platform.program_size or len(data) > platform.data_size:
        raise LayoutError("program or data exceeds its region")
    segments = [(platform.memory_base, image)] + ([(platform.data_base, data)] if data else [])
    h_cfg = PlatformConfig(xlen=XLEN, extensions=ExtensionSet(has_m=True, xlen=XLEN),
                           memory_base=platform.memory_base, memory_size=platform.h_size)
    l_cfg = PlatformConfig(xlen=XLEN, extensions=ExtensionSet(has_m=False, xlen=XLEN),
                           memory_base=platform.memory_base,
                           memory_size=platform.h_size + platform.extra_size)
    h = simulator(h_cfg, segments, platform.memory_base)
    l = simulator(l_cfg, segments + [(layout.handler_base, _words(layout.handler_code))], platform.memory_base)
    for m in (h, l):
        for r, v in enumerate(regs or ()):
            m.set_register(r, v)
    l.set_csr_field(CSRField.MTVEC_BASE, layout.handler_base >> 2)
    l.set_csr_field(CSRField.MSCRATCH, layout.scratch_end)
    return Machines(h, l, layout)


def softmul_diff(program: list[Instruction], steps: int, seed: int = 0, *,
                 regs: list[int] | None = None, data: bytes = b"",
                 inject_bug: str | None = None, platform: Platform = DEFAULT_PLATFORM) -> Verdict:
    """Co-simulate ``program`` on H (hardware MUL) and L (trap handler).

    Registers start from ``regs`` or, if omitted, from values drawn with
    ``seed``.  After every H step, L runs until its PC is back at H's PC.
    """
    if regs is None:
        regs = random_registers(random.Random(seed))
    pair = make_machines(program, regs, platform, inject_bug, data)
    h, l, layout = pair.h, pair.l, pair.layout
    hs, ls = h.state, l.state
    verdict = related(hs, ls, layout)
    if not verdict:
        return Verdict(False, 0, verdict.clause, verdict.detail)
    mdecode = make_decoder(ExtensionSet(has_m=True, xlen=XLEN))
    idecode = make_decoder(ExtensionSet(has_m=False, xlen=XLEN))
    for step in range(1, steps + 1):
        out = run1(h, mdecode)
        if out.kind is Outcome.HARD_FAILURE:
            return Verdict(False, step, "h-hard-failure", out.reason or "")
        for _ in range(STEP_BUDGET):
            out = run1(l, idecode)
            if out.kind is Outcome.HARD_FAILURE:
                return Verdict(False, step, "l-hard-failure", out.reason or "")
            if ls.pc == hs.pc:
                break
        else:
            return Verdict(False, step, "budget", f"L did not return to {hs.pc:#x}")
        verdict = related(hs, ls, layout)
        if not verdict:
            return Verdict(False, step, verdict.clause, verdict.detail)
    return Verdict(True, steps)


# --------------------------------------------------------------------------
# random programs


_R_OPS = (isa.Add, isa.Sub, isa.Sll, isa.Slt, isa.Sltu, isa.Xor, isa.Srl, isa.Sra, isa.Or, isa.And)
_I_OPS = (isa.Addi, isa.Slti, isa.Sltiu, isa.Xori, isa.Ori, isa.Andi)
_SHIFTS = (isa.Slli, isa.Srli, isa.Srai)
_BRANCHES = (isa.Beq, isa.Bne, isa.Blt, isa.Bge, isa.Bltu, isa.Bgeu)
_LOADS = ((isa.Lw, 4), (isa.Lh, 2), (isa.Lhu, 2), (isa.Lb, 1), (isa.Lbu, 1))
_STORES = ((isa.Sw, 4), (isa.Sh, 2), (isa.Sb, 1))
_SPECIAL = (0, 1, 2, 0xFFFFFFFF, 0x80000000, 0x7FFFFFFF, 0xFFFF, 0x10000)


def random_registers(rng: random.Random) -> list[int]:
    regs = [0]
    for _ in range(31):
        roll = rng.random()
        if roll < 0.3:
            regs.append(rng.choice(_SPECIAL))
        elif roll < 0.6:
            regs.append(rng.randrange(256))
        else:
            regs.append(rng.getrandbits(XLEN))
    return regs


def random_program(rng: random.Random, max_len: int, platform: Platform = DEFAULT_PLATFORM) -> list[Instruction]:
    """A MUL-bearing RV32IM program of at most ``max_len`` instructions plus a
    final self-loop.  Control flow only branches forward, so every program
    reaches the loop; memory accesses use a fresh ``lui`` base into the data
    region, emitted as an unsplittable pair."""
    if max_len < 2:
        raise ValueError("max_len must be at least 2")
    target = rng.randint(1, max_len - 1)
    units: list[list[Instruction]] = []
    size = 0
    while True:
        roll = rng.random()
        reg = lambda: rng.randrange(32)  # noqa: E731
        if roll < 0.3:
            unit = [isa.Mul(reg(), reg(), reg())]
        elif roll < 0.5:
            unit = [rng.choice(_R_OPS)(reg(), reg(), reg())]
        elif roll < 0.62:
            unit = [rng.choice(_I_OPS)(reg(), reg(), rng.randint(-2048, 2047))]
        elif roll < 0.7:
            unit = [rng.choice(_SHIFTS)(reg(), reg(), rng.randrange(XLEN))]
        elif roll < 0.74:
            unit = [rng.choice((isa.Lui, isa.Auipc))(reg(), sign_extend(rng.getrandbits(20), 20))]
        elif roll < 0.87:
            unit = _memory_unit(rng, platform)
        else:
            unit = [None]  # forward branch, patched once offsets are known
        if size + len(unit) > target:
            break
        units.append(unit)
        size += len(unit)
    if not any(isinstance(u[0], isa.Mul) for u in units):
        units.insert(rng.randint(0, len(units)),
                     [isa.Mul(rng.randrange(32), rng.randrange(32), rng.randrange(32))])

    starts, pc = [], 0
    for unit in units:
        starts.append(pc)
        pc += 4 * len(unit)
    end = pc
    program: list[Instruction] = []
    for k, unit in enumerate(units):
        if unit == [None]:
            targets = starts[k + 1:] + [end]
            target = rng.choice(targets[:4])
            unit = [rng.choice(_BRANCHES)(rng.randrange(32), rng.randrange(32), target - starts[k])]
        program += unit
    program.append(isa.Jal(ZERO, 0))
    return program


def _memory_unit(rng: random.Random, platform: Platform) -> list[Instruction]:
    base = rng.randrange(1, 32)
    kinds = _LOADS if rng.random() < 0.5 else _STORES
    op, width = rng.choice(kinds)
    off = rng.randrange(0, min(platform.data_size, 2048), width)
    hi = sign_extend(platform.data_base >> 12, 20)
    if kinds is _LOADS:
        return [isa.Lui(base, hi), op(rng.randrange(32), base, off)]
    return [isa.Lui(base, hi), op(base, rng.randrange(32), off)]


def program_for(seed: int, idx: int, max_len: int) -> tuple[list[Instruction], list[int], bytes]:
    """Program, initial registers and data image for suite entry ``idx``."""
    rng = random.Random(f"softmul:{seed}:{idx}")
    program = random_program(rng, max_len)
    regs = random_registers(rng)
    data = rng.randbytes(DEFAULT_PLATFORM.data_size)
    return program, regs, data


def run_suite_entry(seed: int, idx: int, max_len: int, inject_bug: str | None = None) -> Verdict:
    program, regs, data = program_for(seed, idx, max_len)
    return softmul_diff(program, len(program) + 1, seed, regs=regs, data=data, inject_bug=inject_bug)
