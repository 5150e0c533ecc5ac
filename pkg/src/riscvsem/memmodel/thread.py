"""Running one litmus thread through the shared instruction semantics.

:class:`ThreadMachine` implements the machine interface for a single
hart: registers and PC are local, and every word load, word store and fence
becomes a memory event handed to the caller.  Register taint derived from the
decoded operand fields yields the addr/data/ctrl dependency edges.
"""

from __future__ import annotations

from typing import Callable

from .. import isa
from ..execute import execute_inst
from ..isa import Instruction, SourceType
from ..machine import EndCycle, HardFailure, MachineInterface
from ..xword import ops as xword_ops
from .graph import EventKey, Kind, MemEvent

CODE_BASE = 0x100000
MAX_THREAD_STEPS = 10_000
XLEN = 32

ReadHook = Callable[[MemEvent], int]
EventHook = Callable[[MemEvent], None]


def _sources(inst: Instruction) -> tuple[int, ...]:
    if isinstance(inst, (isa.RType, isa.BranchType, isa.StoreType)):
        return (inst.rs1, inst.rs2)
    if isinstance(inst, (isa.IType, isa.ShiftType, isa.LoadType, isa.Jalr)):
        return (inst.rs1,)
    return ()


class ThreadMachine(MachineInterface):
    def __init__(self, tid: int, program: list[Instruction], regs: dict[int, int],
                 on_read: ReadHook, on_write: EventHook, on_fence: EventHook,
                 on_dep: Callable[[EventKey, EventKey, str], None]):
        self.xlen = XLEN
        self.ops = xword_ops(XLEN)
        self.tid = tid
        self.program = program
        self.regs = [0] * 32
        for r, v in regs.items():
            if r:
                self.regs[r] = v & self.ops.mask
        self.pc = CODE_BASE
        self.taint: list[frozenset[EventKey]] = [frozenset()] * 32
        self.ctrl: frozenset[EventKey] = frozenset()
        self.po = 0
        self.current: Instruction | None = None
        self._on_read, self._on_write, self._on_fence, self._on_dep = on_read, on_write, on_fence, on_dep

    # primitives

    def get_register(self, reg: int) -> int:
        return self.regs[reg]

    def set_register(self, reg: int, value: int) -> None:
        if reg:
            self.regs[reg] = value & self.ops.mask

    def get_pc(self) -> int:
        return self.pc

    def set_pc(self, pc: int) -> None:
        self.pc = pc & self.ops.mask

    def end_cycle_early(self):
        raise EndCycle()

    def _next_key(self) -> EventKey:
        key = (self.tid, self.po)
        self.po += 1
        return key

    def _deps(self, key: EventKey, store: bool) -> None:
        inst = self.current
        base = inst.rs1
        for src in self.taint[base]:
            self._on_dep(src, key, "addr")
        if store:
            for src in self.taint[inst.rs2]:
                self._on_dep(src, key, "data")
            for src in self.ctrl:
                self._on_dep(src, key, "ctrl")

    def load_word(self, source: SourceType, addr: int) -> int:
        key = self._next_key()
        self._deps(key, store=False)
        value = self._on_read(MemEvent(key, Kind.READ, addr))
        self._loaded = key
        return value & 0xFFFFFFFF

    def store_word(self, source: SourceType, addr: int, value: int) -> None:
        key = self._next_key()
        self._deps(key, store=True)
        self._on_write(MemEvent(key, Kind.WRITE, addr, value & 0xFFFFFFFF))

    def fence(self, pred: int, succ: int, fm: int = 0) -> None:
        self._on_fence(MemEvent(self._next_key(), Kind.FENCE, pred=pred, succ=succ, fm=fm))

    def _narrow(self, *_):
        raise HardFailure("non-word-access")

    load_byte = load_half = load_double = _narrow
    store_byte = store_half = store_double = _narrow

    # driver

    @property
    def done(self) -> bool:
        return self.pc == CODE_BASE + 4 * len(self.program)

    def step(self) -> None:
        index = (self.pc - CODE_BASE) >> 2
        if self.pc & 3 or not 0 <= index < len(self.program):
            raise HardFailure("pc-out-of-program", f"{self.pc:#x}")
        inst = self.current = self.program[index]
        self._loaded = None
        srcs = _sources(inst)
        taint = frozenset().union(*(self.taint[r] for r in srcs)) if srcs else frozenset()
        if not execute_inst(self, inst):
            self.pc += 4
        if isinstance(inst, (isa.BranchType, isa.Jalr)):
            self.ctrl |= taint
        if isinstance(inst, isa.LoadType):
            self._set_taint(inst.rd, frozenset({self._loaded}))
        elif isinstance(inst, (isa.Lui, isa.Auipc, isa.Jal, isa.Jalr)):
            self._set_taint(inst.rd, frozenset())
        elif isinstance(inst, (isa.RType, isa.IType, isa.ShiftType)):
            self._set_taint(inst.rd, taint)

    def _set_taint(self, reg: int, value: frozenset) -> None:
        if reg:
            self.taint[reg] = value

    def run(self) -> list[int]:
        for _ in range(MAX_THREAD_STEPS):
            if self.done:
                return self.regs
            self.step()
        raise HardFailure("thread-step-budget", f"thread {self.tid}")
