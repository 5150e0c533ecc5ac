"""Flat-memory simulator: the Minimal32 / Minimal64 platforms."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable

from ..isa import CSRField, PrivMode, SourceType
from ..machine import HardFailure, MachineInterface, PlatformConfig
from ..xword import ops as xword_ops

_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


@dataclass(frozen=True)
class Event:
    kind: str  # "LOAD" or "STORE"
    addr: int
    value: int
    width: int

    def format(self) -> str:
        return f"MMIO {self.kind} {self.addr:#x} {self.value:#x} {self.width}"


@dataclass
class MachineState:
    xlen: int
    memory_base: int
    mem: bytearray
    regs: list[int] = field(default_factory=lambda: [0] * 32)
    pc: int = 0
    csr: dict[CSRField, int] = field(default_factory=lambda: {f: 0 for f in CSRField})
    priv: PrivMode = PrivMode.MACHINE
    reservation: int | None = None
    event_log: list[Event] = field(default_factory=list)

    def read_bytes(self, addr: int, n: int) -> bytes:
        off = addr - self.memory_base
        return bytes(self.mem[off:off + n])

    def contains(self, addr: int, n: int = 1) -> bool:
        off = addr - self.memory_base
        return 0 <= off and off + n <= len(self.mem)


class ImageError(ValueError):
    pass


class MinimalMachine(MachineState, MachineInterface):
    """Registers, PC and memory held in plain Python lists and a bytearray.

    The machine is its own :class:`MachineState`.  Accesses outside main
    memory raise ``HardFailure("bad-address")``; MMIO is added by
    :class:`riscvsem.sim.mmio.MmioLayer`.
    """

    def __init__(self, cfg: PlatformConfig, image: Iterable[tuple[int, bytes]] = (), entry: int | None = None):
        MachineState.__init__(self, cfg.xlen, cfg.memory_base, bytearray(cfg.memory_size))
        self.cfg = cfg
        self.ops = xword_ops(cfg.xlen)
        self.pc = cfg.memory_base if entry is None else entry
        self._mask = (1 << cfg.xlen) - 1
        self._limit4 = cfg.memory_size - 4
        self._tohost = cfg.tohost_addr
        self.tohost_value = 0 if cfg.tohost_addr is not None else None
        self._load_image(image)

    @property
    def state(self) -> MachineState:
        return self

    def _load_image(self, image: Iterable[tuple[int, bytes]]) -> None:
        placed: list[tuple[int, int]] = []
        for addr, data in image:
            if not data:
                continue
            if not self.contains(addr, len(data)):
                raise ImageError(f"segment {addr:#x}+{len(data):#x} outside memory")
            for lo, hi in placed:
                if addr < hi and lo < addr + len(data):
                    raise ImageError(f"segment {addr:#x} overlaps segment {lo:#x}")
            placed.append((addr, addr + len(data)))
            off = addr - self.memory_base
            self.mem[off:off + len(data)] = data

    # registers and PC

    def get_register(self, reg: int) -> int:
        return self.regs[reg]

    def set_register(self, reg: int, value: int) -> None:
        if reg:
            self.regs[reg] = value & self._mask

    def get_pc(self) -> int:
        return self.pc

    def set_pc(self, pc: int) -> None:
        self.pc = pc & self._mask

    def get_priv_mode(self) -> PrivMode:
        return self.priv

    def set_priv_mode(self, mode: PrivMode) -> None:
        self.priv = mode

    def get_platform(self) -> PlatformConfig:
        return self.cfg

    # memory

    def _offset(self, addr: int, n: int) -> int:
        off = addr - self.memory_base
        if off < 0 or off + n > len(self.mem):
            raise HardFailure("bad-address", f"{addr:#x}")
        return off

    def load_byte(self, source: SourceType, addr: int) -> int:
        return self.mem[self._offset(addr, 1)]

    def load_half(self, source: SourceType, addr: int) -> int:
        return _U16.unpack_from(self.mem, self._offset(addr, 2))[0]

    def load_word(self, source: SourceType, addr: int) -> int:
        off = addr - self.memory_base
        if off < 0 or off > self._limit4:
            raise HardFailure("bad-address", f"{addr:#x}")
        return _U32.unpack_from(self.mem, off)[0]

    def load_double(self, source: SourceType, addr: int) -> int:
        return _U64.unpack_from(self.mem, self._offset(addr, 8))[0]

    def store_byte(self, source: SourceType, addr: int, value: int) -> None:
        self.mem[self._offset(addr, 1)] = value & 0xFF

    def store_half(self, source: SourceType, addr: int, value: int) -> None:
        _U16.pack_into(self.mem, self._offset(addr, 2), value & 0xFFFF)

    def store_word(self, source: SourceType, addr: int, value: int) -> None:
        _U32.pack_into(self.mem, self._offset(addr, 4), value & 0xFFFFFFFF)
        if addr == self._tohost and value:
            self.tohost_value = value

    def store_double(self, source: SourceType, addr: int, value: int) -> None:
        _U64.pack_into(self.mem, self._offset(addr, 8), value & 0xFFFFFFFFFFFFFFFF)
        if addr == self._tohost and value:
            self.tohost_value = value

    # LR/SC reservation

    def make_reservation(self, addr: int) -> None:
        self.reservation = addr

    def check_reservation(self, addr: int) -> bool:
        return self.reservation == addr

    def clear_reservation(self, addr: int) -> None:
        self.reservation = None

    # CSRs

    def get_csr_field(self, f: CSRField) -> int:
        if not self.cfg.has_csrs:
            raise HardFailure("csr-unsupported", f.value)
        return self.csr[f]

    def set_csr_field(self, f: CSRField, value: int) -> None:
        if not self.cfg.has_csrs:
            raise HardFailure("csr-unsupported", f.value)
        self.csr[f] = value & ((1 << f.width(self.xlen)) - 1)


def minimal_machine(cfg: PlatformConfig, image: Iterable[tuple[int, bytes]] = (), entry: int | None = None) -> MinimalMachine:
    return MinimalMachine(cfg, image, entry)
