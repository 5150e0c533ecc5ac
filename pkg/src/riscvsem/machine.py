"""The abstract machine-primitive interface and the layers that wrap one
implementation into a richer one.

Instruction semantics (:mod:`riscvsem.execute`) only ever talk to a machine
through the primitives of :class:`MachineInterface`.  A platform decides what
a primitive means: update a byte array, record an MMIO event, add a node to
a memory-model graph, or refuse with :class:`HardFailure`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, NamedTuple

from .decode import ExtensionSet
from .isa import CSRField, PrivMode, SourceType
from .xword import XWordOps
from .xword import ops as xword_ops

PRIMITIVES = (
    "get_register", "set_register",
    "load_byte", "load_half", "load_word", "load_double",
    "store_byte", "store_half", "store_word", "store_double",
    "make_reservation", "check_reservation", "clear_reservation",
    "get_csr_field", "set_csr_field",
    "get_pc", "set_pc", "get_priv_mode", "set_priv_mode",
    "commit", "end_cycle_early", "flush_tlb", "fence", "get_platform",
)


class HardFailure(Exception):
    """The platform refused a primitive (the ``fail_hard`` outcome).

    ``reason`` is a stable machine-readable code such as ``bad-address``.
    """

    def __init__(self, reason: str, detail: str = ""):
        if not reason:
            raise ValueError("HardFailure needs a reason code")
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class EndCycle(Exception):
    """Raised by ``end_cycle_early`` to abandon the rest of an instruction.

    Only the per-step driver catches it.
    """


class Outcome(enum.Enum):
    COMPLETED = "Completed"
    EARLY_EXIT = "EarlyExit"
    HARD_FAILURE = "HardFailure"


@dataclass(frozen=True)
class StepOutcome:
    kind: Outcome
    reason: str | None = None

    def __post_init__(self):
        if self.kind is Outcome.HARD_FAILURE and not self.reason:
            raise ValueError("HardFailure outcome needs a reason")

    def __str__(self) -> str:
        return f"{self.kind.value}({self.reason})" if self.reason else self.kind.value


COMPLETED = StepOutcome(Outcome.COMPLETED)
EARLY_EXIT = StepOutcome(Outcome.EARLY_EXIT)


class MmioRange(NamedTuple):
    base: int
    size: int
    device: str

    def contains(self, addr: int, width: int = 1) -> bool:
        return self.base <= addr and addr + width <= self.base + self.size


DEFAULT_MEMORY_BASE = 0x80000000
DEFAULT_MEMORY_SIZE = 16 << 20
UART_BASE = 0x10000000
UART_SIZE = 16


@dataclass
class PlatformConfig:
    xlen: int = 64
    extensions: ExtensionSet | None = None
    memory_base: int = DEFAULT_MEMORY_BASE
    memory_size: int = DEFAULT_MEMORY_SIZE
    mmio_ranges: list[MmioRange] = field(default_factory=list)
    tohost_addr: int | None = None
    has_csrs: bool = True

    def __post_init__(self):
        if self.extensions is None:
            self.extensions = ExtensionSet(has_m=True, xlen=self.xlen)
        if self.extensions.xlen != self.xlen:
            raise ValueError("extension set and platform disagree on xlen")
        mem_lo, mem_hi = self.memory_base, self.memory_base + self.memory_size
        for r in self.mmio_ranges:
            if r.base < mem_hi and mem_lo < r.base + r.size:
                raise ValueError(f"MMIO range {r} overlaps main memory")
        for a, b in zip(self.mmio_ranges, self.mmio_ranges[1:]):
            if a.base < b.base + b.size and b.base < a.base + a.size:
                raise ValueError(f"MMIO ranges {a} and {b} overlap")


class MachineInterface:
    """Base class for machines.  Unsupported primitives signal
    :class:`HardFailure` with the code ``unsupported:<primitive>``."""

    xlen: int = 64
    ops: XWordOps = xword_ops(64)

    def _unsupported(self, name: str):
        raise HardFailure(f"unsupported:{name}")

    def get_register(self, reg: int) -> int:
        self._unsupported("get_register")

    def set_register(self, reg: int, value: int) -> None:
        self._unsupported("set_register")

    def load_byte(self, source: SourceType, addr: int) -> int:
        self._unsupported("load_byte")

    def load_half(self, source: SourceType, addr: int) -> int:
        self._unsupported("load_half")

    def load_word(self, source: SourceType, addr: int) -> int:
        self._unsupported("load_word")

    def load_double(self, source: SourceType, addr: int) -> int:
        self._unsupported("load_double")

    def store_byte(self, source: SourceType, addr: int, value: int) -> None:
        self._unsupported("store_byte")

    def store_half(self, source: SourceType, addr: int, value: int) -> None:
        self._unsupported("store_half")

    def store_word(self, source: SourceType, addr: int, value: int) -> None:
        self._unsupported("store_word")

    def store_double(self, source: SourceType, addr: int, value: int) -> None:
        self._unsupported("store_double")

    def make_reservation(self, addr: int) -> None:
        self._unsupported("make_reservation")

    def check_reservation(self, addr: int) -> bool:
        self._unsupported("check_reservation")

    def clear_reservation(self, addr: int) -> None:
        self._unsupported("clear_reservation")

    def get_csr_field(self, f: CSRField) -> int:
        raise HardFailure("csr-unsupported", f.value)

    def set_csr_field(self, f: CSRField, value: int) -> None:
        raise HardFailure("csr-unsupported", f.value)

    def get_pc(self) -> int:
        self._unsupported("get_pc")

    def set_pc(self, pc: int) -> None:
        self._unsupported("set_pc")

    def get_priv_mode(self) -> PrivMode:
        return PrivMode.MACHINE

    def set_priv_mode(self, mode: PrivMode) -> None:
        self._unsupported("set_priv_mode")

    def commit(self) -> None:
        pass

    def end_cycle_early(self):
        """Abort the current instruction.  Plain machines cannot; wrap them
        with :func:`layer_early_exit`."""
        raise HardFailure("early-exit-unsupported")

    def flush_tlb(self) -> None:
        pass

    def fence(self, pred: int, succ: int, fm: int = 0) -> None:
        pass

    def get_platform(self) -> PlatformConfig:
        self._unsupported("get_platform")

    def step_started(self, index: int) -> None:
        """Driver hook called before each fetch; not an ISA primitive."""


class Layer(MachineInterface):
    """Delegates every primitive to ``inner``.

    Delegation binds the inner bound methods directly onto the instance, so a
    layer adds no per-call overhead for primitives it does not override.
    """

    def __init__(self, inner: MachineInterface):
        self.inner = inner
        self.xlen = inner.xlen
        self.ops = inner.ops
        for name in PRIMITIVES + ("step_started",):
            if not _overrides(type(self), name):
                setattr(self, name, getattr(inner, name))

    def __getattr__(self, name: str) -> Any:
        # platform-specific extras such as ``state`` or ``event_log``
        return getattr(self.inner, name)


def _overrides(cls: type, name: str) -> bool:
    for klass in cls.__mro__:
        if klass in (Layer, MachineInterface):
            return False
        if name in vars(klass):
            return True
    return False


class EarlyExitLayer(Layer):
    def __init__(self, inner: MachineInterface):
        super().__init__(inner)
        self.aborted = False  # set by the most recent abort; informational

    def end_cycle_early(self):
        self.aborted = True
        raise EndCycle()


def layer_early_exit(inner: MachineInterface) -> EarlyExitLayer:
    return EarlyExitLayer(inner)


@dataclass(frozen=True)
class TraceRecord:
    step: int
    primitive: str
    args: tuple
    result: Any = None

    def format(self) -> str:
        args = " ".join(_fmt(a) for a in self.args)
        line = f"{self.step} {self.primitive}"
        if args:
            line += f" {args}"
        return f"{line} -> {_fmt(self.result)}"


def _fmt(v: Any) -> str:
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, enum.Enum):
        return v.value if isinstance(v.value, str) else v.name
    if isinstance(v, int):
        return hex(v)
    return str(v)


class TraceLayer(Layer):
    """Records every primitive call as a :class:`TraceRecord`."""

    def __init__(self, inner: MachineInterface):
        super().__init__(inner)
        self.log: list[TraceRecord] = []
        self.step = 0
        for name in PRIMITIVES:
            setattr(self, name, self._recording(name, getattr(inner, name)))

    def _recording(self, name: str, method):
        log = self.log

        def call(*args):
            record_args = args
            try:
                result = method(*args)
            except (EndCycle, HardFailure) as exc:
                log.append(TraceRecord(self.step, name, record_args, type(exc).__name__))
                raise
            log.append(TraceRecord(self.step, name, record_args, result))
            return result

        return call

    def step_started(self, index: int) -> None:
        self.step = index
        self.inner.step_started(index)

    def lines(self) -> list[str]:
        return [r.format() for r in self.log]


def layer_trace(inner: MachineInterface) -> TraceLayer:
    return TraceLayer(inner)
