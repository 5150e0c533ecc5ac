"""Memory-mapped I/O layer and the console device."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

from ..isa import SourceType
from ..machine import HardFailure, Layer, MachineInterface, MmioRange
from .minimal import Event


class Device(Protocol):
    def load(self, offset: int, width: int) -> int: ...

    def store(self, offset: int, width: int, value: int) -> None: ...


class Uart:
    """Minimal console.

    ======  =====  ==========================================
    offset  width  meaning
    ======  =====  ==========================================
    0       1      TX: store emits one byte
    4       1, 4   RX: load returns next input byte, 0 if none
    8       1, 4   status: bit 0 input pending, bit 1 TX ready
    ======  =====  ==========================================
    """

    TX, RX, STATUS = 0, 4, 8

    def __init__(self, input_script: bytes | str = b""):
        if isinstance(input_script, str):
            input_script = input_script.encode()
        self._input = bytearray(input_script)
        self.output = bytearray()

    def load(self, offset: int, width: int) -> int:
        if offset == self.RX and width in (1, 4):
            return self._input.pop(0) if self._input else 0
        if offset == self.STATUS and width in (1, 4):
            return int(bool(self._input)) | 0b10
        raise HardFailure("mmio-width", f"uart load offset {offset} width {width}")

    def store(self, offset: int, width: int, value: int) -> None:
        if offset == self.TX and width == 1:
            self.output.append(value & 0xFF)
            return
        raise HardFailure("mmio-width", f"uart store offset {offset} width {width}")


@dataclass(frozen=True)
class DeviceBinding:
    range: MmioRange
    device: Device


_WIDTH = {"byte": 1, "half": 2, "word": 4, "double": 8}


class MmioLayer(Layer):
    """Routes Execute-sourced accesses in device ranges to the device and
    appends an :class:`Event` for each; everything else goes to ``inner``."""

    def __init__(self, inner: MachineInterface, devices: list[DeviceBinding]):
        super().__init__(inner)
        self.devices = list(devices)
        state = getattr(inner, "state", None)
        self.event_log: list[Event] = state.event_log if state is not None else []
        for kind, width in _WIDTH.items():
            setattr(self, f"load_{kind}", self._loader(width, getattr(inner, f"load_{kind}")))
            setattr(self, f"store_{kind}", self._storer(width, getattr(inner, f"store_{kind}")))

    def _find(self, addr: int, width: int) -> DeviceBinding | None:
        for binding in self.devices:
            if binding.range.base <= addr < binding.range.base + binding.range.size:
                if not binding.range.contains(addr, width):
                    raise HardFailure("mmio-width", f"{addr:#x} width {width}")
                return binding
        return None

    def _loader(self, width: int, inner_load):
        def load(source: SourceType, addr: int) -> int:
            binding = self._find(addr, width)
            if binding is None:
                return inner_load(source, addr)
            if source is not SourceType.EXECUTE:
                raise HardFailure("mmio-fetch", f"{addr:#x}")
            value = binding.device.load(addr - binding.range.base, width)
            self.event_log.append(Event("LOAD", addr, value, width))
            return value
        return load

    def _storer(self, width: int, inner_store):
        def store(source: SourceType, addr: int, value: int) -> None:
            binding = self._find(addr, width)
            if binding is None:
                return inner_store(source, addr, value)
            binding.device.store(addr - binding.range.base, width, value)
            self.event_log.append(Event("STORE", addr, value, width))
        return store


def layer_mmio(inner: MachineInterface, devices: list[DeviceBinding]) -> MmioLayer:
    return MmioLayer(inner, devices)
