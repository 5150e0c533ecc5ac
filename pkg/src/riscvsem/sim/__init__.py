"""Concrete platforms built on :class:`riscvsem.machine.MachineInterface`."""

from __future__ import annotations

from typing import Iterable

from ..machine import MachineInterface, PlatformConfig, UART_BASE, UART_SIZE, MmioRange, layer_early_exit, layer_trace
from .elf import ElfError, ElfImage, load_elf
from .minimal import Event, ImageError, MachineState, MinimalMachine, minimal_machine
from .mmio import DeviceBinding, MmioLayer, Uart, layer_mmio


def simulator(
    cfg: PlatformConfig,
    image: Iterable[tuple[int, bytes]] = (),
    entry: int | None = None,
    *,
    uart: Uart | None = None,
    trace: bool = False,
) -> MachineInterface:
    """Minimal machine, optionally behind the console device, wrapped with
    early exit (so traps work) and optionally tracing."""
    m: MachineInterface = minimal_machine(cfg, image, entry)
    if uart is not None:
        uart_range = next((r for r in cfg.mmio_ranges if r.device == "uart"), None)
        if uart_range is None:
            raise ValueError("platform config has no 'uart' MMIO range")
        m = layer_mmio(m, [DeviceBinding(uart_range, uart)])
    m = layer_early_exit(m)
    if trace:
        m = layer_trace(m)
    return m


def uart_config(**kwargs) -> PlatformConfig:
    """Default platform with the console at its conventional address."""
    kwargs.setdefault("mmio_ranges", [MmioRange(UART_BASE, UART_SIZE, "uart")])
    return PlatformConfig(**kwargs)


__all__ = [
    "DeviceBinding", "ElfError", "ElfImage", "Event", "ImageError", "MachineState",
    "MinimalMachine", "MmioLayer", "Uart", "layer_mmio", "load_elf", "minimal_machine",
    "simulator", "uart_config",
]
