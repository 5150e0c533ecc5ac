"""Assemble RISC-V source with clang + ld.lld (developer tooling only)."""

from __future__ import annotations

import subprocess
import tempfile
from pathlib import Path

from riscvsem.sim.elf import load_elf

TEXT_BASE = 0x80000000
LINKER_SCRIPT = f"""
ENTRY(_start)
SECTIONS {{
  . = {TEXT_BASE:#x};
  .text : {{ *(.text*) }}
  . = ALIGN(64);
  .data : {{ *(.data*) *(.sdata*) *(.bss*) }}
  .tohost : {{ *(.tohost) }}
}}
"""


def assemble_elf(source: str, xlen: int, march: str | None = None, extra_ld: list[str] = ()) -> bytes:
    march = march or f"rv{xlen}im"
    with tempfile.TemporaryDirectory() as tmp:
        src, obj, exe = Path(tmp, "a.S"), Path(tmp, "a.o"), Path(tmp, "a.elf")
        script = Path(tmp, "link.ld")
        src.write_text(source)
        script.write_text(LINKER_SCRIPT)
        subprocess.run(
            ["clang", f"--target=riscv{xlen}", f"-march={march}", "-mno-relax", "-c", str(src), "-o", str(obj)],
            check=True,
        )
        subprocess.run(
            ["ld.lld", "-m", f"elf{xlen}lriscv", "-T", str(script), *extra_ld,
             str(obj), "-o", str(exe)],
            check=True,
        )
        return exe.read_bytes()


def assemble_words(body: str, xlen: int) -> list[int]:
    """Assemble a bare instruction sequence and return its 32-bit words."""
    elf = load_elf(assemble_elf(f".globl _start\n_start:\n{body}\n", xlen))
    (addr, text), = [s for s in elf.segments if s[0] == TEXT_BASE]
    return [int.from_bytes(text[i:i + 4], "little") for i in range(0, len(text), 4)]


def assemble_probe(body: str, xlen: int) -> int:
    """Assemble ``body`` and return the word at its ``probe`` label."""
    elf = load_elf(assemble_elf(f".globl _start\n_start:\n{body}\n", xlen))
    addr = elf.symbols["probe"]
    for base, data in elf.segments:
        if base <= addr < base + len(data):
            off = addr - base
            return int.from_bytes(data[off:off + 4], "little")
    raise KeyError("probe outside loaded segments")
