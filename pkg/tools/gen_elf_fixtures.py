"""Build the small ELF programs used by the simulator and CLI tests."""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))
from asm import assemble_elf  # noqa: E402

OUT = Path(__file__).parent.parent / "tests" / "fixtures" / "elf"

TOHOST = """
.section .tohost, "aw"
.balign 8
.globl tohost
tohost: .dword 0
"""

PROGRAMS = {
    # riscv-tests style: compute, compare, report through tohost
    "pass.elf": (64, """
.globl _start
.text
_start:
    li a0, 6
    li a1, 7
    mul a2, a0, a1
    li t0, 42
    bne a2, t0, fail
    li t1, 1
    la t2, tohost
    sw t1, 0(t2)
1:  j 1b
fail:
    li t1, 3
    la t2, tohost
    sw t1, 0(t2)
2:  j 2b
""" + TOHOST),
    "fail.elf": (64, """
.globl _start
.text
_start:
    li a0, 6
    li a1, 7
    add a2, a0, a1
    li t0, 42
    bne a2, t0, fail
    li t1, 1
    la t2, tohost
    sw t1, 0(t2)
1:  j 1b
fail:
    li t1, 5
    la t2, tohost
    sw t1, 0(t2)
2:  j 2b
""" + TOHOST),
    "hello.elf": (32, """
.globl _start
.text
_start:
    li s0, 0x10000000
    la s1, msg
1:  lbu t0, 0(s1)
    beqz t0, 2f
    sb t0, 0(s0)
    addi s1, s1, 1
    j 1b
2:  lbu t1, 4(s0)
    beqz t1, 3f
    sb t1, 0(s0)
    j 2b
3:  li t1, 1
    la t2, tohost
    sw t1, 0(t2)
4:  j 4b
.data
msg: .asciz "hi\\n"
""" + TOHOST),
    "three.elf": (32, """
.globl _start
.text
_start:
    auipc x3, 0
    addi x1, x3, 5
    sw x1, 64(x3)
1:  j 1b
"""),
    "spin.elf": (64, """
.globl _start
.text
_start:
    addi a0, a0, 1
    j _start
"""),
    "badfetch.elf": (64, """
.globl _start
.text
_start:
    li t0, 0xffff0000
    jr t0
"""),
}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, (xlen, src) in PROGRAMS.items():
        (OUT / name).write_bytes(assemble_elf(src, xlen))
        print("wrote", OUT / name)


if __name__ == "__main__":
    main()
