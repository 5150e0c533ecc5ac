"""Freeze reference register dumps for the cross-check corpus.

Each program is assembled with clang/ld.lld and executed once in Unicorn
(QEMU's RISC-V TCG core) until it reaches its final self-loop.  The ELF
segments, entry, end PC and final registers go into
tests/fixtures/reference_dumps.json.  Needs ``pip install unicorn``; the
test suite only reads the JSON.
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import unicorn
import unicorn.riscv_const as rc

sys.path.insert(0, str(Path(__file__).parent))
from asm import TEXT_BASE, assemble_elf  # noqa: E402

from riscvsem.sim.elf import load_elf  # noqa: E402

OUT = Path(__file__).parent.parent / "tests" / "fixtures" / "reference_dumps.json"
MAP_SIZE = 2 << 20

PRELUDE = ".globl _start\n.text\n_start:\n"
EPILOGUE = "\ndone: j done\n"
DATA = """
.data
.balign 8
buf: .dword 0x8899aabbccddeeff, 0x0123456789abcdef, 0xfedcba9876543210, 0
     .dword 0, 0, 0, 0
"""

HANDWRITTEN: dict[str, tuple[tuple[int, ...], str]] = {
    "sum_loop": ((32, 64), """
        li a0, 0
        li a1, 10
    1:  add a0, a0, a1
        addi a1, a1, -1
        bnez a1, 1b
    """),
    "fib": ((32, 64), """
        li t0, 0
        li t1, 1
        li t2, 40
    1:  add t3, t0, t1
        mv t0, t1
        mv t1, t3
        addi t2, t2, -1
        bgtz t2, 1b
    """),
    "branches_signed": ((32, 64), """
        li a0, -1
        li a1, 1
        li s0, 0
        blt a0, a1, 1f
        addi s0, s0, 1
    1:  bge a0, a1, 2f
        addi s0, s0, 2
    2:  bltu a0, a1, 3f
        addi s0, s0, 4
    3:  bgeu a0, a1, 4f
        addi s0, s0, 8
    4:  beq a0, a0, 5f
        addi s0, s0, 16
    5:  bne a0, a0, 6f
        addi s0, s0, 32
    6:
    """),
    "jal_jalr": ((32, 64), """
        jal ra, 1f
        addi a0, a0, 1
        j 2f
    1:  addi a1, a1, 7
        jalr t0, 0(ra)
    2:  la t1, 3f
        jalr t2, 1(t1)
        addi a2, a2, 99
    3:  addi a3, a3, 5
    """),
    "lui_auipc": ((32, 64), """
        lui a0, 0xfffff
        lui a1, 0x80000
        lui a2, 0x7ffff
        auipc a3, 0
        auipc a4, 0xfffff
        auipc a5, 0x12345
    """),
    "loads_signext": ((32, 64), """
        la s0, buf
        lb a0, 0(s0)
        lbu a1, 0(s0)
        lh a2, 0(s0)
        lhu a3, 0(s0)
        lw a4, 4(s0)
        lb a5, 7(s0)
        lh a6, 6(s0)
        lw a7, 0(s0)
    """),
    "stores_widths": ((32, 64), """
        la s0, buf
        li t0, -2
        sb t0, 32(s0)
        sh t0, 34(s0)
        sw t0, 36(s0)
        lw a0, 32(s0)
        lw a1, 36(s0)
        lhu a2, 34(s0)
        li t1, 0x5a
        sb t1, 33(s0)
        lw a3, 32(s0)
    """),
    "load64": ((64,), """
        la s0, buf
        ld a0, 0(s0)
        ld a1, 8(s0)
        lwu a2, 4(s0)
        lw a3, 4(s0)
        li t0, -7
        sd t0, 40(s0)
        ld a4, 40(s0)
        lwu a5, 44(s0)
    """),
    "memcpy_loop": ((32, 64), """
        la s0, buf
        addi s1, s0, 32
        li t2, 4
    1:  lw t0, 0(s0)
        sw t0, 0(s1)
        addi s0, s0, 4
        addi s1, s1, 4
        addi t2, t2, -1
        bnez t2, 1b
        la s0, buf
        lw a0, 32(s0)
        lw a1, 36(s0)
        lw a2, 40(s0)
        lw a3, 44(s0)
    """),
    "div_edges": ((32, 64), """
        li a0, 17
        li a1, 0
        div a2, a0, a1
        divu a3, a0, a1
        rem a4, a0, a1
        remu a5, a0, a1
        li s0, -1
        slli t0, s0, XLENM1
        div a6, t0, s0
        rem a7, t0, s0
        li t1, -7
        li t2, 2
        div s2, t1, t2
        rem s3, t1, t2
        divu s4, t1, t2
        remu s5, t1, t2
    """),
    "mul_high": ((32, 64), """
        li a0, -1
        li a1, -1
        mul a2, a0, a1
        mulh a3, a0, a1
        mulhu a4, a0, a1
        mulhsu a5, a0, a1
        li t0, 0x7fffffff
        li t1, 0x12345
        mulh a6, t0, t1
        mulhu a7, t0, a0
        mulhsu s2, a0, t0
    """),
    "word_ops64": ((64,), """
        li a0, 0x7fffffff
        addiw a1, a0, 1
        li t0, -1
        slli t0, t0, 32
        addw a2, t0, a0
        subw a3, zero, a0
        sllw a4, a0, a0
        srlw a5, t0, a0
        sraw a6, a1, a0
        slliw a7, a0, 31
        srliw s2, a1, 1
        sraiw s3, a1, 4
        mulw s4, a0, a0
        divw s5, a1, t0
        divuw s6, a1, t0
        remw s7, a1, zero
        remuw s8, a0, zero
        li s9, -1
        divw s10, a1, s9
        remw s11, a1, s9
    """),
    "shifts": ((32, 64), """
        li a0, -0x1234
        slli a1, a0, 3
        srli a2, a0, 3
        srai a3, a0, 3
        li t0, 67
        sll a4, a0, t0
        srl a5, a0, t0
        sra a6, a0, t0
        slli a7, a0, XLENM1
        srai s2, a7, XLENM1
    """),
    "compare": ((32, 64), """
        li a0, -5
        li a1, 3
        slt a2, a0, a1
        sltu a3, a0, a1
        slti a4, a0, -6
        sltiu a5, a1, -1
        sltiu a6, a1, 3
        seqz a7, zero
        snez s2, a0
    """),
    "logic_imm": ((32, 64), """
        li a0, 0x0f0f0f0f
        xori a1, a0, -1
        ori a2, a0, 0x7f0
        andi a3, a0, -16
        xor a4, a0, a1
        or a5, a0, a1
        and a6, a0, a1
    """),
    "csr_scratch": ((32, 64), """
        li t0, 0x1234
        csrrw a0, mscratch, t0
        csrrs a1, mscratch, zero
        li t1, 0xff00
        csrrs a2, mscratch, t1
        csrrc a3, mscratch, t1
        csrr a4, mscratch
        csrrwi a5, mscratch, 17
        csrrsi a6, mscratch, 8
        csrrci a7, mscratch, 1
        csrr s2, mscratch
    """),
    "csr_mepc_mtvec": ((32, 64), """
        la t0, 1f
        csrw mepc, t0
        csrr a0, mepc
        li t1, 0x80001000
        csrw mtvec, t1
        csrr a1, mtvec
        csrw mscratch, a1
        csrr a2, mscratch
    1:
    """),
    "csr_mtval": ((32,), """
        li t0, -3
        csrw mtval, t0
        csrr a0, mtval
        csrrci a1, mtval, 3
        csrr a2, mtval
    """),
    "x0_writes": ((32, 64), """
        li t0, 5
        add zero, t0, t0
        addi zero, zero, 1
        lui zero, 1
        mv a0, zero
        jal zero, 1f
    1:  mv a1, zero
    """),
    "nested_loops": ((32, 64), """
        li a0, 0
        li t0, 6
    1:  li t1, 5
    2:  add a0, a0, t1
        xor a0, a0, t0
        addi t1, t1, -1
        bnez t1, 2b
        addi t0, t0, -1
        bnez t0, 1b
    """),
    "bubble_sort": ((32, 64), """
        la s0, buf
        li t0, 9
        sw t0, 32(s0)
        li t0, -3
        sw t0, 36(s0)
        li t0, 7
        sw t0, 40(s0)
        li t0, 1
        sw t0, 44(s0)
        li s1, 4
    1:  addi s1, s1, -1
        beqz s1, 3f
        addi s2, s0, 32
        mv s3, s1
    2:  lw t1, 0(s2)
        lw t2, 4(s2)
        ble t1, t2, 4f
        sw t2, 0(s2)
        sw t1, 4(s2)
    4:  addi s2, s2, 4
        addi s3, s3, -1
        bnez s3, 2b
        j 1b
    3:  lw a0, 32(s0)
        lw a1, 36(s0)
        lw a2, 40(s0)
        lw a3, 44(s0)
    """),
}

_ARITH_R = ["add", "sub", "sll", "slt", "sltu", "xor", "srl", "sra", "or", "and",
            "mul", "mulh", "mulhsu", "mulhu", "div", "divu", "rem", "remu"]
_ARITH_R64 = ["addw", "subw", "sllw", "srlw", "sraw", "mulw", "divw", "divuw", "remw", "remuw"]
_ARITH_I = ["addi", "slti", "sltiu", "xori", "ori", "andi"]
_INTERESTING = [0, 1, -1, 2, -2, 0x7FFFFFFF, -0x80000000, 0x80000000, 0xFFFFFFFF,
                0x7FFFFFFFFFFFFFFF, -0x8000000000000000, 0x123456789ABCDEF]


def random_program(rng: random.Random, xlen: int, length: int = 30) -> str:
    regs = [f"x{i}" for i in range(5, 32)]
    lines = []
    for r in regs:
        v = rng.choice(_INTERESTING + [rng.getrandbits(xlen)])
        lines.append(f"li {r}, {v & ((1 << xlen) - 1)}")
    for _ in range(length):
        kind = rng.random()
        rd, a, b = rng.choice(regs), rng.choice(regs), rng.choice(regs)
        if kind < 0.55:
            op = rng.choice(_ARITH_R + (_ARITH_R64 if xlen == 64 else []))
            lines.append(f"{op} {rd}, {a}, {b}")
        elif kind < 0.8:
            lines.append(f"{rng.choice(_ARITH_I)} {rd}, {a}, {rng.randint(-2048, 2047)}")
        elif kind < 0.9:
            op = rng.choice(["slli", "srli", "srai"])
            lines.append(f"{op} {rd}, {a}, {rng.randrange(xlen)}")
        else:
            lines.append(f"lui {rd}, {rng.randrange(1 << 20)}")
    return "\n".join(lines)


def corpus() -> list[tuple[str, int, str]]:
    progs = []
    for name, (xlens, body) in HANDWRITTEN.items():
        for xlen in xlens:
            progs.append((f"{name}_rv{xlen}", xlen, body.replace("XLENM1", str(xlen - 1))))
    rng = random.Random(20240601)
    for i in range(16):
        for xlen in (32, 64):
            progs.append((f"random{i:02d}_rv{xlen}", xlen, random_program(rng, xlen)))
    return progs


def run_unicorn(xlen: int, elf, end_pc: int) -> list[int]:
    mode = unicorn.UC_MODE_RISCV32 if xlen == 32 else unicorn.UC_MODE_RISCV64
    uc = unicorn.Uc(unicorn.UC_ARCH_RISCV, mode)
    uc.mem_map(TEXT_BASE, MAP_SIZE)
    for addr, data in elf.segments:
        uc.mem_write(addr, data)
    uc.emu_start(elf.entry, end_pc, count=1_000_000)
    pc = uc.reg_read(rc.UC_RISCV_REG_PC)
    if pc != end_pc:
        raise RuntimeError(f"stopped at {pc:#x}, expected {end_pc:#x}")
    return [uc.reg_read(rc.UC_RISCV_REG_X0 + i) for i in range(32)]


def main() -> None:
    cases = []
    for name, xlen, body in corpus():
        elf = load_elf(assemble_elf(PRELUDE + body + EPILOGUE + DATA, xlen))
        end_pc = elf.symbols["done"]
        regs = run_unicorn(xlen, elf, end_pc)
        cases.append({
            "name": name,
            "xlen": xlen,
            "entry": hex(elf.entry),
            "end_pc": hex(end_pc),
            "segments": [[hex(a), d.hex()] for a, d in elf.segments],
            "regs": [hex(r) for r in regs],
        })
    OUT.write_text(json.dumps({"reference": "unicorn " + unicorn.__version__, "programs": cases}, indent=1) + "\n")
    print(f"wrote {len(cases)} programs to {OUT}")


if __name__ == "__main__":
    main()
