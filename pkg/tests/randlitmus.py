"""Litmus test helpers: random small tests over two locations, and fence
insertion for monotonicity checks."""

from __future__ import annotations

import random
from dataclasses import replace

from riscvsem import isa
from riscvsem.memmodel.litmus import And, Eq, LitmusTest, Reg

X, Y = 0x1000, 0x1100
FENCES = [(3, 3, 0), (1, 1, 0), (2, 2, 0), (2, 1, 0), (1, 2, 0), (3, 3, isa.FENCE_TSO_FM)]


def random_litmus(rng: random.Random, max_ops: int = 4) -> LitmusTest:
    """Threads load, store, fence, and build addr/ctrl dependencies; x5
    holds a per-thread store value, x6/x7 the two addresses."""
    threads, init, observed = [], {}, []
    for t in range(rng.choice([2, 2, 3])):
        init[(t, 5)], init[(t, 6)], init[(t, 7)] = t + 1, X, Y
        prog, nr = [], 10
        for _ in range(rng.randint(1, max_ops)):
            roll, base = rng.random(), rng.choice([6, 7])
            if roll < 0.35:
                prog.append(isa.Lw(nr, base, 0))
                observed.append(Reg(t, nr))
                nr += 1
            elif roll < 0.65:
                prog.append(isa.Sw(base, rng.choice([5, *range(10, nr)]), 0))
            elif roll < 0.75:
                prog.append(isa.Fence(*rng.choice(FENCES)))
            elif roll < 0.85 and nr > 10:
                r = rng.randrange(10, nr)
                prog += [isa.Xor(20, r, r), isa.Add(21, base, 20), isa.Lw(nr, 21, 0)]
                observed.append(Reg(t, nr))
                nr += 1
            elif roll < 0.95 and nr > 10:
                prog.append(isa.Beq(rng.randrange(10, nr), 0, 4))
            else:
                prog.append(isa.Addi(5, 5, 1))
        threads.append(prog)
    cond = And(tuple(Eq(term, 0) for term in observed)) if observed else And((Eq(Reg(0, 5), 1),))
    return LitmusTest("rand", threads, init, {"x": 0, "y": 0}, {"x": X, "y": Y}, "exists", cond)


def fence_everywhere(test: LitmusTest) -> LitmusTest:
    """``test`` with a ``fence rw,rw`` after every instruction; branch and
    jump offsets are rescaled so control flow is unchanged."""
    threads = []
    for prog in test.threads:
        out = []
        for i, inst in enumerate(prog):
            if isinstance(inst, isa.BranchType):
                inst = replace(inst, sbimm12=2 * inst.sbimm12)
            elif isinstance(inst, isa.Jal):
                inst = replace(inst, jimm20=2 * inst.jimm20)
            out += [inst, isa.Fence(3, 3)]
        threads.append(out)
    return replace(test, threads=threads)
