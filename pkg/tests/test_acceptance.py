"""Headline acceptance checks; each prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (the lines also
appear in the terminal summary) or ``python3 tests/test_acceptance.py``.
"""

import json
import sys
import time
from pathlib import Path

import pytest

from riscvsem import isa
from riscvsem.decode import decode, encode, make_decoder
from riscvsem.execute import Halt, execute, run
from riscvsem.isa import CSRField
from riscvsem.machine import COMPLETED, EARLY_EXIT, PlatformConfig
from riscvsem.memmodel import (
    enumerate_bruteforce, evaluate_postcondition, explore, outcome_set, parse_litmus, sc_executions,
)
from riscvsem.memmodel.report import valuation
from riscvsem.sim import Uart, load_elf, simulator, uart_config
from riscvsem.softmul import BUGS, run_suite_entry

from conftest import ACCEPTANCE
from instgen import random_instructions
from progs import decoder_for, machine, run_reference
from randlitmus import fence_everywhere

FIXTURES = Path(__file__).parent / "fixtures"
LITMUS = FIXTURES / "litmus"


def report(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def test_decode_round_trip():
    n = 100_000
    start = time.perf_counter()
    failures = sum(decode(ext, encode(inst)) != inst for ext, inst in random_instructions(2024, n))
    elapsed = time.perf_counter() - start
    report("decode round-trip", failures == 0 and elapsed < 10,
           f"{n} instructions, {failures} failures, {elapsed:.2f} s (limit 10 s)")


def test_reference_cross_check():
    programs = json.loads((FIXTURES / "reference_dumps.json").read_text())["programs"]
    mismatched = []
    for prog in programs:
        regs, reached = run_reference(prog)
        if not reached or regs != [int(r, 16) for r in prog["regs"]]:
            mismatched.append(f"{prog['name']}-rv{prog['xlen']}")
    report("reference cross-check", len(programs) >= 50 and not mismatched,
           f"{len(programs)} programs, {len(mismatched)} mismatches {mismatched or ''}".rstrip())


def _low_machine(regs):
    m = simulator(PlatformConfig(xlen=32, memory_base=0, memory_size=1 << 16), [], 0)
    for r, v in regs.items():
        m.set_register(r, v)
    m.set_csr_field(CSRField.MTVEC_BASE, 0x8000 >> 2)
    m.set_pc(0x1000)
    return m


def test_jalr_semantics():
    m = _low_machine({2: 0x2005})
    lsb = execute(m, isa.Jalr(1, 2, 3)) == COMPLETED and (m.get_pc(), m.get_register(1)) == (0x2008, 0x1004)
    m = _low_machine({2: 0x2000})
    trap = (execute(m, isa.Jalr(1, 2, 2)) == EARLY_EXIT
            and m.get_csr_field(CSRField.MCAUSE_CODE) == 0
            and m.get_csr_field(CSRField.MTVAL) == 0x2002)
    report("JALR semantics", lsb and trap,
           f"LSB cleared: {lsb}; misaligned target traps with cause 0, MTVal=target: {trap}")


def test_softmul_equivalence():
    seed, count, max_len = 0, 1000, 20
    start = time.perf_counter()
    failed = [i for i in range(count) if not run_suite_entry(seed, i, max_len).passed]
    elapsed = time.perf_counter() - start
    flips = {}
    for bug in BUGS:
        flips[bug] = next((i for i in range(count) if not run_suite_entry(seed, i, max_len, bug).passed), None)
    caught = all(v is not None for v in flips.values())
    report("softmul equivalence", not failed and elapsed < 60 and caught,
           f"{count} programs, {len(failed)} failed, {elapsed:.1f} s (limit 60 s); "
           + ", ".join(f"{b} caught at #{i}" for b, i in flips.items()))


def test_litmus_outcomes():
    expected = json.loads((LITMUS / "expected.json").read_text())["tests"]
    files = sorted(LITMUS.glob("*.litmus"))
    bad = []
    start = time.perf_counter()
    for path in files:
        test = parse_litmus(path.read_text())
        graphs = explore(test)
        oracle = enumerate_bruteforce(test)
        rep = evaluate_postcondition(test, graphs)
        states = sorted([v for _, v in val] for val in rep.outcomes)
        exp = expected[test.name]
        if ({g.key() for g in graphs} != {g.key() for g in oracle}
                or outcome_set(test, oracle) != rep.outcomes
                or states != sorted(exp["states"]) or rep.verdict != exp["verdict"]):
            bad.append(test.name)
    elapsed = time.perf_counter() - start
    two_thread = sum(len(parse_litmus(p.read_text()).threads) == 2 for p in files)
    report("litmus outcomes", two_thread >= 12 and not bad and elapsed < 30,
           f"{len(files)} tests, {len(bad)} disagreements{f' {bad}' if bad else ''}, {elapsed:.2f} s (limit 30 s; "
           f"about {50 * 60 / elapsed:.0f}x under the 50 min reported for 36 tests)")


def test_sc_inclusion_and_fence_monotonicity():
    bad = []
    for path in sorted(LITMUS.glob("*.litmus")):
        test = parse_litmus(path.read_text())
        weak = outcome_set(test, explore(test))
        sc = {valuation(test, regs, mem) for regs, mem in sc_executions(test)}
        fenced = fence_everywhere(test)
        strong = outcome_set(fenced, explore(fenced))
        if not (sc and sc <= weak and strong <= weak):
            bad.append(test.name)
    report("SC inclusion and fence monotonicity", not bad,
           f"{len(list(LITMUS.glob('*.litmus')))} tests, {len(bad)} violations {bad or ''}".rstrip())


def _hello(trace):
    img = load_elf(FIXTURES / "elf" / "hello.elf")
    cfg = uart_config(xlen=img.xlen, tohost_addr=img.tohost_addr)
    m = simulator(cfg, img.segments, img.entry, uart=Uart(b"A"), trace=trace)
    result = run(m, make_decoder(cfg.extensions), 10_000)
    base = m.inner if trace else m
    return result.halt_reason, [e.format() for e in base.event_log]


def test_mmio_determinism():
    golden = (FIXTURES / "hello_events.txt").read_text().splitlines()
    runs = [_hello(False), _hello(False), _hello(True)]
    ok = all(r == (Halt.TOHOST_WRITE, golden) for r in runs)
    report("MMIO determinism", ok, f"{len(golden)} events, 3 runs (trace off, off, on) byte-identical: {ok}")


def test_throughput():
    target, tolerance = 10e6, 10  # order-of-magnitude tolerance
    n, best = 300_000, 0.0
    for _ in range(5):
        m = machine([isa.Addi(1, 1, 1), isa.Addi(2, 2, 1), isa.Addi(3, 3, 1), isa.Jal(0, -12)])
        d = decoder_for(m)
        start = time.perf_counter()
        run(m, d, n)
        best = max(best, n / (time.perf_counter() - start))
    report("throughput", best >= target / tolerance,
           f"{best / 1e6:.2f} M instr/s best of 5 (target 10 M, accepted within 10x)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
