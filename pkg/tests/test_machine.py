import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from riscvsem import isa
from riscvsem.execute import execute, run1
from riscvsem.isa import CSRField, PrivMode, SourceType
from riscvsem.machine import (
    EARLY_EXIT, EndCycle, HardFailure, MachineInterface, Outcome, PlatformConfig, layer_early_exit, layer_trace,
    MmioRange,
)
from riscvsem.sim import minimal_machine

from instgen import instruction_classes, random_instruction
from progs import BASE, TRAP_VECTOR, decoder_for, machine

# frozen from one run of the instrumented interpreter
ADD_TRACE = [
    "0 get_pc -> 0x80000000",
    "0 load_word Fetch 0x80000000 -> 0x3100b3",
    "0 get_register 0x2 -> 0x5",
    "0 get_register 0x3 -> 0x7",
    "0 set_register 0x1 0xc -> None",
    "0 get_pc -> 0x80000000",
    "0 set_pc 0x80000004 -> None",
]

MISALIGNED_JALR_TRACE = [
    "0 get_pc -> 0x80000000",
    "0 load_word Fetch 0x80000000 -> 0x100e7",
    "0 get_register 0x2 -> 0x80000002",
    "0 get_pc -> 0x80000000",
    "0 get_pc -> 0x80000000",
    "0 set_csr_field MEPC 0x80000000 -> None",
    "0 set_csr_field MCauseInterrupt 0x0 -> None",
    "0 set_csr_field MCauseCode 0x0 -> None",
    "0 set_csr_field MTVal 0x80000002 -> None",
    "0 get_priv_mode -> MACHINE",
    "0 set_csr_field MStatusMPP 0x3 -> None",
    "0 get_csr_field MStatusMIE -> 0x0",
    "0 set_csr_field MStatusMPIE 0x0 -> None",
    "0 set_csr_field MStatusMIE 0x0 -> None",
    "0 set_priv_mode MACHINE -> None",
    "0 get_csr_field MTVecBase -> 0x20000400",
    "0 set_pc 0x80001000 -> None",
    "0 end_cycle_early -> EndCycle",
]


def test_add_trace_golden():
    m = machine([isa.Add(1, 2, 3)], regs={2: 5, 3: 7}, trace=True)
    assert run1(m, decoder_for(m)).kind is Outcome.COMPLETED
    assert m.lines() == ADD_TRACE
    execute_part = [r.primitive for r in m.log[2:]]
    assert execute_part == ["get_register", "get_register", "set_register", "get_pc", "set_pc"]


def test_store_traces_one_execute_store_word():
    m = machine([isa.Sw(2, 3, 8)], regs={2: BASE + 0x100, 3: 7}, trace=True)
    run1(m, decoder_for(m))
    stores = [r for r in m.log if r.primitive.startswith("store")]
    assert [(r.primitive, r.args) for r in stores] == [("store_word", (SourceType.EXECUTE, BASE + 0x108, 7))]


def test_empty_trace():
    m = machine([], trace=True)
    assert m.lines() == []


def test_misaligned_jalr_early_exit_golden():
    m = machine([isa.Jalr(1, 2, 0)], regs={2: BASE + 2}, trace=True)
    assert run1(m, decoder_for(m)) == EARLY_EXIT
    assert m.lines() == MISALIGNED_JALR_TRACE
    assert m.get_pc() == TRAP_VECTOR


def test_nothing_after_abort():
    """The interpreter never resumes past end_cycle_early."""
    # an empty program leaves the all-zero (illegal) word at the entry point
    for program, regs in [([isa.Jalr(1, 2, 0)], {2: BASE + 2}), ([isa.Lw(1, 2, 1)], {2: BASE}),
                          ([isa.Ecall()], {}), ([], {})]:
        m = machine(program, regs=regs, trace=True)
        assert run1(m, decoder_for(m)) == EARLY_EXIT
        names = [r.primitive for r in m.log]
        assert names.count("end_cycle_early") == 1
        assert names[-1] == "end_cycle_early"


def test_plain_machine_cannot_exit_early():
    cfg = PlatformConfig(xlen=32, memory_size=1 << 12)
    m = minimal_machine(cfg)
    with pytest.raises(HardFailure) as exc:
        m.end_cycle_early()
    assert exc.value.reason == "early-exit-unsupported"
    with pytest.raises(EndCycle):
        layer_early_exit(m).end_cycle_early()


def test_unsupported_primitives_are_hard_failures():
    m = MachineInterface()
    for call in (lambda: m.get_register(1), lambda: m.load_word(SourceType.EXECUTE, 0),
                 lambda: m.make_reservation(0), lambda: m.set_pc(0)):
        with pytest.raises(HardFailure) as exc:
            call()
        assert exc.value.reason.startswith("unsupported:")
    with pytest.raises(HardFailure) as exc:
        m.get_csr_field(CSRField.MEPC)
    assert exc.value.reason == "csr-unsupported"


def test_minimal_machine_basics():
    cfg = PlatformConfig(xlen=64, memory_size=1 << 12)
    m = minimal_machine(cfg, entry=BASE + 8)
    assert m.regs == [0] * 32 and m.get_pc() == BASE + 8
    m.store_word(SourceType.EXECUTE, BASE, 0x11223344)
    assert m.load_byte(SourceType.EXECUTE, BASE) == 0x44
    assert m.load_half(SourceType.EXECUTE, BASE + 2) == 0x1122
    with pytest.raises(HardFailure) as exc:
        m.load_word(SourceType.EXECUTE, 0x100)
    assert exc.value.reason == "bad-address"
    m.make_reservation(BASE)
    assert m.check_reservation(BASE) and not m.check_reservation(BASE + 4)
    m.clear_reservation(BASE)
    assert not m.check_reservation(BASE)
    assert all(m.get_csr_field(f) == 0 for f in CSRField)


def test_csr_field_writes_masked():
    m = minimal_machine(PlatformConfig(xlen=32, memory_size=1 << 12))
    m.set_csr_field(CSRField.MSTATUS_MIE, 3)
    assert m.get_csr_field(CSRField.MSTATUS_MIE) == 1
    m.set_csr_field(CSRField.MEPC, 1 << 40)
    assert m.get_csr_field(CSRField.MEPC) == 0


def test_platform_config_rejects_overlapping_mmio():
    with pytest.raises(ValueError):
        PlatformConfig(mmio_ranges=[MmioRange(0x80000010, 16, "uart")])
    with pytest.raises(ValueError):
        PlatformConfig(mmio_ranges=[MmioRange(0x1000, 16, "a"), MmioRange(0x1008, 16, "b")])


def _state(m):
    return (list(m.regs), m.pc, bytes(m.mem), dict(m.csr), m.priv)


def _transparency_case(seed):
    rng = random.Random(seed)
    classes = [c for c in instruction_classes(PlatformConfig(xlen=64).extensions)
               if c not in (isa.Ecall, isa.Ebreak, isa.Mret, isa.Jal, isa.Jalr) and c.__base__ is not isa.BranchType]
    inst = random_instruction(rng, rng.choice(classes), 64)
    regs = {r: rng.choice([0, BASE + 0x800, rng.getrandbits(64)]) for r in range(1, 32)}
    return inst, regs


@given(st.integers(0, 2**32))
def test_layer_transparency(seed):
    inst, regs = _transparency_case(seed)
    bare = machine(xlen=64, regs=regs)
    # unwrap to the minimal machine below the early-exit layer
    bare = bare.inner
    bare.set_pc(BASE)
    layered = layer_trace(layer_early_exit(machine(xlen=64, regs=regs).inner))
    layered.set_pc(BASE)
    try:
        bare_out = execute(bare, inst)
    except HardFailure:
        bare_out = None
    out = execute(layered, inst)
    if out.kind is Outcome.EARLY_EXIT:
        return  # the bare platform cannot express the abort
    assert bare_out == out
    assert _state(bare) == _state(layered.inner.inner)


@given(st.integers(0, 2**32))
def test_x0_stays_zero(seed):
    rng = random.Random(seed)
    ext = PlatformConfig(xlen=64).extensions
    classes = [c for c in instruction_classes(ext) if "rd" in c.__dataclass_fields__]
    inst = random_instruction(rng, rng.choice(classes), 64)
    inst = type(inst)(**{**inst.operands(), "rd": 0})
    regs = {r: rng.getrandbits(64) for r in range(1, 32)}
    m = layer_trace(machine([inst], xlen=64, regs=regs))
    run1(m, decoder_for(m.inner))
    assert m.get_register(0) == 0


def test_hard_failure_stops_the_step():
    m = machine([isa.Sw(2, 3, 0)], regs={2: 0x100, 3: 1}, trace=True)
    out = run1(m, decoder_for(m))
    assert out.kind is Outcome.HARD_FAILURE and out.reason == "bad-address"
    assert m.log[-1].primitive == "store_word"
    assert m.get_pc() == BASE


def test_priv_mode_default_machine():
    assert MachineInterface().get_priv_mode() is PrivMode.MACHINE
