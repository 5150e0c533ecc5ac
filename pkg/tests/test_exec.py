import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riscvsem import isa
from riscvsem.decode import ExtensionSet, encode, make_decoder
from riscvsem.execute import Halt, execute, execute_inst, raise_exception, register_dump, run, run1
from riscvsem.isa import Cause, CSRField, ExceptionCause, PrivMode
from riscvsem.machine import COMPLETED, EARLY_EXIT, Outcome, PlatformConfig
from riscvsem.sim import simulator

from progs import BASE, TRAP_VECTOR, decoder_for, image_of, machine


def csr(m, f):
    return m.get_csr_field(f)


def low_machine(xlen=32, memory_base=0, regs=None):
    cfg = PlatformConfig(xlen=xlen, memory_base=memory_base, memory_size=1 << 16)
    m = simulator(cfg, [], memory_base)
    for r, v in (regs or {}).items():
        m.set_register(r, v)
    m.set_csr_field(CSRField.MTVEC_BASE, 0x8000 >> 2)
    return m


# JALR


def test_jalr_clears_lsb_and_links():
    m = low_machine(regs={2: 0x2005})
    m.set_pc(0x1000)
    assert execute(m, isa.Jalr(1, 2, 3)) == COMPLETED
    assert m.get_register(1) == 0x1004
    assert m.get_pc() == 0x2008


def test_jalr_misaligned_target_traps():
    m = low_machine(regs={2: 0x2000, 1: 0x55})
    m.set_pc(0x1000)
    assert execute(m, isa.Jalr(1, 2, 2)) == EARLY_EXIT
    assert csr(m, CSRField.MCAUSE_CODE) == 0
    assert csr(m, CSRField.MTVAL) == 0x2002
    assert csr(m, CSRField.MEPC) == 0x1000
    assert m.get_pc() == 0x8000
    assert m.get_register(1) == 0x55  # rd untouched


def test_jalr_rd_equals_rs1_reads_first():
    m = low_machine(regs={5: 0x3000})
    m.set_pc(0x1000)
    execute(m, isa.Jalr(5, 5, -4))
    assert m.get_pc() == 0x2FFC and m.get_register(5) == 0x1004


def test_jalr_negative_offset_wraps_rv64():
    m = low_machine(xlen=64, regs={2: 0})
    m.set_pc(0x1000)
    assert execute(m, isa.Jalr(0, 2, -4)) == COMPLETED
    assert m.get_pc() == 0xFFFFFFFFFFFFFFFC


# arithmetic and memory


def test_mul_small_product():
    m = low_machine(regs={6: 3, 7: 5})
    execute(m, isa.Mul(5, 6, 7))
    assert m.get_register(5) == 15


def test_word_ops_sign_extend_rv64():
    m = low_machine(xlen=64, regs={1: 0x7FFFFFFF, 2: 1})
    execute(m, isa.Addw(3, 1, 2))
    assert m.get_register(3) == 0xFFFFFFFF80000000
    execute(m, isa.Sraiw(4, 3, 4))
    assert m.get_register(4) == 0xFFFFFFFFF8000000
    execute(m, isa.Divuw(5, 3, 0))
    assert m.get_register(5) == 0xFFFFFFFFFFFFFFFF


def test_lui_auipc():
    m = low_machine(regs={})
    m.set_pc(0x1000)
    execute(m, isa.Lui(1, -1))
    execute(m, isa.Auipc(2, 1))
    assert m.get_register(1) == 0xFFFFF000
    assert m.get_register(2) == 0x2000


def test_loads_extend():
    m = machine([], regs={2: BASE + 0x100})
    m.store_word(isa.SourceType.EXECUTE, BASE + 0x100, 0x8081F0FF)
    cases = {isa.Lb: 0xFFFFFFFF, isa.Lbu: 0xFF, isa.Lh: 0xFFFFF0FF, isa.Lhu: 0xF0FF, isa.Lw: 0x8081F0FF}
    for cls, want in cases.items():
        execute(m, cls(1, 2, 0))
        assert m.get_register(1) == want, cls.__name__
    m64 = machine([], xlen=64, regs={2: BASE + 0x100})
    m64.store_word(isa.SourceType.EXECUTE, BASE + 0x100, 0x80000000)
    execute(m64, isa.Lw(1, 2, 0))
    execute(m64, isa.Lwu(3, 2, 0))
    assert m64.get_register(1) == 0xFFFFFFFF80000000 and m64.get_register(3) == 0x80000000


@pytest.mark.parametrize("inst, cause", [
    (isa.Lw(1, 2, 2), Cause.LOAD_ADDRESS_MISALIGNED),
    (isa.Lh(1, 2, 1), Cause.LOAD_ADDRESS_MISALIGNED),
    (isa.Sw(2, 1, 1), Cause.STORE_ADDRESS_MISALIGNED),
    (isa.Sh(2, 1, 3), Cause.STORE_ADDRESS_MISALIGNED),
])
def test_misaligned_access_traps(inst, cause):
    m = machine([inst], regs={2: BASE + 0x100, 1: 9})
    assert run1(m, decoder_for(m)) == EARLY_EXIT
    assert csr(m, CSRField.MCAUSE_CODE) == cause
    assert csr(m, CSRField.MTVAL) == BASE + 0x100 + inst.operands().get("oimm12", inst.operands().get("simm12"))
    assert m.get_register(1) == 9


def test_byte_access_never_misaligned():
    m = machine([isa.Sb(2, 1, 1), isa.Lbu(3, 2, 1)], regs={2: BASE + 0x100, 1: 0x1AB})
    d = decoder_for(m)
    assert run1(m, d) == COMPLETED and run1(m, d) == COMPLETED
    assert m.get_register(3) == 0xAB


def test_branch_taken_and_not_taken():
    m = machine([isa.Beq(1, 2, 8), isa.Addi(3, 0, 1), isa.Blt(1, 4, -4)], regs={1: 5, 2: 5, 4: -1})
    d = decoder_for(m)
    run1(m, d)
    assert m.get_pc() == BASE + 8
    run1(m, d)  # 5 < -1 is false
    assert m.get_pc() == BASE + 12


def test_taken_branch_to_misaligned_target_traps():
    m = machine([isa.Beq(0, 0, 2)])
    assert run1(m, decoder_for(m)) == EARLY_EXIT
    assert csr(m, CSRField.MCAUSE_CODE) == 0 and csr(m, CSRField.MTVAL) == BASE + 2
    m = machine([isa.Bne(0, 0, 2)])
    assert run1(m, decoder_for(m)) == COMPLETED and m.get_pc() == BASE + 4


# traps


def test_illegal_mul_enters_handler():
    mul = isa.Mul(5, 6, 7)
    program = [isa.Addi(0, 0, 0)] * 64 + [mul]
    m = machine(program, has_m=False, mtvec=0x80002000, regs={6: 3, 7: 5})
    m.set_pc(0x80000100)
    assert run1(m, decoder_for(m)) == EARLY_EXIT
    assert csr(m, CSRField.MEPC) == 0x80000100
    assert csr(m, CSRField.MCAUSE_CODE) == Cause.ILLEGAL_INSTRUCTION
    assert csr(m, CSRField.MCAUSE_INTERRUPT) == 0
    assert csr(m, CSRField.MTVAL) == encode(mul)
    assert m.get_pc() == 0x80002000
    assert m.get_register(5) == 0


def test_ecall_and_ebreak_causes():
    for inst, cause in ((isa.Ecall(), 11), (isa.Ebreak(), 3)):
        m = machine([inst])
        m.set_csr_field(CSRField.MTVAL, 0x1234)
        assert run1(m, decoder_for(m)) == EARLY_EXIT
        assert csr(m, CSRField.MCAUSE_CODE) == cause
        assert csr(m, CSRField.MTVAL) == 0


def test_trap_entry_status_bookkeeping():
    m = machine([isa.Ecall()])
    m.set_csr_field(CSRField.MSTATUS_MIE, 1)
    m.set_priv_mode(PrivMode.USER)
    run1(m, decoder_for(m))
    assert csr(m, CSRField.MSTATUS_MPIE) == 1
    assert csr(m, CSRField.MSTATUS_MIE) == 0
    assert csr(m, CSRField.MSTATUS_MPP) == PrivMode.USER
    assert m.get_priv_mode() is PrivMode.MACHINE
    assert csr(m, CSRField.MCAUSE_CODE) == 8  # ecall from U


def test_trap_without_csrs_is_hard_failure():
    m = machine([isa.Ecall()], has_csrs=False)
    out = run1(m, decoder_for(m))
    assert out.kind is Outcome.HARD_FAILURE and out.reason == "csr-unsupported"
    m = machine([], has_csrs=False)
    with pytest.raises(Exception) as exc:
        raise_exception(m, ExceptionCause(Cause.BREAKPOINT))
    assert getattr(exc.value, "reason", None) == "csr-unsupported"


# CSR instructions and MRET


def test_csr_read_modify_write():
    m = machine([], regs={1: 0xF0, 2: 0x30})
    execute(m, isa.Csrrw(3, 1, isa.CSR_MSCRATCH))
    assert m.get_register(3) == 0 and csr(m, CSRField.MSCRATCH) == 0xF0
    execute(m, isa.Csrrs(3, 0, isa.CSR_MSCRATCH))
    assert m.get_register(3) == 0xF0 and csr(m, CSRField.MSCRATCH) == 0xF0
    execute(m, isa.Csrrc(3, 2, isa.CSR_MSCRATCH))
    assert csr(m, CSRField.MSCRATCH) == 0xC0
    execute(m, isa.Csrrsi(3, 1, isa.CSR_MSCRATCH))
    assert m.get_register(3) == 0xC0 and csr(m, CSRField.MSCRATCH) == 0xC1
    execute(m, isa.Csrrwi(0, 7, isa.CSR_MEPC))
    assert csr(m, CSRField.MEPC) == 7
    execute(m, isa.Csrrw(4, 0, isa.CSR_MTVEC))
    assert m.get_register(4) == TRAP_VECTOR and csr(m, CSRField.MTVEC_BASE) == 0


def test_mcause_and_mstatus_layout():
    m = machine([], regs={1: 0x80000003, 2: 1 << 3 | 1 << 7 | 3 << 11})
    execute(m, isa.Csrrw(0, 1, isa.CSR_MCAUSE))
    assert csr(m, CSRField.MCAUSE_INTERRUPT) == 1 and csr(m, CSRField.MCAUSE_CODE) == 3
    execute(m, isa.Csrrw(0, 2, isa.CSR_MSTATUS))
    execute(m, isa.Csrrs(5, 0, isa.CSR_MSTATUS))
    assert m.get_register(5) == 1 << 3 | 1 << 7 | 3 << 11


def test_unknown_csr_is_illegal():
    inst = isa.Csrrs(1, 0, 0xC00)  # cycle counter, not modelled
    m = machine([inst])
    assert run1(m, decoder_for(m)) == EARLY_EXIT
    assert csr(m, CSRField.MCAUSE_CODE) == Cause.ILLEGAL_INSTRUCTION
    assert csr(m, CSRField.MTVAL) == encode(inst)


def test_mret():
    m = machine([isa.Mret()])
    m.set_csr_field(CSRField.MEPC, BASE + 0x40)
    m.set_csr_field(CSRField.MSTATUS_MPIE, 1)
    m.set_csr_field(CSRField.MSTATUS_MPP, PrivMode.USER)
    assert run1(m, decoder_for(m)) == COMPLETED
    assert m.get_pc() == BASE + 0x40
    assert m.get_priv_mode() is PrivMode.USER
    assert csr(m, CSRField.MSTATUS_MIE) == 1 and csr(m, CSRField.MSTATUS_MPIE) == 1
    assert csr(m, CSRField.MSTATUS_MPP) == PrivMode.USER


def test_csr_access_from_user_mode_is_illegal():
    m = machine([isa.Csrrs(1, 0, isa.CSR_MSCRATCH)])
    m.set_priv_mode(PrivMode.USER)
    assert run1(m, decoder_for(m)) == EARLY_EXIT
    assert csr(m, CSRField.MCAUSE_CODE) == Cause.ILLEGAL_INSTRUCTION


def test_fence_reaches_platform():
    calls = []
    m = machine([isa.Fence(3, 1, isa.FENCE_TSO_FM)])
    m.fence = lambda pred, succ, fm=0: calls.append((pred, succ, fm))
    run1(m, decoder_for(m))
    assert calls == [(3, 1, isa.FENCE_TSO_FM)]


# drivers


def test_run1_examples():
    cfg = PlatformConfig(xlen=32, memory_base=0, memory_size=1 << 12)
    m = simulator(cfg, image_of([isa.Addi(0, 0, 0)], base=0), 0)
    assert run1(m, make_decoder(cfg.extensions)) == COMPLETED
    assert m.get_pc() == 4 and all(m.get_register(r) == 0 for r in range(32))
    assert run1(m, make_decoder(cfg.extensions)) == EARLY_EXIT  # all-zero word
    assert m.get_csr_field(CSRField.MCAUSE_CODE) == 2
    m = machine([isa.Jal(0, 0)])
    assert run1(m, decoder_for(m)) == COMPLETED and m.get_pc() == BASE


def test_run_examples():
    m = machine([isa.Addi(1, 1, 1)] * 10 + [isa.Jal(0, 0)])
    r = run(m, decoder_for(m), 100)
    assert (r.halt_reason, r.steps_taken) == (Halt.MAX_STEPS, 100)
    assert r.summary() == "halt=MaxSteps steps=100"
    assert m.get_register(1) == 10

    m = machine([isa.Jalr(0, 1, 0)], regs={1: 0xFFFF0000})
    r = run(m, decoder_for(m), 100)
    assert (r.halt_reason, r.steps_taken, r.reason) == (Halt.HARD_FAILURE, 2, "bad-address")
    m = machine([], regs={})
    m.set_pc(0xFFFF0000)
    r = run(m, decoder_for(m), 100)
    assert (r.halt_reason, r.steps_taken) == (Halt.HARD_FAILURE, 1)

    with pytest.raises(ValueError):
        run(m, decoder_for(m), 0)


def test_run_stops_at_tohost():
    tohost = BASE + 0x200
    program = [isa.Lui(5, -0x80000), isa.Addi(6, 0, 1), isa.Sw(5, 6, 0x200), isa.Jal(0, 0)]
    cfg = PlatformConfig(xlen=32, memory_size=1 << 12, tohost_addr=tohost)
    m = simulator(cfg, image_of(program), BASE)
    r = run(m, make_decoder(cfg.extensions), 1000)
    assert (r.halt_reason, r.value, r.steps_taken) == (Halt.TOHOST_WRITE, 1, 3)
    assert r.summary() == "halt=TohostWrite steps=3 tohost=1"


def test_register_dump_format():
    m = machine([], regs={1: 0xABC})
    dump = register_dump(m)
    assert len(dump) == 33
    assert dump[1] == "x1=00000abc" and dump[-1] == "pc=80000000"
    assert register_dump(machine([], xlen=64))[0] == "x0=" + "0" * 16


def test_decoder_parametricity():
    """The I-only and I+M decoders diverge only at the MUL."""
    program = [isa.Addi(6, 0, 3), isa.Addi(7, 0, 5), isa.Mul(5, 6, 7), isa.Jal(0, 0)]
    hi = machine(program)
    lo = machine(program)
    dh, dl = make_decoder(ExtensionSet(has_m=True, xlen=32)), make_decoder(ExtensionSet(has_m=False, xlen=32))
    for step in range(3):
        oh, ol = run1(hi, dh), run1(lo, dl)
        if step < 2:
            assert oh == ol == COMPLETED and hi.regs == lo.regs and hi.pc == lo.pc
    assert oh == COMPLETED and ol == EARLY_EXIT
    assert hi.get_register(5) == 15 and lo.get_register(5) == 0


# direct-evaluation oracle


def _s(v, n):
    v &= (1 << n) - 1
    return v - (1 << n) if v >> (n - 1) else v


def _oracle(program, regs, xlen):
    """Straight-line semantics written from the ISA manual, no shared code."""
    M = (1 << xlen) - 1
    x = list(regs)

    def w32(v):
        return _s(v, 32) & M

    def tdiv(a, b):
        q = abs(a) // abs(b)
        return q if (a < 0) == (b < 0) else -q

    for i in program:
        name = type(i).__name__
        a = x[i.rs1] if hasattr(i, "rs1") else 0
        b = 0
        if hasattr(i, "rs2"):
            b = x[i.rs2]
        elif hasattr(i, "imm12"):
            b = i.imm12 & M
        elif hasattr(i, "shamt"):
            b = i.shamt
        sa, sb = _s(a, xlen), _s(b, xlen)
        sh = b & (xlen - 1)
        r = {
            "Add": lambda: a + b, "Addi": lambda: a + b, "Sub": lambda: a - b,
            "And": lambda: a & b, "Andi": lambda: a & b, "Or": lambda: a | b, "Ori": lambda: a | b,
            "Xor": lambda: a ^ b, "Xori": lambda: a ^ b,
            "Slt": lambda: int(sa < sb), "Slti": lambda: int(sa < sb),
            "Sltu": lambda: int(a < b), "Sltiu": lambda: int(a < b),
            "Sll": lambda: a << sh, "Slli": lambda: a << sh,
            "Srl": lambda: a >> sh, "Srli": lambda: a >> sh,
            "Sra": lambda: sa >> sh, "Srai": lambda: sa >> sh,
            "Mul": lambda: a * b, "Mulh": lambda: (sa * sb) >> xlen,
            "Mulhu": lambda: (a * b) >> xlen, "Mulhsu": lambda: (sa * b) >> xlen,
            "Div": lambda: -1 if b == 0 else (sa if (sa == -(1 << (xlen - 1)) and sb == -1) else tdiv(sa, sb)),
            "Divu": lambda: M if b == 0 else a // b,
            "Rem": lambda: sa if b == 0 else (0 if (sa == -(1 << (xlen - 1)) and sb == -1) else sa - tdiv(sa, sb) * sb),
            "Remu": lambda: a if b == 0 else a % b,
            "Lui": lambda: i.imm20 << 12,
        }
        if xlen == 64:
            a32, b32 = _s(a, 32), _s(b, 32)
            sh5 = b & 31
            r |= {
                "Addw": lambda: w32(a + b), "Addiw": lambda: w32(a + b), "Subw": lambda: w32(a - b),
                "Sllw": lambda: w32(a << sh5), "Slliw": lambda: w32(a << sh5),
                "Srlw": lambda: w32((a & 0xFFFFFFFF) >> sh5), "Srliw": lambda: w32((a & 0xFFFFFFFF) >> sh5),
                "Sraw": lambda: w32(a32 >> sh5), "Sraiw": lambda: w32(a32 >> sh5),
                "Mulw": lambda: w32(a * b),
                "Divw": lambda: M if b32 == 0 else w32(a32 if (a32 == -(1 << 31) and b32 == -1) else tdiv(a32, b32)),
                "Divuw": lambda: M if b & 0xFFFFFFFF == 0 else w32((a & 0xFFFFFFFF) // (b & 0xFFFFFFFF)),
                "Remw": lambda: w32(a32 if b32 == 0 else (0 if (a32 == -(1 << 31) and b32 == -1) else a32 - tdiv(a32, b32) * b32)),
                "Remuw": lambda: w32(a if b & 0xFFFFFFFF == 0 else (a & 0xFFFFFFFF) % (b & 0xFFFFFFFF)),
            }
        if i.rd:
            x[i.rd] = r[name]() & M
    return x


ARITH = ["Add", "Addi", "Sub", "And", "Andi", "Or", "Ori", "Xor", "Xori", "Slt", "Slti", "Sltu", "Sltiu",
         "Sll", "Slli", "Srl", "Srli", "Sra", "Srai", "Mul", "Mulh", "Mulhu", "Mulhsu", "Div", "Divu",
         "Rem", "Remu", "Lui"]
ARITH64 = ["Addw", "Addiw", "Subw", "Sllw", "Slliw", "Srlw", "Srliw", "Sraw", "Sraiw", "Mulw", "Divw",
           "Divuw", "Remw", "Remuw"]
SPECIAL = [0, 1, 2, 0x7F, 0x80000000, 0x7FFFFFFF, 0xFFFFFFFF, 1 << 63, (1 << 63) - 1, (1 << 64) - 1]


def _straight_line(seed, xlen, n):
    from instgen import random_instruction
    rng = random.Random(seed)
    names = ARITH + (ARITH64 if xlen == 64 else [])
    program = [random_instruction(rng, getattr(isa, rng.choice(names)), xlen) for _ in range(n)]
    regs = [0] + [rng.choice(SPECIAL + [rng.getrandbits(xlen)]) & ((1 << xlen) - 1) for _ in range(31)]
    return program, regs


@pytest.mark.parametrize("xlen", (32, 64))
@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(1, 30))
def test_oracle_equivalence(xlen, seed, n):
    program, regs = _straight_line(seed, xlen, n)
    m = machine(program, xlen=xlen, regs=dict(enumerate(regs)))
    result = run(m, decoder_for(m), n)
    assert result.halt_reason is Halt.MAX_STEPS
    assert m.regs == _oracle(program, regs, xlen)
    assert m.get_pc() == BASE + 4 * n


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_run_matches_run1_loop(seed):
    """The inlined driver loop agrees with repeated run1 on traps too."""
    rng = random.Random(seed)
    body = [isa.Addi(1, 1, 1), isa.Lw(2, 3, 2), isa.Ecall(), isa.Jal(0, 8), isa.Csrrs(4, 0, isa.CSR_MEPC),
            isa.Addi(3, 3, 4), isa.Lw(6, 7, 0)]
    program = [rng.choice(body) for _ in range(20)] + [isa.Jal(0, 0)]
    handler_at = BASE + 0x100
    image_program = program + [isa.Addi(0, 0, 0)] * (64 - len(program)) + \
        [isa.Csrrs(5, 0, isa.CSR_MEPC), isa.Addi(5, 5, 4), isa.Csrrw(0, 5, isa.CSR_MEPC), isa.Mret()]
    regs = {3: BASE + 0x400, 7: rng.choice([BASE + 0x800, 0x10])}
    a = machine(image_program, regs=regs, mtvec=handler_at)
    b = machine(image_program, regs=regs, mtvec=handler_at)
    steps = rng.randrange(1, 120)
    result = run(a, decoder_for(a), steps)
    outcomes = []
    for _ in range(steps):
        outcomes.append(run1(b, decoder_for(b)))
        if outcomes[-1].kind is Outcome.HARD_FAILURE:
            break
    if result.halt_reason is Halt.HARD_FAILURE:
        assert outcomes[-1].reason == result.reason and len(outcomes) == result.steps_taken
    else:
        assert result.halt_reason is Halt.MAX_STEPS and len(outcomes) == steps
    assert (a.regs, a.pc, a.csr) == (b.regs, b.pc, b.csr)
