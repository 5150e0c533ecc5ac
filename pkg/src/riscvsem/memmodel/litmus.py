"""Parser for the diy-style RISC-V litmus format (word accesses only).

::

    RISCV MP
    "optional description"
    { 0:x5=1; 0:x6=x; 0:x7=y; 1:x6=y; 1:x7=x; }
     P0          | P1          ;
     sw x5,0(x6) | lw x5,0(x6) ;
     sw x5,0(x7) | lw x8,0(x7) ;
    exists (1:x5=1 /\\ 1:x8=0)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from .. import isa
from ..isa import Instruction

MAX_THREADS = 4
LOCATION_STRIDE = 0x100
LOCATION_BASE = 0x1000


class LitmusError(ValueError):
    """``code`` is one of ``syntax``, ``too-many-threads``,
    ``non-word-access``, ``unsupported-instruction``,
    ``missing-postcondition``."""

    def __init__(self, code: str, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {code}: {message}")
        self.code, self.line, self.col = code, line, col


# postcondition AST


@dataclass(frozen=True)
class Reg:
    thread: int
    reg: int

    def __str__(self) -> str:
        return f"{self.thread}:x{self.reg}"


@dataclass(frozen=True)
class Loc:
    name: str

    def __str__(self) -> str:
        return self.name


Term = Union[Reg, Loc]


@dataclass(frozen=True)
class Eq:
    term: Term
    value: int


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Const:
    value: bool


Formula = Union[Eq, Not, And, Or, Const]


def evaluate(f: Formula, valuation: dict[Term, int]) -> bool:
    if isinstance(f, Eq):
        return valuation.get(f.term, 0) == f.value
    if isinstance(f, Not):
        return not evaluate(f.arg, valuation)
    if isinstance(f, And):
        return all(evaluate(a, valuation) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, valuation) for a in f.args)
    return f.value


def terms(f: Formula) -> list[Term]:
    if isinstance(f, Eq):
        return [f.term]
    if isinstance(f, Not):
        return terms(f.arg)
    if isinstance(f, (And, Or)):
        out: list[Term] = []
        for a in f.args:
            out += [t for t in terms(a) if t not in out]
        return out
    return []


@dataclass
class LitmusTest:
    name: str
    threads: list[list[Instruction]]
    init_regs: dict[tuple[int, int], int] = field(default_factory=dict)
    init_mem: dict[str, int] = field(default_factory=dict)
    addresses: dict[str, int] = field(default_factory=dict)
    quantifier: str = "exists"
    condition: Formula = Const(True)

    @property
    def observed(self) -> list[Term]:
        return terms(self.condition)

    def location_name(self, addr: int) -> str:
        return next(n for n, a in self.addresses.items() if a == addr)


# tokenizing helpers

_REG_NAMES = {f"x{i}": i for i in range(32)} | {n: i for i, n in enumerate(isa.ABI_NAMES)} | {"fp": 8}
_NON_WORD = {"lb", "lbu", "lh", "lhu", "lwu", "ld", "sb", "sh", "sd"}
_UNSUPPORTED_PREFIX = ("amo", "lr.", "sc.")
_R_OPS = {"add": isa.Add, "sub": isa.Sub, "xor": isa.Xor, "or": isa.Or, "and": isa.And,
          "sll": isa.Sll, "srl": isa.Srl, "sra": isa.Sra, "slt": isa.Slt, "sltu": isa.Sltu}
_I_OPS = {"addi": isa.Addi, "xori": isa.Xori, "ori": isa.Ori, "andi": isa.Andi,
          "slti": isa.Slti, "sltiu": isa.Sltiu}
_SHIFTS = {"slli": isa.Slli, "srli": isa.Srli, "srai": isa.Srai}
_BRANCHES = {"beq": isa.Beq, "bne": isa.Bne, "blt": isa.Blt, "bge": isa.Bge,
             "bltu": isa.Bltu, "bgeu": isa.Bgeu}
_FENCE_BITS = {"i": 8, "o": 4, "r": 2, "w": 1}
_MEM_OPERAND = re.compile(r"^(-?(?:0x[0-9a-fA-F]+|\d+))?\((\w+)\)$")


class _Cell:
    def __init__(self, text: str, line: int, col: int):
        self.text, self.line, self.col = text, line, col

    def error(self, code: str, message: str) -> LitmusError:
        return LitmusError(code, message, self.line, self.col)


def _int(text: str, cell: _Cell) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise cell.error("syntax", f"expected integer, got {text!r}") from None


def _reg(text: str, cell: _Cell) -> int:
    try:
        return _REG_NAMES[text.strip()]
    except KeyError:
        raise cell.error("syntax", f"unknown register {text!r}") from None


def _imm12(text: str, cell: _Cell) -> int:
    v = _int(text, cell)
    if not -2048 <= v < 2048:
        raise cell.error("syntax", f"immediate {v} out of 12-bit range")
    return v


def _fence_set(text: str, cell: _Cell) -> int:
    bits = 0
    for ch in text.strip():
        if ch not in _FENCE_BITS:
            raise cell.error("syntax", f"bad fence set {text!r}")
        bits |= _FENCE_BITS[ch]
    return bits


def _instruction(cell: _Cell, index: int, labels: dict[str, int]) -> Instruction:
    mnemonic, _, rest = cell.text.partition(" ")
    mnemonic = mnemonic.lower()
    ops = [o.strip() for o in rest.split(",")] if rest.strip() else []

    def need(n: int):
        if len(ops) != n:
            raise cell.error("syntax", f"{mnemonic} takes {n} operands")

    def mem_operand(text: str) -> tuple[int, int]:
        m = _MEM_OPERAND.match(text.replace(" ", ""))
        if not m:
            raise cell.error("syntax", f"bad memory operand {text!r}")
        return _imm12(m.group(1) or "0", cell), _reg(m.group(2), cell)

    def target(text: str) -> int:
        if text in labels:
            return 4 * (labels[text] - index)
        raise cell.error("syntax", f"unknown label {text!r}")

    if mnemonic in _NON_WORD:
        raise cell.error("non-word-access", f"{mnemonic}: only word accesses are supported")
    if mnemonic.startswith(_UNSUPPORTED_PREFIX):
        raise cell.error("unsupported-instruction", mnemonic)
    if mnemonic == "lw":
        need(2)
        off, base = mem_operand(ops[1])
        return isa.Lw(_reg(ops[0], cell), base, off)
    if mnemonic == "sw":
        need(2)
        off, base = mem_operand(ops[1])
        return isa.Sw(base, _reg(ops[0], cell), off)
    if mnemonic in _R_OPS:
        need(3)
        return _R_OPS[mnemonic](*(_reg(o, cell) for o in ops))
    if mnemonic in _I_OPS:
        need(3)
        return _I_OPS[mnemonic](_reg(ops[0], cell), _reg(ops[1], cell), _imm12(ops[2], cell))
    if mnemonic in _SHIFTS:
        need(3)
        shamt = _int(ops[2], cell)
        if not 0 <= shamt < 32:
            raise cell.error("syntax", f"shift amount {shamt} out of range")
        return _SHIFTS[mnemonic](_reg(ops[0], cell), _reg(ops[1], cell), shamt)
    if mnemonic in _BRANCHES:
        need(3)
        return _BRANCHES[mnemonic](_reg(ops[0], cell), _reg(ops[1], cell), target(ops[2]))
    if mnemonic == "j":
        need(1)
        return isa.Jal(0, target(ops[0]))
    if mnemonic == "li":
        need(2)
        return isa.Addi(_reg(ops[0], cell), 0, _imm12(ops[1], cell))
    if mnemonic == "mv":
        need(2)
        return isa.Addi(_reg(ops[0], cell), _reg(ops[1], cell), 0)
    if mnemonic == "nop":
        need(0)
        return isa.Addi(0, 0, 0)
    if mnemonic == "fence":
        if not ops:
            return isa.Fence(0b1111, 0b1111)
        need(2)
        return isa.Fence(_fence_set(ops[0], cell), _fence_set(ops[1], cell))
    if mnemonic == "fence.tso":
        need(0)
        return isa.Fence(0b0011, 0b0011, isa.FENCE_TSO_FM)
    raise cell.error("unsupported-instruction", mnemonic)


def _thread_program(cells: list[_Cell]) -> list[Instruction]:
    labels: dict[str, int] = {}
    body: list[_Cell] = []
    for cell in cells:
        text = cell.text
        while True:
            m = re.match(r"^([A-Za-z_.][\w.]*):\s*(.*)$", text)
            if not m or m.group(1).lower() in _REG_NAMES:
                break
            labels[m.group(1)] = len(body)
            text = m.group(2)
        if text:
            body.append(_Cell(text, cell.line, cell.col))
    return [_instruction(c, i, labels) for i, c in enumerate(body)]


# postcondition parsing

_TOKEN = re.compile(r"\s*(/\\|\\/|~|\(|\)|=|:|-?0x[0-9a-fA-F]+|-?\d+|[A-Za-z_][\w.]*)")


class _Formula:
    def __init__(self, text: str, line: int, addresses: dict[str, int]):
        self.tokens: list[tuple[str, int]] = []
        self.line = line
        self.addresses = addresses
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                if text[pos:].strip() == "":
                    break
                raise LitmusError("syntax", f"unexpected {text[pos:pos + 10]!r}", line, pos + 1)
            self.tokens.append((m.group(1), m.start(1) + 1))
            pos = m.end()
        self.i = 0

    def peek(self) -> str | None:
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def take(self, expect: str | None = None) -> str:
        if self.i >= len(self.tokens):
            raise LitmusError("syntax", "unexpected end of condition", self.line, 0)
        tok, col = self.tokens[self.i]
        if expect is not None and tok != expect:
            raise LitmusError("syntax", f"expected {expect!r}, got {tok!r}", self.line, col)
        self.i += 1
        return tok

    def parse(self) -> Formula:
        f = self.disj()
        if self.peek() is not None:
            raise LitmusError("syntax", f"trailing {self.peek()!r}", self.line, self.tokens[self.i][1])
        return f

    def disj(self) -> Formula:
        args = [self.conj()]
        while self.peek() == "\\/":
            self.take()
            args.append(self.conj())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conj(self) -> Formula:
        args = [self.unary()]
        while self.peek() == "/\\":
            self.take()
            args.append(self.unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self) -> Formula:
        tok = self.peek()
        if tok in ("~", "not"):
            self.take()
            return Not(self.unary())
        if tok == "(":
            self.take()
            f = self.disj()
            self.take(")")
            return f
        if tok in ("true", "false"):
            self.take()
            return Const(tok == "true")
        return self.atom()

    def atom(self) -> Formula:
        first = self.take()
        if self.peek() == ":":
            self.take()
            term: Term = Reg(int(first), _REG_NAMES.get(self.take(), -1))
            if term.reg < 0:
                raise LitmusError("syntax", "unknown register in condition", self.line, 0)
        else:
            term = Loc(first)
        self.take("=")
        raw = self.take()
        value = self.addresses[raw] if raw in self.addresses else int(raw, 0)
        return Eq(term, value)


# top level


def _strip_comment(line: str) -> str:
    return re.sub(r"\(\*.*?\*\)", "", line).rstrip()


def parse_litmus(text: str) -> LitmusTest:
    lines = [_strip_comment(l) for l in text.splitlines()]
    n = 0

    def skip_blank():
        nonlocal n
        while n < len(lines) and not lines[n].strip():
            n += 1

    skip_blank()
    if n >= len(lines):
        raise LitmusError("syntax", "empty file", 1, 1)
    header = lines[n].split()
    if len(header) < 2 or header[0].upper() != "RISCV":
        raise LitmusError("syntax", "expected 'RISCV <name>' header", n + 1, 1)
    name = header[1]
    n += 1

    # free-form lines until the init block
    while n < len(lines) and "{" not in lines[n]:
        n += 1
    if n >= len(lines):
        raise LitmusError("syntax", "missing '{' init block", n, 1)
    init_text, init_line = "", n + 1
    first = lines[n][lines[n].index("{") + 1:]
    while "}" not in first:
        init_text += first + "\n"
        n += 1
        if n >= len(lines):
            raise LitmusError("syntax", "unterminated init block", init_line, 1)
        first = lines[n]
    init_text += first[:first.index("}")]
    n += 1

    init_regs, init_mem, symbolic = _parse_init(init_text, init_line)

    # instruction table
    skip_blank()
    if n >= len(lines):
        raise LitmusError("syntax", "missing thread table", n, 1)
    head = lines[n].rstrip().rstrip(";")
    procs = [p.strip() for p in head.split("|")]
    for k, p in enumerate(procs):
        if p != f"P{k}":
            raise LitmusError("syntax", f"expected P{k} in thread header, got {p!r}", n + 1, 1)
    if len(procs) > MAX_THREADS:
        raise LitmusError("too-many-threads", f"{len(procs)} threads (max {MAX_THREADS})", n + 1, 1)
    columns: list[list[_Cell]] = [[] for _ in procs]
    n += 1
    cond_start = None
    while n < len(lines):
        raw = lines[n]
        stripped = raw.strip()
        if not stripped:
            n += 1
            continue
        if re.match(r"^(~\s*exists|exists|forall|locations|filter)\b", stripped):
            cond_start = n
            break
        if not stripped.endswith(";"):
            raise LitmusError("syntax", "instruction row must end with ';'", n + 1, len(raw))
        body = raw[:raw.rindex(";")]
        parts = body.split("|")
        if len(parts) != len(procs):
            raise LitmusError("syntax", f"row has {len(parts)} columns, expected {len(procs)}", n + 1, 1)
        col = 1
        for k, part in enumerate(parts):
            text = " ".join(part.split())
            if text:
                columns[k].append(_Cell(text, n + 1, col + len(part) - len(part.lstrip())))
            col += len(part) + 1
        n += 1

    threads = [_thread_program(cells) for cells in columns]

    locations = sorted(set(init_mem) | set(symbolic))
    addresses = {loc: LOCATION_BASE + LOCATION_STRIDE * i for i, loc in enumerate(locations)}

    # postcondition (skipping 'locations [...]' / 'filter' lines)
    quantifier, condition = None, None
    while cond_start is not None and cond_start < len(lines):
        stripped = lines[cond_start].strip()
        rest = " ".join(l.strip() for l in lines[cond_start + 1:])
        m = re.match(r"^(~\s*exists|exists|forall)\b(.*)$", stripped)
        if m:
            quantifier = m.group(1).replace(" ", "")
            body = (m.group(2) + " " + rest).strip()
            if not body:
                raise LitmusError("missing-postcondition", "empty condition", cond_start + 1, 1)
            for loc in re.findall(r"(?<![\w:])([A-Za-z_]\w*)\s*=", body):
                if loc not in addresses and loc not in ("true", "false"):
                    addresses[loc] = LOCATION_BASE + LOCATION_STRIDE * len(addresses)
            condition = _Formula(body, cond_start + 1, addresses).parse()
            break
        cond_start += 1
    if condition is None:
        raise LitmusError("missing-postcondition", "no exists/forall clause", len(lines), 1)

    regs = {key: (addresses[v] if isinstance(v, str) else v) for key, v in init_regs.items()}
    mem = {loc: init_mem.get(loc, 0) for loc in addresses}
    return LitmusTest(name, threads, regs, mem, addresses, quantifier, condition)


def _parse_init(text: str, line: int):
    init_regs: dict[tuple[int, int], int | str] = {}
    init_mem: dict[str, int] = {}
    symbolic: set[str] = set()
    for item in text.replace("\n", " ").split(";"):
        item = item.strip()
        if not item:
            continue
        item = re.sub(r"^(int|uint32_t|int32_t|uint64_t|int64_t)\s+", "", item)
        lhs, eq, rhs = item.partition("=")
        lhs, rhs = lhs.strip(), rhs.strip()
        if not eq or not lhs or not rhs:
            raise LitmusError("syntax", f"bad init binding {item!r}", line, 1)
        value: int | str
        if re.fullmatch(r"-?(0x[0-9a-fA-F]+|\d+)", rhs):
            value = int(rhs, 0)
        elif re.fullmatch(r"[A-Za-z_]\w*", rhs):
            value = rhs
            symbolic.add(rhs)
        else:
            raise LitmusError("syntax", f"bad init value {rhs!r}", line, 1)
        m = re.fullmatch(r"(\d+):(\w+)", lhs)
        if m:
            reg = _REG_NAMES.get(m.group(2))
            if reg is None:
                raise LitmusError("syntax", f"unknown register {m.group(2)!r}", line, 1)
            init_regs[(int(m.group(1)), reg)] = value
        elif re.fullmatch(r"[A-Za-z_]\w*", lhs):
            if isinstance(value, str):
                raise LitmusError("syntax", "memory must be initialised with an integer", line, 1)
            init_mem[lhs] = value
        else:
            raise LitmusError("syntax", f"bad init target {lhs!r}", line, 1)
    return init_regs, init_mem, symbolic
