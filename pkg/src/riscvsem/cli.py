"""Batch command-line front end.

Exit codes: ``run`` uses 0 (tohost 1 / tolerated timeout), 1 (failing tohost
value), 2 (hard failure), 3 (step budget exhausted) and 64 (unloadable ELF or
bad flags); ``litmus`` uses 65 for unparseable tests and 1 for oracle
mismatches; ``softmul-diff`` uses 1 when any program fails.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .decode import ExtensionSet, make_decoder
from .execute import Halt, register_dump, run
from .machine import Layer, PlatformConfig, TraceLayer
from .sim import ElfError, ImageError, Uart, load_elf, simulator, uart_config

EX_USAGE = 64
EX_DATAERR = 65
DEFAULT_MAX_STEPS = 1_000_000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class CliConfig:
    subcommand: str
    xlen: int | None
    extensions: ExtensionSet | None
    max_steps: int
    trace: bool
    dump_regs: bool


def _config(args: argparse.Namespace) -> CliConfig:
    """Validate the common flags before anything is built."""
    ext = None
    if getattr(args, "isa", None):
        try:
            ext = ExtensionSet.from_isa_string(args.isa)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if args.xlen is not None and args.xlen != ext.xlen:
            raise UsageError(f"--isa {args.isa} disagrees with --xlen {args.xlen}")
    max_steps = getattr(args, "max_steps", DEFAULT_MAX_STEPS)
    if max_steps <= 0:
        raise UsageError("--max-steps must be positive")
    return CliConfig(args.command, getattr(args, "xlen", None), ext, max_steps,
                     getattr(args, "trace", False), getattr(args, "dump_regs", False))


def _out(lines: Sequence[str]) -> None:
    for line in lines:
        print(line)


# run


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _config(args)
    try:
        image = load_elf(args.elf)
    except OSError as exc:
        print(f"error: cannot read {args.elf}: {exc.strerror or exc}", file=sys.stderr)
        return EX_USAGE
    except ElfError as exc:
        print(f"error: {args.elf}: {exc}", file=sys.stderr)
        return EX_USAGE
    xlen = cfg.extensions.xlen if cfg.extensions else cfg.xlen or image.xlen
    if xlen != image.xlen:
        print(f"error: {args.elf} is a {image.xlen}-bit ELF but xlen {xlen} was requested", file=sys.stderr)
        return EX_USAGE
    ext = cfg.extensions or ExtensionSet(has_m=True, xlen=xlen)
    make_cfg = uart_config if args.uart else PlatformConfig
    platform = make_cfg(xlen=xlen, extensions=ext, tohost_addr=image.tohost_addr)
    uart = Uart(args.input.encode().decode("unicode_escape").encode("latin-1")) if args.uart else None
    try:
        m = simulator(platform, image.segments, image.entry, uart=uart, trace=cfg.trace)
    except (ImageError, ValueError) as exc:
        print(f"error: {args.elf}: {exc}", file=sys.stderr)
        return EX_USAGE

    result = run(m, make_decoder(ext), cfg.max_steps)

    if isinstance(m, TraceLayer):
        _out(m.lines())
    base = m
    while isinstance(base, Layer):
        base = base.inner
    _out([e.format() for e in base.event_log])
    if uart is not None and uart.output:
        print(f"UART {uart.output.decode('latin-1')!r}")
    print(result.summary())
    if cfg.dump_regs:
        _out(register_dump(m))

    if result.halt_reason is Halt.TOHOST_WRITE:
        if result.value == 1:
            print("PASS")
            return 0
        if result.value & 1:
            print(f"FAIL test {result.value >> 1}")
        else:
            print(f"FAIL tohost={result.value:#x}")
        return 1
    if result.halt_reason is Halt.HARD_FAILURE:
        return 2
    return 0 if args.allow_timeout else 3


# litmus


def cmd_litmus(args: argparse.Namespace) -> int:
    from .memmodel import (ExplorationLimit, LitmusError, OracleLimit, enumerate_bruteforce,
                           evaluate_postcondition, explore, outcome_set, parse_litmus)

    parse_failed = other_failed = False
    for path in args.paths:
        try:
            test = parse_litmus(Path(path).read_text())
        except OSError as exc:
            print(f"{path}: cannot read: {exc.strerror or exc}", file=sys.stderr)
            parse_failed = True
            continue
        except LitmusError as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            parse_failed = True
            continue
        try:
            graphs = explore(test)
        except (ExplorationLimit, RuntimeError) as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            other_failed = True
            continue
        _out(evaluate_postcondition(test, graphs).lines())
        if args.oracle:
            try:
                oracle = enumerate_bruteforce(test)
            except OracleLimit as exc:
                print(f"{path}: oracle: {exc}", file=sys.stderr)
                other_failed = True
                continue
            same_graphs = {g.key() for g in graphs} == {g.key() for g in oracle}
            same_states = outcome_set(test, graphs) == outcome_set(test, oracle)
            if same_graphs and same_states:
                print(f"Oracle {test.name} OK ({len(graphs)} executions)")
            else:
                print(f"MISMATCH {test.name}: explorer {len(graphs)} executions, oracle {len(oracle)}")
                other_failed = True
        print()
    if parse_failed:
        return EX_DATAERR
    return 1 if other_failed else 0


# softmul-diff


def _suite_chunk(job: tuple[int, list[int], int, str | None]) -> list[tuple[int, bool, str]]:
    from .softmul import run_suite_entry

    seed, indices, max_len, bug = job
    out = []
    for idx in indices:
        v = run_suite_entry(seed, idx, max_len, bug)
        out.append((idx, v.passed, v.line(seed, idx) + (f" ({v.detail})" if v.detail else "")))
    return out


def cmd_softmul_diff(args: argparse.Namespace) -> int:
    if args.count < 0:
        raise UsageError("--count must be non-negative")
    if args.max_len < 1:
        raise UsageError("--max-len must be positive")
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    indices = [args.index] if args.index is not None else list(range(args.count))
    jobs = min(args.jobs, max(1, len(indices)))
    chunks = [(args.seed, indices[j::jobs], args.max_len, args.inject_bug) for j in range(jobs)]
    if jobs == 1:
        results = _suite_chunk(chunks[0])
    else:
        with ProcessPoolExecutor(jobs) as pool:
            results = [r for chunk in pool.map(_suite_chunk, chunks) for r in chunk]
    results.sort()

    failed = [r for r in results if not r[1]]
    for idx, passed, line in results:
        if args.verbose or not passed:
            print(line)
    for idx, _, _ in failed:
        repro = f"python3 -m riscvsem softmul-diff --seed {args.seed} --index {idx} --max-len {args.max_len}"
        if args.inject_bug:
            repro += f" --inject-bug {args.inject_bug}"
        print(f"repro: {repro}")
    print(f"{len(results)} programs, {len(results) - len(failed)} passed, {len(failed)} failed")
    return 1 if failed else 0


# decode


def cmd_decode(args: argparse.Namespace) -> int:
    cfg = _config(args)
    ext = cfg.extensions or ExtensionSet(has_m=True, xlen=cfg.xlen or 64)
    decoder = make_decoder(ext)
    for text in args.words:
        try:
            word = int(text, 16 if not text.lower().startswith(("0b", "0o")) else 0)
        except ValueError:
            raise UsageError(f"not a hex word: {text!r}") from None
        if not 0 <= word < 1 << 32:
            raise UsageError(f"not a 32-bit word: {text!r}")
        print(f"{word:08x} {decoder(word)!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    from .softmul import BUGS

    p = _Parser(prog="riscvsem", description="RISC-V semantics toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--xlen", type=int, choices=(32, 64), default=None,
                        help="register width (run: defaults to the ELF class; decode: 64)")
        sp.add_argument("--isa", help='ISA string such as "rv32im"')

    r = sub.add_parser("run", help="run an ELF program on the simulator")
    r.add_argument("elf")
    common(r)
    r.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    r.add_argument("--trace", action="store_true", help="print every machine primitive call")
    r.add_argument("--dump-regs", action="store_true")
    r.add_argument("--uart", action="store_true", help="map the console device at 0x10000000")
    r.add_argument("--input", default="", help="console input script (backslash escapes allowed)")
    r.add_argument("--allow-timeout", action="store_true", help="exit 0 when --max-steps runs out")
    r.set_defaults(func=cmd_run)

    lt = sub.add_parser("litmus", help="explore litmus tests under RVWMO")
    lt.add_argument("paths", nargs="+")
    lt.add_argument("--oracle", action="store_true", help="cross-check with brute-force enumeration")
    lt.set_defaults(func=cmd_litmus)

    s = sub.add_parser("softmul-diff", help="software-multiply equivalence suite (RV32)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--max-len", type=int, default=20)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--index", type=int, default=None, help="run only this suite entry")
    s.add_argument("--verbose", "-v", action="store_true", help="print a line for every program")
    s.add_argument("--inject-bug", choices=BUGS, default=None, help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_softmul_diff)

    d = sub.add_parser("decode", help="decode instruction words (hex)")
    d.add_argument("words", nargs="+")
    common(d)
    d.set_defaults(func=cmd_decode)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"riscvsem {args.command}: error: {exc}", file=sys.stderr)
        return EX_USAGE


if __name__ == "__main__":
    sys.exit(main())
