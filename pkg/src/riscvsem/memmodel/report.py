"""Final states of executions and the herd-style report."""

from __future__ import annotations

from dataclasses import dataclass

from .graph import ExecutionGraph, MemEvent
from .litmus import LitmusTest, Reg, Term, evaluate
from .thread import ThreadMachine

Valuation = tuple[tuple[Term, int], ...]


def replay(test: LitmusTest, g: ExecutionGraph) -> list[list[int]]:
    """Final registers of each thread, reading the values ``g``'s rf dictates."""
    out = []
    for tid, program in enumerate(test.threads):
        def on_read(ev: MemEvent) -> int:
            return g.events[g.rf[ev.key]].value

        regs = {r: v for (t, r), v in test.init_regs.items() if t == tid}
        out.append(list(ThreadMachine(tid, program, regs, on_read, lambda ev: None,
                                      lambda ev: None, lambda *a: None).run()))
    return out


def valuation(test: LitmusTest, regs: list[list[int]], memory: dict[int, int]) -> Valuation:
    vals = []
    for term in test.observed:
        if isinstance(term, Reg):
            if term.thread < len(regs):
                v = regs[term.thread][term.reg]
            else:
                v = test.init_regs.get((term.thread, term.reg), 0)
        else:
            addr = test.addresses[term.name]
            v = memory.get(addr, test.init_mem.get(term.name, 0))
        vals.append((term, v))
    return tuple(vals)


def graph_valuation(test: LitmusTest, g: ExecutionGraph) -> Valuation:
    return valuation(test, replay(test, g), g.final_memory())


@dataclass
class Report:
    name: str
    witnessed: bool
    outcomes: set[Valuation]
    quantifier: str = "exists"

    @property
    def verdict(self) -> str:
        return "Allowed" if self.witnessed else "Forbidden"

    def lines(self) -> list[str]:
        out = [f"Test {self.name} {self.verdict}", f"States {len(self.outcomes)}"]
        for v in sorted(self.outcomes, key=lambda v: [x for _, x in v]):
            out.append(format_valuation(v))
        return out


def format_valuation(v: Valuation) -> str:
    return " ".join(f"{term}={value};" for term, value in v)


def outcome_set(test: LitmusTest, graphs: list[ExecutionGraph]) -> set[Valuation]:
    return {graph_valuation(test, g) for g in graphs}


def evaluate_postcondition(test: LitmusTest, graphs: list[ExecutionGraph]) -> Report:
    """``witnessed`` is whether some final state satisfies the condition
    (every state, for ``forall``)."""
    outcomes = outcome_set(test, graphs)
    sat = [evaluate(test.condition, dict(v)) for v in outcomes]
    witnessed = all(sat) if test.quantifier == "forall" else any(sat)
    return Report(test.name, witnessed, outcomes, test.quantifier)

