"""Stateless exploration of reads-from and coherence choices.

Threads run to completion one after another.  A run is replayed from a
*decision map* (read -> source write, write -> coherence position); whenever
a run meets an event without a decision it takes a default and pushes the
alternatives, once with the decisions taken so far and once also keeping the
run's decisions for events not yet executed.

A read may also be *revisited* by a write executed later: the new run keeps
the decisions made before the read (and, in further variants, the other
threads' read decisions that led to the write, or all of them) and lets the
read return the later write's value, which is checked once that write
executes.  Reads in the write's own porf prefix are revisited too, since the
model admits load buffering; a speculated value that the write does not
reproduce prunes the run.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..machine import HardFailure
from .graph import EventKey, ExecutionGraph, Kind, MemEvent, check_consistent, init_write
from .litmus import LitmusTest
from .thread import ThreadMachine

DEFAULT_MAX_GRAPHS = 100_000
DEFAULT_MAX_RUNS = 1_000_000


class ExplorationLimit(RuntimeError):
    def __init__(self, what: str, count: int):
        super().__init__(f"{what} budget exceeded after {count}")
        self.count = count


@dataclass(frozen=True)
class Forward:
    """Read from a write that does not exist yet in this run."""

    write: EventKey
    addr: int
    value: int


class _Prune(Exception):
    pass


@dataclass
class ExploreStats:
    runs: int = 0
    pruned: int = 0
    revisits: int = 0


class _Run:
    def __init__(self, test: LitmusTest, decisions: dict, push):
        self.test = test
        self.decisions = decisions
        self.push = push
        self.g = ExecutionGraph()
        self.taken: dict = {}  # decisions in the order events executed
        self.pending: dict[EventKey, list[tuple[EventKey, int, int]]] = {}
        self.reads: list[tuple[EventKey, int, dict]] = []
        self.revisits = 0
        for addr in sorted(test.addresses.values()):
            self._init(addr)

    def _init(self, addr: int) -> list[EventKey]:
        if addr not in self.g.co:
            loc = next((n for n, a in self.test.addresses.items() if a == addr), None)
            w = init_write(addr, self.test.init_mem.get(loc, 0) if loc else 0)
            self.g.add(w)
            self.g.co[addr] = [w.key]
        return self.g.co[addr]

    def _check(self) -> None:
        if not check_consistent(self.g):
            raise _Prune()

    def on_read(self, ev: MemEvent) -> int:
        g = self.g
        order = self._init(ev.addr)
        g.add(ev)
        snapshot = dict(self.taken)
        choice = self.decisions.get(ev.key)
        if choice is None:
            choice = order[-1]
            for w in order[:-1]:
                self._alternative(snapshot, ev.key, w)
        self.taken[ev.key] = choice
        if isinstance(choice, Forward):
            if choice.addr != ev.addr:
                raise _Prune()
            self.pending.setdefault(choice.write, []).append((ev.key, choice.addr, choice.value))
            value = choice.value
        else:
            w = g.events.get(choice)
            if w is None or w.kind is not Kind.WRITE or w.addr != ev.addr:
                raise _Prune()
            g.rf[ev.key] = choice
            value = w.value
        self.reads.append((ev.key, ev.addr, snapshot))
        self._check()
        return value

    def on_write(self, ev: MemEvent) -> None:
        g = self.g
        order = self._init(ev.addr)
        g.add(ev)
        snapshot = dict(self.taken)
        pos = self.decisions.get(ev.key)
        if pos is None:
            pos = len(order)
            for p in range(1, len(order)):
                self._alternative(snapshot, ev.key, p)
        elif not 1 <= pos <= len(order):
            raise _Prune()
        self.taken[ev.key] = pos
        order.insert(pos, ev.key)
        for r, addr, value in self.pending.pop(ev.key, ()):
            if addr != ev.addr or value != ev.value:
                raise _Prune()
            g.rf[r] = ev.key
        prefix = None
        for r, addr, before in self.reads:
            if addr != ev.addr or r[0] == ev.thread:
                continue
            current = self.taken.get(r)
            if isinstance(current, Forward) and current.write == ev.key:
                continue
            if prefix is None:
                prefix = self._porf_prefix(ev.key)
            # keep the read decisions that produced this write
            others = {k: v for k, v in self.taken.items() if k[0] != r[0] and not isinstance(v, int)}
            kept = {k: v for k, v in others.items() if k in prefix}
            self.revisits += 1
            fwd = Forward(ev.key, ev.addr, ev.value)
            self.push({**before, r: fwd})
            self.push({**before, **kept, r: fwd})
            # earlier speculations in ``before`` may rest on reads outside the prefix
            self.push({**before, **others, r: fwd})
        self._check()

    def _alternative(self, snapshot: dict, key: EventKey, choice) -> None:
        self.push({**snapshot, key: choice})
        # a revisit may have fixed later reads; keep them so the run can
        # reproduce the write the revisited read speculated on
        later = {k: v for k, v in self.decisions.items() if k not in snapshot and k != key}
        if later:
            self.push({**later, **snapshot, key: choice})

    def _porf_prefix(self, key: EventKey) -> set[EventKey]:
        """Events before ``key`` in (po | rf)+, as far as rf is bound."""
        out: set[EventKey] = set()
        todo = [key]
        while todo:
            tid, idx = todo.pop()
            for i in range(idx - 1, -1, -1):
                k = (tid, i)
                if k in out:
                    break
                out.add(k)
                src = self.g.rf.get(k)
                if src is not None and src[0] >= 0 and src not in out:
                    out.add(src)
                    todo.append(src)
        return out

    def on_fence(self, ev: MemEvent) -> None:
        self.g.add(ev)

    def on_dep(self, src: EventKey, dst: EventKey, label: str) -> None:
        self.g.deps.add((src, dst, label))

    def execute(self) -> ExecutionGraph:
        for tid, program in enumerate(self.test.threads):
            regs = {r: v for (t, r), v in self.test.init_regs.items() if t == tid}
            ThreadMachine(tid, program, regs, self.on_read, self.on_write, self.on_fence, self.on_dep).run()
        if self.pending:
            raise _Prune()
        return self.g


def explore(test: LitmusTest, max_graphs: int = DEFAULT_MAX_GRAPHS,
            max_runs: int = DEFAULT_MAX_RUNS, stats: ExploreStats | None = None) -> list[ExecutionGraph]:
    """All consistent complete executions of ``test``, one per (rf, co)."""
    stats = stats if stats is not None else ExploreStats()
    seen: set[frozenset] = {frozenset()}
    stack: list[dict] = [{}]

    def push(decisions: dict) -> None:
        key = frozenset(decisions.items())
        if key not in seen:
            seen.add(key)
            stack.append(decisions)

    found: dict[tuple, ExecutionGraph] = {}
    while stack:
        if stats.runs >= max_runs:
            raise ExplorationLimit("run", stats.runs)
        stats.runs += 1
        run = _Run(test, stack.pop(), push)
        try:
            g = run.execute()
        except _Prune:
            stats.pruned += 1
            continue
        except HardFailure as exc:
            raise RuntimeError(f"{test.name}: thread failed: {exc}") from exc
        finally:
            stats.revisits += run.revisits
        found.setdefault(g.key(), g)
        if len(found) > max_graphs:
            raise ExplorationLimit("graph", len(found))
    return [found[k] for k in sorted(found)]
