"""Exhaustive oracle for the explorer, plus sequentially consistent runs.

The oracle guesses every read value from a fixpoint value pool, runs each
thread in isolation under those guesses, and then tries every rf assignment
that matches the guessed values and every per-address coherence order.
Only practical for a handful of memory events per test.
"""

from __future__ import annotations

import itertools

from .graph import EventKey, ExecutionGraph, Kind, MemEvent, check_consistent, init_write
from .litmus import LitmusTest
from .thread import ThreadMachine

DEFAULT_LIMIT = 2_000_000
MAX_POOL = 64


class OracleLimit(RuntimeError):
    pass


class _NeedGuess(Exception):
    pass


class _Trace:
    def __init__(self):
        self.events: list[MemEvent] = []
        self.deps: set[tuple[EventKey, EventKey, str]] = set()
        self.regs: list[int] = []


def _thread_traces(test: LitmusTest, tid: int, pool: list[int]) -> list[_Trace]:
    """Every trace of thread ``tid`` when each read may return any pool value."""
    regs = {r: v for (t, r), v in test.init_regs.items() if t == tid}
    traces, todo = [], [[]]
    while todo:
        guesses = todo.pop()
        trace, used = _Trace(), [0]

        def on_read(ev: MemEvent) -> int:
            if used[0] == len(guesses):
                raise _NeedGuess()
            value = guesses[used[0]]
            used[0] += 1
            trace.events.append(MemEvent(ev.key, ev.kind, ev.addr, value))
            return value

        machine = ThreadMachine(tid, test.threads[tid], regs, on_read, trace.events.append,
                                trace.events.append, lambda s, d, l: trace.deps.add((s, d, l)))
        try:
            trace.regs = list(machine.run())
        except _NeedGuess:
            todo += [guesses + [v] for v in reversed(pool)]
            continue
        traces.append(trace)
    return traces


def value_pool(test: LitmusTest) -> list[int]:
    """Least set of values closed under 'some thread can write it after
    reading values from the set'."""
    pool = {0} | set(test.init_mem.values())
    while True:
        written = set(pool)
        for tid in range(len(test.threads)):
            for trace in _thread_traces(test, tid, sorted(pool)):
                written |= {e.value for e in trace.events if e.kind is Kind.WRITE}
        if written == pool:
            return sorted(pool)
        if len(written) > MAX_POOL:
            raise OracleLimit(f"value pool exceeds {MAX_POOL}")
        pool = written


def enumerate_bruteforce(test: LitmusTest, limit: int = DEFAULT_LIMIT) -> list[ExecutionGraph]:
    pool = value_pool(test)
    per_thread = [_thread_traces(test, tid, pool) for tid in range(len(test.threads))]
    found: dict[tuple, ExecutionGraph] = {}
    budget = [limit]

    for combo in itertools.product(*per_thread):
        events = [e for t in combo for e in t.events]
        deps = set().union(*(t.deps for t in combo))
        addrs = set(test.addresses.values()) | {e.addr for e in events if e.kind is not Kind.FENCE}
        inits = {a: init_write(a, _init_value(test, a)) for a in addrs}
        writes = [e for e in events if e.kind is Kind.WRITE]
        reads = [e for e in events if e.kind is Kind.READ]

        sources = []
        for r in reads:
            cands = [w.key for w in writes if w.addr == r.addr and w.value == r.value]
            if inits[r.addr].value == r.value:
                cands.append(inits[r.addr].key)
            sources.append(cands)
        orders = []
        for a in sorted(addrs):
            ws = [w.key for w in writes if w.addr == a]
            orders.append([(a, [inits[a].key, *perm]) for perm in itertools.permutations(ws)])

        for rf_choice in itertools.product(*sources):
            for co_choice in itertools.product(*orders):
                budget[0] -= 1
                if budget[0] < 0:
                    raise OracleLimit(f"more than {limit} candidate executions")
                g = ExecutionGraph()
                for e in (*inits.values(), *events):
                    g.add(e)
                g.rf = {r.key: w for r, w in zip(reads, rf_choice)}
                g.co = {a: list(order) for a, order in co_choice}
                g.deps = set(deps)
                if check_consistent(g):
                    found.setdefault(g.key(), g)
    return [found[k] for k in sorted(found)]


def _init_value(test: LitmusTest, addr: int) -> int:
    for name, a in test.addresses.items():
        if a == addr:
            return test.init_mem.get(name, 0)
    return 0


def sc_executions(test: LitmusTest) -> list[tuple[list[list[int]], dict[int, int]]]:
    """Final (registers per thread, memory) of every interleaving under a
    single shared memory."""
    n = len(test.threads)
    results: dict[tuple, tuple[list[list[int]], dict[int, int]]] = {}
    todo: list[list[int]] = [[]]
    while todo:
        schedule = todo.pop()
        memory = {a: test.init_mem.get(name, 0) for name, a in test.addresses.items()}

        def on_read(ev):
            return memory.get(ev.addr, 0)

        def on_write(ev):
            memory[ev.addr] = ev.value

        machines = [ThreadMachine(t, test.threads[t], {r: v for (tt, r), v in test.init_regs.items() if tt == t},
                                  on_read, on_write, lambda ev: None, lambda *a: None) for t in range(n)]
        for t in schedule:
            machines[t].step()
        live = [t for t in range(n) if not machines[t].done]
        if live:
            todo += [schedule + [t] for t in live]
            continue
        regs = [list(m.regs) for m in machines]
        key = (tuple(map(tuple, regs)), tuple(sorted(memory.items())))
        results.setdefault(key, (regs, dict(memory)))
    return [results[k] for k in sorted(results)]
