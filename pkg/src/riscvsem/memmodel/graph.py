"""Execution graphs and the axiomatic consistency check.

Two axioms of the RVWMO subset covering word loads/stores and fences:

* coherence: ``acyclic(po-loc | rf | co | fr)``
* model:     ``acyclic(ppo | rfe | co | fr)``

``ppo`` is fence ordering, addr/data/ctrl dependencies, and same-address
W->W and R->W program order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter

EventKey = tuple[int, int]  # (thread, po_index); initial writes are (-1, addr)
INIT_THREAD = -1

# fence predecessor/successor bits
FENCE_R, FENCE_W = 0b10, 0b01
FENCE_TSO_FM = 0b1000


class Kind(enum.Enum):
    READ = "R"
    WRITE = "W"
    FENCE = "F"


@dataclass(frozen=True)
class MemEvent:
    key: EventKey
    kind: Kind
    addr: int | None = None
    value: int | None = None
    pred: int = 0
    succ: int = 0
    fm: int = 0

    @property
    def thread(self) -> int:
        return self.key[0]

    @property
    def po_index(self) -> int:
        return self.key[1]

    @property
    def is_init(self) -> bool:
        return self.key[0] == INIT_THREAD


def init_write(addr: int, value: int = 0) -> MemEvent:
    return MemEvent((INIT_THREAD, addr), Kind.WRITE, addr, value)


@dataclass
class ExecutionGraph:
    events: dict[EventKey, MemEvent] = field(default_factory=dict)
    rf: dict[EventKey, EventKey] = field(default_factory=dict)
    co: dict[int, list[EventKey]] = field(default_factory=dict)
    deps: set[tuple[EventKey, EventKey, str]] = field(default_factory=set)

    def add(self, event: MemEvent) -> None:
        self.events[event.key] = event

    def copy(self) -> "ExecutionGraph":
        return ExecutionGraph(dict(self.events), dict(self.rf),
                              {a: list(ws) for a, ws in self.co.items()}, set(self.deps))

    def key(self) -> tuple:
        """Dedup key: the rf map and every coherence order."""
        return (tuple(sorted(self.rf.items())),
                tuple(sorted((a, tuple(ws)) for a, ws in self.co.items())))

    def final_memory(self) -> dict[int, int]:
        return {a: self.events[ws[-1]].value for a, ws in self.co.items() if ws}

    def thread_events(self, tid: int) -> list[MemEvent]:
        return sorted((e for e in self.events.values() if e.thread == tid), key=lambda e: e.po_index)


def _fr(g: ExecutionGraph) -> list[tuple[EventKey, EventKey]]:
    edges = []
    for r, w in g.rf.items():
        order = g.co.get(g.events[r].addr, [])
        if w in order:
            edges += [(r, later) for later in order[order.index(w) + 1:]]
    return edges


def _co(g: ExecutionGraph) -> list[tuple[EventKey, EventKey]]:
    edges = []
    for order in g.co.values():
        edges += [(a, b) for i, a in enumerate(order) for b in order[i + 1:]]
    return edges


def _po_pairs(g: ExecutionGraph):
    threads: dict[int, list[MemEvent]] = {}
    for e in g.events.values():
        if not e.is_init:
            threads.setdefault(e.thread, []).append(e)
    for evs in threads.values():
        evs.sort(key=lambda e: e.po_index)
        for i, a in enumerate(evs):
            for b in evs[i + 1:]:
                yield a, b, evs[i + 1:evs.index(b)]


def _fence_orders(f: MemEvent, a: MemEvent, b: MemEvent) -> bool:
    if f.fm == FENCE_TSO_FM:
        return not (a.kind is Kind.WRITE and b.kind is Kind.READ)
    bit = {Kind.READ: FENCE_R, Kind.WRITE: FENCE_W}
    return bool(f.pred & bit[a.kind]) and bool(f.succ & bit[b.kind])


def ppo(g: ExecutionGraph) -> list[tuple[EventKey, EventKey]]:
    edges = []
    for a, b, between in _po_pairs(g):
        if a.kind is Kind.FENCE or b.kind is Kind.FENCE:
            continue
        if a.addr == b.addr and b.kind is Kind.WRITE:
            edges.append((a.key, b.key))
        elif any(f.kind is Kind.FENCE and _fence_orders(f, a, b) for f in between):
            edges.append((a.key, b.key))
    for src, dst, label in g.deps:
        if src in g.events and dst in g.events:
            if label == "addr" or g.events[dst].kind is Kind.WRITE:
                edges.append((src, dst))
    return edges


def _acyclic(edges) -> bool:
    ts = TopologicalSorter()
    for a, b in edges:
        ts.add(b, a)
    try:
        ts.prepare()
    except CycleError:
        return False
    return True


def check_consistent(g: ExecutionGraph) -> bool:
    """Both axioms over the events bound so far; reads without an rf source
    simply contribute no rf/fr edges, so partial graphs are accepted."""
    rf = [(w, r) for r, w in g.rf.items()]
    co, fr = _co(g), _fr(g)
    po_loc = [(a.key, b.key) for a, b, _ in _po_pairs(g)
              if a.kind is not Kind.FENCE and b.kind is not Kind.FENCE and a.addr == b.addr]
    if not _acyclic(po_loc + rf + co + fr):
        return False
    rfe = [(w, r) for w, r in rf if w[0] != r[0]]
    return _acyclic(ppo(g) + rfe + co + fr)
