"""Shared test utilities.

Random valid traces (hypothesis strategies) and slow independent
recomputations of quantities the library derives, used as cross-checks.
"""

from __future__ import annotations

import itertools

import networkx as nx
from hypothesis import strategies as st

from racepred import Trace, conflicting
from racepred.trace_model import from_events


@st.composite
def trace_events(
    draw,
    max_events: int = 10,
    max_threads: int = 3,
    max_globals: int = 3,
    max_locks: int = 2,
    lock_bias: float = 0.3,
):
    """(thread, kind, loc) triples forming a valid trace.

    Events are drawn one at a time against replayed lock state, so mutual
    exclusion, non-reentrancy, and nesting hold by construction.  Open
    critical sections are closed at the end.  Reads of never-written globals
    are allowed (the parser's init synthesis covers them).
    """
    k = draw(st.integers(1, max_threads))
    threads = [f"t{i}" for i in range(1, k + 1)]
    globals_ = [f"x{i}" for i in range(1, max_globals + 1)]
    locks = [f"l{i}" for i in range(1, max_locks + 1)]
    n = draw(st.integers(0, max_events))

    held: dict[str, str] = {}  # lock -> thread
    stacks: dict[str, list[str]] = {p: [] for p in threads}
    items: list[tuple[str, str, str]] = []
    for _ in range(n):
        p = draw(st.sampled_from(threads))
        choices = ["w", "r"]
        free = [l for l in locks if l not in held]
        if free and draw(st.floats(0, 1)) < lock_bias:
            choices = ["acq"]
        elif stacks[p] and draw(st.floats(0, 1)) < lock_bias:
            choices = ["rel"]
        kind = draw(st.sampled_from(choices))
        if kind in ("w", "r"):
            items.append((p, kind, draw(st.sampled_from(globals_))))
        elif kind == "acq":
            lock = draw(st.sampled_from(free))
            held[lock] = p
            stacks[p].append(lock)
            items.append((p, "acq", lock))
        else:
            lock = stacks[p].pop()
            del held[lock]
            items.append((p, "rel", lock))
    for p in threads:
        while stacks[p]:
            lock = stacks[p].pop()
            del held[lock]
            items.append((p, "rel", lock))
    return items


@st.composite
def traces(draw, **kwargs) -> Trace:
    return from_events(draw(trace_events(**kwargs)))


def trf_digraph(trace: Trace) -> nx.DiGraph:
    """TRF recomputed independently: networkx transitive closure of TO ∪ rf."""
    g = nx.DiGraph()
    g.add_nodes_from(ev.eid for ev in trace)
    for proj in trace.by_thread:
        for a, b in itertools.pairwise(proj):
            g.add_edge(a.eid, b.eid)
    for reader, writer in trace.rf.items():
        g.add_edge(writer, reader)
    return nx.transitive_closure_dag(g)


def gamma_by_scan(trace: Trace) -> int:
    """Lock-nesting depth by direct replay of per-thread open acquires."""
    depth = {p: 0 for p in trace.threads}
    best = 0
    for ev in trace:
        if ev.is_acquire:
            depth[ev.thread] += 1
            best = max(best, depth[ev.thread])
        elif ev.is_release:
            depth[ev.thread] -= 1
    return best


def zeta_by_scan(trace: Trace) -> int:
    """Lock-dependence factor recomputed from scratch via networkx.

    Edge (a1, a2) between acquires iff a1 does not reach a2, a1 reaches
    match(a2), and match(a1) does not reach match(a2), all in TRF.  The
    factor is the largest ancestor set (self included) of any acquire.
    """
    closure = trf_digraph(trace)

    def reaches(u: int, v: int) -> bool:
        return u == v or closure.has_edge(u, v)

    acquires = [ev.eid for ev in trace if ev.is_acquire]
    dep = nx.DiGraph()
    dep.add_nodes_from(acquires)
    for a1, a2 in itertools.permutations(acquires, 2):
        m1, m2 = trace.match[a1], trace.match[a2]
        if not reaches(a1, a2) and reaches(a1, m2) and not reaches(m1, m2):
            dep.add_edge(a1, a2)
    best = 0
    for a in acquires:
        best = max(best, len(nx.ancestors(dep, a)) + 1)
    return best


def conflicting_pairs(trace: Trace, cross_thread: bool = True):
    """All conflicting global read/write pairs, smaller id first."""
    accesses = [ev for ev in trace if ev.is_global_access]
    for a, b in itertools.combinations(accesses, 2):
        if conflicting(a, b) and (not cross_thread or a.thread != b.thread):
            yield a.eid, b.eid
