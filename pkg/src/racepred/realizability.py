"""Witness search over rf-posets and trace ideals.

Three backends decide whether a partial execution order can be completed
into a real trace (a witness):

* :func:`realize_general` — breadth-first search over the ideal graph of
  the poset; works on any feasible ideal, exponential in the thread count
  only.
* :func:`realize_tree` — for tree-inducible posets (conflicts between
  threads form a tree) the closure plus one top-down edge-resolution pass
  yields a witness directly, with no search.
* :func:`realize_bounded` — bounded-distance search: looks for a witness
  whose order flips at most a given number of conflicting write/acquire
  pairs relative to the observed trace, branching on the cross edges of a
  cycle whenever replaying the trace's own order fails.

Witnesses are event-id lists and pass the brute-force module's
correct-reordering checks; ``None`` means no witness was found (for the
bounded backend, none within the budget — see its promise contract).

All backends expect universes drawn from lock-feasible ideals: at most one
acquire per lock may be missing its release.  The prediction pipeline
guarantees this by running feasibility first.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations
from math import comb, prod

import numpy as np

from .ideal_engine import Ideal, feasibility
from .orders import CycleError, PartialOrder, RfPoset, closure
from .trace_model import Event, Trace, TraceError, conflicting

__all__ = [
    "TreePartition",
    "check_tree_inducible",
    "realize_general",
    "realize_tree",
    "realize_bounded",
    "reversal_pairs",
    "reversal_count",
]


def _channel(ev: Event) -> tuple[str, str]:
    """Conflict channel of an event: its location plus global/lock kind."""
    return (ev.loc, "g" if ev.is_global_access else "l")


def _member_in(order: PartialOrder, eid: int, prefix: tuple[int, ...]) -> bool:
    b, pos = order.location(eid)
    return pos < prefix[b]


# ---------------------------------------------------------------------------
# general backend: ideal-graph search
# ---------------------------------------------------------------------------


def realize_general(p: RfPoset, stats: dict | None = None) -> list[int] | None:
    """Search the ideal graph of ``p`` for a witness.

    States are per-thread prefix-length tuples; an event extends a state
    when all its order-predecessors are inside and no pending observation
    (writer placed, observer not) shares its channel.  Returns the event
    sequence of the first path reaching the full universe, or ``None``.
    """
    order = p.order
    blocks = order.blocks
    k = len(blocks)

    # pending-observation scan tables: channel -> [(observer, writer)]
    watchers: dict[tuple[str, str], list[tuple[int, int]]] = {}
    for r in sorted(p.rf):
        watchers.setdefault(_channel(p.trace.event(r)), []).append((r, p.rf[r]))

    def blocked(e: int, prefix: tuple[int, ...]) -> bool:
        ev = p.trace.event(e)
        if not ev.writes_like:
            return False
        for r, w in watchers.get(_channel(ev), ()):
            if w != e and _member_in(order, w, prefix) and not _member_in(order, r, prefix):
                return True
        return False

    start = (0,) * k
    goal = tuple(len(b) for b in blocks)
    parents: dict[tuple[int, ...], tuple[tuple[int, ...], int] | None] = {start: None}
    queue = deque([start])
    found = False
    while queue:
        y = queue.popleft()
        if y == goal:
            found = True
            break
        frontier_events = sorted(
            blocks[b][y[b]] for b in range(k) if y[b] < len(blocks[b])
        )
        yarr = np.array(y, dtype=np.int64)
        for e in frontier_events:
            if not (order.pred[order.index_of(e)] < yarr).all():
                continue
            if blocked(e, y):
                continue
            b = order.location(e)[0]
            y2 = y[:b] + (y[b] + 1,) + y[b + 1 :]
            if y2 in parents:
                continue
            parents[y2] = (y, e)
            queue.append(y2)

    assert len(parents) <= prod(len(b) + 1 for b in blocks)
    if stats is not None:
        stats["search_nodes"] = len(parents)
    if not found:
        return None
    out: list[int] = []
    state = goal
    while parents[state] is not None:
        state, e = parents[state]
        out.append(e)
    out.reverse()
    return out


# ---------------------------------------------------------------------------
# tree backend: inducibility check and closure-based construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TreePartition:
    """Per-thread blocks of a poset whose conflict graph is a forest.

    ``edges`` holds the conflicting block-index pairs (smaller index
    first); ``children_order`` lists (child, parent) pairs top-down from
    each root, the order in which the tree construction resolves blocks.
    """

    blocks: tuple[tuple[int, ...], ...]
    edges: frozenset[tuple[int, int]]
    roots: tuple[int, ...]
    children_order: tuple[tuple[int, int], ...]


def _channel_profile(trace: Trace, block: tuple[int, ...]) -> dict[tuple[str, str], bool]:
    """channel -> whether the block has a write-like event on it."""
    out: dict[tuple[str, str], bool] = {}
    for e in block:
        ev = trace.event(e)
        out[_channel(ev)] = out.get(_channel(ev), False) or ev.writes_like
    return out


def check_tree_inducible(p: RfPoset, stats: dict | None = None) -> TreePartition | None:
    """Partition ``p`` by thread and test tree-inducibility.

    Succeeds when the block conflict graph is a forest, no two blocks in
    different components are ordered, and for every ordered cross-block
    pair the blocks interior to their tree path each hold an event strictly
    between the two (the separation condition).  Returns ``None`` as soon
    as any test fails.
    """
    trace = p.trace
    order = p.order
    blocks = order.blocks
    k = len(blocks)
    profiles = [_channel_profile(trace, b) for b in blocks]

    edges: set[tuple[int, int]] = set()
    for i in range(k):
        for j in range(i + 1, k):
            shared = profiles[i].keys() & profiles[j].keys()
            if any(profiles[i][ch] or profiles[j][ch] for ch in shared):
                edges.add((i, j))

    # forest check + BFS forests (per component, rooted at smallest index)
    adj: dict[int, list[int]] = {i: [] for i in range(k)}
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    comp = [-1] * k
    parent: dict[int, int | None] = {}
    roots: list[int] = []
    children_order: list[tuple[int, int]] = []
    for root in range(k):
        if comp[root] != -1:
            continue
        roots.append(root)
        comp[root] = root
        parent[root] = None
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in sorted(adj[u]):
                if v == parent[u]:
                    continue
                if comp[v] != -1:
                    return None  # conflict cycle among threads
                comp[v] = root
                parent[v] = u
                children_order.append((v, u))
                queue.append(v)

    depth: dict[int, int] = {}
    for root in roots:
        depth[root] = 0
    for child, par in children_order:
        depth[child] = depth[par] + 1

    def interior(i: int, j: int) -> list[int]:
        """Blocks strictly inside the tree path from i to j."""
        a, b = i, j
        left: list[int] = []
        right: list[int] = []
        while depth[a] > depth[b]:
            left.append(a)
            a = parent[a]
        while depth[b] > depth[a]:
            right.append(b)
            b = parent[b]
        while a != b:
            left.append(a)
            right.append(b)
            a, b = parent[a], parent[b]
        path = left + [a] + right[::-1]
        return path[1:-1]

    row_idx = [
        np.array([order.index_of(e) for e in blocks[i]], dtype=np.int64)
        for i in range(k)
    ]
    checked = 0
    for i in range(k):
        if not len(blocks[i]):
            continue
        for j in range(k):
            if i == j or not len(blocks[j]):
                continue
            succ_j = order.succ[row_idx[i], j]
            valid = succ_j < len(blocks[j])
            if not valid.any():
                continue
            if comp[i] != comp[j]:
                return None  # order across unrelated components
            mids = interior(i, j)
            if not mids:
                continue
            targets = np.array(
                [order.index_of(blocks[j][int(pos)]) for pos in succ_j[valid]],
                dtype=np.int64,
            )
            src = row_idx[i][valid]
            for mid in mids:
                checked += int(valid.sum())
                if not (order.succ[src, mid] <= order.pred[targets, mid]).all():
                    return None

    if stats is not None:
        stats["separation_checks"] = checked
    return TreePartition(
        blocks=blocks,
        edges=frozenset(edges),
        roots=tuple(roots),
        children_order=tuple(children_order),
    )


def realize_tree(
    p: RfPoset, tp: TreePartition, stats: dict | None = None
) -> list[int] | None:
    """Realize a tree-inducible poset by closure plus top-down resolution.

    After the closure, every conflicting pair between a parent and child
    block that the closure left unordered is resolved parent-first; the
    result is fully conflict-ordered and linearizes to a witness.  Returns
    ``None`` exactly when the closure is contradictory.
    """
    if tp.blocks != p.order.blocks:
        raise ValueError("tree partition is inconsistent with the poset universe")
    closed = closure(p)
    if closed is None:
        if stats is not None:
            stats["closure_edges"] = None
        return None
    fixed = closed.order
    if stats is not None:
        stats["closure_edges"] = len(fixed.edges) - len(p.order.edges)

    trace = p.trace
    by_channel: list[dict[tuple[str, str], list[int]]] = []
    for block in tp.blocks:
        chans: dict[tuple[str, str], list[int]] = {}
        for e in block:
            chans.setdefault(_channel(trace.event(e)), []).append(e)
        by_channel.append(chans)

    q = fixed.copy()
    resolved = 0
    for child, par in tp.children_order:
        for ch in sorted(by_channel[par].keys() & by_channel[child].keys()):
            for e1 in by_channel[par][ch]:
                for e2 in by_channel[child][ch]:
                    if not conflicting(trace.event(e1), trace.event(e2)):
                        continue
                    if fixed.ordered(e2, e1):
                        continue
                    if q.add_edge(e1, e2):
                        resolved += 1
    if stats is not None:
        stats["resolution_edges"] = resolved
    return q.linearize()


# ---------------------------------------------------------------------------
# bounded backend: distance-limited search
# ---------------------------------------------------------------------------


def reversal_pairs(trace: Trace, witness: list[int]) -> list[tuple[int, int]]:
    """Conflicting write/acquire pairs the witness flips against the trace.

    Pairs are reported as (earlier, later) in original trace order, sorted.
    """
    posn = {e: i for i, e in enumerate(witness)}
    by_channel: dict[tuple[str, str], list[int]] = {}
    for e in witness:
        ev = trace.event(e)
        if ev.writes_like:
            by_channel.setdefault(_channel(ev), []).append(e)
    out = []
    for evs in by_channel.values():
        evs.sort()
        # same channel and both write-like means every pair conflicts
        for i, u in enumerate(evs):
            for v in evs[i + 1 :]:
                if posn[v] < posn[u]:
                    out.append((u, v))
    return sorted(out)


def reversal_count(trace: Trace, witness: list[int]) -> int:
    """Distance between the witness and the trace: flipped pairs."""
    return len(reversal_pairs(trace, witness))


def _conflicting_wa_pairs(trace: Trace, order: PartialOrder) -> list[tuple[int, int]]:
    """All conflicting write/acquire pairs in the universe, trace-ordered."""
    by_channel: dict[tuple[str, str], list[int]] = {}
    for e in sorted(order.events()):
        ev = trace.event(e)
        if ev.writes_like:
            by_channel.setdefault(_channel(ev), []).append(e)
    return sorted(
        (u, v)
        for evs in by_channel.values()
        for i, u in enumerate(evs)
        for v in evs[i + 1 :]
    )


def _wa_positions(
    trace: Trace, order: PartialOrder
) -> dict[tuple[tuple[str, str], int], tuple[list[int], list[int]]]:
    """channel, block -> ascending (positions, event ids) of write-likes."""
    out: dict[tuple[tuple[str, str], int], tuple[list[int], list[int]]] = {}
    for b, block in enumerate(order.blocks):
        for pos, e in enumerate(block):
            ev = trace.event(e)
            if not ev.writes_like:
                continue
            plist, elist = out.setdefault((_channel(ev), b), ([], []))
            plist.append(pos)
            elist.append(e)
    return out


def _extend_reads(
    trace: Trace,
    g: PartialOrder,
    rf: dict[int, int],
    observers: list[int],
    wa_pos: dict[tuple[tuple[str, str], int], tuple[list[int], list[int]]],
) -> None:
    """Order every observer against the conflicting writers around its source.

    With all conflicting write-like pairs already ordered in ``g``, the
    same-channel writers in each block split at the source: the latest one
    below it must run before the observer, the earliest one above it after.
    May raise :class:`CycleError`; edges added before the failure stay.
    """
    from bisect import bisect_left, bisect_right

    for r in observers:
        s = rf[r]
        i_s = g.index_of(s)
        key = _channel(trace.event(r))
        for b in range(g.k):
            got = wa_pos.get((key, b))
            if got is None:
                continue
            plist, elist = got
            lo = int(g.pred[i_s, b])
            hi = int(g.succ[i_s, b])
            j_lo = bisect_right(plist, lo) - 1
            j_hi = bisect_left(plist, hi)
            assert all(elist[j] == s for j in range(j_lo + 1, j_hi)), (
                "write-like pair left unordered around an observed source"
            )
            if j_lo >= 0:
                g.add_edge(elist[j_lo], r)
            if j_hi < len(plist):
                g.add_edge(r, elist[j_hi])


def _shrink_cross(
    cross: list[tuple[int, int]], q: PartialOrder
) -> list[tuple[int, int]]:
    """Cut a cyclic cross-edge sequence down to one tail per thread.

    Input edges appear in cycle order with q-paths linking consecutive
    heads to tails; both splice cases preserve that invariant, so the
    result still witnesses a cycle and has at most one edge per block.
    """
    while True:
        seen: dict[int, int] = {}
        dup = None
        for i, (tail, _head) in enumerate(cross):
            b = q.location(tail)[0]
            if b in seen:
                dup = (seen[b], i)
                break
            seen[b] = i
        if dup is None:
            break
        j0, j1 = dup
        a0, a1 = cross[j0][0], cross[j1][0]
        if q.location(a0)[1] <= q.location(a1)[1]:
            cross = cross[:j0] + cross[j1:]
        else:
            cross = cross[j0:j1]
    assert 1 <= len(cross) <= q.k
    return cross


def _bounded_search(
    trace: Trace,
    q: PartialOrder,
    rf: dict[int, int],
    wa_pairs: list[tuple[int, int]],
    observers: list[int],
    wa_pos: dict,
    budget: int,
    full_budget: int,
    counters: dict[str, int],
) -> list[int] | None:
    g = q.copy()
    try:
        for u, v in wa_pairs:
            if q.unordered(u, v):
                g.add_edge(u, v)  # replay the trace's own orientation
        _extend_reads(trace, g, rf, observers, wa_pos)
    except CycleError as exc:
        if budget == 0:
            return None
        u0, v0 = exc.edge
        cycle = [(u0, v0)] + g.path_between(v0, u0)
        cross = _shrink_cross([e for e in cycle if not q.ordered(*e)], q)
        branches: list[tuple[int, int]] = []
        for e1, e2 in cross:
            wl1 = trace.event(e1).writes_like
            wl2 = trace.event(e2).writes_like
            if wl1 and wl2:
                b = (e2, e1)
            elif wl1:
                b = (rf[e2], e1)  # flip the source under the observer
            elif wl2:
                b = (e2, rf[e1])  # flip the writer under the source
            else:
                raise AssertionError("cycle edge between two observers")
            if b not in branches:
                branches.append(b)
        for b in branches:
            if q.ordered(*b):
                continue  # flip already present; this cycle would recur
            q2 = q.copy()
            try:
                q2.add_edge(*b)
            except CycleError:
                continue
            counters["branches"] += 1
            w = _bounded_search(
                trace, q2, rf, wa_pairs, observers, wa_pos,
                budget - 1, full_budget, counters,
            )
            if w is not None:
                return w
        return None
    w = g.linearize()
    return w if reversal_count(trace, w) <= full_budget else None


def _bounded_sweep(
    trace: Trace,
    q0: PartialOrder,
    rf: dict[int, int],
    wa_pairs: list[tuple[int, int]],
    observers: list[int],
    wa_pos: dict,
    budget: int,
    cap: int = 100_000,
) -> list[int] | None:
    """Exhaustive orientation sweep, a slow safety net behind the search.

    Tries every way to flip at most ``budget`` of the write-like pairs the
    base order leaves open, skipped entirely when the subset count would
    exceed ``cap``.
    """
    open_pairs = [(u, v) for u, v in wa_pairs if q0.unordered(u, v)]
    m = len(open_pairs)
    top = min(budget, m)
    if sum(comb(m, r) for r in range(top + 1)) > cap:
        return None
    for r in range(top + 1):
        for flipped in combinations(range(m), r):
            fset = frozenset(flipped)
            g = q0.copy()
            try:
                for i, (u, v) in enumerate(open_pairs):
                    g.add_edge(v, u) if i in fset else g.add_edge(u, v)
                _extend_reads(trace, g, rf, observers, wa_pos)
            except CycleError:
                continue
            w = g.linearize()
            if reversal_count(trace, w) <= budget:
                return w
    return None


def realize_bounded(
    x: Ideal, budget: int, stats: dict | None = None
) -> list[int] | None:
    """Find a witness for ``x`` at trace distance at most ``budget``.

    Promise semantics: ``None`` is definitive only when ``x`` has no
    witness at all; when every witness flips more than ``budget`` pairs the
    answer may go either way, but a returned witness always stays within
    the budget.

    Raises :class:`TraceError` when ``x`` is infeasible and
    :class:`ValueError` on a negative budget.
    """
    if budget < 0:
        raise ValueError("reversal budget must be non-negative")
    res = feasibility(x)
    if not res:
        raise TraceError(
            f"cannot search for witnesses of an infeasible ideal ({res.status.name})"
        )
    trace = x.trace
    q0 = res.poset.order
    rf = res.poset.rf
    wa_pairs = _conflicting_wa_pairs(trace, q0)
    observers = sorted(rf)
    wa_pos = _wa_positions(trace, q0)
    counters = {"branches": 0}
    w = _bounded_search(
        trace, q0, rf, wa_pairs, observers, wa_pos, budget, budget, counters
    )
    if w is None:
        w = _bounded_sweep(trace, q0, rf, wa_pairs, observers, wa_pos, budget)
    if stats is not None:
        stats["branches"] = counters["branches"]
        stats["reversals"] = [] if w is None else reversal_pairs(trace, w)
    return w
