"""Partial orders over trace events, and observation-closed refinements.

Every order handled here refines per-thread program order, so the universe
splits into one chain ("block") per thread.  That makes a compact reachability
representation possible: for each event we keep, per block, the earliest
successor position and the latest predecessor position.  Order queries are
O(1) array lookups and single-edge insertion is one vectorized pass.

The module also provides:

* :func:`compute_trf` — program order extended with observation edges
  (write-to-read, acquire-to-release), transitively closed;
* :class:`RfPoset` — a partial order bundled with the observation map, the
  object the closure operates on;
* :func:`closure` — the least refinement in which every observed writer is
  protected from interference, or ``None`` when that forces a cycle.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .trace_model import Event, Trace

__all__ = [
    "CycleError",
    "PartialOrder",
    "RfPoset",
    "compute_trf",
    "restrict_trf",
    "is_closed",
    "closure",
]

_NONE = np.iinfo(np.int64).max // 2  # "no successor" sentinel


class CycleError(Exception):
    """Adding an edge would contradict the existing order."""

    def __init__(self, edge: tuple[int, int]):
        super().__init__(f"edge {edge[0]} -> {edge[1]} closes a cycle")
        self.edge = edge


class PartialOrder:
    """A strict partial order over per-thread chains of event ids.

    ``blocks`` fixes the universe: one tuple of event ids per thread, each in
    program order.  The order always contains the block chains; edges added
    later are transitively closed incrementally.
    """

    __slots__ = ("blocks", "n", "k", "_eids", "_idx", "_block", "_pos", "succ", "pred", "edges")

    def __init__(self, blocks: Sequence[Sequence[int]]):
        self.blocks: tuple[tuple[int, ...], ...] = tuple(tuple(b) for b in blocks)
        self.k = len(self.blocks)
        self._eids: list[int] = [e for b in self.blocks for e in b]
        self.n = len(self._eids)
        self._idx: dict[int, int] = {e: i for i, e in enumerate(self._eids)}
        if len(self._idx) != self.n:
            raise ValueError("duplicate event id across blocks")
        self._block = np.empty(self.n, dtype=np.int64)
        self._pos = np.empty(self.n, dtype=np.int64)
        i = 0
        for b, block in enumerate(self.blocks):
            for p in range(len(block)):
                self._block[i] = b
                self._pos[i] = p
                i += 1
        # succ[x, b]: least position in block b strictly above x (or _NONE);
        # pred[x, b]: greatest position in block b strictly below x (or -1).
        self.succ = np.full((self.n, self.k), _NONE, dtype=np.int64)
        self.pred = np.full((self.n, self.k), -1, dtype=np.int64)
        for i in range(self.n):
            b, p = self._block[i], self._pos[i]
            if p + 1 < len(self.blocks[b]):
                self.succ[i, b] = p + 1
            self.pred[i, b] = p - 1
        #: explicitly inserted (u, v) event-id pairs, for path recovery
        self.edges: list[tuple[int, int]] = []

    # -- basics ---------------------------------------------------------

    def copy(self) -> "PartialOrder":
        clone = object.__new__(PartialOrder)
        clone.blocks = self.blocks
        clone.n = self.n
        clone.k = self.k
        clone._eids = self._eids
        clone._idx = self._idx
        clone._block = self._block
        clone._pos = self._pos
        clone.succ = self.succ.copy()
        clone.pred = self.pred.copy()
        clone.edges = list(self.edges)
        return clone

    def __contains__(self, eid: int) -> bool:
        return eid in self._idx

    def index_of(self, eid: int) -> int:
        return self._idx[eid]

    def eid_at(self, idx: int) -> int:
        return self._eids[idx]

    def location(self, eid: int) -> tuple[int, int]:
        """(block, position) of an event."""
        i = self._idx[eid]
        return int(self._block[i]), int(self._pos[i])

    def events(self) -> Iterable[int]:
        return iter(self._eids)

    # -- queries ---------------------------------------------------------

    def ordered(self, u: int, v: int) -> bool:
        """Strictly ordered u < v."""
        iu, iv = self._idx[u], self._idx[v]
        return bool(self.succ[iu, self._block[iv]] <= self._pos[iv])

    def unordered(self, u: int, v: int) -> bool:
        return u != v and not self.ordered(u, v) and not self.ordered(v, u)

    # -- mutation ---------------------------------------------------------

    def add_edge(self, u: int, v: int) -> bool:
        """Insert u < v and transitively close.

        Returns False when the pair was already ordered.  Raises
        :class:`CycleError` when v < u already holds.
        """
        if u == v:
            raise CycleError((u, v))
        iu, iv = self._idx[u], self._idx[v]
        bu, pu = self._block[iu], self._pos[iu]
        bv, pv = self._block[iv], self._pos[iv]
        if self.succ[iu, bv] <= pv:
            return False
        if self.succ[iv, bu] <= pu:
            raise CycleError((u, v))

        below = self.succ[:, bu] <= pu  # everything strictly below u
        below[iu] = True
        above = self.pred[:, bv] >= pv  # everything strictly above v
        above[iv] = True

        up = self.succ[iv].copy()  # v's successors, v included
        up[bv] = min(up[bv], pv)
        down = self.pred[iu].copy()  # u's predecessors, u included
        down[bu] = max(down[bu], pu)

        self.succ[below] = np.minimum(self.succ[below], up)
        self.pred[above] = np.maximum(self.pred[above], down)
        self.edges.append((u, v))
        return True

    # -- derived structure -------------------------------------------------

    def down_vector(self, eids: Iterable[int]) -> np.ndarray:
        """Per-block prefix lengths of the downward closure of ``eids``.

        The closure includes the given events themselves; because the order
        refines the block chains, it is always a tuple of block prefixes.
        """
        lengths = np.zeros(self.k, dtype=np.int64)
        for e in eids:
            i = self._idx[e]
            counts = self.pred[i] + 1
            counts[self._block[i]] = max(counts[self._block[i]], self._pos[i] + 1)
            np.maximum(lengths, counts, out=lengths)
        return lengths

    def linearize(self) -> list[int]:
        """A total order refining the partial order, smallest id first."""
        next_pos = [0] * self.k
        heads: list[int] = []  # heap of candidate eids

        def push_head(b: int) -> None:
            if next_pos[b] < len(self.blocks[b]):
                heapq.heappush(heads, self.blocks[b][next_pos[b]])

        def ready(eid: int) -> bool:
            i = self._idx[eid]
            row = self.pred[i]
            return all(row[c] < next_pos[c] for c in range(self.k))

        for b in range(self.k):
            push_head(b)
        out: list[int] = []
        stash: list[int] = []
        while heads:
            eid = heapq.heappop(heads)
            if not ready(eid):
                stash.append(eid)
                continue
            out.append(eid)
            b, _ = self.location(eid)
            next_pos[b] += 1
            push_head(b)
            for s in stash:
                heapq.heappush(heads, s)
            stash.clear()
        if len(out) != self.n:
            raise CycleError((-1, -1))  # cannot happen for a valid order
        return out

    def transitive_reduction(self) -> list[tuple[int, int]]:
        """Minimal edge set with the same reachability."""
        out: list[tuple[int, int]] = []
        for i in range(self.n):
            u = self._eids[i]
            for b in range(self.k):
                j = self.succ[i, b]
                if j >= _NONE:
                    continue
                v = self.blocks[b][j]
                iv = self._idx[v]
                # an intermediate w with u < w < v rules the edge out
                if any(self.succ[i, c] <= self.pred[iv, c] for c in range(self.k)):
                    continue
                out.append((u, v))
        out.sort()
        return out

    def dump(self) -> str:
        """Debug rendering: one 'a < b' reduction edge per line, sorted."""
        return "\n".join(f"{u} < {v}" for u, v in self.transitive_reduction())

    def path_between(self, u: int, v: int) -> list[tuple[int, int]]:
        """A chain of generator edges witnessing u < v.

        Generator edges are block-chain steps and explicitly inserted edges.
        Raises ValueError when v is not reachable (i.e. not u < v).
        """
        if not self.ordered(u, v):
            raise ValueError(f"{u} is not ordered before {v}")
        fwd: dict[int, list[int]] = {}
        for a, b in self.edges:
            fwd.setdefault(a, []).append(b)

        parent: dict[int, int] = {u: 0}
        queue = deque([u])
        while queue:
            cur = queue.popleft()
            if cur == v:
                break
            b, p = self.location(cur)
            steps = list(fwd.get(cur, ()))
            if p + 1 < len(self.blocks[b]):
                steps.append(self.blocks[b][p + 1])
            for nxt in steps:
                # every node on a generator path to v is itself below v, so
                # the search can prune anything that is not
                if nxt not in parent and (nxt == v or self.ordered(nxt, v)):
                    parent[nxt] = cur
                    queue.append(nxt)
        if v not in parent:
            raise ValueError(f"no generator path from {u} to {v}")
        chain: list[tuple[int, int]] = []
        cur = v
        while cur != u:
            prv = parent[cur]
            chain.append((prv, cur))
            cur = prv
        chain.reverse()
        return chain


# ----------------------------------------------------------------------
# program order + observation
# ----------------------------------------------------------------------


def compute_trf(trace: Trace, members: Iterable[int] | None = None) -> PartialOrder:
    """Program order extended with observation edges, transitively closed.

    ``members`` restricts the universe to a subset of event ids; the subset
    must be downward closed for the restriction to be meaningful (all callers
    pass ideals).
    """
    keep = None if members is None else set(members)
    blocks = [
        [ev.eid for ev in proj if keep is None or ev.eid in keep]
        for proj in trace.by_thread
    ]
    order = PartialOrder(blocks)
    for ev in trace.events:
        if not ev.is_read:
            continue  # release edges are intra-thread, already chained
        if keep is not None and ev.eid not in keep:
            continue
        w = trace.rf[ev.eid]
        if keep is not None and w not in keep:
            raise ValueError(
                f"member set is not observation-closed: {ev.eid} observes {w}"
            )
        if trace.event(w).thread != ev.thread:
            order.add_edge(w, ev.eid)
    return order


def restrict_trf(trace: Trace, members: Iterable[int]) -> PartialOrder:
    """Alias of :func:`compute_trf` with a member subset, for readability."""
    return compute_trf(trace, members)


# ----------------------------------------------------------------------
# rf-posets and the closure
# ----------------------------------------------------------------------


@dataclass
class RfPoset:
    """A partial order over a trace subset plus the observation map.

    ``rf`` maps each observer in the universe (read or release) to the writer
    it must observe (write or acquire).  The order must already place writer
    before observer; the closure strengthens it until no interfering writer
    can slip between any observer and its writer.
    """

    trace: Trace
    order: PartialOrder
    rf: dict[int, int]

    def __post_init__(self) -> None:
        self._interferers: dict[int, np.ndarray] = {}
        writers_by_loc: dict[tuple[str, str], list[int]] = {}
        for eid in self.order.events():
            ev = self.trace.event(eid)
            if ev.writes_like:
                key = (ev.loc, "g" if ev.is_write else "l")
                writers_by_loc.setdefault(key, []).append(ev.eid)
        self._writers_by_loc = {
            key: np.array(v, dtype=np.int64) for key, v in writers_by_loc.items()
        }

    def interferers(self, observer: int) -> np.ndarray:
        """Writer ids conflicting with ``observer``, excluding its own."""
        cached = self._interferers.get(observer)
        if cached is not None:
            return cached
        ev = self.trace.event(observer)
        key = (ev.loc, "g" if ev.is_read else "l")
        ws = self._writers_by_loc.get(key)
        own = self.rf[observer]
        out = ws[ws != own] if ws is not None else np.empty(0, dtype=np.int64)
        self._interferers[observer] = out
        return out

    def triplets(self) -> Iterable[tuple[int, int, int]]:
        """All (writer, observer, interfering-writer) combinations."""
        for r, w in self.rf.items():
            for x in self.interferers(r):
                yield w, r, int(x)


def _violations(poset: RfPoset, observer: int) -> list[tuple[int, int]]:
    """Edges demanded by the closure conditions at one observer."""
    order = poset.order
    ws = poset.interferers(observer)
    if len(ws) == 0:
        return []
    r = observer
    w = poset.rf[r]
    iw, ir = order.index_of(w), order.index_of(r)
    idxs = np.fromiter((order.index_of(int(x)) for x in ws), dtype=np.int64, count=len(ws))
    blk, pos = order._block[idxs], order._pos[idxs]

    added: list[tuple[int, int]] = []
    # interferer already before the observer must move before the writer
    before_r = order.succ[idxs, order._block[ir]] <= order._pos[ir]
    before_w = order.succ[idxs, order._block[iw]] <= order._pos[iw]
    for x in ws[before_r & ~before_w]:
        added.append((int(x), w))
    # interferer already after the writer must move after the observer
    after_w = order.succ[iw, blk] <= pos
    after_r = order.succ[ir, blk] <= pos
    for x in ws[after_w & ~after_r]:
        added.append((r, int(x)))
    return added


def is_closed(poset: RfPoset) -> bool:
    """Whether every observer is already protected from interference."""
    return all(not _violations(poset, r) for r in poset.rf)


def closure(poset: RfPoset) -> RfPoset | None:
    """The least observation-protecting refinement, or None on a cycle.

    The input poset is not modified.
    """
    order = poset.order.copy()
    work = RfPoset(poset.trace, order, poset.rf)
    changed = True
    try:
        while changed:
            changed = False
            for r in work.rf:
                for u, v in _violations(work, r):
                    if order.add_edge(u, v):
                        changed = True
    except CycleError:
        return None
    return work
