"""Brute-force reference implementations for small traces.

Everything here explores the space of correct reorderings directly, with no
cleverness, so the main engine can be checked against an independent source
of truth.  A correct reordering keeps per-thread prefixes, preserves every
kept read's writer and every kept release's acquire, and obeys lock mutual
exclusion.

All entry points guard against combinatorial blowup with an event-count cap
(default 14) that callers can raise explicitly when they know better.

Usage::

    trace = parse_trace(...)
    oracle_predict(trace, 3, 7)          # is (3, 7) a predictable race?
    min_distance(trace, 3, 7)            # fewest write/acquire reversals
    list(enumerate_correct_reorderings(trace))
"""

from __future__ import annotations

import math
from typing import Iterator, Sequence

from .trace_model import Trace, TraceError, conflicting

__all__ = [
    "OracleCapError",
    "DEFAULT_CAP",
    "enumerate_correct_reorderings",
    "oracle_predict",
    "oracle_witness",
    "min_distance",
    "has_any_race",
    "verify_witness",
    "witness_error",
]

DEFAULT_CAP = 14


class OracleCapError(ValueError):
    """The trace is too long for brute-force exploration."""


def _check_cap(trace: Trace, cap: int) -> None:
    if len(trace) > cap:
        raise OracleCapError(
            f"trace has {len(trace)} events, above the brute-force cap {cap}; "
            "raise cap= explicitly to force the issue"
        )


class _Replay:
    """Incremental validity checking while events are appended."""

    __slots__ = ("trace", "prefix", "last_writer", "holder", "placed")

    def __init__(self, trace: Trace):
        self.trace = trace
        self.prefix = [0] * len(trace.threads)
        self.last_writer: dict[str, int] = {}
        self.holder: dict[str, str] = {}  # lock -> holding thread
        self.placed: list[int] = []

    def candidates(self) -> list[int]:
        """Next event of each thread, in event-id order."""
        out = []
        for b, proj in enumerate(self.trace.by_thread):
            if self.prefix[b] < len(proj):
                out.append(proj[self.prefix[b]].eid)
        out.sort()
        return out

    def can_append(self, eid: int) -> bool:
        ev = self.trace.event(eid)
        if ev.is_read:
            return self.last_writer.get(ev.loc) == self.trace.rf[eid]
        if ev.is_acquire:
            return ev.loc not in self.holder
        return True  # writes always, releases whenever program order allows

    def append(self, eid: int) -> None:
        ev = self.trace.event(eid)
        self.prefix[self.trace.thread_index[ev.thread]] += 1
        self.placed.append(eid)
        if ev.is_write:
            self.last_writer[ev.loc] = eid
        elif ev.is_acquire:
            self.holder[ev.loc] = ev.thread
        elif ev.is_release:
            del self.holder[ev.loc]

    def undo(self, eid: int, prior_writer: int | None) -> None:
        ev = self.trace.event(eid)
        self.prefix[self.trace.thread_index[ev.thread]] -= 1
        self.placed.pop()
        if ev.is_write:
            if prior_writer is None:
                del self.last_writer[ev.loc]
            else:
                self.last_writer[ev.loc] = prior_writer
        elif ev.is_acquire:
            del self.holder[ev.loc]
        elif ev.is_release:
            self.holder[ev.loc] = ev.thread

    def key(self) -> tuple:
        """Search state: thread prefixes plus who wrote each location last.

        The last-writer map is part of the state on purpose — two
        interleavings with equal prefixes can disagree on it, and the
        disagreement changes which reads may still be appended.
        """
        return tuple(self.prefix), tuple(sorted(self.last_writer.items()))


def enumerate_correct_reorderings(
    trace: Trace, cap: int = DEFAULT_CAP
) -> Iterator[list[int]]:
    """Yield every correct reordering of the trace, as event-id lists.

    The empty reordering is included (and yielded first), as is the trace
    itself.  Order is depth-first by smallest extending event id.
    """
    _check_cap(trace, cap)
    replay = _Replay(trace)

    def walk() -> Iterator[list[int]]:
        yield list(replay.placed)
        for eid in replay.candidates():
            if not replay.can_append(eid):
                continue
            ev = trace.event(eid)
            prior = replay.last_writer.get(ev.loc) if ev.is_write else None
            replay.append(eid)
            yield from walk()
            replay.undo(eid, prior)

    return walk()


def _query_events(trace: Trace, e1: int, e2: int) -> tuple:
    ev1, ev2 = trace.event(e1), trace.event(e2)
    if not (ev1.is_global_access and ev2.is_global_access):
        raise TraceError("race queries take two global reads/writes")
    if not conflicting(ev1, ev2):
        raise TraceError(f"events {e1} and {e2} do not conflict")
    return ev1, ev2


def _search_enabled(trace: Trace, e1: int, e2: int, cap: int) -> list[int] | None:
    """A correct reordering with both query events enabled, or None."""
    _check_cap(trace, cap)
    ev1, ev2 = _query_events(trace, e1, e2)
    if ev1.thread == ev2.thread:
        return None
    b1 = trace.thread_index[ev1.thread]
    b2 = trace.thread_index[ev2.thread]
    p1 = trace.thread_pos[e1]
    p2 = trace.thread_pos[e2]

    replay = _Replay(trace)
    seen: set[tuple] = set()

    def walk() -> list[int] | None:
        if replay.prefix[b1] == p1 and replay.prefix[b2] == p2:
            return list(replay.placed)
        key = replay.key()
        if key in seen:
            return None
        seen.add(key)
        for eid in replay.candidates():
            # never step past an enabled query event
            if eid in (e1, e2) or not replay.can_append(eid):
                continue
            ev = trace.event(eid)
            prior = replay.last_writer.get(ev.loc) if ev.is_write else None
            replay.append(eid)
            hit = walk()
            replay.undo(eid, prior)
            if hit is not None:
                return hit
        return None

    return walk()


def oracle_predict(trace: Trace, e1: int, e2: int, cap: int = DEFAULT_CAP) -> bool:
    """Whether (e1, e2) is a predictable race, by exhaustive search."""
    return _search_enabled(trace, e1, e2, cap) is not None


def oracle_witness(
    trace: Trace, e1: int, e2: int, cap: int = DEFAULT_CAP
) -> list[int] | None:
    """A correct reordering enabling both events, or None if none exists."""
    return _search_enabled(trace, e1, e2, cap)


def min_distance(
    trace: Trace, e1: int, e2: int, cap: int = DEFAULT_CAP
) -> float:
    """Fewest write/acquire reversals over all race witnesses for (e1, e2).

    A reversal is a pair of conflicting writes-or-acquires whose order in the
    witness is flipped relative to the trace.  Returns ``math.inf`` when the
    pair is not a predictable race.
    """
    _check_cap(trace, cap)
    ev1, ev2 = _query_events(trace, e1, e2)
    if ev1.thread == ev2.thread:
        return math.inf
    b1 = trace.thread_index[ev1.thread]
    b2 = trace.thread_index[ev2.thread]
    p1, p2 = trace.thread_pos[e1], trace.thread_pos[e2]

    replay = _Replay(trace)
    best = math.inf
    # memo: fewest reversals that reached a state; prune dominated revisits
    cheapest: dict[tuple, float] = {}

    def reversals_added(eid: int) -> int:
        ev = trace.event(eid)
        if not ev.writes_like:
            return 0
        count = 0
        for other in replay.placed:
            oev = trace.event(other)
            if oev.writes_like and conflicting(ev, oev) and eid < other:
                count += 1
        return count

    def walk(cost: float) -> None:
        nonlocal best
        if cost >= best:
            return
        if replay.prefix[b1] == p1 and replay.prefix[b2] == p2:
            best = cost
            return
        key = replay.key()
        if cheapest.get(key, math.inf) <= cost:
            return
        cheapest[key] = cost
        for eid in replay.candidates():
            if eid in (e1, e2) or not replay.can_append(eid):
                continue
            added = reversals_added(eid)
            ev = trace.event(eid)
            prior = replay.last_writer.get(ev.loc) if ev.is_write else None
            replay.append(eid)
            walk(cost + added)
            replay.undo(eid, prior)

    walk(0)
    return best


def has_any_race(trace: Trace, cap: int = DEFAULT_CAP) -> bool:
    """Whether any conflicting global read/write pair is a predictable race.

    Synthesized initial writes do not count as race endpoints.
    """
    _check_cap(trace, cap)
    replay = _Replay(trace)
    seen: set[tuple] = set()

    def racy_frontier() -> bool:
        cands = [trace.event(e) for e in replay.candidates()]
        for i, a in enumerate(cands):
            if not a.is_global_access or trace.is_synthesized(a.eid):
                continue
            for b in cands[i + 1 :]:
                if (
                    b.is_global_access
                    and not trace.is_synthesized(b.eid)
                    and a.thread != b.thread
                    and conflicting(a, b)
                ):
                    return True
        return False

    def walk() -> bool:
        if racy_frontier():
            return True
        key = replay.key()
        if key in seen:
            return False
        seen.add(key)
        for eid in replay.candidates():
            if not replay.can_append(eid):
                continue
            ev = trace.event(eid)
            prior = replay.last_writer.get(ev.loc) if ev.is_write else None
            replay.append(eid)
            hit = walk()
            replay.undo(eid, prior)
            if hit:
                return True
        return False

    return walk()


def witness_error(
    trace: Trace,
    witness: Sequence[int],
    e1: int | None = None,
    e2: int | None = None,
) -> str | None:
    """Why a witness is invalid, or None if it checks out.

    When ``e1``/``e2`` are given, additionally require that both are absent
    from the witness and enabled at its end.
    """
    ids = list(witness)
    if len(set(ids)) != len(ids):
        return "witness repeats an event id"
    try:
        events = [trace.event(e) for e in ids]
    except (KeyError, IndexError, TraceError):
        return "witness contains an unknown event id"

    # per-thread prefix property
    expected: dict[str, int] = {p: 0 for p in trace.threads}
    for ev in events:
        proj = trace.projection(ev.thread)
        want = proj[expected[ev.thread]].eid if expected[ev.thread] < len(proj) else None
        if want != ev.eid:
            return (
                f"program order broken in {ev.thread}: got event {ev.eid}, "
                f"expected {want}"
            )
        expected[ev.thread] += 1

    # lock semantics and observation preservation
    last_writer: dict[str, int] = {}
    holder: dict[str, str] = {}
    for ev in events:
        if ev.is_write:
            last_writer[ev.loc] = ev.eid
        elif ev.is_read:
            if last_writer.get(ev.loc) != trace.rf[ev.eid]:
                return f"read {ev.eid} observes a different writer than in the trace"
        elif ev.is_acquire:
            if ev.loc in holder:
                return f"critical sections overlap on {ev.loc}"
            holder[ev.loc] = ev.thread
        else:
            if holder.get(ev.loc) != ev.thread:
                return f"release of unheld lock {ev.loc}"
            del holder[ev.loc]

    present = set(ids)
    for q in (e1, e2):
        if q is None:
            continue
        if q in present:
            return f"query event {q} must stay out of the witness"
        ev = trace.event(q)
        pos = trace.thread_pos[q]
        if expected[ev.thread] != pos:
            return (
                f"query event {q} is not enabled: thread {ev.thread} stopped "
                f"after {expected[ev.thread]} of the {pos} required events"
            )
    return None


def verify_witness(
    trace: Trace,
    witness: Sequence[int],
    e1: int | None = None,
    e2: int | None = None,
) -> bool:
    """Whether the witness is a correct reordering (with e1, e2 enabled, if given)."""
    return witness_error(trace, witness, e1, e2) is None
