"""Events, traces, and the concrete trace file format.

A trace is a sequence of events, each performed by a thread on a shared
location.  Threads interact through global variables (``w``/``r`` events) and
through locks (``acq``/``rel`` events).  The file format is line oriented::

    t1 w x
    t1 acq m
    t2 r x      # trailing comments are fine
    t1 rel m

Thread names match ``t[0-9]+``, operations are one of ``w r acq rel``, and
locations are identifiers.  A location's role (global variable or lock) is
inferred from its first use and must stay consistent.

Reads need a writer: by default, parsing synthesizes a leading write on the
reserved thread ``t0`` for every global whose first access is a read, so that
the observed-writer function is total.  Strict callers can disable this and
get an error instead.

Event ids are 1-based positions in the final event sequence (after any
synthesized writes).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

__all__ = [
    "TraceError",
    "Event",
    "Trace",
    "TraceParams",
    "INIT_THREAD",
    "KINDS",
    "conflicting",
    "parse_trace",
    "from_events",
    "serialize",
    "trace_params",
    "wrap_pair",
]

INIT_THREAD = "t0"
KINDS = ("w", "r", "acq", "rel")

_THREAD_RE = re.compile(r"^t[0-9]+$")
_LOCATION_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class TraceError(ValueError):
    """Raised for malformed trace text or event sequences."""


@dataclass(frozen=True, slots=True)
class Event:
    """One step of a trace: ``thread`` performs ``kind`` on ``loc``.

    ``eid`` is the event's 1-based position in the trace.
    """

    eid: int
    thread: str
    kind: str
    loc: str

    @property
    def is_write(self) -> bool:
        return self.kind == "w"

    @property
    def is_read(self) -> bool:
        return self.kind == "r"

    @property
    def is_acquire(self) -> bool:
        return self.kind == "acq"

    @property
    def is_release(self) -> bool:
        return self.kind == "rel"

    @property
    def is_global_access(self) -> bool:
        return self.kind in ("w", "r")

    @property
    def is_lock_op(self) -> bool:
        return self.kind in ("acq", "rel")

    @property
    def observes(self) -> bool:
        """True for events that observe another event (reads and releases)."""
        return self.kind in ("r", "rel")

    @property
    def writes_like(self) -> bool:
        """True for events that can be observed (writes and acquires)."""
        return self.kind in ("w", "acq")

    def __str__(self) -> str:  # pragma: no cover - debugging aid
        return f"{self.eid}:{self.thread}.{self.kind}({self.loc})"


def conflicting(e1: Event, e2: Event) -> bool:
    """Whether two distinct events conflict.

    Events conflict when they touch the same location and at least one of
    them is a write or a lock-acquire.  In particular two reads never
    conflict, and neither do two releases.
    """
    if e1.eid == e2.eid or e1.loc != e2.loc:
        return False
    return e1.writes_like or e2.writes_like


class Trace:
    """An immutable, validated event sequence.

    Exposes the derived structure everything else builds on: per-thread
    projections, the observed-writer map ``rf`` (reads to writes, releases to
    their matching acquires), and acquire/release matching.
    """

    __slots__ = (
        "events",
        "threads",
        "globals_",
        "locks",
        "rf",
        "match",
        "thread_index",
        "thread_pos",
        "by_thread",
        "num_synthesized",
        "source_lines",
    )

    def __init__(
        self,
        events: Sequence[Event],
        *,
        num_synthesized: int = 0,
        source_lines: dict[int, int] | None = None,
    ):
        self.events: tuple[Event, ...] = tuple(events)
        self.num_synthesized = num_synthesized
        #: maps eid -> 1-based line number in the source text (parsed traces
        #: only; synthesized events have no entry).
        self.source_lines = source_lines or {}

        threads: list[str] = []
        roles: dict[str, str] = {}  # loc -> "global" | "lock"
        for ev in self.events:
            if ev.thread not in threads:
                threads.append(ev.thread)
            want = "global" if ev.is_global_access else "lock"
            have = roles.setdefault(ev.loc, want)
            if have != want:
                raise TraceError(
                    f"location {ev.loc!r} used as both a {have} and a {want} "
                    f"(event {ev.eid})"
                )
        self.threads: tuple[str, ...] = tuple(threads)
        self.thread_index = {p: i for i, p in enumerate(threads)}
        self.globals_ = frozenset(x for x, role in roles.items() if role == "global")
        self.locks = frozenset(x for x, role in roles.items() if role == "lock")

        by_thread: list[list[Event]] = [[] for _ in threads]
        thread_pos: dict[int, int] = {}
        for ev in self.events:
            lst = by_thread[self.thread_index[ev.thread]]
            thread_pos[ev.eid] = len(lst)
            lst.append(ev)
        self.by_thread: tuple[tuple[Event, ...], ...] = tuple(
            tuple(lst) for lst in by_thread
        )
        self.thread_pos = thread_pos

        self.rf, self.match = self._replay()

    # ------------------------------------------------------------------
    # validation / derived maps
    # ------------------------------------------------------------------

    def _replay(self) -> tuple[dict[int, int], dict[int, int]]:
        """Replay the sequence, validating lock semantics and read totality.

        Returns ``(rf, match)`` where ``rf`` maps each read to the write it
        observes and each release to its acquire, and ``match`` maps acquires
        and releases to each other.
        """
        rf: dict[int, int] = {}
        match: dict[int, int] = {}
        last_writer: dict[str, int] = {}
        holder: dict[str, Event] = {}  # lock -> open acquire
        open_by_thread: dict[str, list[Event]] = {p: [] for p in self.threads}

        for ev in self.events:
            if ev.is_write:
                last_writer[ev.loc] = ev.eid
            elif ev.is_read:
                w = last_writer.get(ev.loc)
                if w is None:
                    raise TraceError(
                        f"read of {ev.loc!r} (event {ev.eid}) has no earlier write"
                    )
                rf[ev.eid] = w
            elif ev.is_acquire:
                held = holder.get(ev.loc)
                if held is not None:
                    who = "itself" if held.thread == ev.thread else held.thread
                    raise TraceError(
                        f"acquire of {ev.loc!r} (event {ev.eid}) while held by "
                        f"{who} since event {held.eid}"
                    )
                holder[ev.loc] = ev
                open_by_thread[ev.thread].append(ev)
            else:  # release
                held = holder.get(ev.loc)
                if held is None or held.thread != ev.thread:
                    raise TraceError(
                        f"release of {ev.loc!r} (event {ev.eid}) without a "
                        f"matching acquire in {ev.thread}"
                    )
                if open_by_thread[ev.thread][-1] is not held:
                    raise TraceError(
                        f"release of {ev.loc!r} (event {ev.eid}) violates lock "
                        f"nesting in {ev.thread}"
                    )
                del holder[ev.loc]
                open_by_thread[ev.thread].pop()
                match[held.eid] = ev.eid
                match[ev.eid] = held.eid
                rf[ev.eid] = held.eid

        if holder:
            open_ids = sorted(a.eid for a in holder.values())
            raise TraceError(f"unreleased acquires at end of trace: {open_ids}")
        return rf, match

    # ------------------------------------------------------------------
    # accessors
    # ------------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def event(self, eid: int) -> Event:
        if not 1 <= eid <= len(self.events):
            raise TraceError(f"event id {eid} out of range 1..{len(self.events)}")
        return self.events[eid - 1]

    def is_synthesized(self, eid: int) -> bool:
        """Whether ``eid`` is a synthesized initial write on ``t0``."""
        return eid <= self.num_synthesized

    def projection(self, thread: str) -> tuple[Event, ...]:
        return self.by_thread[self.thread_index[thread]]


# ----------------------------------------------------------------------
# construction
# ----------------------------------------------------------------------


def from_events(
    items: Iterable[tuple[str, str, str]],
    *,
    synthesize_init: bool = True,
    source_lines: Sequence[int] | None = None,
) -> Trace:
    """Build a validated trace from ``(thread, kind, loc)`` triples.

    With ``synthesize_init`` (the default), a write on thread ``t0`` is
    prepended for every global whose first access is a read; otherwise such a
    read is an error.  ``t0`` is reserved for this purpose: supplying it in
    the input while synthesis is needed is an error.
    """
    raw = list(items)
    for i, (thread, kind, loc) in enumerate(raw):
        if not _THREAD_RE.match(thread):
            raise TraceError(f"bad thread name {thread!r} (entry {i + 1})")
        if kind not in KINDS:
            raise TraceError(f"bad operation {kind!r} (entry {i + 1})")
        if not _LOCATION_RE.match(loc):
            raise TraceError(f"bad location {loc!r} (entry {i + 1})")

    needs_init: list[str] = []
    first_seen: set[str] = set()
    for thread, kind, loc in raw:
        if kind in ("w", "r") and loc not in first_seen:
            first_seen.add(loc)
            if kind == "r":
                needs_init.append(loc)

    synthesized: list[tuple[str, str, str]] = []
    if needs_init and synthesize_init:
        user_threads = {thread for thread, _, _ in raw}
        if INIT_THREAD in user_threads:
            raise TraceError(
                f"thread {INIT_THREAD!r} is reserved for synthesized initial "
                "writes but appears in the input"
            )
        synthesized = [(INIT_THREAD, "w", loc) for loc in needs_init]

    events = [
        Event(i + 1, thread, kind, loc)
        for i, (thread, kind, loc) in enumerate(synthesized + raw)
    ]
    lines: dict[int, int] = {}
    if source_lines is not None:
        if len(source_lines) != len(raw):
            raise ValueError("source_lines must align with the input items")
        offset = len(synthesized)
        lines = {offset + i + 1: ln for i, ln in enumerate(source_lines)}
    return Trace(events, num_synthesized=len(synthesized), source_lines=lines)


def parse_trace(text: str, *, synthesize_init: bool = True) -> Trace:
    """Parse trace text (see the module docstring for the format)."""
    items: list[tuple[str, str, str]] = []
    lines: list[int] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 3:
            raise TraceError(
                f"line {lineno}: expected '<thread> <op> <location>', got {line!r}"
            )
        items.append((parts[0], parts[1], parts[2]))
        lines.append(lineno)
    try:
        return from_events(items, synthesize_init=synthesize_init, source_lines=lines)
    except TraceError as exc:
        raise TraceError(str(exc)) from None


def serialize(trace: Trace, *, include_synthesized: bool = False) -> str:
    """Render a trace in the file format.

    Synthesized initial writes are skipped by default so that
    ``parse_trace(serialize(t))`` reproduces ``t`` exactly, synthesis
    included (re-parsing regenerates the same init block in the same
    order).  Pass ``include_synthesized=True`` for a literal dump.
    """
    lines = [
        f"{ev.thread} {ev.kind} {ev.loc}"
        for ev in trace.events
        if include_synthesized or not trace.is_synthesized(ev.eid)
    ]
    return "\n".join(lines) + "\n" if lines else ""


# ----------------------------------------------------------------------
# summary parameters
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class TraceParams:
    """Size and synchronization-structure summary of a trace.

    ``gamma`` is the deepest per-thread nesting of simultaneously open
    critical sections.  ``zeta`` bounds how much data flow chains critical
    sections together: each acquire is scored by how many acquires (itself
    included) can reach it in the lock-dependence graph, and ``zeta`` is the
    maximum score (0 when there are no locks).  ``topology`` has one
    undirected edge per pair of threads with conflicting events.
    """

    n: int
    k: int
    num_globals: int
    num_locks: int
    gamma: int
    zeta: int
    topology: frozenset[tuple[str, str]]
    is_tree: bool

    @property
    def d(self) -> int:
        """Distinct locations of either role."""
        return self.num_globals + self.num_locks

    def __str__(self) -> str:  # pragma: no cover - debugging aid
        shape = "tree" if self.is_tree else "cyclic"
        return (
            f"n={self.n} k={self.k} globals={self.num_globals} "
            f"locks={self.num_locks} gamma={self.gamma} zeta={self.zeta} "
            f"topology={shape}"
        )


def communication_topology(trace: Trace) -> frozenset[tuple[str, str]]:
    """Undirected thread graph: an edge per pair with conflicting events."""
    edges: set[tuple[str, str]] = set()
    writers: dict[str, set[str]] = {}
    accessors: dict[str, set[str]] = {}
    lock_users: dict[str, set[str]] = {}
    for ev in trace.events:
        if ev.is_global_access:
            accessors.setdefault(ev.loc, set()).add(ev.thread)
            if ev.is_write:
                writers.setdefault(ev.loc, set()).add(ev.thread)
        else:
            lock_users.setdefault(ev.loc, set()).add(ev.thread)
    for loc, ws in writers.items():
        for p in ws:
            for q in accessors[loc]:
                if p != q:
                    edges.add((min(p, q), max(p, q)))
    for users in lock_users.values():
        ordered = sorted(users)
        for i, p in enumerate(ordered):
            for q in ordered[i + 1 :]:
                edges.add((p, q))
    return frozenset(edges)


def _is_forest(nodes: Sequence[str], edges: Iterable[tuple[str, str]]) -> bool:
    parent = {p: p for p in nodes}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p, q in edges:
        rp, rq = find(p), find(q)
        if rp == rq:
            return False
        parent[rp] = rq
    return True


def trace_params(trace: Trace) -> TraceParams:
    """Compute the summary parameters of a trace."""
    # gamma: deepest stack of open critical sections in any one thread.
    gamma = 0
    depth: dict[str, int] = {}
    for ev in trace.events:
        if ev.is_acquire:
            depth[ev.thread] = depth.get(ev.thread, 0) + 1
            gamma = max(gamma, depth[ev.thread])
        elif ev.is_release:
            depth[ev.thread] -= 1

    zeta = _lock_dependence_factor(trace)
    topo = communication_topology(trace)
    return TraceParams(
        n=len(trace),
        k=len(trace.threads),
        num_globals=len(trace.globals_),
        num_locks=len(trace.locks),
        gamma=gamma,
        zeta=zeta,
        topology=topo,
        is_tree=_is_forest(trace.threads, topo),
    )


def _lock_dependence_factor(trace: Trace) -> int:
    """Max number of acquires (itself included) reaching one acquire.

    The lock-dependence graph has an edge ``acq1 -> acq2`` when ``acq1`` is
    not ordered before ``acq2`` but is ordered before ``acq2``'s release,
    while the two releases stay unordered — i.e. the first critical section
    feeds into the middle of the second.  Ordering here is reachability in
    the observation-closed program order.
    """
    acquires = [ev for ev in trace.events if ev.is_acquire]
    if not acquires:
        return 0
    from .orders import compute_trf  # deferred: orders imports this module

    trf = compute_trf(trace)
    radj: dict[int, list[int]] = {a.eid: [] for a in acquires}
    for a1 in acquires:
        r1 = trace.match[a1.eid]
        for a2 in acquires:
            if a1.eid == a2.eid:
                continue
            r2 = trace.match[a2.eid]
            if (
                not trf.ordered(a1.eid, a2.eid)
                and trf.ordered(a1.eid, r2)
                and not trf.ordered(r1, r2)
            ):
                radj[a2.eid].append(a1.eid)

    best = 0
    for target in acquires:
        # reverse reachability: walk predecessors of target
        seen = {target.eid}
        stack = [target.eid]
        while stack:
            for a1 in radj[stack.pop()]:
                if a1 not in seen:
                    seen.add(a1)
                    stack.append(a1)
        best = max(best, len(seen))
    return best


# ----------------------------------------------------------------------
# query-pair isolation
# ----------------------------------------------------------------------


def wrap_pair(trace: Trace, e1: int, e2: int) -> tuple[Trace, int, int]:
    """Reduce a pair query to a single-race trace.

    Returns a trace in which ``(e1, e2)`` maps to the only candidate racy
    pair: the two chosen events each get a private critical section on a
    fresh lock, and every other global access is bracketed by both fresh
    locks, so no other pair can race.  Existing lock events are kept as-is.
    The returned ids point at the copies of ``e1`` and ``e2``.
    """
    ev1, ev2 = trace.event(e1), trace.event(e2)
    for ev in (ev1, ev2):
        if not ev.is_global_access:
            raise TraceError(f"event {ev.eid} is not a global read/write")
    if not conflicting(ev1, ev2):
        raise TraceError(f"events {e1} and {e2} do not conflict")

    used = set(trace.globals_) | set(trace.locks)

    def fresh(base: str) -> str:
        name = base
        while name in used:
            name += "_"
        used.add(name)
        return name

    l1, l2 = fresh("wrap1"), fresh("wrap2")

    items: list[tuple[str, str, str]] = []
    new_e1 = new_e2 = -1
    for ev in trace.events:
        if ev.eid == e1:
            items.append((ev.thread, "acq", l1))
            new_e1 = len(items) + 1
            items.append((ev.thread, ev.kind, ev.loc))
            items.append((ev.thread, "rel", l1))
        elif ev.eid == e2:
            items.append((ev.thread, "acq", l2))
            new_e2 = len(items) + 1
            items.append((ev.thread, ev.kind, ev.loc))
            items.append((ev.thread, "rel", l2))
        elif ev.is_global_access:
            items.append((ev.thread, "acq", l1))
            items.append((ev.thread, "acq", l2))
            items.append((ev.thread, ev.kind, ev.loc))
            items.append((ev.thread, "rel", l2))
            items.append((ev.thread, "rel", l1))
        else:
            items.append((ev.thread, ev.kind, ev.loc))

    wrapped = from_events(items, synthesize_init=False)
    return wrapped, new_e1, new_e2
