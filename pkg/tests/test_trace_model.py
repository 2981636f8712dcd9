"""Trace parsing, validation, derived parameters, and the pair-isolation wrapper."""

import pytest
from hypothesis import given, settings

from racepred import (
    Trace,
    TraceError,
    communication_topology,
    conflicting,
    has_any_race,
    oracle_predict,
    parse_trace,
    serialize,
    trace_params,
    wrap_pair,
)
from racepred.trace_model import INIT_THREAD, Event, from_events

from helpers import conflicting_pairs, gamma_by_scan, trace_events, zeta_by_scan


# ----------------------------------------------------------------------
# parsing and validation
# ----------------------------------------------------------------------


def test_parse_assigns_ids_and_rf():
    t = parse_trace("t1 w x\nt2 r x")
    assert len(t) == 2
    assert [ev.eid for ev in t] == [1, 2]
    assert t.rf[2] == 1


def test_parse_lock_matching_sequential():
    t = parse_trace("t1 acq l\nt1 rel l\nt2 acq l\nt2 rel l")
    assert t.match[1] == 2
    assert t.match[3] == 4
    assert t.match[2] == 1  # match works in both directions
    assert t.rf[2] == 1  # releases observe their acquire


def test_parse_rejects_overlapping_critical_sections():
    with pytest.raises(TraceError):
        parse_trace("t1 acq l\nt2 acq l\nt1 rel l\nt2 rel l")


def test_parse_rejects_reentrant_acquire():
    with pytest.raises(TraceError):
        parse_trace("t1 acq l\nt1 acq l\nt1 rel l\nt1 rel l")


def test_parse_rejects_unmatched_release():
    with pytest.raises(TraceError):
        parse_trace("t1 rel l")


def test_parse_rejects_open_critical_section():
    with pytest.raises(TraceError):
        parse_trace("t1 acq l")


def test_parse_rejects_badly_nested_release():
    # innermost lock must be released first
    with pytest.raises(TraceError):
        parse_trace("t1 acq l\nt1 acq m\nt1 rel l\nt1 rel m")


def test_parse_rejects_mixed_role_location():
    with pytest.raises(TraceError):
        parse_trace("t1 w a\nt1 acq a\nt1 rel a")


def test_parse_rejects_malformed_lines():
    with pytest.raises(TraceError):
        parse_trace("t1 w")
    with pytest.raises(TraceError):
        parse_trace("t1 w x y")
    with pytest.raises(TraceError):
        parse_trace("thread1 w x")  # thread names are t<digits>
    with pytest.raises(TraceError):
        parse_trace("t1 write x")
    with pytest.raises(TraceError):
        parse_trace("t1 w 9bad")


def test_parse_comments_and_blank_lines():
    t = parse_trace("# header\n\nt1 w x   # trailing\n\n  \nt2 r x\n")
    assert len(t) == 2
    assert t.source_lines[1] == 3
    assert t.source_lines[2] == 6


def test_init_synthesis_for_read_first_globals():
    t = parse_trace("t1 r x\nt1 w y")
    # one t0 write for x (read first), none for y (written first)
    assert t.num_synthesized == 1
    assert t.events[0].thread == INIT_THREAD
    assert t.events[0].is_write and t.events[0].loc == "x"
    assert t.is_synthesized(1)
    assert not t.is_synthesized(2)
    assert t.rf[2] == 1  # the read observes the synthesized write


def test_init_synthesis_order_follows_first_reads():
    t = parse_trace("t1 r b\nt1 r a")
    assert [(ev.loc, ev.thread) for ev in t.events[:2]] == [("b", "t0"), ("a", "t0")]


def test_init_synthesis_disabled_errors():
    with pytest.raises(TraceError):
        parse_trace("t1 r x", synthesize_init=False)


def test_init_thread_reserved_when_synthesis_needed():
    with pytest.raises(TraceError):
        parse_trace("t0 w y\nt1 r x")
    # fine when nothing needs synthesizing
    t = parse_trace("t0 w x\nt1 r x", synthesize_init=False)
    assert t.num_synthesized == 0


def test_rf_skips_nonconflicting_and_picks_latest():
    t = parse_trace("t1 w x\nt1 w y\nt2 w x\nt2 r x")
    assert t.rf[4] == 3


def test_serialize_round_trip():
    text = "t1 w x\nt2 r x\nt2 acq l\nt2 rel l\n"
    t = parse_trace(text)
    assert serialize(t) == text


def test_serialize_skips_synthesized_by_default():
    t = parse_trace("t1 r x")
    assert serialize(t) == "t1 r x\n"
    assert serialize(t, include_synthesized=True) == "t0 w x\nt1 r x\n"


@settings(max_examples=60)
@given(trace_events())
def test_serialize_parse_round_trip_random(items):
    t = from_events(items)
    again = parse_trace(serialize(t))
    assert [(e.thread, e.kind, e.loc) for e in again] == [
        (e.thread, e.kind, e.loc) for e in t
    ]
    assert again.num_synthesized == t.num_synthesized
    assert again.rf == t.rf


@settings(max_examples=60)
@given(trace_events())
def test_rf_total_and_latest_conflicting_write(items):
    t = from_events(items)
    for ev in t:
        if ev.is_read:
            w = t.rf[ev.eid]
            assert t.event(w).is_write and t.event(w).loc == ev.loc
            assert w < ev.eid
            for between in range(w + 1, ev.eid):
                bev = t.event(between)
                assert not (bev.is_write and bev.loc == ev.loc)
        elif ev.is_release:
            a = t.rf[ev.eid]
            assert t.event(a).is_acquire
            assert t.event(a).thread == ev.thread


def test_conflicting_predicate():
    w = Event(1, "t1", "w", "x")
    w2 = Event(2, "t2", "w", "x")
    r = Event(3, "t2", "r", "x")
    r2 = Event(4, "t1", "r", "x")
    wy = Event(5, "t2", "w", "y")
    assert conflicting(w, r)
    assert conflicting(w, w2)
    assert not conflicting(w, w)  # an event never conflicts with itself
    assert not conflicting(r, r2)  # two reads never conflict
    assert not conflicting(w, wy)  # different locations
    a1 = Event(5, "t1", "acq", "l")
    a2 = Event(6, "t2", "acq", "l")
    rel = Event(7, "t2", "rel", "l")
    assert conflicting(a1, a2)
    assert conflicting(a1, rel)
    assert not conflicting(rel, rel)


# ----------------------------------------------------------------------
# derived parameters
# ----------------------------------------------------------------------


def test_params_lock_free_conflicting_writes():
    t = parse_trace("t1 w x\nt2 w x")
    p = trace_params(t)
    assert (p.n, p.k) == (2, 2)
    assert p.d == 1
    assert p.gamma == 0 and p.zeta == 0  # no acquires at all
    assert p.topology == frozenset({("t1", "t2")})
    assert p.is_tree


def test_params_nested_locks_gamma():
    t = parse_trace("t1 acq l\nt1 acq m\nt1 rel m\nt1 rel l")
    assert trace_params(t).gamma == 2


def test_params_triangle_topology_not_tree():
    t = parse_trace("t1 w x\nt2 w x\nt2 w y\nt3 w y\nt3 w z\nt1 w z")
    p = trace_params(t)
    assert p.topology == frozenset({("t1", "t2"), ("t2", "t3"), ("t1", "t3")})
    assert not p.is_tree


def test_topology_locks_connect_all_users():
    t = parse_trace(
        "t1 acq l\nt1 rel l\nt2 acq l\nt2 rel l\nt3 acq l\nt3 rel l"
    )
    assert communication_topology(t) == frozenset(
        {("t1", "t2"), ("t1", "t3"), ("t2", "t3")}
    )


def test_topology_read_read_is_no_edge():
    t = parse_trace("t1 w x\nt2 r x\nt3 r x")
    # t2/t3 only read x; the writer t1 conflicts with both
    assert communication_topology(t) == frozenset({("t1", "t2"), ("t1", "t3")})


def test_disconnected_components_each_tree():
    t = parse_trace("t1 w x\nt2 w x\nt3 w y\nt4 w y")
    assert trace_params(t).is_tree


def test_zeta_single_dependence_chain():
    # t2's critical section reads what t1's wrote, chaining the acquires
    t = parse_trace(
        "t1 acq l\nt1 w x\nt1 rel l\nt2 acq l\nt2 r x\nt2 rel l"
    )
    p = trace_params(t)
    assert p.gamma == 1
    assert p.zeta == zeta_by_scan(t)


@settings(max_examples=50, deadline=None)
@given(trace_events(max_events=12, max_threads=3, max_locks=2))
def test_gamma_zeta_match_independent_scan(items):
    t = from_events(items)
    p = trace_params(t)
    assert p.gamma == gamma_by_scan(t)
    assert p.zeta == zeta_by_scan(t)


# ----------------------------------------------------------------------
# pair isolation
# ----------------------------------------------------------------------


def test_wrap_pair_two_access_trace():
    t = parse_trace("t1 w x\nt2 w x")
    wrapped, n1, n2 = wrap_pair(t, 1, 2)
    assert len(wrapped) == 6  # each target becomes acq, target, rel
    assert wrapped.event(n1).loc == "x" and wrapped.event(n2).loc == "x"
    # the two wrap locks are distinct and fresh
    locks = sorted(wrapped.locks)
    assert len(locks) == 2


def test_wrap_pair_other_access_gets_both_locks():
    t = parse_trace("t1 w x\nt1 w y\nt2 w x")
    wrapped, n1, n2 = wrap_pair(t, 1, 3)
    assert len(wrapped) == 11  # 3 + 5 + 3
    kinds = [(ev.kind) for ev in wrapped]
    assert kinds == ["acq", "w", "rel", "acq", "acq", "w", "rel", "rel", "acq", "w", "rel"]


def test_wrap_pair_preserves_trace_locks():
    t = parse_trace("t1 acq l\nt1 w x\nt1 rel l\nt2 r x")
    wrapped, n1, n2 = wrap_pair(t, 2, 4)
    assert "l" in wrapped.locks
    assert wrapped.event(n1).is_write
    assert wrapped.event(n2).is_read


def test_wrap_pair_rejects_non_conflicting():
    t = parse_trace("t1 w x\nt2 w y")
    with pytest.raises(TraceError):
        wrap_pair(t, 1, 2)
    t2 = parse_trace("t1 acq l\nt1 rel l")
    with pytest.raises(TraceError):
        wrap_pair(t2, 1, 2)


def test_wrap_pair_race_preserved():
    t = parse_trace("t1 w x\nt2 w x")
    assert oracle_predict(t, 1, 2)
    wrapped, _, _ = wrap_pair(t, 1, 2)
    # value from the brute-force oracle on the wrapped trace
    assert has_any_race(wrapped, cap=20)


def test_wrap_pair_non_race_preserved():
    t = parse_trace("t1 acq l\nt1 w x\nt1 rel l\nt2 acq l\nt2 w x\nt2 rel l")
    assert not oracle_predict(t, 2, 5)
    wrapped, _, _ = wrap_pair(t, 2, 5)
    assert not has_any_race(wrapped, cap=20)


@settings(max_examples=25, deadline=None)
@given(trace_events(max_events=6, max_threads=2, max_globals=2, max_locks=1))
def test_wrap_pair_equivalence_random(items):
    t = from_events(items)
    for e1, e2 in conflicting_pairs(t):
        if t.is_synthesized(e1) or t.is_synthesized(e2):
            continue
        wrapped, _, _ = wrap_pair(t, e1, e2)
        assert oracle_predict(t, e1, e2) == has_any_race(wrapped, cap=64)
