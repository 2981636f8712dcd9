"""Trace ideals: cones, lock cones, feasibility, and candidate ideal sets."""

import networkx as nx
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from racepred import (
    Feasibility,
    Ideal,
    TraceError,
    candidate_ideal_set,
    communication_topology,
    compute_trf,
    cone,
    enabled_events,
    enumerate_correct_reorderings,
    feasibility,
    is_ideal,
    lcone,
    open_acquires,
    oracle_predict,
    parse_trace,
    trace_params,
)

from helpers import conflicting_pairs, traces


def topology_graph(trace) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(trace.threads)
    g.add_edges_from(communication_topology(trace))
    return g


def realizable_sets(trace) -> set[frozenset[int]]:
    """Event sets of every correct reordering, by brute force."""
    cap = max(14, len(trace))
    return {frozenset(w) for w in enumerate_correct_reorderings(trace, cap=cap)}


def oracle_says(trace, e1, e2) -> bool:
    return oracle_predict(trace, e1, e2, cap=max(14, len(trace)))


THREE = parse_trace("t1 w x\nt1 r x\nt2 w x\n")


# ---------------------------------------------------------------------------
# is_ideal / enabled_events
# ---------------------------------------------------------------------------


def test_is_ideal_trivial_sets():
    assert is_ideal(THREE, [])
    assert is_ideal(THREE, [1, 2, 3])


def test_is_ideal_rejects_read_without_writer():
    # e2 reads x from e1; keeping the read alone breaks observation closure
    assert not is_ideal(THREE, [2])
    # and a plain thread-order gap is just as bad
    assert not is_ideal(parse_trace("t1 w x\nt1 w y\n"), [2])


def test_enabled_events_empty_and_full():
    assert enabled_events(Ideal.from_members(THREE, [])) == {1, 3}
    assert enabled_events(Ideal.from_members(THREE, [1, 2, 3])) == frozenset()


def test_enabled_events_after_first_write():
    assert enabled_events(Ideal.from_members(THREE, [1])) == {2, 3}


def test_ideal_from_members_rejects_non_ideal():
    with pytest.raises(TraceError):
        Ideal.from_members(THREE, [2])


def test_ideal_dump_is_sorted_ids():
    assert Ideal.from_members(THREE, [1, 3]).dump() == "1\n3"


# ---------------------------------------------------------------------------
# cones
# ---------------------------------------------------------------------------


def test_cone_of_first_event_is_empty():
    assert cone(THREE, [1]).members == frozenset()
    assert cone(THREE, [3]).members == frozenset()


def test_cone_takes_predecessor_closure():
    assert cone(THREE, [2]).members == {1}
    # reader's cone follows rf back into the other thread
    t = parse_trace("t1 w x\nt2 r x\nt2 w y\n")
    assert cone(t, [3]).members == {1, 2}


@given(traces(max_events=12))
@settings(deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_cone_is_union_of_member_cones(trace):
    assume(len(trace) >= 2)
    eids = [ev.eid for ev in trace]
    a, b = eids[0], eids[-1]
    both = cone(trace, [a, b]).members
    assert both == cone(trace, [a]).members | cone(trace, [b]).members
    assert is_ideal(trace, both)


@given(traces(max_events=12), st.data())
@settings(deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
def test_cone_is_minimal(trace, data):
    assume(len(trace) >= 1)
    eids = [ev.eid for ev in trace]
    s = data.draw(st.lists(st.sampled_from(eids), min_size=1, max_size=2, unique=True))
    x = cone(trace, s)
    assume(all(e not in x.members for e in s))
    assert all(e in enabled_events(x) for e in s)
    # dropping any maximal member leaves some queried event unenabled
    for m in x.members:
        rest = x.members - {m}
        if not is_ideal(trace, rest):
            continue
        reduced = Ideal.from_members(trace, rest)
        assert not all(e in enabled_events(reduced) for e in s)


# ---------------------------------------------------------------------------
# feasibility
# ---------------------------------------------------------------------------


def test_two_open_acquires_on_one_lock():
    t = parse_trace("t1 acq l\nt1 rel l\nt2 acq l\nt2 rel l\n")
    x = Ideal.from_members(t, [1, 3])
    assert feasibility(x).status is Feasibility.INFEASIBLE_LOCKS
    assert not feasibility(x)


def test_lock_free_ideal_is_feasible_with_plain_order():
    x = Ideal.from_members(THREE, [1, 2])
    res = feasibility(x)
    assert res.status is Feasibility.FEASIBLE
    want = compute_trf(THREE, [1, 2])
    got = res.poset.order
    evs = [1, 2]
    assert {(u, v) for u in evs for v in evs if u != v and want.ordered(u, v)} == {
        (u, v) for u in evs for v in evs if u != v and got.ordered(u, v)
    }


def test_mandated_release_edge_can_contradict_observation():
    # t2's critical section must close before t1's open acquire, but the
    # read inside it observes the write inside t1's section: cycle.
    t = parse_trace("t1 acq l\nt1 w x\nt1 rel l\nt2 acq l\nt2 r x\nt2 rel l\n")
    x = Ideal.from_members(t, [1, 2, 4, 5, 6])
    assert feasibility(x).status is Feasibility.INFEASIBLE
    # brute force agrees: no correct reordering has exactly this event set
    assert x.members not in realizable_sets(t)


def test_open_acquires_reports_unmatched_only():
    t = parse_trace("t1 acq l\nt1 w x\nt1 rel l\nt2 acq l\nt2 r x\nt2 rel l\n")
    assert open_acquires(t, frozenset([1, 2, 4, 5, 6])) == [1]
    assert open_acquires(t, frozenset([1, 2, 3])) == []


# ---------------------------------------------------------------------------
# lock causal cones
# ---------------------------------------------------------------------------


def test_lcone_spec_steps():
    t = parse_trace("t1 w x\nt2 r x\nt2 w y\n")
    assert lcone(t, 3).members == {1, 2}


def test_lcone_of_isolated_first_event_is_empty():
    t = parse_trace("t1 w x\nt2 w y\n")
    assert lcone(t, 2).members == frozenset()


def test_lcone_rejects_cyclic_topology():
    t = parse_trace(
        "t1 w x\nt2 r x\nt2 w y\nt3 r y\nt3 w z\nt1 r z\n"
    )
    assert not nx.is_forest(topology_graph(t))
    with pytest.raises(TraceError):
        lcone(t, 1)


def test_lcone_closes_clashing_parent_sections():
    # t1 holds l at its last event; t2's earlier section on l must be
    # pulled in whole so the cone stays lock-feasible
    t = parse_trace(
        "t2 acq l\nt2 w x\nt2 rel l\nt1 acq l\nt1 r x\nt1 w y\nt1 rel l\n"
    )
    x = lcone(t, 6)  # w y, while t1 still holds l
    assert x.members == {1, 2, 3, 4, 5}
    assert feasibility(x).status is not Feasibility.INFEASIBLE_LOCKS


@given(traces(max_events=12))
@settings(deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
def test_lcone_is_lock_feasible_ideal(trace):
    assume(len(trace) >= 1)
    assume(nx.is_forest(topology_graph(trace)))
    for ev in trace:
        x = lcone(trace, ev.eid)
        assert is_ideal(trace, x.members)
        assert feasibility(x).status is not Feasibility.INFEASIBLE_LOCKS


# ---------------------------------------------------------------------------
# candidate ideal set
# ---------------------------------------------------------------------------


def test_candidate_set_rejects_bad_queries():
    with pytest.raises(TraceError):
        candidate_ideal_set(THREE, 1, 1)
    t = parse_trace("t1 acq l\nt1 rel l\nt2 w x\n")
    with pytest.raises(TraceError):
        candidate_ideal_set(t, 1, 3)  # lock event is not a race endpoint


def test_candidate_set_lock_free_is_just_the_cone():
    got = candidate_ideal_set(THREE, 1, 3)
    assert [sorted(x.members) for x in got] == [[]]
    t = parse_trace("t1 w x\nt1 w y\nt2 r y\nt2 w x\n")
    got = candidate_ideal_set(t, 1, 4)
    assert [sorted(x.members) for x in got] == [sorted(cone(t, [1, 4]).members)]


def test_candidate_set_closes_open_section():
    # the cone of (5, 8) leaves t3's acquire open; the only growth step
    # adds its release (and nothing else), and both are feasible
    t = parse_trace(
        "t3 acq l\nt3 w y\nt3 rel l\n"
        "t1 r y\nt1 w x\n"
        "t2 acq l\nt2 rel l\nt2 w x\n"
    )
    got = candidate_ideal_set(t, 5, 8)
    assert [sorted(x.members) for x in got] == [
        [1, 2, 4, 6, 7],
        [1, 2, 3, 4, 6, 7],
    ]
    assert all(feasibility(x) for x in got)
    assert oracle_predict(t, 5, 8)
    # the seed itself carries the race: its one witness enables both events
    assert got[0].members in realizable_sets(t)


@given(traces(max_events=12), st.data())
@settings(deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
def test_candidate_members_enable_the_pair(trace, data):
    pairs = list(conflicting_pairs(trace))
    assume(pairs)
    e1, e2 = data.draw(st.sampled_from(pairs))
    for x in candidate_ideal_set(trace, e1, e2):
        assert is_ideal(trace, x.members)
        if e1 in x.members or e2 in x.members:
            continue  # TRF-ordered pair; the seed can swallow an endpoint
        enabled = enabled_events(x)
        assert e1 in enabled and e2 in enabled


@given(traces(max_events=12), st.data())
@settings(deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
def test_candidate_count_within_parameter_bound(trace, data):
    pairs = list(conflicting_pairs(trace))
    assume(pairs)
    e1, e2 = data.draw(st.sampled_from(pairs))
    got = candidate_ideal_set(trace, e1, e2)
    p = trace_params(trace)
    bound = max(1, min(len(trace), p.k * p.gamma * p.zeta) ** max(0, p.k - 2))
    assert len(got) <= bound
    assert len({x.members for x in got}) == len(got)


@given(traces(max_events=11, max_threads=3), st.data())
@settings(deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
def test_race_iff_some_candidate_realizes(trace, data):
    pairs = list(conflicting_pairs(trace))
    assume(pairs)
    e1, e2 = data.draw(st.sampled_from(pairs))
    reachable = realizable_sets(trace)
    via_candidates = any(
        e1 not in x.members and e2 not in x.members and x.members in reachable
        for x in candidate_ideal_set(trace, e1, e2)
    )
    assert via_candidates == oracle_says(trace, e1, e2)


@given(traces(max_events=11, max_threads=3), st.data())
@settings(deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
def test_race_iff_lock_cone_union_realizes(trace, data):
    assume(len(trace) >= 1)
    assume(nx.is_forest(topology_graph(trace)))
    pairs = list(conflicting_pairs(trace))
    assume(pairs)
    e1, e2 = data.draw(st.sampled_from(pairs))
    union = lcone(trace, e1).members | lcone(trace, e2).members
    assert is_ideal(trace, union)
    via_union = (
        e1 not in union and e2 not in union and union in realizable_sets(trace)
    )
    assert via_union == oracle_says(trace, e1, e2)
