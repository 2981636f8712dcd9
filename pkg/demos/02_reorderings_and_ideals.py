"""What counts as a correct reordering, and why ideals are the right lens.

A correct reordering keeps every thread's own order, makes each read see
the write it saw in the original run, and never overlaps two critical
sections on one lock.  The set of events executed by any reordering is an
*ideal*: closed under thread order and reads-from.  Deciding a race is
deciding whether some ideal containing both query events' prerequisites
(and neither query event) can be linearized — so the engine reasons about
ideals, and a small brute-force oracle over whole reorderings keeps it
honest.
"""

from racepred import (
    Ideal,
    enumerate_correct_reorderings,
    feasibility,
    parse_trace,
    realize_general,
)

TRACE = """\
t1 w x
t1 w y
t2 r y
t2 w x
"""

# Feasible is necessary but not sufficient: here the ideal {1,2,3,4,6,7}
# needs t2's critical section before t1's open one (lock order) but t1's
# read of x before t2's write (reads-from) — two demands with no schedule.
STUCK = """\
t1 acq l
t1 w x
t2 w x
t1 r x
t1 rel l
t2 acq l
t2 rel l
"""


def main() -> None:
    trace = parse_trace(TRACE)
    print("trace:")
    for ev in trace:
        print(f"    {ev.eid}: {ev.thread} {ev.kind} {ev.loc}")

    print("\nevery correct reordering (the oracle enumerates them):")
    for seq in sorted(enumerate_correct_reorderings(trace, cap=len(trace))):
        print(f"    {list(seq)}")
    print("  note: nothing ever runs event 4 before event 3 — the read of y")
    print("  must keep seeing t1's write, chaining 4 behind 1 and 2.")

    print("\nexecuted-event sets of those reorderings are exactly the ideals:")
    seen = sorted(
        {frozenset(seq) for seq in enumerate_correct_reorderings(trace, cap=len(trace))},
        key=sorted,
    )
    for members in seen:
        print(f"    {sorted(members) or '{}'}")

    stuck = parse_trace(STUCK)
    x = Ideal.from_members(stuck, [1, 2, 3, 4, 6, 7])
    res = feasibility(x)
    print("\nfeasibility is a quick screen, not the full answer:")
    print(f"    ideal {sorted(x.members)} of the second trace: {res.status.value}")
    witness = realize_general(res.poset)
    print(f"    ideal-graph search over its schedules: {witness}")
    print("    feasible, yet no witness exists — the lock order and the")
    print("    reads-from order pull in opposite directions, and only the")
    print("    realizability search notices.")


if __name__ == "__main__":
    main()
