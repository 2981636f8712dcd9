"""Command-line interface for race prediction over trace files.

Commands
--------
``predict``
    Decide one conflicting read/write pair and print a JSON verdict.
``scan``
    Decide every conflicting global pair in a trace and summarize.
``stats``
    Print the trace's size and synchronization-structure summary.
``gen ov | indset | random``
    Emit benchmark traces (with a ``# query`` sidecar comment) to stdout.

Exit status: 0 means no race (or a successful ``stats``/``gen``), 1 means a
race was found, 2 means the command failed (bad arguments, parse failure,
non-conflicting query pair, a forced backend whose precondition fails).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence, TextIO

from .generators import (
    IsInstance,
    OvInstance,
    gen_indset_trace,
    gen_ov_trace,
    gen_random_trace,
    parse_edge_list,
    parse_vectors,
    strip_isolated_nodes,
)
from .ideal_engine import Ideal, candidate_ideal_set, feasibility, lcone
from .oracle import DEFAULT_CAP, OracleCapError, oracle_witness, witness_error
from .realizability import (
    check_tree_inducible,
    realize_bounded,
    realize_general,
    realize_tree,
)
from .trace_model import (
    Trace,
    TraceError,
    conflicting,
    parse_trace,
    serialize,
    trace_params,
)

ALGORITHMS = ("auto", "general", "tree", "bounded", "bruteforce")

_Note = Callable[[str], None]


class CliError(Exception):
    """A user-facing command error; reported on stderr with exit status 2."""


# ----------------------------------------------------------------------
# verdicts
# ----------------------------------------------------------------------


@dataclass
class Verdict:
    """The answer to one race query, plus the work it took to get there.

    ``witness`` is a correct-reordering event-id sequence enabling both
    query events whenever ``race`` is true (possibly empty, when both
    events are enabled before anything runs) and ``None`` otherwise.
    ``distance`` is the witness's reversal count, reported by the bounded
    backend only.  ``stats`` always carries the same four counters:
    ``ideals`` (candidates examined), ``search_nodes`` (states expanded by
    witness searches), ``closure_edges`` (orderings added by closure), and
    ``wall_ms``.
    """

    query: tuple[int, int]
    race: bool
    witness: list[int] | None
    algorithm: str
    distance: int | None
    stats: dict

    def to_json(self) -> dict:
        return {
            "query": {"e1": self.query[0], "e2": self.query[1]},
            "race": self.race,
            "witness": None if self.witness is None else list(self.witness),
            "algorithm": self.algorithm,
            "distance": self.distance,
            "stats": dict(self.stats),
        }


# ----------------------------------------------------------------------
# the prediction pipeline
# ----------------------------------------------------------------------


def predict(
    trace: Trace,
    e1: int,
    e2: int,
    *,
    algo: str = "auto",
    distance: int | None = None,
    oracle_cap: int = DEFAULT_CAP,
    explain: list[str] | None = None,
) -> Verdict:
    """Decide whether ``(e1, e2)`` is a predictable race.

    ``algo`` picks the backend; ``auto`` routes to ``tree`` when the
    trace's communication topology is a forest and to ``general``
    otherwise.  ``bounded`` needs ``distance`` (the reversal budget) and
    inherits its one-sided promise: a race it reports is real and within
    budget, but a quiet answer only rules out witnesses, not races beyond
    the budget.  Raises :class:`CliError` on an invalid query.
    """
    if algo not in ALGORITHMS:
        raise CliError(f"unknown algorithm {algo!r}; pick one of {', '.join(ALGORITHMS)}")
    if algo == "bounded" and distance is None:
        raise CliError("--algo bounded needs a reversal budget: pass --distance L")
    if distance is not None:
        if algo not in ("bounded",):
            raise CliError("--distance only applies to --algo bounded")
        if distance < 0:
            raise CliError("--distance must be non-negative")
    try:
        ev1, ev2 = trace.event(e1), trace.event(e2)
    except TraceError as exc:
        raise CliError(str(exc)) from None
    if not (ev1.is_global_access and ev2.is_global_access):
        raise CliError(f"events {e1} and {e2} are not both global reads/writes")
    if not conflicting(ev1, ev2):
        raise CliError(f"events {e1} and {e2} do not conflict")

    note: _Note = explain.append if explain is not None else (lambda _: None)
    started = time.perf_counter()
    stats: dict = {"ideals": 0, "search_nodes": 0, "closure_edges": 0}
    label = algo
    race = False
    witness: list[int] | None = None
    delta: int | None = None

    if ev1.thread == ev2.thread:
        # thread order keeps the pair ordered in every correct reordering
        note(f"events {e1} and {e2} share thread {ev1.thread}; ordered everywhere")
    elif algo == "bruteforce":
        witness = oracle_witness(trace, e1, e2, cap=oracle_cap)
        race = witness is not None
        note("exhaustive reordering search " + ("found a witness" if race else "exhausted"))
    elif algo == "tree" or (algo == "auto" and trace_params(trace).is_tree):
        label = "tree"
        if not trace_params(trace).is_tree:
            raise CliError(
                "the tree backend needs a forest communication topology; "
                "this trace has a cycle (use --algo general or auto)"
            )
        race, witness = _tree_route(trace, e1, e2, stats, note)
    elif algo in ("auto", "general"):
        label = "general"
        race, witness = _general_route(trace, e1, e2, stats, note)
    else:
        race, witness, delta = _bounded_route(trace, e1, e2, distance, stats, note)

    if race:
        assert witness is not None
        err = witness_error(trace, witness, e1, e2)
        if err is not None:  # pragma: no cover - internal soundness guard
            raise RuntimeError(f"backend produced an invalid witness: {err}")
    else:
        witness = None
    stats["wall_ms"] = round((time.perf_counter() - started) * 1000.0, 3)
    return Verdict((e1, e2), race, witness, label, delta, stats)


def _tree_route(
    trace: Trace, e1: int, e2: int, stats: dict, note: _Note
) -> tuple[bool, list[int] | None]:
    """Single-ideal route: the pair races iff its lock-cone union realizes."""
    union = lcone(trace, e1).members | lcone(trace, e2).members
    if e1 in union or e2 in union:
        note("one query event lies in the other's lock causal cone; no race")
        return False, None
    x = Ideal.from_members(trace, union)
    stats["ideals"] = 1
    res = feasibility(x)
    if not res:
        note(f"the lock-cone ideal ({len(x)} events) is {res.status.value}")
        return False, None
    local: dict = {}
    tp = check_tree_inducible(res.poset, stats=local)
    if tp is None:
        # conflict structure inside the ideal is not block-tree shaped;
        # fall back to the sound-everywhere ideal-graph search
        note("ideal is not tree-inducible; falling back to the ideal-graph search")
        w = realize_general(res.poset, stats=local)
        stats["search_nodes"] += local.get("search_nodes", 0)
    else:
        w = realize_tree(res.poset, tp, stats=local)
        if local.get("closure_edges") is None:
            note(f"closure of the {len(x)}-event ideal is contradictory")
        else:
            stats["closure_edges"] += local["closure_edges"]
            note(
                f"closure added {local['closure_edges']} orderings, "
                f"resolution {local.get('resolution_edges', 0)} more"
            )
    return (w is not None), w


def _general_route(
    trace: Trace, e1: int, e2: int, stats: dict, note: _Note
) -> tuple[bool, list[int] | None]:
    """Sweep the candidate ideal set; the first realizable member wins."""
    for x in candidate_ideal_set(trace, e1, e2):
        if e1 in x or e2 in x:
            continue  # an executed query event cannot also be enabled
        stats["ideals"] += 1
        res = feasibility(x)
        if not res:
            note(f"candidate with {len(x)} events: {res.status.value}")
            continue
        local: dict = {}
        w = realize_general(res.poset, stats=local)
        stats["search_nodes"] += local.get("search_nodes", 0)
        note(
            f"candidate with {len(x)} events: "
            + ("witness found" if w is not None else "search exhausted")
            + f" after {local.get('search_nodes', 0)} states"
        )
        if w is not None:
            return True, w
    return False, None


def _bounded_route(
    trace: Trace, e1: int, e2: int, budget: int, stats: dict, note: _Note
) -> tuple[bool, list[int] | None, int | None]:
    """Candidate sweep under a reversal budget; reports the witness distance."""
    for x in candidate_ideal_set(trace, e1, e2):
        if e1 in x or e2 in x:
            continue
        stats["ideals"] += 1
        if not feasibility(x):
            continue
        local: dict = {}
        w = realize_bounded(x, budget, stats=local)
        stats["search_nodes"] += local.get("branches", 0)
        if w is not None:
            flips = local["reversals"]
            note(
                f"candidate with {len(x)} events: witness reverses "
                f"{len(flips)} trace-ordered pairs {flips}"
            )
            return True, w, len(flips)
        note(f"candidate with {len(x)} events: nothing within budget {budget}")
    return False, None, None


def scan(
    trace: Trace,
    *,
    algo: str = "auto",
    distance: int | None = None,
    oracle_cap: int = DEFAULT_CAP,
) -> list[Verdict]:
    """Answer every deduplicated conflicting global pair in the trace.

    Synthesized initial writes are skipped: they model the state before
    the program ran, so pairing one with a first read would report a race
    no execution of the observed code can exhibit.
    """
    return [
        predict(trace, a, b, algo=algo, distance=distance, oracle_cap=oracle_cap)
        for a, b in scan_pairs(trace)
    ]


def scan_pairs(trace: Trace) -> Iterator[tuple[int, int]]:
    """Unordered conflicting global pairs, synthesized events excluded."""
    evs = [
        ev
        for ev in trace.events
        if ev.is_global_access and not trace.is_synthesized(ev.eid)
    ]
    for i, a in enumerate(evs):
        for b in evs[i + 1 :]:
            if conflicting(a, b):
                yield a.eid, b.eid


# ----------------------------------------------------------------------
# command wiring
# ----------------------------------------------------------------------


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load_trace(args: argparse.Namespace) -> tuple[Trace, str]:
    text = _read_text(args.trace)
    try:
        trace = parse_trace(text, synthesize_init=not args.no_init_synthesis)
    except TraceError as exc:
        raise CliError(f"parse failure in {args.trace}: {exc}") from None
    return trace, text


def _sidecar_query(text: str) -> tuple[int, int] | None:
    """The first ``# query <id1> <id2>`` comment in the file, if any."""
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped.startswith("#"):
            continue
        parts = stripped[1:].split()
        if len(parts) == 3 and parts[0] == "query":
            try:
                return int(parts[1]), int(parts[2])
            except ValueError:
                raise CliError(f"malformed query comment: {stripped!r}") from None
    return None


def _resolve_pair(args: argparse.Namespace, trace: Trace, text: str) -> tuple[int, int]:
    e1, e2 = args.e1, args.e2
    if e1 is None or e2 is None:
        if args.by_line:
            raise CliError("--by-line needs explicit --e1 and --e2 line numbers")
        sidecar = _sidecar_query(text)
        if sidecar is None:
            raise CliError(
                "no query given: pass --e1 and --e2, or use a trace with a "
                "'# query <id1> <id2>' comment"
            )
        e1, e2 = sidecar
    elif args.by_line:
        by_line = {line: eid for eid, line in trace.source_lines.items()}
        out = []
        for line in (e1, e2):
            if line not in by_line:
                raise CliError(f"no trace event on line {line} of {args.trace}")
            out.append(by_line[line])
        e1, e2 = out
    return e1, e2


def _emit_explain(lines: Sequence[str], out: TextIO) -> None:
    for line in lines:
        print(f"  - {line}", file=out)


def cmd_predict(args: argparse.Namespace) -> int:
    trace, text = _load_trace(args)
    e1, e2 = _resolve_pair(args, trace, text)
    explain: list[str] | None = [] if args.explain else None
    verdict = predict(
        trace,
        e1,
        e2,
        algo=args.algo,
        distance=args.distance,
        oracle_cap=args.oracle_cap,
        explain=explain,
    )
    if explain:
        _emit_explain(explain, sys.stderr)
    print(json.dumps(verdict.to_json()))
    return 1 if verdict.race else 0


def cmd_scan(args: argparse.Namespace) -> int:
    trace, _ = _load_trace(args)
    verdicts = scan(
        trace, algo=args.algo, distance=args.distance, oracle_cap=args.oracle_cap
    )
    races = sum(v.race for v in verdicts)
    if args.json:
        print(json.dumps({"pairs": [v.to_json() for v in verdicts], "races": races}))
    else:
        for v in verdicts:
            mark = "race" if v.race else "none"
            print(f"{v.query[0]:>5} {v.query[1]:>5}  {mark}  [{v.algorithm}]")
        print(f"{races} racy pairs among {len(verdicts)} conflicting pairs")
    return 1 if races else 0


def cmd_stats(args: argparse.Namespace) -> int:
    trace, _ = _load_trace(args)
    params = trace_params(trace)
    recommended = "tree" if params.is_tree else "general"
    topology = sorted(params.topology)
    if args.json:
        print(
            json.dumps(
                {
                    "n": params.n,
                    "k": params.k,
                    "d": params.d,
                    "globals": params.num_globals,
                    "locks": params.num_locks,
                    "gamma": params.gamma,
                    "zeta": params.zeta,
                    "topology": [list(edge) for edge in topology],
                    "is_tree": params.is_tree,
                    "recommended": recommended,
                }
            )
        )
    else:
        print(f"n         {params.n}")
        print(f"k         {params.k}")
        print(f"d         {params.d} ({params.num_globals} globals + {params.num_locks} locks)")
        print(f"gamma     {params.gamma}")
        print(f"zeta      {params.zeta}")
        print("topology  " + (" ".join(f"{a}-{b}" for a, b in topology) or "(no edges)"))
        print(f"is_tree   {'yes' if params.is_tree else 'no'}")
        print(f"backend   {recommended}")
    return 0


def _emit_instance(trace: Trace, query: tuple[int, int] | None) -> None:
    sys.stdout.write(serialize(trace))
    if query is not None:
        print(f"# query {query[0]} {query[1]}")


def cmd_gen_ov(args: argparse.Namespace) -> int:
    try:
        a = parse_vectors(_read_text(args.a))
        b = parse_vectors(_read_text(args.b))
        if not a or not b:
            raise ValueError("vector files must be non-empty")
        inst = OvInstance(a, b, dim=len(a[0]))
    except ValueError as exc:
        raise CliError(str(exc)) from None
    trace, query = gen_ov_trace(inst)
    _emit_instance(trace, query)
    return 0


def cmd_gen_indset(args: argparse.Namespace) -> int:
    try:
        n, edges = parse_edge_list(_read_text(args.graph))
        n, edges, c = strip_isolated_nodes(n, edges, args.c)
        if c <= 0:
            raise CliError(
                "the graph's isolated vertices alone form an independent set "
                f"of the requested size {args.c}; nothing to encode"
            )
        inst = IsInstance(n, edges, c)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    trace, query = gen_indset_trace(inst)
    _emit_instance(trace, query)
    return 0


def cmd_gen_random(args: argparse.Namespace) -> int:
    seed = args.seed
    if seed is None:
        raw = os.environ.get("RACEPRED_SEED", "0")
        try:
            seed = int(raw)
        except ValueError:
            raise CliError(f"RACEPRED_SEED must be an integer, got {raw!r}") from None
    try:
        trace = gen_random_trace(
            seed,
            n=args.n,
            k=args.k,
            d_globals=args.globals_,
            d_locks=args.locks,
            read_ratio=args.read_ratio,
            lock_ratio=args.lock_ratio,
            nesting_max=args.nesting,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None
    import random as _random

    pairs = [(a, b) for a, b in scan_pairs(trace) if
             trace.event(a).thread != trace.event(b).thread]
    query = _random.Random(f"{seed}:query").choice(pairs) if pairs else None
    _emit_instance(trace, query)
    return 0


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    trace_opts = argparse.ArgumentParser(add_help=False)
    trace_opts.add_argument(
        "--trace", required=True, metavar="PATH", help="trace file ('-' for stdin)"
    )
    trace_opts.add_argument(
        "--no-init-synthesis",
        action="store_true",
        help="reject reads of never-written globals instead of synthesizing "
        "initial writes on t0",
    )

    algo_opts = argparse.ArgumentParser(add_help=False)
    algo_opts.add_argument(
        "--algo", choices=ALGORITHMS, default="auto", help="backend (default: auto)"
    )
    algo_opts.add_argument(
        "--distance",
        type=int,
        metavar="L",
        help="reversal budget; required by (and only valid with) --algo bounded",
    )
    algo_opts.add_argument(
        "--oracle-cap",
        type=int,
        default=DEFAULT_CAP,
        metavar="N",
        help=f"largest trace the bruteforce backend accepts (default {DEFAULT_CAP})",
    )

    parser = argparse.ArgumentParser(
        prog="racepred",
        description="Sound dynamic data-race prediction over concurrent traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "predict",
        parents=[trace_opts, algo_opts],
        help="decide one conflicting read/write pair",
    )
    p.add_argument("--e1", type=int, metavar="N", help="first query event id")
    p.add_argument("--e2", type=int, metavar="N", help="second query event id")
    p.add_argument(
        "--by-line",
        action="store_true",
        help="interpret --e1/--e2 as trace-file line numbers instead of event ids",
    )
    p.add_argument(
        "--explain", action="store_true", help="narrate the search on stderr"
    )
    p.add_argument(
        "--json", action="store_true", help="accepted for symmetry; output is JSON"
    )
    p.set_defaults(run=cmd_predict)

    s = sub.add_parser(
        "scan",
        parents=[trace_opts, algo_opts],
        help="decide every conflicting global pair",
    )
    s.add_argument("--json", action="store_true", help="emit one JSON object")
    s.set_defaults(run=cmd_scan)

    t = sub.add_parser(
        "stats", parents=[trace_opts], help="print trace shape parameters"
    )
    t.add_argument("--json", action="store_true", help="emit one JSON object")
    t.set_defaults(run=cmd_stats)

    g = sub.add_parser("gen", help="generate benchmark traces on stdout")
    gsub = g.add_subparsers(dest="generator", required=True)

    ov = gsub.add_parser(
        "ov", help="two-thread trace racing iff the vector sets hold an orthogonal pair"
    )
    ov.add_argument("--a", required=True, metavar="PATH", help="first vector set file")
    ov.add_argument("--b", required=True, metavar="PATH", help="second vector set file")
    ov.set_defaults(run=cmd_gen_ov)

    ind = gsub.add_parser(
        "indset",
        help="lock-heavy trace racing iff the graph has a size-c independent set",
    )
    ind.add_argument(
        "--graph", required=True, metavar="PATH", help="edge list file, one 'u v' per line"
    )
    ind.add_argument("--c", required=True, type=int, help="independent set size")
    ind.set_defaults(run=cmd_gen_indset)

    rnd = gsub.add_parser("random", help="seed-deterministic random valid trace")
    rnd.add_argument(
        "--seed", type=int, help="RNG seed (default: $RACEPRED_SEED, then 0)"
    )
    rnd.add_argument("--n", type=int, default=20, help="target event count (default 20)")
    rnd.add_argument("--k", type=int, default=3, help="thread count (default 3)")
    rnd.add_argument(
        "--globals", dest="globals_", type=int, default=3, metavar="N",
        help="global location pool (default 3)",
    )
    rnd.add_argument("--locks", type=int, default=1, help="lock pool (default 1)")
    rnd.add_argument(
        "--read-ratio", type=float, default=0.4, help="share of reads (default 0.4)"
    )
    rnd.add_argument(
        "--lock-ratio", type=float, default=0.2,
        help="share of lock operations (default 0.2)",
    )
    rnd.add_argument(
        "--nesting", type=int, default=2, help="deepest lock nesting (default 2)"
    )
    rnd.set_defaults(run=cmd_gen_random)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (CliError, TraceError, OracleCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
