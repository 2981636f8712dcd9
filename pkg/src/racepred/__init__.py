"""Dynamic data-race prediction from observed concurrent traces."""

from .trace_model import (
    Event,
    Trace,
    TraceError,
    TraceParams,
    communication_topology,
    conflicting,
    parse_trace,
    serialize,
    trace_params,
    wrap_pair,
)
from .orders import CycleError, PartialOrder, RfPoset, closure, compute_trf, is_closed
from .ideal_engine import (
    Feasibility,
    FeasibilityResult,
    Ideal,
    candidate_ideal_set,
    cone,
    enabled_events,
    feasibility,
    is_ideal,
    lcone,
    open_acquires,
)
from .realizability import (
    TreePartition,
    check_tree_inducible,
    realize_bounded,
    realize_general,
    realize_tree,
    reversal_count,
    reversal_pairs,
)
from .oracle import (
    OracleCapError,
    enumerate_correct_reorderings,
    has_any_race,
    min_distance,
    oracle_predict,
    oracle_witness,
    verify_witness,
    witness_error,
)

__version__ = "0.1.0"

__all__ = [
    "Event",
    "Trace",
    "TraceError",
    "TraceParams",
    "communication_topology",
    "conflicting",
    "parse_trace",
    "serialize",
    "trace_params",
    "wrap_pair",
    "CycleError",
    "PartialOrder",
    "RfPoset",
    "closure",
    "compute_trf",
    "is_closed",
    "Feasibility",
    "FeasibilityResult",
    "Ideal",
    "candidate_ideal_set",
    "cone",
    "enabled_events",
    "feasibility",
    "is_ideal",
    "lcone",
    "open_acquires",
    "TreePartition",
    "check_tree_inducible",
    "realize_bounded",
    "realize_general",
    "realize_tree",
    "reversal_count",
    "reversal_pairs",
    "OracleCapError",
    "enumerate_correct_reorderings",
    "has_any_race",
    "min_distance",
    "oracle_predict",
    "oracle_witness",
    "verify_witness",
    "witness_error",
]
