"""Query completeness over processes that copy real-world data into an
information system.

Models are transition systems whose actions carry real-world effects (facts
that may appear in reality) and copy effects (facts transferred to the
stored database). The verifier decides whether a query returns the same
answer over the stored and the real-world database after every execution
reaching a state, by reduction to containment of conjunctive queries with
comparisons.
"""
from .containment import contains, find_counterexample, is_satisfiable
from .effects import CopyEffect, RealWorldEffect, associated_query, is_useless
from .model import (
    Atom,
    Comparison,
    ConjunctiveQuery,
    Database,
    UnionQuery,
    ValidationError,
    Var,
    evaluate_query,
    fact,
    semantic_completeness,
)
from .qats import Path, Qats, enumerate_normal_sequences, normalize, realizable, simulate
from .verify import (
    CompletenessChecker,
    Status,
    Verdict,
    dimension_analysis,
    is_repaired,
    is_risky,
    path_complete,
    path_complete_with_db,
    reduce_containment_to_qats,
    sequence_complete,
    state_complete,
)

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "Comparison",
    "CompletenessChecker",
    "ConjunctiveQuery",
    "CopyEffect",
    "Database",
    "Path",
    "Qats",
    "RealWorldEffect",
    "Status",
    "UnionQuery",
    "ValidationError",
    "Var",
    "Verdict",
    "associated_query",
    "contains",
    "dimension_analysis",
    "enumerate_normal_sequences",
    "evaluate_query",
    "fact",
    "find_counterexample",
    "is_repaired",
    "is_risky",
    "is_satisfiable",
    "is_useless",
    "normalize",
    "path_complete",
    "path_complete_with_db",
    "realizable",
    "reduce_containment_to_qats",
    "semantic_completeness",
    "sequence_complete",
    "simulate",
    "state_complete",
]
