"""Counting query answering over DL-Lite knowledge bases.

The library computes certain answers to counting conjunctive queries three
independent ways -- rewriting into an aggregate rule language evaluated on
the raw data, evaluation over a restricted-chase prefix, and minimization
over enumerated bounded models -- and ships the hardness-gadget generators
that compile graph colorability and circuit validity into counting KBs.
"""

from .certain import (
    Bounds,
    CertainCountRequest,
    EngineError,
    certcount_bruteforce,
    certcount_chase,
    certcount_merge_min,
    certcount_rewrite,
    decide_count,
    pick_engine,
)
from .cq import (
    CQAtom,
    ConjunctiveQuery,
    Const,
    CountAnswer,
    ShapeReport,
    Var,
    answers,
    classify_shape,
    count_matches,
    gaifman,
    matches,
)
from .focount import (
    ExistsAtom,
    FOCountQuery,
    FORule,
    emit_sql,
    evaluate,
    evaluate_set,
    from_cq,
    normalize,
)
from .interp import (
    AnnotatedInterpretation,
    Anon,
    ChaseResult,
    InterpError,
    Interpretation,
    Named,
    apply_function,
    enumerate_models,
    from_abox,
    is_model,
    is_satisfiable,
    restricted_chase,
)
from .reductions import (
    NandCircuit,
    ReductionError,
    ReductionInstance,
    UndirectedGraph,
    eval_circuit,
    gen_3col_branching,
    gen_3col_disconnected,
    gen_nand_circuit,
    is_3colorable,
    parse_circuit,
    parse_graph,
    serialize_circuit,
    serialize_graph,
)
from .rewriter import RewriteError, canonical_query, initialize, saturate
from .syntax import (
    ABox,
    Atomic,
    ConceptInclusion,
    CORE,
    CORE_H,
    CORE_H_NM,
    CORE_NM,
    DIALECTS,
    Dialect,
    Fact,
    KB,
    MinCard,
    POS,
    POS_H,
    POS_HM_NM,
    Role,
    RoleInclusion,
    TBox,
    Violation,
    encode_numbers_into_H,
    exists,
    validate_dialect,
)
from .textio import (
    parse_abox,
    parse_cq,
    parse_focount_set,
    parse_interpretation,
    parse_tbox,
    serialize_abox,
    serialize_cq,
    serialize_focount_set,
    serialize_interpretation,
    serialize_tbox,
)

__version__ = "0.1.0"
