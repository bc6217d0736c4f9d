"""Complete flow-based domain filtering for conjunctions of among constraints.

The library models instances (V, D, L, C) of among constraints, booleanizes
them, pairs the resulting hypergraph with a defining oriented tree (built
constructively for several tractable families or supplied explicitly), and
performs exact domain filtering via one max-flow computation plus a strongly
connected component analysis of the residual graph.
"""

__version__ = "0.1.0"

from .boolenc import (
    BoolConstraint,
    BooleanInstance,
    booleanize_canonical,
    booleanize_projection,
    booleanize_set,
    map_back,
)
from .builders import (
    FAMILY_TAGS,
    build_disjoint_tree,
    build_family,
    build_full_domain_tree,
    build_gcc_plus_tree,
    build_sequence_tree,
    build_tfo_tree,
    check_disjointedness,
    check_full_domain_family,
    check_gcc_plus_family,
)
from .errors import (
    AmongFlowError,
    InputError,
    OracleBudgetError,
    PreconditionError,
)
from .filtering import (
    FilterSession,
    Flow,
    PropagatorSpec,
    SolveResult,
    filter_domains,
    max_flow,
    narrow_and_refilter,
    solve,
    supported_values,
)
from .flow import (
    FlowNetwork,
    IncidenceMatrix,
    LinearSystem,
    build_flow_network,
    build_incidence,
    build_linear_system,
    to_standard_maxflow,
)
from .hypergraph import (
    Hypergraph,
    OrientedTree,
    booleanized_hypergraph,
    build_laminar_tree,
    contract_superfluous,
    derive_paths,
    glue,
    is_laminar,
    verify_defines,
)
from .model import (
    AmongConstraint,
    Assignment,
    CacInstance,
    FilterResult,
    OracleResult,
    among,
    evaluate,
    make_instance,
    oracle_supports,
    validate_instance,
)

__all__ = [name for name in dir() if not name.startswith("_")]
