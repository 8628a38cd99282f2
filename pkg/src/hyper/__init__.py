"""Hypothetical what-if / how-to query engine over relational data.

Hypothetical updates are interpreted as interventions in a causal model of
the attributes; query answers are expectations over the induced distribution
of post-update instances.  A brute-force enumeration oracle ships alongside
the engine as ground truth for small instances.
"""

from .blocks import BlockPartition, blocks_consistent_with_view, decompose, single_block_partition
from .causal import (
    CausalDag,
    Cpt,
    DagEdge,
    GroundCausalGraph,
    Scm,
    SummarySpec,
    augment_with_aggregates,
    backdoor_set,
    canonical_dag,
    dag_from_config,
    ground,
    scm_from_config,
    summarize,
)
from .datamodel import (
    AttrDecl,
    Database,
    HypotheticalUpdate,
    RelationDecl,
    Tuple,
    apply_update_directly,
    database_from_rows,
    load_database,
    save_database,
)
from .estimator import ConditionalEstimator, PostUpdateProbQuery, Row, fit
from .howto import (
    CandidateGrid,
    HowToOptions,
    IPModel,
    UpdatePlan,
    enumerate_candidates,
    score_candidates,
    solve_cost_mode,
    solve_howto,
    solve_ip,
    solve_lexicographic,
)
from .hql import (
    HowToQuery,
    UpdateFn,
    WhatIfQuery,
    normalize_for,
    parse_howto,
    parse_whatif,
    render_howto,
    render_whatif,
    validate_howto,
    validate_whatif,
)
from .oracle import WorldDistribution, enumerate_pwd, oracle_eval, oracle_howto
from .whatif import (
    EvalOptions,
    RelevantView,
    WhatIfResult,
    build_relevant_view,
    eval_indep_baseline,
    eval_whatif,
    resolve_when,
    view_level_dag,
)

__version__ = "0.1.0"
