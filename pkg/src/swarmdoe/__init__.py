"""Exact G-optimal response-surface designs via matrix-particle swarm search.

The package finds N-run designs for the full second-order model in K
factors that minimize the worst-case scaled prediction variance over a
grid on the design region, and verifies scores of existing designs
independently of the search.
"""

from .audit import (
    RescoreReport,
    audit_design_file,
    brute_force_check,
    rescore_fine,
)
from .designs import (
    DEFAULT_GRID_LEVELS,
    DesignFileError,
    GridScorer,
    GScore,
    InformationMatrix,
    ModelSpec,
    ScoringGrid,
    SINGULAR_RATIO,
    SingularDesignError,
    build_model_matrix,
    g_efficiency,
    g_score,
    information_matrix,
    level_values,
    load_design_csv,
    make_grid,
    model_expand,
    normalize_bounds,
    p_count,
    relative_efficiency,
    save_design_csv,
    spv,
    validate_in_bounds,
)
from .pso import (
    InformantGraph,
    Particle,
    PsoParams,
    RunResult,
    SQRT_EPS,
    STOP_EPSILON,
    STOP_MAX_ITERATIONS,
    STOP_STAGNATION,
    SwarmState,
    confine,
    gen_neighbors,
    init_state,
    init_swarm,
    run,
    run_swarm,
    step,
    velocity_update,
)
from .runner import (
    BatchSummary,
    Catalog,
    CostSummary,
    ScenarioConfig,
    builtin_scenarios,
    cost_summary,
    run_batch,
    save_best_design,
    save_catalog,
    scale_eval_count,
    summarize,
    write_summary_csv,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_GRID_LEVELS",
    "SINGULAR_RATIO",
    "SQRT_EPS",
    "STOP_EPSILON",
    "STOP_MAX_ITERATIONS",
    "STOP_STAGNATION",
    "BatchSummary",
    "Catalog",
    "CostSummary",
    "DesignFileError",
    "GScore",
    "GridScorer",
    "InformantGraph",
    "InformationMatrix",
    "ModelSpec",
    "Particle",
    "PsoParams",
    "RescoreReport",
    "RunResult",
    "ScenarioConfig",
    "ScoringGrid",
    "SingularDesignError",
    "SwarmState",
    "audit_design_file",
    "brute_force_check",
    "build_model_matrix",
    "builtin_scenarios",
    "confine",
    "cost_summary",
    "g_efficiency",
    "g_score",
    "gen_neighbors",
    "information_matrix",
    "init_state",
    "init_swarm",
    "level_values",
    "load_design_csv",
    "make_grid",
    "model_expand",
    "normalize_bounds",
    "p_count",
    "relative_efficiency",
    "rescore_fine",
    "run",
    "run_batch",
    "run_swarm",
    "save_best_design",
    "save_catalog",
    "save_design_csv",
    "scale_eval_count",
    "spv",
    "step",
    "summarize",
    "validate_in_bounds",
    "velocity_update",
    "write_summary_csv",
]
