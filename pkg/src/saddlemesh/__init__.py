"""Decentralized stochastic minimax optimization on mesh networks.

Layout:
    topology    graphs, Metropolis mixing matrices, spectral data
    strategy    unified bias-corrected decentralized update families
    problems    synthetic quadratic minimax objectives (offline/online)
    estimators  probabilistic variance-reduced gradient estimators
    engine      multi-agent saddle-point run loop (general + node-level forms)
    transform   spectral error coordinates and contraction verification
    metrics     run metrics rows, CSV schema, summaries
    cli         ``saddlemesh`` command-line front end
"""

from .engine import NetworkState, NodeLevelState, RunConfig, RunLog, Seeds, run
from .estimators import EstimatorConfig, EstimatorState, estimator_step, specialize, warm_start
from .metrics import (
    CSV_HEADER,
    MetricsRow,
    first_stationary_round,
    read_csv,
    record,
    write_csv,
)
from .problems import (
    BilinearSaddle,
    MinimaxProblem,
    QuadraticMinimax,
    dump_dataset,
    grad_loss,
    load_dataset,
    make_quadratic,
    saddle_residual,
)
from .strategy import (
    StrategyKind,
    StrategySet,
    ValidationReport,
    build_strategy,
    strategy_diagnostics,
    validate_assumption4,
)
from .topology import (
    Graph,
    MixingMatrix,
    build_graph,
    build_mixing,
    from_matrix,
    metropolis_weights,
    spectral_data,
)
from .transform import (
    BlockFactor,
    CoupledError,
    TransitionFactorization,
    VerificationReport,
    build_transition,
    compute_error_vectors,
    verify_transformed_dynamics,
)

__all__ = [
    "Graph",
    "MixingMatrix",
    "build_graph",
    "build_mixing",
    "from_matrix",
    "metropolis_weights",
    "spectral_data",
    "StrategyKind",
    "StrategySet",
    "ValidationReport",
    "build_strategy",
    "strategy_diagnostics",
    "validate_assumption4",
    "MinimaxProblem",
    "QuadraticMinimax",
    "BilinearSaddle",
    "make_quadratic",
    "grad_loss",
    "saddle_residual",
    "dump_dataset",
    "load_dataset",
    "EstimatorConfig",
    "EstimatorState",
    "estimator_step",
    "specialize",
    "warm_start",
    "NetworkState",
    "NodeLevelState",
    "RunConfig",
    "RunLog",
    "Seeds",
    "run",
    "CSV_HEADER",
    "MetricsRow",
    "record",
    "write_csv",
    "read_csv",
    "first_stationary_round",
    "BlockFactor",
    "CoupledError",
    "TransitionFactorization",
    "VerificationReport",
    "build_transition",
    "compute_error_vectors",
    "verify_transformed_dynamics",
]

__version__ = "0.1.0"
