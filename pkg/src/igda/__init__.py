"""igda: interactive graph discovery with confidence-weighted experiments.

Predict every directed pairwise relation of a system zero-shot, then
spend a budget of interventional experiments round by round, freezing
confirmed answers and propagating belief updates to related pairs.
"""
from .engine import (
    ADJACENCY_SCOPES,
    POLICIES,
    STRATEGIES,
    DiscoveryConfig,
    DiscoveryRun,
    PredictionState,
    TruthOracle,
    adjacent_update_targets,
    apply_feedback_and_update,
    initialize,
    run_batch,
    run_discovery,
    select_llm_direct,
    select_random,
    select_static,
    select_uncertain,
    static_ranking,
)
from .errors import (
    AggregationError,
    CoverageError,
    DiscoveryError,
    GatewayConfigError,
    GridAlignmentError,
    InconsistentOracleError,
    InvalidGraphError,
    InvalidPairError,
    LogIntegrityError,
    PolicyUnavailableError,
    PromptContractError,
    ResponseParseError,
    SessionError,
    TransportError,
)
from .gateway import GatewayBackend, GatewayConfig, LlmGateway
from .graph import (
    ABSENT,
    PRESENT,
    GraphMetrics,
    GroundTruthGraph,
    ImprovementBreakdown,
    Pair,
    SignedConfidence,
    VariableSpec,
    candidate_edges,
    compute_metrics,
    diff_rounds,
    graph_hash,
    label_from_confidence,
    load_graph,
    parse_graph,
    random_graph,
)
from .parsing import EdgeAssessment, parse_assessment
from .predictor import (
    OracleParams,
    PromptPredictor,
    ScriptedBackend,
    SimulatedPredictor,
    TextBackend,
    aggregate_samples,
    demo_script_backend,
    derive_seed,
    sim_local_update,
    sim_zero_shot,
)
from .runlog import RoundLog, RoundSummary, RunHeader, RunLog, UpdateEvent, read_runlog, write_runlog

__version__ = "0.1.0"

__all__ = [
    "ABSENT",
    "ADJACENCY_SCOPES",
    "AggregationError",
    "CoverageError",
    "DiscoveryConfig",
    "DiscoveryError",
    "DiscoveryRun",
    "EdgeAssessment",
    "GatewayBackend",
    "GatewayConfig",
    "GatewayConfigError",
    "GraphMetrics",
    "GridAlignmentError",
    "GroundTruthGraph",
    "ImprovementBreakdown",
    "InconsistentOracleError",
    "InvalidGraphError",
    "InvalidPairError",
    "LlmGateway",
    "LogIntegrityError",
    "OracleParams",
    "POLICIES",
    "Pair",
    "PolicyUnavailableError",
    "PredictionState",
    "PromptContractError",
    "PromptPredictor",
    "PRESENT",
    "ResponseParseError",
    "RoundLog",
    "RoundSummary",
    "RunHeader",
    "RunLog",
    "STRATEGIES",
    "ScriptedBackend",
    "SessionError",
    "SignedConfidence",
    "SimulatedPredictor",
    "TextBackend",
    "TransportError",
    "TruthOracle",
    "UpdateEvent",
    "VariableSpec",
    "adjacent_update_targets",
    "aggregate_samples",
    "apply_feedback_and_update",
    "candidate_edges",
    "compute_metrics",
    "demo_script_backend",
    "derive_seed",
    "diff_rounds",
    "graph_hash",
    "initialize",
    "label_from_confidence",
    "load_graph",
    "parse_assessment",
    "parse_graph",
    "random_graph",
    "read_runlog",
    "run_batch",
    "run_discovery",
    "select_llm_direct",
    "select_random",
    "select_static",
    "select_uncertain",
    "sim_local_update",
    "static_ranking",
    "sim_zero_shot",
    "write_runlog",
]
