"""matchlab: agent-based simulator for two-sided peer-support matching."""

from .core import (
    Agent,
    AgentState,
    Gender,
    PairScore,
    Policy,
    PopulationParams,
    Role,
    RunConfig,
    combined_score,
    is_minority,
    seeded_rng,
)
from .engine import AbandonRecord, ChatSession, MatchRecord, RunResult, World, run
from .matching import (
    Matching,
    PreferenceProfile,
    RoundState,
    ScoreTable,
    apply_recommendation_noise,
    build_preferences,
    cosine_similarity,
    deferred_acceptance,
    filter_pool_match,
)
from .metrics import (
    HistogramComparison,
    OutcomeReport,
    SubgroupReport,
    compute_outcomes,
    histogram_compare,
    pearson,
    subgroup_breakdown,
)
from .oracle import (
    CalibrationTargets,
    OracleParams,
    calibrate,
    emit_labels,
    generate_corpus,
    latent_score,
)
from .population import (
    AgentFactory,
    generate_arrivals,
    sample_chat_length,
    sample_decision_time,
    sample_online_target,
    sample_patience,
)
from .predictors import (
    Dataset,
    EvalReport,
    ForestModel,
    evaluate,
    predict_block,
    predict_rating,
    smote_oversample,
    train_forest,
    train_tree,
)

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "AgentState",
    "AgentFactory",
    "AbandonRecord",
    "CalibrationTargets",
    "ChatSession",
    "Dataset",
    "EvalReport",
    "ForestModel",
    "Gender",
    "HistogramComparison",
    "MatchRecord",
    "Matching",
    "OracleParams",
    "OutcomeReport",
    "PairScore",
    "Policy",
    "PopulationParams",
    "PreferenceProfile",
    "Role",
    "RoundState",
    "RunConfig",
    "RunResult",
    "ScoreTable",
    "SubgroupReport",
    "World",
    "apply_recommendation_noise",
    "build_preferences",
    "calibrate",
    "combined_score",
    "compute_outcomes",
    "cosine_similarity",
    "deferred_acceptance",
    "emit_labels",
    "evaluate",
    "filter_pool_match",
    "generate_arrivals",
    "generate_corpus",
    "histogram_compare",
    "is_minority",
    "latent_score",
    "pearson",
    "predict_block",
    "predict_rating",
    "run",
    "sample_chat_length",
    "sample_decision_time",
    "sample_online_target",
    "sample_patience",
    "seeded_rng",
    "smote_oversample",
    "subgroup_breakdown",
    "train_forest",
    "train_tree",
]
