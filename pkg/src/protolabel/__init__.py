"""Prototype-guided active labeling for windowed time-series data."""

from .data import (
    ChannelStats,
    Dataset,
    LabeledInstance,
    PoolState,
    SyntheticSpec,
    TimeSeriesInstance,
    load_dataset,
    load_uci_har,
    make_synthetic,
    resample_linear,
    save_dataset,
    standardize,
)
from .engine import (
    ActiveSession,
    FineTuneConfig,
    PendingOracle,
    SessionConfig,
    SimulatedOracle,
)
from .evaluation import (
    LearningCurve,
    accuracy,
    bootstrap_ci,
    build_curve,
    curve_from_csv,
    curve_to_csv,
    run_experiment,
    summarize,
)
from .protonet import PrototypeSet, classify, compute_prototypes, distance, protonet_nll
from .strategies import (
    QueryRequest,
    QuerySelection,
    cosine_similarity,
    entropy,
    least_confidence,
    margin,
    select,
    select_single,
)

__version__ = "0.1.0"
