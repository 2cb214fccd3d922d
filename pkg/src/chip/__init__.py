"""Community Hawkes Independent Pairs: simulation, detection, estimation.

Every ordered node pair carries an independent exponential Hawkes process
whose parameters depend only on the pair's block memberships.  The package
simulates such networks, recovers the blocks by spectral clustering,
estimates the block parameter matrices by the method of moments plus a
line search, evaluates held-out likelihood against a Poisson baseline and
evaluates the theoretical misclustering bounds.  The commonly used entry
points are re-exported here; `chip.cli` provides the command line.
"""

from .bounds import (
    BoundReport,
    PopulationEigen,
    SimplifiedRates,
    asymptotic_moments,
    binary_misclustering_bound,
    noise_constants,
    population_eigen,
    population_matrices,
    weighted_misclustering_bound,
)
from .estimation import (
    BetaEstimates,
    BlockPairStats,
    ChipFit,
    GroupedEvents,
    IntervalTable,
    MomentEstimates,
    block_pair_stats,
    estimate_pi,
    fit_beta,
    fit_chip,
    group_by_block_pair,
    m_confidence_intervals,
    moment_estimates,
    mu_difference_intervals,
)
from .evaluation import (
    EvalReport,
    SplitLog,
    full_log_likelihood,
    mean_test_loglik_per_event,
    split_by_count,
)
from .experiments import (
    ExperimentResult,
    ExperimentSpec,
    fit_real,
    get_experiment,
    list_experiments,
    mse_decay_slopes,
    run_experiment,
)
from .generator import (
    ChipModelSpec,
    SimplifiedSpec,
    balanced_assignment,
    expand_simplified,
    sample_communities,
    sample_network,
)
from .hawkes import (
    EventTimes,
    HawkesParams,
    golden_section_maximize,
    intensity_at,
    log_likelihood,
    profiled_log_likelihood,
    simulate,
)
from .ingest import IngestResult, ingest
from .network import CSV_HEADER, CommunityAssignment, EventLog, build_matrices
from .spectral import (
    adjusted_rand,
    best_label_alignment,
    eigengap_select_k,
    kmeans,
    misclustering_rate,
    singular_values,
    spectral_cluster_directed,
    spectral_cluster_undirected,
)

__version__ = "0.1.0"

__all__ = [
    "BetaEstimates",
    "BlockPairStats",
    "BoundReport",
    "CSV_HEADER",
    "ChipFit",
    "ChipModelSpec",
    "CommunityAssignment",
    "EvalReport",
    "EventLog",
    "EventTimes",
    "ExperimentResult",
    "ExperimentSpec",
    "GroupedEvents",
    "HawkesParams",
    "IngestResult",
    "IntervalTable",
    "MomentEstimates",
    "PopulationEigen",
    "SimplifiedRates",
    "SimplifiedSpec",
    "SplitLog",
    "adjusted_rand",
    "asymptotic_moments",
    "balanced_assignment",
    "best_label_alignment",
    "binary_misclustering_bound",
    "block_pair_stats",
    "build_matrices",
    "eigengap_select_k",
    "estimate_pi",
    "expand_simplified",
    "fit_beta",
    "fit_chip",
    "fit_real",
    "full_log_likelihood",
    "get_experiment",
    "golden_section_maximize",
    "group_by_block_pair",
    "ingest",
    "intensity_at",
    "kmeans",
    "list_experiments",
    "log_likelihood",
    "m_confidence_intervals",
    "mean_test_loglik_per_event",
    "misclustering_rate",
    "moment_estimates",
    "mse_decay_slopes",
    "mu_difference_intervals",
    "noise_constants",
    "population_eigen",
    "population_matrices",
    "profiled_log_likelihood",
    "run_experiment",
    "sample_communities",
    "sample_network",
    "simulate",
    "singular_values",
    "spectral_cluster_directed",
    "spectral_cluster_undirected",
    "split_by_count",
    "weighted_misclustering_bound",
]
