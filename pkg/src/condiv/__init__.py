"""Conditional divergence estimation toolkit.

Kernel-based estimators of the Cauchy-Schwarz divergence between marginal
and conditional distributions, comparison baselines (MMD, conditional MMD,
k-NN KL, von Neumann), and the evaluation pipelines built on top of them:
permutation power tests, task-relatedness recovery, time-series clustering,
bivariate causal direction tests, and divergence-driven exploration.
"""

from .causal import (
    HENON_EMBEDDING,
    NLVAR3_EMBEDDING,
    CausalResult,
    EmbeddingSpec,
    causal_score,
    causal_test,
    delay_embed,
    henon_generate,
    nlvar3_generate,
    surrogate_pair,
)
from .divergences import (
    CmmdConfig,
    CovarianceSummary,
    DisjointSupportError,
    KnnConfig,
    PairedDataset,
    conditional_cs,
    conditional_cs_nested,
    conditional_cs_shared_x,
    conditional_kl,
    conditional_mmd,
    conditional_von_neumann,
    covariance_summary,
    cs_divergence,
    kl_knn,
    mmd,
    von_neumann,
)
from .envs import (
    Environment,
    MazeEnv,
    MountainCarEnv,
    PendulumEnv,
    maze_env,
    mountain_car_env,
    pendulum_env,
)
from .kernels import (
    GramMatrix,
    KernelConfig,
    gaussian_kernel,
    gram,
    median_bandwidth,
    product_kernel_check,
)
from .rl import (
    DtgConfig,
    EpisodeLog,
    KernelValueFunction,
    ReplayBuffer,
    TransitionNovelty,
    buffer_divergence,
    dtg_step,
    log_probabilities,
    occupancy_grid,
    run_dtg,
    run_qlearning,
    run_random,
    state_action_vector,
    visitation_entropy,
)
from .stats import (
    PermutationConfig,
    PowerMatrix,
    TaskCollection,
    adjacency_error,
    classical_mds,
    collection_widths,
    fiedler_vector,
    geodesic_distance,
    graph_laplacian,
    knn_graph,
    permutation_test,
    power_matrix,
    resolve_measure,
    ring_adjacency,
    sim1_generate,
    sim2_generate,
    task_dissimilarity,
)
from .timeseries import (
    ClusterAssignment,
    HankelPair,
    TimeSeries,
    ar_collection,
    hankel_embed,
    kmedoids,
    load_ucr,
    nmi,
    pairwise_matrix,
    spectral_cluster,
    to_affinity,
    ts_dissimilarity,
)

__version__ = "0.1.0"

__all__ = [
    "CausalResult",
    "ClusterAssignment",
    "CmmdConfig",
    "CovarianceSummary",
    "DisjointSupportError",
    "DtgConfig",
    "EmbeddingSpec",
    "Environment",
    "EpisodeLog",
    "GramMatrix",
    "HENON_EMBEDDING",
    "HankelPair",
    "KernelConfig",
    "KernelValueFunction",
    "KnnConfig",
    "MazeEnv",
    "MountainCarEnv",
    "NLVAR3_EMBEDDING",
    "PairedDataset",
    "PendulumEnv",
    "PermutationConfig",
    "PowerMatrix",
    "ReplayBuffer",
    "TaskCollection",
    "TimeSeries",
    "TransitionNovelty",
    "adjacency_error",
    "ar_collection",
    "buffer_divergence",
    "causal_score",
    "causal_test",
    "classical_mds",
    "collection_widths",
    "conditional_cs",
    "conditional_cs_nested",
    "conditional_cs_shared_x",
    "conditional_kl",
    "conditional_mmd",
    "conditional_von_neumann",
    "covariance_summary",
    "cs_divergence",
    "delay_embed",
    "dtg_step",
    "fiedler_vector",
    "gaussian_kernel",
    "geodesic_distance",
    "graph_laplacian",
    "gram",
    "hankel_embed",
    "henon_generate",
    "kl_knn",
    "kmedoids",
    "knn_graph",
    "load_ucr",
    "log_probabilities",
    "maze_env",
    "median_bandwidth",
    "mmd",
    "mountain_car_env",
    "nlvar3_generate",
    "nmi",
    "occupancy_grid",
    "pairwise_matrix",
    "pendulum_env",
    "permutation_test",
    "power_matrix",
    "resolve_measure",
    "ring_adjacency",
    "run_dtg",
    "run_qlearning",
    "run_random",
    "sim1_generate",
    "sim2_generate",
    "spectral_cluster",
    "state_action_vector",
    "surrogate_pair",
    "task_dissimilarity",
    "to_affinity",
    "ts_dissimilarity",
    "visitation_entropy",
    "von_neumann",
    "__version__",
]
