"""Functional Gaussian graphical models under a shared score basis.

Pipeline: estimate the pooled covariance of a multivariate functional
sample, extract its eigenbasis and per-basis score correlation matrices,
estimate jointly sparse inverse correlations with an ADMM solver, and
read the graph off the union of per-basis edge sets. A simulation
generator and recovery metrics (ROC / AUC) support benchmarking, and
diagnostics probe how well a single shared basis fits the data.
"""

__version__ = "0.1.0"

from .diagnostics import (
    BlockCorrelation,
    SplitRecord,
    SplitReport,
    UnivariateFpca,
    cross_correlation_blocks,
    univariate_fpca,
    variance_explained_split,
)
from .eigenbasis import EigenBasis, ScoreSet, compute_scores, eigendecompose, select_truncation
from .errors import (
    DegenerateSpectrum,
    DegenerateTruth,
    DegenerateVariance,
    DimensionMismatch,
    FunggmError,
    GridMismatch,
    MissingObservation,
    NumericalError,
    ParseError,
    RangeError,
)
from .fdata import (
    FunctionalDataset,
    MeanEstimate,
    PooledCovariance,
    TimeGrid,
    component_covariance,
    estimate_mean,
    load_csv,
    pooled_covariance,
    trapezoid_weights,
)
from .graphs import (
    EdgeSet,
    RocCurve,
    auc,
    auc15,
    confusion,
    extract_edges,
    gamma_grid,
    roc_analysis,
    roc_curve,
    sweep_alpha,
    union_edges,
)
from .jgl import (
    JGLProblem,
    JGLSolution,
    PenaltyConfig,
    gamma_max,
    kkt_residual,
    objective_value,
    prox_penalty,
    solve,
    solve_path,
)
from .pipeline import (
    BasisEstimate,
    GraphEstimate,
    ReplicationOutcome,
    dataset_roc,
    estimate_correlations,
    estimate_graphs,
    replication_study,
    truncation_study,
)
from .simgen import (
    SimConfig,
    TrueModel,
    build_sigma,
    fourier_basis,
    gen_power_law_graph,
    gen_precision,
    gen_samples,
    generate_model,
    partition_edges,
    simulate,
)
