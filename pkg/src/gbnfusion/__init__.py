"""Fusion of Gaussian Bayesian networks learned on horizontally partitioned data."""

__version__ = "0.1.0"

from .errors import (
    AntiparallelArcError,
    CycleError,
    DataError,
    DuplicateArcError,
    GbnFusionError,
    NumericalError,
    ValidationError,
)
from .fusion import (
    ArcOrder,
    ArcVoteMatrix,
    FusedGbn,
    FusionConfig,
    aggregate_structure,
    fuse,
    fuse_coefficients,
    get_votes,
)
from .gbn import Dataset, GaussianBayesianNetwork, conditional_variance, standardize
from .graph import Dag, Pdag, dag_to_cpdag, markov_equivalent
from .learning import (
    CoefficientEstimate,
    HillClimbConfig,
    bic_total,
    fit_mle,
    hill_climb,
    node_family_bic,
)
from .metrics import StructureMetrics, confusion, shd, structure_metrics, threshold_sweep_report
from .experiment import ExperimentSpec, random_ground_truth, replicate, simulate
