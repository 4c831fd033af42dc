"""Regularized min-cut objectives as rates of information loss under graph diffusion."""
from .diffusion import DiffusionKernel, Prior, PriorKind, build_kernel, make_prior
from .errors import (
    DisconnectedGraph,
    DomainError,
    InfocutError,
    InvalidInput,
    NonConvergence,
)
from .experiments import (
    ComparisonResult,
    CutObjective,
    LocalSearchResult,
    bisections_equal,
    coordinate_descent_cut,
    coordinate_descent_info,
    estar_local_search,
    run_comparison,
)
from .graph import Graph, SbmSpec, build_graph, sample_connected_sbm, sample_sbm, solve_sbm_spec
from .info import iota_bisection, iota_kpartition, joint_yz, relevance_information
from .mixing import ErrorCurve, TimeGrid, error_e0, error_e1, fast_mixing_stats
from .partition import (
    Bisection,
    Partition,
    average_cut,
    cut,
    normalized_cut,
    quadratic_forms,
    regularized_cut,
)

__version__ = "0.1.0"
