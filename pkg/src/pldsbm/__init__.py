"""Stochastic block models with power-law degree decay.

Generation, Viterbi-type variational EM inference, ICL model selection,
clustering metrics, and a seeded experiment harness for undirected
binary networks with heavy-tailed degree distributions.
"""

from .evaluation import (
    MetricReport,
    clustering_error,
    degree_histogram,
    nmi,
    powerlaw_slope,
)
from .generators import GenSpec, sample, sample_ba_planted, sample_pld_sbm, sample_sbm
from .graph import (
    Graph,
    GraphParseError,
    largest_connected_component,
    load_edge_list,
    load_gml_subset,
    write_edge_list,
)
from .inference import (
    FitConfig,
    FitResult,
    NumericalError,
    elbo,
    fit,
    predict,
)
from .model import (
    B_FLOOR,
    DELTA_CAP,
    ModelParams,
    ValidationError,
    VariationalState,
    edge_prob,
    joint_log_prob,
)
from .model_selection import IclSweep, icl_score, select_k

__all__ = [
    "B_FLOOR",
    "DELTA_CAP",
    "FitConfig",
    "FitResult",
    "GenSpec",
    "Graph",
    "GraphParseError",
    "IclSweep",
    "MetricReport",
    "ModelParams",
    "NumericalError",
    "ValidationError",
    "VariationalState",
    "clustering_error",
    "degree_histogram",
    "edge_prob",
    "elbo",
    "fit",
    "icl_score",
    "joint_log_prob",
    "largest_connected_component",
    "load_edge_list",
    "load_gml_subset",
    "nmi",
    "powerlaw_slope",
    "predict",
    "sample",
    "sample_ba_planted",
    "sample_pld_sbm",
    "sample_sbm",
    "select_k",
    "write_edge_list",
]

__version__ = "0.1.0"
