"""Spectral band-pass experiments on graph convolutional networks."""

from .bundle import GraphBundle, read_bundle, write_bundle, write_csv
from .graph import Graph, PropagationOperator, from_edge_list, normalized_operator
from .models import (
    ModelConfig,
    TrainReport,
    augment_features,
    evaluate_accuracy,
    gcn_forward,
    grid_search,
    mlp_forward,
    train,
)
from .sbm import (
    SbmSpec,
    expected_adjacency,
    make_sbm_bundle,
    planted_two_block,
    sample_sbm,
    spectral_gap,
)
from .sensitivity import SpectralGradient, loss_grad_wrt_operator, spectral_gradient
from .spectral import (
    BandOperator,
    SpectralDecomposition,
    band_project,
    eig_full,
    eig_truncated,
    spectrum_report,
)

__all__ = [
    "BandOperator",
    "Graph",
    "GraphBundle",
    "ModelConfig",
    "PropagationOperator",
    "SbmSpec",
    "SpectralDecomposition",
    "SpectralGradient",
    "TrainReport",
    "augment_features",
    "band_project",
    "eig_full",
    "eig_truncated",
    "evaluate_accuracy",
    "expected_adjacency",
    "from_edge_list",
    "gcn_forward",
    "grid_search",
    "loss_grad_wrt_operator",
    "make_sbm_bundle",
    "mlp_forward",
    "normalized_operator",
    "planted_two_block",
    "read_bundle",
    "sample_sbm",
    "spectral_gap",
    "spectral_gradient",
    "spectrum_report",
    "train",
    "write_bundle",
    "write_csv",
]

__version__ = "0.1.0"
