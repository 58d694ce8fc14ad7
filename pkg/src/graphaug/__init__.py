"""Graph data augmentation for GCN node classification.

Augmented adjacency and attribute matrices (cosine cross matrices and kNN
graphs) are combined into nine input channels, each encoded by its own
two-layer GCN; a per-node attention layer fuses the channel embeddings and an
HSIC penalty keeps them from collapsing onto each other.
"""
from .augmentation import CHANNEL_SPECS, FeatureSet, build_feature_set, enumerate_channels
from .data_io import SyntheticSpec, generate_synthetic, load_dataset
from .errors import (
    ConfigError,
    ContractError,
    GraphAugError,
    NumericalError,
    ParseError,
    ShapeError,
    ValidationError,
)
from .graph import Graph, SplitMasks, make_splits, normalize_adjacency
from .training import TrainConfig, TrainReport, train

__version__ = "0.1.0"

__all__ = [
    "CHANNEL_SPECS",
    "ConfigError",
    "ContractError",
    "FeatureSet",
    "Graph",
    "GraphAugError",
    "NumericalError",
    "ParseError",
    "ShapeError",
    "SplitMasks",
    "SyntheticSpec",
    "TrainConfig",
    "TrainReport",
    "ValidationError",
    "build_feature_set",
    "enumerate_channels",
    "generate_synthetic",
    "load_dataset",
    "make_splits",
    "normalize_adjacency",
    "train",
]
