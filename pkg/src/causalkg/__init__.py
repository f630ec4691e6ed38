"""Causal discovery over TuckER knowledge-graph embeddings with DirectLiNGAM and ICA-LiNGAM."""

from .dag import CausalModel, DataMatrix
from .direct import discover, kernel_mi, residualize, t_kernel
from .ica import fast_ica, ica_lingam
from .kg import AdjacencyTensor, KgIndex, build_tensor, load_dataset, parse_triples
from .projection import ProjectionMatrix, project, select_relations
from .stats import SynthSpec, excess_kurtosis, gaussianity_test, residual_independence, synth_lingam
from .tucker import TrainConfig, TuckerModel, score, train

__all__ = [
    "AdjacencyTensor",
    "CausalModel",
    "DataMatrix",
    "KgIndex",
    "ProjectionMatrix",
    "SynthSpec",
    "TrainConfig",
    "TuckerModel",
    "build_tensor",
    "discover",
    "excess_kurtosis",
    "fast_ica",
    "gaussianity_test",
    "ica_lingam",
    "kernel_mi",
    "load_dataset",
    "parse_triples",
    "project",
    "residual_independence",
    "residualize",
    "score",
    "select_relations",
    "synth_lingam",
    "t_kernel",
    "train",
]
