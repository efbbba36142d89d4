"""
Spatial-temporal Bayesian Generalized Kernel inference with bilateral filtering.
"""

from .kernel import sparse_kernel, kernel_stencil, stencil_half_width
from .inference import (
    BgkError,
    NoInformationError,
    BgkConfig,
    PriorGaussian,
    BgkObservation,
    PosteriorGaussian,
    TerrainModel,
    DensePosterior,
    bgk_posterior,
    bgk_weighted_posterior,
    bilateral_weights,
    bilateral_weight_field,
    predictive_distribution,
    dense_posterior,
    infer_dense_terrain,
)

__all__ = [
    "sparse_kernel",
    "kernel_stencil",
    "stencil_half_width",
    "BgkError",
    "NoInformationError",
    "BgkConfig",
    "PriorGaussian",
    "BgkObservation",
    "PosteriorGaussian",
    "TerrainModel",
    "DensePosterior",
    "bgk_posterior",
    "bgk_weighted_posterior",
    "bilateral_weights",
    "bilateral_weight_field",
    "predictive_distribution",
    "dense_posterior",
    "infer_dense_terrain",
]
