"""
Bayesian Generalized Kernel elevation inference.

Every observed potential-terrain cell contributes its fused Gaussian
N(μ̂, Σ̂) to nearby targets with weight k(d)·w/Σ̂, where k is the sparse kernel
and w the bilateral weight. Posterior at a target:

    μ* = (Σ k·w·μ̂/Σ̂ + μ₀/Σ₀) / (Σ k·w/Σ̂ + 1/Σ₀)
    Σ* = 1 / (Σ k·w/Σ̂ + 1/Σ₀)

An infinite prior variance is carried as zero precision so the prior terms
vanish exactly. Dense inference evaluates both sums over the whole grid as
correlations of the precision fields with the kernel stencil.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage, signal
from scipy.stats import norm

from ..geometry.core import InvalidArgumentError, MapAnchor
from ..preprocess.segmentation import CellClass
from .kernel import kernel_stencil, sparse_kernel

logger = logging.getLogger('terrain.bgk')


class BgkError(Exception):
    """Base exception for kernel inference."""
    pass


class NoInformationError(BgkError):
    """Raised when a target has no observation in range and an uninformative prior."""
    pass


BACKENDS = ("fft", "direct")


@dataclass(frozen=True)
class BgkConfig:
    """
    Inference settings.

    Attributes:
        kernel_radius: l, kernel support radius (m)
        bilateral_variance: Σ_w of the bilateral Gaussian weight (m²)
        variance_floor: lower clamp on observation variances (m²)
        bilateral_filter: apply the second, bilateral-weighted pass
        estimated_variance: weight observations by their fused variance;
            when off every variance is replaced by ``constant_variance``
        constant_variance: variance used when ``estimated_variance`` is off
        backend: "fft" (scipy.signal.fftconvolve) or "direct" (scipy.ndimage.correlate)
    """
    kernel_radius: float = 1.0
    bilateral_variance: float = 0.1
    variance_floor: float = 1e-4
    bilateral_filter: bool = True
    estimated_variance: bool = True
    constant_variance: float = 0.01
    backend: str = "fft"

    def __post_init__(self):
        if not (self.kernel_radius > 0 and math.isfinite(self.kernel_radius)):
            raise InvalidArgumentError("Kernel radius l must be positive")
        if not self.bilateral_variance > 0:
            raise InvalidArgumentError("Bilateral variance Σ_w must be positive")
        if not self.variance_floor > 0:
            raise InvalidArgumentError("Variance floor must be positive")
        if not self.constant_variance > 0:
            raise InvalidArgumentError("Constant variance must be positive")
        if self.backend not in BACKENDS:
            raise InvalidArgumentError(f"Unknown backend '{self.backend}', expected one of {BACKENDS}")

    def observation_variance(self, var):
        """Variance actually used as a precision weight."""
        var = np.asarray(var, dtype=float)
        if not self.estimated_variance:
            return np.full_like(var, self.constant_variance)
        return np.maximum(var, self.variance_floor)


@dataclass(frozen=True)
class PriorGaussian:
    """Prior N(μ₀, Σ₀); ``infinite=True`` means Σ₀ = +∞ (zero precision)."""
    mean: float = 0.0
    var: float = 1.0
    infinite: bool = False

    def __post_init__(self):
        if not self.infinite and not (self.var > 0 and math.isfinite(self.var)):
            raise InvalidArgumentError("Finite prior variance must be positive")

    @classmethod
    def uninformative(cls) -> "PriorGaussian":
        return cls(mean=0.0, var=1.0, infinite=True)

    @property
    def precision(self) -> float:
        return 0.0 if self.infinite else 1.0 / self.var


@dataclass(frozen=True)
class BgkObservation:
    """One observed cell: centre position, fused Gaussian and bilateral weight."""
    position: Tuple[float, float]
    mean: float
    var: float
    weight: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise InvalidArgumentError(f"Bilateral weight must lie in [0, 1], got {self.weight}")
        if self.var < 0:
            raise InvalidArgumentError("Observation variance must be non-negative")


@dataclass(frozen=True)
class PosteriorGaussian:
    """Gaussian N(mean, var)."""
    mean: float
    var: float

    def pdf(self, x):
        return norm.pdf(x, loc=self.mean, scale=math.sqrt(self.var))


def _weighted_posterior(obs: Sequence[BgkObservation], weights: np.ndarray, prior: PriorGaussian,
                        target: Tuple[float, float], cfg: BgkConfig) -> PosteriorGaussian:
    if len(obs):
        pos = np.array([o.position for o in obs], dtype=float).reshape(-1, 2)
        mu = np.array([o.mean for o in obs], dtype=float)
        var = cfg.observation_variance([o.var for o in obs])
        d = np.hypot(pos[:, 0] - target[0], pos[:, 1] - target[1])
        precision = weights * sparse_kernel(d, cfg.kernel_radius) / var
        num = float(np.sum(precision * mu))
        den = float(np.sum(precision))
    else:
        num = den = 0.0

    num += prior.precision * prior.mean
    den += prior.precision
    if den <= 0.0:
        raise NoInformationError(f"No observation within {cfg.kernel_radius} m of {target} and no prior")
    return PosteriorGaussian(mean=num / den, var=1.0 / den)


def bgk_posterior(obs: Sequence[BgkObservation], prior: PriorGaussian,
                  target: Tuple[float, float], cfg: BgkConfig) -> PosteriorGaussian:
    """
    Kernel posterior at ``target`` ignoring bilateral weights.

    Raises:
        NoInformationError: No observation in range and an infinite prior
    """
    return _weighted_posterior(obs, np.ones(len(obs)), prior, target, cfg)


def bgk_weighted_posterior(obs: Sequence[BgkObservation], prior: PriorGaussian,
                           target: Tuple[float, float], cfg: BgkConfig) -> PosteriorGaussian:
    """
    Kernel posterior at ``target`` with every precision term scaled by the
    observation's bilateral weight.

    Raises:
        NoInformationError: No observation in range and an infinite prior
    """
    weights = np.array([o.weight for o in obs], dtype=float)
    return _weighted_posterior(obs, weights, prior, target, cfg)


def bilateral_weights(obs: Sequence[BgkObservation], first_pass: Sequence[float],
                      bilateral_variance: float) -> np.ndarray:
    """w_i = exp(−δ_i² / 2Σ_w) with δ_i = first_pass_i − μ̂_i."""
    mu = np.array([o.mean for o in obs], dtype=float)
    return bilateral_weight_field(np.asarray(first_pass, dtype=float), mu, bilateral_variance)


def bilateral_weight_field(estimate: np.ndarray, observed: np.ndarray,
                           bilateral_variance: float) -> np.ndarray:
    if not bilateral_variance > 0:
        raise InvalidArgumentError("Bilateral variance Σ_w must be positive")
    delta = np.asarray(estimate, dtype=float) - np.asarray(observed, dtype=float)
    return np.exp(-delta * delta / (2.0 * bilateral_variance))


def predictive_distribution(post: PosteriorGaussian, likelihood_var: float) -> PosteriorGaussian:
    """Marginal of a new measurement: N(μ*, Σ* + Σ̂*)."""
    if likelihood_var < 0:
        raise InvalidArgumentError("Likelihood variance must be non-negative")
    return PosteriorGaussian(mean=post.mean, var=post.var + likelihood_var)


@dataclass(frozen=True, eq=False)
class TerrainModel:
    """
    Dense elevation model produced by inference.

    Attributes:
        elevation: N x N elevation (m), NaN where invalid
        variance: N x N posterior variance (m²), NaN where invalid
        valid: N x N mask of cells with an inferred elevation
        cell_size: ω (m)
        obstacle: N x N mask of obstacle cells (no terrain elevation)
        observed: N x N mask of cells that carried an observation
        anchor: map placement, when known
        lidar_z: LiDAR world elevation for the frame
    """
    elevation: np.ndarray
    variance: np.ndarray
    valid: np.ndarray
    cell_size: float
    obstacle: Optional[np.ndarray] = None
    observed: Optional[np.ndarray] = None
    anchor: Optional[MapAnchor] = None
    lidar_z: float = 0.0

    def __post_init__(self):
        valid = np.asarray(self.valid, dtype=bool)
        object.__setattr__(self, 'valid', valid)
        if self.obstacle is None:
            object.__setattr__(self, 'obstacle', np.zeros_like(valid))
        if self.observed is None:
            object.__setattr__(self, 'observed', valid.copy())

    @property
    def side_cells(self) -> int:
        return int(self.elevation.shape[0])

    @classmethod
    def from_elevation(cls, elevation: np.ndarray, cell_size: float,
                       variance: Optional[np.ndarray] = None, **kwargs) -> "TerrainModel":
        """Model from a height array; NaN entries are invalid."""
        elevation = np.asarray(elevation, dtype=float)
        valid = np.isfinite(elevation)
        if variance is None:
            variance = np.where(valid, 0.01, np.nan)
        return cls(elevation=np.where(valid, elevation, np.nan), variance=variance,
                   valid=valid, cell_size=cell_size, **kwargs)

    def elevation_with_sentinel(self, sentinel: float = -999.0) -> np.ndarray:
        return np.where(self.valid, self.elevation, sentinel)

    def variance_with_sentinel(self, sentinel: float = -999.0) -> np.ndarray:
        return np.where(self.valid, self.variance, sentinel)


@dataclass(frozen=True, eq=False)
class DensePosterior:
    mean: np.ndarray
    var: np.ndarray
    support: np.ndarray


def _correlate(field_: np.ndarray, stencil: np.ndarray, backend: str) -> np.ndarray:
    if backend == "fft":
        # stencil is point-symmetric, so convolution equals correlation
        return signal.fftconvolve(field_, stencil, mode='same')
    return ndimage.correlate(field_, stencil, mode='constant', cval=0.0)


def dense_posterior(mean: np.ndarray, var: np.ndarray, weights: np.ndarray, mask: np.ndarray,
                    prior_mean: np.ndarray, prior_precision: np.ndarray, stencil: np.ndarray,
                    backend: str = "fft") -> DensePosterior:
    """
    Weighted kernel posterior at every cell of the grid.

    Args:
        mean, var: Observation field (var already floored, > 0 under ``mask``)
        weights: Bilateral weights in [0, 1]
        mask: Cells that contribute an observation
        prior_mean, prior_precision: Per-cell prior; zero precision means Σ₀ = ∞
        stencil: Kernel weights over the cell window
        backend: "fft" or "direct"

    Returns:
        DensePosterior with NaN mean/var where ``support`` is False
    """
    mask = np.asarray(mask, dtype=bool)
    prior_precision = np.asarray(prior_precision, dtype=float)
    precision = np.zeros(mask.shape, dtype=float)
    np.divide(weights, var, out=precision, where=mask)

    # work relative to a reference height to keep the sums well conditioned
    ref = float(np.mean(mean[mask])) if np.any(mask) else 0.0
    centred = np.where(mask, mean - ref, 0.0)

    num = _correlate(precision * centred, stencil, backend)
    den = _correlate(precision, stencil, backend)
    reach = _correlate(mask.astype(float), (stencil > 0).astype(float), backend) > 0.5
    if backend == "fft":
        den = np.where(reach, den, 0.0)
        num = np.where(reach, num, 0.0)

    num = num + prior_precision * (np.asarray(prior_mean, dtype=float) - ref)
    den = den + prior_precision
    floor = 1e-12 * float(den.max()) if backend == "fft" and den.size else 0.0
    support = (den > floor) & (reach | (prior_precision > 0))

    out_mean = np.full(mask.shape, np.nan)
    out_var = np.full(mask.shape, np.nan)
    np.divide(num, den, out=out_mean, where=support)
    out_mean[support] += ref
    np.divide(1.0, den, out=out_var, where=support)
    return DensePosterior(mean=out_mean, var=out_var, support=support)


def infer_dense_terrain(snapshot, cfg: BgkConfig) -> TerrainModel:
    """
    Two-pass dense inference over a map snapshot.

    Pass 1 evaluates the unweighted posterior at every potential-terrain
    cell (its own observation included, infinite prior) and turns the
    residual to the observed mean into a bilateral weight. Pass 2 evaluates
    the weighted posterior at every cell, with prior (μ̂, Σ̂) at observed
    cells and (0, ∞) elsewhere. Obstacle cells carry no elevation; cells
    outside every kernel support stay invalid.

    Args:
        snapshot: MapSnapshot (read only)
        cfg: Inference settings

    Returns:
        TerrainModel in window order
    """
    cls = np.asarray(snapshot.cls)
    observed = cls == CellClass.POTENTIAL_TERRAIN
    obstacle = cls == CellClass.OBSTACLE
    mean = np.where(observed, snapshot.mean, 0.0)
    var = np.where(observed, cfg.observation_variance(snapshot.var), 1.0)
    cell_size = snapshot.anchor.cell_size
    stencil = kernel_stencil(cfg.kernel_radius, cell_size)
    zeros = np.zeros(cls.shape, dtype=float)

    if cfg.bilateral_filter and np.any(observed):
        first = dense_posterior(mean, var, np.ones(cls.shape), observed, zeros, zeros,
                                stencil, cfg.backend)
        weights = np.where(observed, bilateral_weight_field(first.mean, mean, cfg.bilateral_variance), 0.0)
        weights = np.where(np.isfinite(weights), weights, 0.0)
        logger.debug(
            f"BILATERAL cells={int(observed.sum())} "
            f"min_w={float(weights[observed].min()):.4f} mean_w={float(weights[observed].mean()):.4f}"
        )
    else:
        weights = np.ones(cls.shape)

    prior_precision = np.where(observed, 1.0 / var, 0.0)
    prior_mean = mean
    second = dense_posterior(mean, var, weights, observed, prior_mean, prior_precision,
                             stencil, cfg.backend)

    valid = second.support & ~obstacle
    elevation = np.where(valid, second.mean, np.nan)
    variance = np.where(valid, second.var, np.nan)
    logger.debug(f"INFER observed={int(observed.sum())} valid={int(valid.sum())} obstacles={int(obstacle.sum())}")
    return TerrainModel(
        elevation=elevation,
        variance=variance,
        valid=valid,
        cell_size=cell_size,
        obstacle=obstacle,
        observed=observed,
        anchor=snapshot.anchor,
        lidar_z=float(getattr(snapshot, 'lidar_z', 0.0)),
    )
