"""
Compactly supported sparse kernel and its grid stencil.
"""

import math
from typing import Union

import numpy as np

from ..geometry.core import InvalidArgumentError

TWO_PI = 2.0 * math.pi


def sparse_kernel(d: Union[float, np.ndarray], radius: float) -> Union[float, np.ndarray]:
    """
    k(d) = ((2 + cos(2πd/l)) / 3)(1 − d/l) + sin(2πd/l) / 2π for d ≤ l, 0 beyond.

    Args:
        d: Distance(s) in meters, non-negative
        radius: Support radius l in meters

    Returns:
        Kernel weight(s) in [0, 1]; a float for scalar input
    """
    if not (radius > 0 and math.isfinite(radius)):
        raise InvalidArgumentError(f"Kernel radius must be positive, got {radius}")
    dist = np.asarray(d, dtype=float)
    if np.any(dist < 0) or not np.all(np.isfinite(dist)):
        raise InvalidArgumentError("Kernel distances must be finite and non-negative")

    ratio = dist / radius
    phase = TWO_PI * ratio
    k = (2.0 + np.cos(phase)) / 3.0 * (1.0 - ratio) + np.sin(phase) / TWO_PI
    k = np.where(ratio <= 1.0, np.clip(k, 0.0, 1.0), 0.0)
    if k.ndim == 0:
        return float(k)
    return k


def stencil_half_width(radius: float, cell_size: float) -> int:
    """⌈l / ω⌉, tolerant to l/ω landing a rounding error above an integer."""
    return int(math.ceil(round(radius / cell_size, 9)))


def kernel_stencil(radius: float, cell_size: float) -> np.ndarray:
    """
    Kernel weights over the (2m+1) x (2m+1) cell window, m = ⌈l / ω⌉.

    Entry [m + dr, m + dc] holds k(ω·√(dr² + dc²)).
    """
    if not cell_size > 0:
        raise InvalidArgumentError(f"Cell size must be positive, got {cell_size}")
    m = stencil_half_width(radius, cell_size)
    offsets = np.arange(-m, m + 1)
    dr, dc = np.meshgrid(offsets, offsets, indexing='ij')
    return sparse_kernel(cell_size * np.hypot(dr, dc), radius)
