"""Excursion volumes and integral functionals of sampled fields."""
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteValueError


@dataclass
class FunctionalResult:
    raw: float
    window_volume: float
    level: float = None
    replicate: int = None


def excursion_volume(sample, u, replicate=None):
    """Node-count estimate of the volume where the field is >= u."""
    v = np.asarray(sample.values)
    if v.size == 0:
        raise ValueError("empty sample")
    h = sample.grid.cell_volume
    raw = h * float(np.count_nonzero(v >= u))
    return FunctionalResult(raw, sample.grid.volume, u, replicate)


def integral_functional(sample, G):
    """Riemann sum of G over the grid nodes."""
    v = np.asarray(sample.values)
    if v.size == 0:
        raise ValueError("empty sample")
    g = np.asarray(G(v), dtype=float)
    g = np.broadcast_to(g, v.shape)
    bad = ~np.isfinite(g)
    if bad.any():
        idx = int(np.flatnonzero(bad.ravel())[0])
        raise NonFiniteValueError(f"non-finite functional value at node {idx}", idx)
    return sample.grid.cell_volume * float(np.sum(g))


def standardized_statistic(result, centering, scale):
    """(raw - centering) / scale."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    raw = result.raw if isinstance(result, FunctionalResult) else result
    return (raw - centering) / scale


def prefix_counts(indicator, shapes):
    """Counts of ones in each leading sub-box of a boolean array.

    ``indicator`` has shape (batch, *full_shape); returns (batch, len(shapes)).
    """
    out = np.empty((indicator.shape[0], len(shapes)))
    for j, shp in enumerate(shapes):
        sl = (slice(None),) + tuple(slice(0, n) for n in shp)
        out[:, j] = np.count_nonzero(indicator[sl].reshape(indicator.shape[0], -1), axis=1)
    return out
