"""Gaussian field samples on rectangular grids.

Stationary fields are drawn by circulant embedding. Random numbers come
from Philox streams keyed by (master seed, stream, replicate), so every
replicate is reproducible on its own, whatever the batch layout or the
number of FFT worker threads.
"""
from dataclasses import dataclass, field, replace as dc_replace
import json
import math
import struct

import numpy as np
import scipy.fft as sfft
from scipy.stats import norm

from .errors import ModelError, ResourceError, DimensionError
from .models import CovarianceModel

DEFAULT_MEMORY_CAP = 2 ** 26  # float64 elements per embedding batch
CLIP_TOL = 1e-8
MAX_DOUBLINGS = 4


def rng_for(seed, stream=0, replicate=0, *extra):
    """Counter-based generator for one (seed, stream, replicate) key."""
    ss = np.random.SeedSequence([int(seed), int(stream), int(replicate), *map(int, extra)])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class GridSpec:
    extents: tuple
    mesh: tuple = None
    origin: tuple = None
    memory_cap: int = DEFAULT_MEMORY_CAP

    def __post_init__(self):
        ext = tuple(float(r) for r in np.atleast_1d(self.extents))
        mesh = self.mesh if self.mesh is not None else 1.0
        mesh = tuple(float(h) for h in np.broadcast_to(np.atleast_1d(mesh), (len(ext),)))
        origin = self.origin if self.origin is not None else 0.0
        origin = tuple(float(o) for o in np.broadcast_to(np.atleast_1d(origin), (len(ext),)))
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "mesh", mesh)
        object.__setattr__(self, "origin", origin)
        if any(r <= 0 for r in ext) or any(h <= 0 for h in mesh):
            raise ValueError("extents and mesh must be positive")
        if len(ext) > 3:
            raise DimensionError("grids are limited to d <= 3")
        if any(n < 2 for n in self.shape):
            raise ValueError(f"each axis needs at least 2 nodes, got {self.shape}")
        if self.size > self.memory_cap:
            raise ResourceError(f"grid of {self.size} nodes exceeds cap {self.memory_cap}")

    @property
    def d(self):
        return len(self.extents)

    @property
    def shape(self):
        return tuple(int(math.floor(r / h + 1e-9)) for r, h in zip(self.extents, self.mesh))

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def cell_volume(self):
        return float(np.prod(self.mesh))

    @property
    def effective_extents(self):
        """Per-axis length N_l h_l covered by the node lattice."""
        return tuple(n * h for n, h in zip(self.shape, self.mesh))

    @property
    def volume(self):
        return float(np.prod(self.effective_extents))

    def points(self):
        axes = [o + h * np.arange(n) for o, h, n in zip(self.origin, self.mesh, self.shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def to_dict(self):
        return {"extents": list(self.extents), "mesh": list(self.mesh)}


@dataclass
class FieldSample:
    grid: GridSpec
    values: np.ndarray
    seed: int = 0
    model: dict = None
    approximate: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.grid is not None and self.values.size != self.grid.size:
            raise ValueError("values do not match the grid size")

    def replace(self, **kw):
        return dc_replace(self, **kw)


def _axis_lags(m, h):
    j = np.arange(m)
    return np.where(j <= m // 2, j, j - m) * h


def _embedding_sizes(shape):
    return [sfft.next_fast_len(max(2 * (n - 1), 2), real=True) for n in shape]


def _spectrum_full(model, grid, sizes):
    lags = np.meshgrid(*[_axis_lags(m, h) for m, h in zip(sizes, grid.mesh)], indexing="ij")
    c = model(np.stack(lags, axis=-1))
    return sfft.rfftn(c).real


def _spectrum_1d(model, n, h, max_doublings, tol):
    m = _embedding_sizes([n])[0]
    for k in range(max_doublings + 1):
        lam = sfft.rfft(model(_axis_lags(m, h))).real
        if lam.min() >= -tol * lam.max():
            return lam, m, False
        if k < max_doublings:
            m *= 2
    return lam, m, True


class CirculantEmbedding:
    """Square root of a stationary covariance on the embedding torus.

    For models that factor over coordinates the eigenvalues are outer
    products of 1-D embeddings; otherwise the d-dimensional embedding is
    doubled until it is nonnegative, and clipped after MAX_DOUBLINGS.
    """

    def __init__(self, model, grid, max_doublings=MAX_DOUBLINGS, tol=CLIP_TOL):
        if not getattr(model, "stationary", True):
            raise ModelError("circulant embedding needs a stationary model")
        if model.d != grid.d:
            raise DimensionError(f"model dimension {model.d} != grid dimension {grid.d}")
        self.model = model
        self.grid = grid
        self.approximate = False
        factors = model.axis_factors()
        if factors is not None and grid.d > 1:
            lams, sizes = [], []
            for f, n, h in zip(factors, grid.shape, grid.mesh):
                lam, m, approx = _spectrum_1d(f, n, h, max_doublings, tol)
                self.approximate |= approx
                sizes.append(m)
                # rfft gives the half spectrum; expand to the full axis except the last
                lams.append(lam)
            full = []
            for l, (lam, m) in enumerate(zip(lams, sizes)):
                if l < grid.d - 1:
                    lam = np.concatenate([lam, lam[1:(m + 1) // 2][::-1]]) if m % 2 else \
                        np.concatenate([lam, lam[1:m // 2][::-1]])
                full.append(lam)
            spec = full[0]
            for lam in full[1:]:
                spec = np.multiply.outer(spec, lam)
            self.sizes = sizes
        else:
            sizes = _embedding_sizes(grid.shape)
            for k in range(max_doublings + 1):
                self._check_cap(sizes)
                spec = _spectrum_full(model, grid, sizes)
                if spec.min() >= -tol * spec.max():
                    break
                if k < max_doublings:
                    sizes = [2 * m for m in sizes]
            else:
                self.approximate = True
            self.sizes = sizes
        self._check_cap(self.sizes)
        self.min_eigenvalue = float(spec.min())
        self.sqrt_spec = np.sqrt(np.clip(spec, 0.0, None))

    def _check_cap(self, sizes):
        if int(np.prod(sizes)) > self.grid.memory_cap:
            raise ResourceError(f"embedding {sizes} exceeds memory cap {self.grid.memory_cap}")

    @property
    def chunk(self):
        """Replicates per FFT batch; depends only on the embedding size."""
        return int(max(1, min(64, self.grid.memory_cap // (4 * int(np.prod(self.sizes))))))

    def batch(self, seed, replicates, stream=0, workers=1):
        """Samples for the given replicate indices, shape (len, *grid.shape)."""
        replicates = list(replicates)
        d = self.grid.d
        noise = np.empty((len(replicates),) + tuple(self.sizes))
        for i, r in enumerate(replicates):
            noise[i] = rng_for(seed, stream, r).standard_normal(self.sizes)
        axes = tuple(range(1, d + 1))
        z = sfft.rfftn(noise, axes=axes, workers=workers)
        z *= self.sqrt_spec
        y = sfft.irfftn(z, s=self.sizes, axes=axes, workers=workers)
        crop = (slice(None),) + tuple(slice(0, n) for n in self.grid.shape)
        return np.ascontiguousarray(y[crop])

    def iter_batches(self, seed, n_replicates, stream=0, workers=1):
        """Yield (start index, samples) in fixed-size chunks."""
        c = self.chunk
        for start in range(0, n_replicates, c):
            idx = range(start, min(start + c, n_replicates))
            yield start, self.batch(seed, idx, stream, workers)


def simulate_stationary(model, grid, seed, replicate=0, stream=0, workers=1):
    emb = CirculantEmbedding(model, grid)
    values = emb.batch(seed, [replicate], stream, workers)[0]
    return FieldSample(grid, values, int(seed), model.to_dict(), emb.approximate,
                       {"replicate": replicate, "stream": stream, "embedding": emb.sizes})


def simulate_fgn(H, grid, seed, replicate=0, stream=0, workers=1):
    """Fractional Gaussian noise with product covariance prod_l rho_{H_l}/2."""
    model = CovarianceModel("fgn_product", {"H": list(np.atleast_1d(H))})
    return simulate_stationary(model, grid, seed, replicate, stream, workers)


JITTERS = (1e-12, 1e-11, 1e-10, 1e-9, 1e-8)


def simulate_nonstationary(rho, points, seed, replicates=1, stream=0, max_points=4096):
    """Exact sampling through a Cholesky factor of the Gram matrix.

    rho(t, s) must broadcast over point arrays of shape (n, 1, d), (1, n, d).
    Returns a FieldSample whose values have shape (replicates, n).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = len(pts)
    if n > max_points:
        raise ResourceError(f"{n} points exceed the dense limit {max_points}")
    G = np.asarray(rho(pts[:, None, :], pts[None, :, :]), dtype=float)
    G = 0.5 * (G + G.T)
    scale = max(1.0, float(np.max(np.abs(np.diag(G)))))
    L = None
    jitter_used = 0.0
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        # semidefinite Gram matrices (e.g. degenerate fields) get an exact clipped
        # symmetric square root; the jitter ladder only bounds how negative it may be
        lam, V = np.linalg.eigh(G)
        floor = -lam.min() / scale if lam.min() < 0 else 0.0
        jitter_used = next((j for j in JITTERS if j >= floor), None)
        if jitter_used is None:
            raise ModelError("Gram matrix is not positive semidefinite within jitter 1e-8") from None
        # eigenvalues at roundoff level are zero for a semidefinite matrix
        lam = np.where(lam > n * np.finfo(float).eps * lam.max(), lam, 0.0)
        L = V * np.sqrt(lam)
    eps = np.stack([rng_for(seed, stream, r).standard_normal(n) for r in range(replicates)])
    values = eps @ L.T
    return FieldSample(None, values, int(seed), None, jitter_used > 0,
                       {"points": n, "jitter": jitter_used})


def draw_volatility(xi, seed, replicate, stream=1):
    """One draw of xi: {"kind": "constant", "c": c} or {"kind": "levy_sqrt", "u": u}.

    levy_sqrt gives xi = u/|Psi^{-1}(U)|, so xi^2 is Levy(0, u^2).
    """
    kind = xi["kind"]
    if kind == "constant":
        return float(xi["c"])
    if kind == "levy_sqrt":
        U = rng_for(seed, stream, replicate).random()
        z = abs(norm.isf(U))
        # U in (0, 1) open in practice; guard the measure-zero endpoints
        z = max(z, 1e-300)
        return float(xi["u"]) / z
    raise ValueError(f"unknown volatility law {kind!r}")


def simulate_random_volatility(base, xi, grid, seed, replicate=0, workers=1):
    y = simulate_stationary(base, grid, seed, replicate, stream=0, workers=workers)
    v = draw_volatility(xi, seed, replicate)
    meta = dict(y.meta)
    meta["xi"] = v
    return y.replace(values=v * y.values, meta=meta)


# ---- flat binary dump -------------------------------------------------------

_MAGIC = b"LRDF"
_HEADER = struct.Struct("<4sHH3I3d")  # 44 bytes
DUMP_VERSION = 1


def write_sample_dump(sample, path):
    """Write values as little-endian f64 after a fixed header, plus a JSON sidecar."""
    g = sample.grid
    shape = list(g.shape) + [1] * (3 - g.d)
    mesh = list(g.mesh) + [0.0] * (3 - g.d)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, DUMP_VERSION, g.d, *shape, *mesh))
        fh.write(np.ascontiguousarray(sample.values, dtype="<f8").tobytes())
    side = {"seed": sample.seed, "model": sample.model, "approximate": sample.approximate,
            "grid": g.to_dict(), "meta": {k: v for k, v in sample.meta.items()
                                          if isinstance(v, (int, float, str, list, dict, bool))}}
    with open(str(path) + ".json", "w") as fh:
        json.dump(side, fh, sort_keys=True, indent=1)
    return path


def read_sample_dump(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, version, d, n1, n2, n3, h1, h2, h3 = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise ValueError("not an LRDF file")
        shape = (n1, n2, n3)[:d]
        values = np.frombuffer(fh.read(), dtype="<f8").reshape(shape)
    grid = GridSpec(tuple(n * h for n, h in zip(shape, (h1, h2, h3))), (h1, h2, h3)[:d])
    with open(str(path) + ".json") as fh:
        side = json.load(fh)
    return FieldSample(grid, values.copy(), side["seed"], side["model"], side["approximate"],
                       side.get("meta", {}))
