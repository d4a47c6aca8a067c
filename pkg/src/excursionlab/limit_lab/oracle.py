"""Discretized multiple Wiener-Ito integrals for Hermite-type limits.

The frequency axis is split into cells graded geometrically toward the
origin, mirrored to a symmetric grid. A complex Gaussian measure M on the
cells (M(-cell) = conj M(cell), E|M|^2 = cell length) turns the m-fold
off-diagonal integral of prod Q(y_j) K_V(y_1 + ... + y_m) into a finite
sum. Tuples sharing a cell or its mirror image are masked out.

For m = 2 the sum is a real quadratic form xi^T B xi in i.i.d. standard
normals, with B = Re(T^T A T); draws then reduce to sum_i lambda_i xi_i^2
over the eigenvalues of B. A direct complex contraction is kept for m = 3
and as a cross-check.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.special import jv, gamma as gamma_fn

from ..errors import ResolutionError, PreconditionError
from ..fieldgen import rng_for

RANGE_CAPTURE = 0.99
RESOLUTION_TOL = 0.05


# ---- window kernels -----------------------------------------------------------

def kernel_box_1d(x):
    """(e^{ix} - 1)/(ix), written with sin/cos to stay accurate near 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=complex)
    small = np.abs(x) < 1e-8
    xs = np.where(small, 1.0, x)
    out.real = np.where(small, 1.0 - x * x / 6.0, np.sin(xs) / xs)
    out.imag = np.where(small, x / 2.0, 2.0 * np.sin(xs / 2.0) ** 2 / xs)
    return out


def kernel_box(x):
    """K for V = [0,1]^d at points x of shape (..., d)."""
    x = np.asarray(x, dtype=float)
    out = np.ones(x.shape[:-1], dtype=complex)
    for l in range(x.shape[-1]):
        out = out * kernel_box_1d(x[..., l])
    return out


def ball_volume(d):
    return math.pi ** (d / 2) / gamma_fn(d / 2 + 1)


def kernel_ball(x):
    """K for the unit ball: (2 pi)^{d/2} J_{d/2}(|x|) / |x|^{d/2}."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    r = np.sqrt(np.sum(x * x, axis=-1))
    small = r < 1e-6
    rs = np.where(small, 1.0, r)
    val = (2 * math.pi) ** (d / 2) * jv(d / 2, rs) / rs ** (d / 2)
    # series: vol(B) (1 - r^2/(2(d+2)))
    val = np.where(small, ball_volume(d) * (1 - r * r / (2 * (d + 2))), val)
    return val.astype(complex)


def window_kernel(V):
    if V == "box":
        return kernel_box
    if V == "ball":
        return kernel_ball
    raise ValueError(f"unknown window {V!r}")


# ---- frequency grids ----------------------------------------------------------

def axis_cells(per_decade, y_min, y_max):
    """Symmetric cell centres and widths: [0, y_min] then geometric cells to y_max."""
    J = max(1, int(round(per_decade * math.log10(y_max / y_min))))
    edges = np.concatenate([[0.0], np.geomspace(y_min, y_max, J + 1)])
    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    y = np.concatenate([-mid[::-1], mid])
    w = np.concatenate([(hi - lo)[::-1], hi - lo])
    lo_s = np.concatenate([lo[::-1], lo])
    hi_s = np.concatenate([hi[::-1], hi])
    return y, w, lo_s, hi_s


def _power_cell_average(gam, lo, hi):
    """(1/(b-a)) int_a^b y^(gam-1) dy, the cell-averaged 1-D power density."""
    return (hi ** gam - lo ** gam) / (gam * (hi - lo))


def real_transform(w):
    """T with M = T xi for a symmetric 1-D cell list of widths w (length 2J)."""
    P = len(w)
    J = P // 2
    T = np.zeros((P, P), dtype=complex)
    pos = np.arange(J, P)
    neg = P - 1 - pos
    s = np.sqrt(w / 2.0)
    cols = np.arange(J)
    T[pos, cols] = s[pos]
    T[neg, cols] = s[neg]
    T[pos, J + cols] = 1j * s[pos]
    T[neg, J + cols] = -1j * s[neg]
    return T


def _pair_mask(P):
    idx = np.arange(P)
    mask = np.ones((P, P), dtype=bool)
    mask[idx, idx] = False
    mask[idx, P - 1 - idx] = False
    return mask


@dataclass
class AxisGrid:
    y: np.ndarray
    w: np.ndarray
    q: np.ndarray  # sqrt of cell-averaged density factor

    @property
    def size(self):
        return len(self.y)


@dataclass
class SpectralKernelGrid:
    """Frequency nodes, kernel factors and diagonal-exclusion mask.

    For product densities on a box the kernel factorizes over axes and each
    axis keeps its own grid and mask; otherwise the grid is the tensor
    product of identical axis grids with a full-dimensional mask.
    """
    m: int
    axes: list
    V: str
    product: bool
    per_decade: float
    y_min: float
    y_max: float

    def pair_kernel_1d(self, l):
        ax = self.axes[l]
        A = ax.q[:, None] * ax.q[None, :] * kernel_box_1d(ax.y[:, None] + ax.y[None, :])
        A[~_pair_mask(ax.size)] = 0.0
        return A

    def full_nodes(self):
        ys = np.meshgrid(*[a.y for a in self.axes], indexing="ij")
        ws = np.meshgrid(*[a.w for a in self.axes], indexing="ij")
        pts = np.stack([g.ravel() for g in ys], axis=-1)
        vol = np.prod(np.stack([g.ravel() for g in ws], axis=-1), axis=-1)
        return pts, vol


def _axis_grid(gam, per_decade, y_min, y_max):
    y, w, lo, hi = axis_cells(per_decade, y_min, y_max)
    q = np.sqrt(_power_cell_average(gam, lo, hi))
    return AxisGrid(y, w, q)


def build_grid(density, m, V="box", per_decade=100, y_min=1e-4, y_max=1e3):
    if not density.admissible_for_rank(m):
        raise PreconditionError(f"kernel of order {m} is not square integrable for {density.to_dict()}")
    gams = density.axis_exponents()
    if gams is not None and V == "box":
        axes = [_axis_grid(g, per_decade, y_min, y_max) for g in gams]
        return SpectralKernelGrid(m, axes, V, True, per_decade, y_min, y_max)
    y, w, lo, hi = axis_cells(per_decade, y_min, y_max)
    ax = AxisGrid(y, w, np.ones_like(y))
    return SpectralKernelGrid(m, [ax] * density.d, V, False, per_decade, y_min, y_max)


def _full_pair_matrix(grid, density):
    pts, vol = grid.full_nodes()
    Q = np.sqrt(density(pts))
    K = window_kernel(grid.V)(pts[:, None, :] + pts[None, :, :])
    A = Q[:, None] * Q[None, :] * K
    # mirror of a multi-index reverses every coordinate
    P1 = grid.axes[0].size
    d = len(grid.axes)
    idx = np.arange(P1 ** d)
    mirror = (P1 ** d - 1) - idx
    A[idx, idx] = 0.0
    A[idx, mirror] = 0.0
    return A, vol


def discrete_c(grid, density):
    """sum over masked tuples of |kernel|^2 prod cell volumes."""
    m = grid.m
    if m == 2:
        if grid.product:
            out = 1.0
            for l, ax in enumerate(grid.axes):
                A = grid.pair_kernel_1d(l)
                out *= float(np.real(np.sum(np.abs(A) ** 2 * ax.w[:, None] * ax.w[None, :])))
            return out
        A, vol = _full_pair_matrix(grid, density)
        return float(np.sum(np.abs(A) ** 2 * vol[:, None] * vol[None, :]))
    if m == 3:
        ax = _single_axis(grid)
        total = 0.0
        for a in range(ax.size):
            T = _triple_slice(ax, a)
            total += float(np.sum(np.abs(T) ** 2 * ax.w[:, None] * ax.w[None, :])) * ax.w[a]
        return total
    raise PreconditionError("orders m in {2, 3} are supported")


def _single_axis(grid):
    if len(grid.axes) != 1 or not grid.product:
        raise PreconditionError("order 3 is implemented for one-dimensional product kernels")
    return grid.axes[0]


def _triple_slice(ax, a):
    """A[a, :, :] for the order-3 kernel with the pairwise mask applied."""
    P = ax.size
    y = ax.y
    T = ax.q[a] * ax.q[:, None] * ax.q[None, :] * kernel_box_1d(y[a] + y[:, None] + y[None, :])
    T[~_pair_mask(P)] = 0.0
    ab = a
    T[ab, :] = 0.0
    T[:, ab] = 0.0
    T[P - 1 - ab, :] = 0.0
    T[:, P - 1 - ab] = 0.0
    return T


def select_range(density, m, V="box", per_decade=100, y_min=1e-4, y_start=1e2, y_cap=1e6):
    """Smallest decade y_max with c(y_max) >= 0.99 c(10 y_max) at fixed node density."""
    y = y_start
    c_prev = discrete_c(build_grid(density, m, V, per_decade, y_min, y), density)
    while y < y_cap:
        c_next = discrete_c(build_grid(density, m, V, per_decade, y_min, 10 * y), density)
        if c_prev >= RANGE_CAPTURE * c_next:
            return y, c_prev, c_next
        y *= 10
        c_prev = c_next
    return y, c_prev, c_prev


def resolution_discrepancy(density, grid):
    """Relative change of c when the node density is doubled."""
    c0 = discrete_c(grid, density)
    fine = build_grid(density, grid.m, grid.V, 2 * grid.per_decade, grid.y_min, grid.y_max)
    c1 = discrete_c(fine, density)
    return abs(c1 - c0) / c1, c0, c1


class HermiteOracle:
    """Sampler for the unit-variance discretized order-m integral."""

    def __init__(self, m, density, V="box", per_decade=None, y_min=1e-4, y_max=None,
                 check_resolution=True, method="auto"):
        if m not in (2, 3):
            raise PreconditionError("orders m in {2, 3} are supported")
        if per_decade is None:
            per_decade = 100 if m == 2 and density.d == 1 else (25 if m == 2 else 12)
        self.m = m
        self.density = density
        self.V = V
        self.range_info = None
        if y_max is None:
            y_max, c_a, c_b = select_range(density, m, V, per_decade, y_min,
                                           y_start=1e2 if m == 2 else 1e1,
                                           y_cap=1e6 if m == 2 else 1e3)
            self.range_info = {"y_max": y_max, "c": c_a, "c_next_decade": c_b}
        self.grid = build_grid(density, m, V, per_decade, y_min, y_max)
        self.c = discrete_c(self.grid, density)
        self.discrepancy = None
        if check_resolution:
            disc, _, _ = resolution_discrepancy(density, self.grid)
            self.discrepancy = disc
            if disc > RESOLUTION_TOL:
                raise ResolutionError(f"normalization changes by {disc:.1%} under refinement", disc)
        if method == "auto":
            method = "eigen" if m == 2 else "direct"
        self.method = method
        self._eig = None
        self._direct = None

    # -- m = 2 via eigenvalues --
    def eigenvalues(self):
        if self._eig is None:
            g = self.grid
            if g.product:
                lam = np.ones(1)
                for l, ax in enumerate(g.axes):
                    T = real_transform(ax.w)
                    B = (T.T @ g.pair_kernel_1d(l) @ T)
                    imag = float(np.max(np.abs(B.imag)))
                    Br = 0.5 * (B.real + B.real.T)
                    lam = np.multiply.outer(lam, np.linalg.eigvalsh(Br)).ravel()
            else:
                A, _ = _full_pair_matrix(g, self.density)
                T = real_transform(g.axes[0].w)
                for _ in range(len(g.axes) - 1):
                    T = np.kron(T, real_transform(g.axes[0].w))
                B = T.T @ A @ T
                imag = float(np.max(np.abs(B.imag)))
                lam = np.linalg.eigvalsh(0.5 * (B.real + B.real.T))
            self.max_imag = imag
            self._eig = lam / math.sqrt(2.0 * np.sum(lam ** 2))
        return self._eig

    def cumulants(self):
        """Exact mean, variance, skewness, excess kurtosis of the m = 2 law."""
        lam = self.eigenvalues()
        k2 = 2 * np.sum(lam ** 2)
        k3 = 8 * np.sum(lam ** 3)
        k4 = 48 * np.sum(lam ** 4)
        return {"mean": 0.0, "variance": float(k2), "skewness": float(k3 / k2 ** 1.5),
                "excess_kurtosis": float(k4 / k2 ** 2)}

    # -- direct complex contraction --
    def _complex_measure(self, rng, ax):
        P = ax.size
        J = P // 2
        z = (rng.standard_normal(J) + 1j * rng.standard_normal(J)) * np.sqrt(ax.w[J:] / 2.0)
        M = np.empty(P, dtype=complex)
        M[J:] = z
        M[:J] = np.conj(z[::-1])
        return M

    def _draw_direct(self, rng):
        g = self.grid
        if self.m == 2:
            if g.product and len(g.axes) == 1:
                if self._direct is None:
                    self._direct = g.pair_kernel_1d(0)
                A = self._direct
                M = self._complex_measure(rng, g.axes[0])
            else:
                if self._direct is None:
                    self._direct = _full_pair_matrix(g, self.density)[0] if not g.product else \
                        _kron_all([g.pair_kernel_1d(l) for l in range(len(g.axes))])
                A = self._direct
                Ms = [self._complex_measure(rng, ax) for ax in g.axes]
                M = Ms[0]
                for extra in Ms[1:]:
                    M = np.kron(M, extra)
            S = M @ A @ M
        else:
            ax = _single_axis(g)
            if self._direct is None:
                self._direct = np.stack([_triple_slice(ax, a) for a in range(ax.size)])
            M = self._complex_measure(rng, ax)
            S = np.einsum("abc,a,b,c->", self._direct, M, M, M, optimize=True)
        return S / math.sqrt(math.factorial(self.m) * self.c)

    def sample(self, size, seed=0, stream=7, return_imag=False):
        """size unit-variance draws, reproducible from (seed, stream)."""
        if self.method == "eigen" and self.m == 2:
            lam = self.eigenvalues()
            out = np.empty(size)
            chunk = max(1, 2 ** 22 // len(lam))
            for s in range(0, size, chunk):
                n = min(chunk, size - s)
                xi = rng_for(seed, stream, s).standard_normal((n, len(lam)))
                out[s:s + n] = (xi * xi) @ lam
            return (out, np.zeros(size)) if return_imag else out
        vals = np.array([self._draw_direct(rng_for(seed, stream, i)) for i in range(size)])
        if return_imag:
            return vals.real, vals.imag
        imag = float(np.max(np.abs(vals.imag))) if size else 0.0
        if imag > 1e-10:
            raise ArithmeticError(f"realized values carry imaginary part {imag:.3g}")
        return vals.real


def _kron_all(mats):
    out = mats[0]
    for M in mats[1:]:
        out = np.kron(out, M)
    return out


def sample_hermite_oracle(m, density, V="box", grid=None, seed=0, size=None, **kw):
    """One draw (size None) or an array of draws of the unit-variance oracle."""
    grid = grid or {}
    oracle = HermiteOracle(m, density, V, **grid, **kw)
    draws = oracle.sample(1 if size is None else size, seed)
    return float(draws[0]) if size is None else draws
