"""Covariance functions, spectral densities and pointwise transforms.

Every model is a small value object with a ``kind`` tag and a parameter
map, so that it round-trips through the JSON config format unchanged.
"""
from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy.special import binom

from .errors import DimensionError, PoleError

COVARIANCE_KINDS = ("power_law_iso", "example29_3d", "gneiting", "separable",
                    "fgn_product", "exponential", "constant")
SPECTRAL_KINDS = ("isotropic_powerlaw", "anisotropic_product", "two_param_scaling")
SUBORDINATOR_KINDS = ("identity", "cubic", "quadratic", "lognormal",
                      "signed_exp", "square", "two_branch")


def rho_alpha(alpha, s):
    """|s+1|^{2a} + |s-1|^{2a} - 2|s|^{2a}, elementwise in s."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    s = np.asarray(s, dtype=float)
    a2 = 2.0 * alpha
    return np.abs(s + 1.0) ** a2 + np.abs(s - 1.0) ** a2 - 2.0 * np.abs(s) ** a2


def rho_alpha_series(alpha, s, terms=30):
    """Large-|s| expansion of rho_alpha(s)/|s|^{2a}: 2*sum_k binom(2a, 2k) s^{-2k}.

    Converges for |s| > 1.
    """
    s = np.abs(np.asarray(s, dtype=float))
    k = np.arange(1, terms + 1)
    c = binom(2.0 * alpha, 2 * k)
    return 2.0 * np.sum(c[:, None] * s.ravel()[None, :] ** (-2.0 * k[:, None]), axis=0).reshape(s.shape)


def _as_lags(t, d):
    t = np.asarray(t, dtype=float)
    if d == 1 and (t.ndim == 0 or t.shape[-1] != 1):
        t = t[..., None]
    if t.shape[-1] != d:
        raise DimensionError(f"expected points of dimension {d}, got shape {t.shape}")
    return t


@dataclass
class CovarianceModel:
    """Stationary covariance C(t) of a unit-variance field.

    kinds and parameters:
      power_law_iso   eta, d       (1 + |t|^2)^(-eta/2)
      example29_3d    alpha, c     exp(-c|z|) (1 + x^2 + y^2)^(-alpha), d = 3
      gneiting        alpha, gamma, d_space   time is the last coordinate
      separable       spatial, temporal       product of two models
      fgn_product     H (list)     prod_l rho_{H_l}(t_l) / 2
      exponential     theta, d     exp(-|t| / theta)
      constant        d            C = 1 (degenerate field)
    """
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in COVARIANCE_KINDS:
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        p = self.params
        if self.kind == "separable":
            for key in ("spatial", "temporal"):
                if isinstance(p[key], dict):
                    p[key] = CovarianceModel.from_dict(p[key])
        if self.kind == "fgn_product":
            p["H"] = [float(h) for h in np.atleast_1d(p["H"])]
            if not all(0.0 < h < 1.0 for h in p["H"]):
                raise ValueError("Hurst indices must lie in (0, 1)")
        if self.kind == "gneiting":
            if not (0 < p["alpha"] <= 1 and 0 < p["gamma"] <= 1):
                raise ValueError("gneiting needs alpha, gamma in (0, 1]")

    @property
    def d(self):
        p = self.params
        if self.kind == "example29_3d":
            return 3
        if self.kind == "gneiting":
            return int(p.get("d_space", 1)) + 1
        if self.kind == "separable":
            return p["spatial"].d + p["temporal"].d
        if self.kind == "fgn_product":
            return len(p["H"])
        return int(p.get("d", 1))

    stationary = True

    def __call__(self, t):
        """C at lag points t with shape (..., d); d = 1 also accepts plain arrays."""
        t = _as_lags(t, self.d)
        p = self.params
        k = self.kind
        if k == "power_law_iso":
            return (1.0 + np.sum(t * t, axis=-1)) ** (-p["eta"] / 2.0)
        if k == "example29_3d":
            c = p.get("c", 1.0)
            return np.exp(-c * np.abs(t[..., 2])) * (1.0 + t[..., 0] ** 2 + t[..., 1] ** 2) ** (-p["alpha"])
        if k == "gneiting":
            a, g = p["alpha"], p["gamma"]
            psi = np.abs(t[..., -1]) ** (2 * a) + 1.0
            x2 = np.sum(t[..., :-1] ** 2, axis=-1)
            return np.exp(-x2 ** g / psi ** g) / psi
        if k == "separable":
            ds = p["spatial"].d
            return p["spatial"](t[..., :ds]) * p["temporal"](t[..., ds:])
        if k == "fgn_product":
            out = np.ones(t.shape[:-1])
            for l, h in enumerate(p["H"]):
                out = out * 0.5 * rho_alpha(h, t[..., l])
            return out
        if k == "exponential":
            return np.exp(-np.sqrt(np.sum(t * t, axis=-1)) / p.get("theta", 1.0))
        return np.ones(t.shape[:-1])

    def axis_factors(self):
        """Per-axis 1-D models when C factorizes over coordinates, else None."""
        if self.kind == "fgn_product":
            return [CovarianceModel("fgn_product", {"H": [h]}) for h in self.params["H"]]
        if self.kind == "constant":
            return [CovarianceModel("constant", {"d": 1}) for _ in range(self.d)]
        if self.d == 1:
            return [self]
        return None

    def to_dict(self):
        p = {}
        for key, val in self.params.items():
            p[key] = val.to_dict() if isinstance(val, CovarianceModel) else val
        return {"kind": self.kind, "params": p}

    @classmethod
    def from_dict(cls, obj):
        return cls(obj["kind"], dict(obj.get("params", {})))


def cov_eval(model, t, s):
    """rho(t, s) = C(t - s) for the stationary registry models."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if t.shape != s.shape:
        raise DimensionError("t and s must have the same shape")
    if np.atleast_1d(t).shape[-1] != model.d:
        raise DimensionError(f"model has dimension {model.d}")
    return model(np.atleast_1d(t - s))


@dataclass
class SpectralDensity:
    """Spectral density with slowly varying factors fixed to 1.

      isotropic_powerlaw   alpha, d        |z|^(alpha - d)
      anisotropic_product  gamma (list)    prod_l |z_l|^(gamma_l - 1)
      two_param_scaling    H1, H2, c       (x^2 + c|y|^(2 H2/H1))^(-H1/2), d = 2
    """
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SPECTRAL_KINDS:
            raise ValueError(f"unknown spectral kind {self.kind!r}")
        if self.kind == "anisotropic_product":
            self.params["gamma"] = [float(g) for g in np.atleast_1d(self.params["gamma"])]

    @property
    def d(self):
        if self.kind == "anisotropic_product":
            return len(self.params["gamma"])
        if self.kind == "two_param_scaling":
            return 2
        return int(self.params.get("d", 1))

    def __call__(self, x):
        x = _as_lags(x, self.d)
        p = self.params
        if self.kind == "isotropic_powerlaw":
            r = np.sqrt(np.sum(x * x, axis=-1))
            if np.any(r == 0):
                raise PoleError("isotropic density is singular at the origin")
            return r ** (p["alpha"] - self.d)
        if self.kind == "anisotropic_product":
            if np.any(x == 0):
                raise PoleError("anisotropic density is singular on the axes")
            return np.prod(np.abs(x) ** (np.asarray(p["gamma"]) - 1.0), axis=-1)
        h1, h2, c = p["H1"], p["H2"], p.get("c", 1.0)
        base = x[..., 0] ** 2 + c * np.abs(x[..., 1]) ** (2.0 * h2 / h1)
        if np.any(base == 0):
            raise PoleError("two-parameter density is singular at the origin")
        return base ** (-h1 / 2.0)

    def Q(self, x):
        """Square root of the density, the kernel factor of the spectral integral."""
        return np.sqrt(self(x))

    def axis_exponents(self):
        """Per-axis gamma_l when the density is a coordinate product, else None."""
        if self.kind == "anisotropic_product":
            return list(self.params["gamma"])
        if self.kind == "isotropic_powerlaw" and self.d == 1:
            return [float(self.params["alpha"])]
        return None

    def admissible_for_rank(self, m):
        """Square integrability of the order-m kernel near the origin."""
        p = self.params
        if self.kind == "anisotropic_product":
            return all(0.0 < g < 1.0 / m for g in p["gamma"])
        if self.kind == "isotropic_powerlaw":
            return 0.0 < p["alpha"] < self.d / m
        # scaling exponents: x ~ lambda, y ~ lambda^(H1/H2); g ~ lambda^(-H1)
        h1, h2 = p["H1"], p["H2"]
        return m * h1 < 1.0 + h1 / h2

    def to_dict(self):
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, obj):
        return cls(obj["kind"], dict(obj.get("params", {})))


_BIG = np.finfo(float).max


@dataclass
class Subordinator:
    """Pointwise transform f applied to a Gaussian field.

      identity                      x
      cubic       beta              x + beta x^3
      quadratic   a                 x + a (x^2 - 1)
      lognormal                     exp(x)
      signed_exp  beta              sgn(x) (exp(x^2/beta^2) - 1)
      square                        x^2
      two_branch  p, scale, rate    |x|^p on |x| <= 1,
                                    scale exp(-rate(|x| - 1)) on |x| > 1
    """
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SUBORDINATOR_KINDS:
            raise ValueError(f"unknown subordinator kind {self.kind!r}")

    @property
    def monotone(self):
        """True when f is nondecreasing on the whole line."""
        k = self.kind
        if k in ("identity", "lognormal", "signed_exp"):
            return True
        if k == "cubic":
            return self.params.get("beta", 0.0) >= 0
        if k == "quadratic":
            return self.params.get("a", 0.0) == 0
        return False

    @property
    def even(self):
        return self.kind in ("square", "two_branch")

    @property
    def breakpoints(self):
        """Points splitting the line into pieces on which f is monotone."""
        k = self.kind
        p = self.params
        if k == "square":
            return [0.0]
        if k == "two_branch":
            return [-1.0, 0.0, 1.0]
        if k == "quadratic" and p.get("a", 0.0) != 0:
            return [-1.0 / (2.0 * p["a"])]
        if k == "cubic" and p.get("beta", 0.0) < 0:
            x0 = math.sqrt(-1.0 / (3.0 * p["beta"]))
            return [-x0, x0]
        return []

    def evaluate(self, x):
        """f(x) and the number of values saturated to +-MAX."""
        x = np.asarray(x, dtype=float)
        k = self.kind
        p = self.params
        with np.errstate(over="ignore", invalid="ignore"):
            if k == "identity":
                y = x.copy()
            elif k == "cubic":
                y = x + p["beta"] * x ** 3
            elif k == "quadratic":
                y = x + p["a"] * (x * x - 1.0)
            elif k == "lognormal":
                y = np.exp(x)
            elif k == "signed_exp":
                y = np.sign(x) * np.expm1(x * x / p["beta"] ** 2)
            elif k == "square":
                y = x * x
            else:
                ax = np.abs(x)
                y = np.where(ax <= 1.0, ax ** p["p"],
                             p["scale"] * np.exp(-p["rate"] * (ax - 1.0)))
        bad = ~np.isfinite(y) & np.isfinite(x)
        nsat = int(np.count_nonzero(bad))
        if nsat:
            y = np.where(bad, np.copysign(_BIG, np.where(x == 0, 1.0, x)), y)
        return y, nsat

    def __call__(self, x):
        return self.evaluate(x)[0]

    def generalized_inverse(self, u, lo=-40.0, hi=40.0, tol=1e-12):
        """inf{x : f(x) >= u} for nondecreasing f, by bisection."""
        if not self.monotone:
            raise ValueError(f"{self.kind} is not monotone")
        if self(lo) >= u:
            return -math.inf
        if self(hi) < u:
            return math.inf
        while hi - lo > tol * max(1.0, abs(lo)):
            mid = 0.5 * (lo + hi)
            if self(mid) >= u:
                hi = mid
            else:
                lo = mid
        return hi

    def to_dict(self):
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, obj):
        return cls(obj["kind"], dict(obj.get("params", {})))


def subordinate(f, sample):
    """Apply f pointwise to a FieldSample; returns a new sample."""
    values, nsat = f.evaluate(sample.values)
    if nsat:
        warnings.warn(f"{nsat} values saturated while applying {f.kind}", RuntimeWarning)
    meta = dict(sample.meta)
    meta["subordinator"] = f.to_dict()
    meta["saturated"] = nsat
    return sample.replace(values=values, meta=meta)


def two_branch_rank4(u=0.5, p=1.0, rate=1.0):
    """two_branch parameters that cancel the second Hermite coefficient.

    With a = u^(1/p) the excursion set of |x| is [a, b]; <F, H_2> is
    proportional to a*phi(a) - b*phi(b), so b is the root above 1.
    """
    from scipy.optimize import brentq
    a = u ** (1.0 / p)
    target = a * math.exp(-a * a / 2)
    b = brentq(lambda x: x * math.exp(-x * x / 2) - target, 1.0, 10.0, xtol=1e-15)
    scale = u * math.exp(rate * (b - 1.0))
    return Subordinator("two_branch", {"p": p, "scale": scale, "rate": rate})
