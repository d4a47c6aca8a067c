"""Goodness-of-fit distances and moment summaries."""
import numpy as np
from scipy import stats as sps

from ..errors import TooFewSamplesError

MIN_SAMPLES = 50


def _uniform_half_cdf(x):
    return np.clip(2.0 * np.asarray(x, dtype=float), 0.0, 1.0)


def ks_distance(samples, reference="std_normal"):
    """Kolmogorov-Smirnov distance and asymptotic p-value.

    reference is "std_normal", "uniform_0_half", or a second sample
    (two-sample test).
    """
    x = np.asarray(samples, dtype=float).ravel()
    if len(x) < MIN_SAMPLES:
        raise TooFewSamplesError(f"need at least {MIN_SAMPLES} samples, got {len(x)}")
    if isinstance(reference, str):
        if reference == "std_normal":
            res = sps.kstest(x, "norm", method="asymp")
        elif reference == "uniform_0_half":
            res = sps.kstest(x, _uniform_half_cdf, method="asymp")
        else:
            raise ValueError(f"unknown reference {reference!r}")
    else:
        y = np.asarray(reference, dtype=float).ravel()
        if len(y) < MIN_SAMPLES:
            raise TooFewSamplesError(f"need at least {MIN_SAMPLES} reference samples")
        res = sps.ks_2samp(x, y, method="asymp")
    return float(res.statistic), float(res.pvalue)


def ks_critical(n, level=0.01):
    """Asymptotic one-sample critical value c(level)/sqrt(n)."""
    return float(sps.kstwobign.isf(level)) / np.sqrt(n)


def moments(x):
    x = np.asarray(x, dtype=float)
    return {"mean": float(np.mean(x)), "variance": float(np.var(x, ddof=1)),
            "skewness": float(sps.skew(x)), "excess_kurtosis": float(sps.kurtosis(x))}
