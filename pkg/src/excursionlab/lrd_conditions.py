"""Finite-probe checks of the dependence conditions behind the limit theorems.

Each check evaluates a sequence over growing window sizes and fits a line
to log(value) against log(size). Limits cannot be proven from finitely many
probes, so verdicts come from slope thresholds and the raw sequence is
always kept in the report.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DegenerateModelError
from .models import CovarianceModel
from .normalizer import _model_box_integral, box_integral

SLOPE_THRESHOLD = 0.05
R2_THRESHOLD = 0.9


def default_probes(lo=1e2, hi=1e4, per_decade=8):
    k = int(round(per_decade * math.log10(hi / lo)))
    return list(np.geomspace(lo, hi, k + 1))


@dataclass
class ConditionReport:
    condition: str
    sizes: list
    values: list
    slope: float = float("nan")
    intercept: float = float("nan")
    r2: float = float("nan")
    verdict: str = "inconclusive"
    kind: str = "decay"
    notes: dict = field(default_factory=dict)

    def to_dict(self):
        return {"condition": self.condition, "kind": self.kind,
                "sizes": list(map(float, self.sizes)), "values": list(map(float, self.values)),
                "slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "verdict": self.verdict, **self.notes}

    def csv_rows(self):
        return [("n", "value")] + [(float(n), float(v)) for n, v in zip(self.sizes, self.values)]


def loglog_fit(x, y):
    """Least-squares slope, intercept and R^2 of log y against log x."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + icpt)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    return float(slope), float(icpt), r2


def classify(sizes, values, kind):
    """Verdict for a decay (kind="decay") or divergence (kind="divergence") condition.

    A sequence flat within the slope threshold counts against the condition.
    """
    if len(sizes) < 3 or np.any(np.asarray(values) <= 0):
        return float("nan"), float("nan"), float("nan"), "inconclusive"
    slope, icpt, r2 = loglog_fit(sizes, values)
    sign = -1.0 if kind == "decay" else 1.0
    s = sign * slope
    if s > SLOPE_THRESHOLD:
        verdict = "satisfied" if r2 >= R2_THRESHOLD else "inconclusive"
    elif s >= -SLOPE_THRESHOLD:
        verdict = "violated"
    else:
        verdict = "violated" if r2 >= R2_THRESHOLD else "inconclusive"
    return slope, icpt, r2, verdict


def _report(name, sizes, values, kind, **notes):
    slope, icpt, r2, verdict = classify(sizes, values, kind)
    return ConditionReport(name, list(sizes), list(values), slope, icpt, r2, verdict, kind, notes)


def _cube(model, n):
    return [float(n)] * model.d


def delta_ratio(model, sizes=None):
    """int C^2 w / int C w over cube windows [0, n]^d; must decay to 0."""
    sizes = default_probes() if sizes is None else list(sizes)
    vals = []
    for n in sizes:
        num, _ = _model_box_integral(model, _cube(model, n), power=2)
        den, _ = _model_box_integral(model, _cube(model, n), power=1)
        if abs(den) < 1e-12:
            raise DegenerateModelError(f"denominator {den:.3g} vanishes at n = {n}")
        vals.append(num / den)
    return _report("delta_ratio", sizes, vals, "decay")


def check_condcor2(model, r_sequences=None, delta=0.5):
    """prod_l r_l^(delta-1) int_{|t_l| <= r_l} C(t) dt; must diverge.

    r_sequences is a list of per-axis extents, one entry per probe.
    """
    if r_sequences is None:
        r_sequences = [[n] * model.d for n in default_probes()]
    sizes, vals = [], []
    for rs in r_sequences:
        rs = [float(r) for r in np.broadcast_to(np.atleast_1d(rs), (model.d,))]
        integral, _ = _model_box_integral(model, rs, power=1, weight="flat")
        vals.append(float(np.prod(np.power(rs, delta - 1.0))) * integral)
        sizes.append(float(np.prod(rs)) ** (1.0 / model.d))
    return _report("condcor2", sizes, vals, "divergence", delta=delta)


def _temporal_margin(temporal):
    if isinstance(temporal, CovarianceModel):
        d = temporal.d

        def c(v):
            v = np.asarray(v, dtype=float)
            if v.ndim >= 1 and v.shape[-1] == 1:
                v = v[..., 0]
            t = np.zeros(v.shape + (d,))
            t[..., -1] = v
            return temporal(t)
        return c
    return lambda v: np.asarray(temporal(np.asarray(v)[..., 0] if np.ndim(v) > 1 else v), dtype=float)


def check_spatiotemporal(temporal, r_sequence=None, delta=0.25):
    """r^-delta int_0^r C~(v) dv; must diverge.

    temporal is a 1-D callable or a model whose last axis is time
    (its margin C(0, ..., 0, v) is used).
    """
    sizes = default_probes() if r_sequence is None else list(r_sequence)
    c = _temporal_margin(temporal)
    graded = isinstance(temporal, CovarianceModel) and temporal.kind == "gneiting"
    vals = []
    for r in sizes:
        # the symmetric box integral over [-r, r] is twice int_0^r
        integral, _ = box_integral(c, [r], weight="flat", graded=[graded])
        vals.append(0.5 * integral / r ** delta)
    return _report("spatiotemporal", sizes, vals, "divergence", delta=delta)


def lrd_report(model, radii=None):
    """ConditionReport for the growth of int_{[-R,R]^d} |C| in R."""
    radii = default_probes() if radii is None else list(radii)
    vals = [_model_box_integral(model, _cube(model, R), power=1, weight="flat", absolute=True)[0]
            for R in radii]
    rep = _report("lrd_classify", radii, vals, "divergence")
    rep.notes["classification"] = {"satisfied": "long_range", "violated": "short_range"}.get(
        rep.verdict, "inconclusive")
    return rep


def lrd_classify(model, radii=None):
    """"long_range", "short_range" or "inconclusive"."""
    return lrd_report(model, radii).notes["classification"]
