import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from excursionlab.lrd_conditions import (R2_THRESHOLD, SLOPE_THRESHOLD, check_condcor2,
                                         check_spatiotemporal, classify, default_probes,
                                         delta_ratio, loglog_fit, lrd_classify, lrd_report)
from excursionlab.models import CovarianceModel

POWER = CovarianceModel("power_law_iso", {"eta": 0.4, "d": 1})
EXPO = CovarianceModel("exponential", {"theta": 1.0})
FGN_SHORT = CovarianceModel("fgn_product", {"H": [0.25]})
FGN_LONG = CovarianceModel("fgn_product", {"H": [0.75]})
CONST = CovarianceModel("constant", {"d": 1})
WIDE = list(np.geomspace(1e2, 1e5, 13))


def test_default_probes():
    p = default_probes()
    assert p[0] == pytest.approx(1e2) and p[-1] == pytest.approx(1e4) and len(p) == 17


@given(st.floats(-3, 3), st.floats(-5, 5))
def test_loglog_fit_recovers_power(slope, logc):
    x = np.geomspace(1, 1e3, 10)
    s, i, r2 = loglog_fit(x, np.exp(logc) * x ** slope)
    assert s == pytest.approx(slope, abs=1e-9)
    assert i == pytest.approx(logc, abs=1e-8)


@given(st.lists(st.floats(1e-3, 1e3), min_size=3, max_size=12), st.sampled_from(["decay", "divergence"]))
@settings(max_examples=60)
def test_verdict_thresholds(values, kind):
    sizes = np.geomspace(10, 1e4, len(values))
    slope, _, r2, verdict = classify(sizes, values, kind)
    if verdict == "satisfied":
        assert r2 >= R2_THRESHOLD
        assert (slope < -SLOPE_THRESHOLD) if kind == "decay" else (slope > SLOPE_THRESHOLD)


def test_delta_ratio_verdicts():
    assert delta_ratio(POWER, WIDE).verdict == "satisfied"
    assert delta_ratio(EXPO).verdict == "violated"
    assert delta_ratio(FGN_SHORT).verdict == "violated"


def test_exponential_ratio_converges_to_mass_ratio():
    rep = delta_ratio(EXPO, [1e3, 1e4])
    # int e^{-2|t|} / int e^{-|t|} = 1/2
    assert rep.values[-1] == pytest.approx(0.5, rel=1e-3)
    assert rep.verdict == "inconclusive"


def test_condcor2():
    assert check_condcor2(POWER, delta=0.3).verdict == "violated"
    assert check_condcor2(POWER, delta=0.5).verdict == "satisfied"
    assert check_condcor2(CONST, delta=0.3).verdict == "satisfied"
    for delta in (0.2, 0.5, 0.9):
        assert check_condcor2(EXPO, delta=delta).verdict == "violated"


def test_condcor2_exponent():
    rep = check_condcor2(POWER, delta=0.5)
    # n^{delta - 1} * int_{-n}^{n} (1 + t^2)^{-0.2} grows like n^{delta - eta}
    assert rep.slope == pytest.approx(0.1, abs=0.02)


def test_spatiotemporal():
    alpha = 0.2
    power = lambda v: (1 + v * v) ** (-alpha)
    assert check_spatiotemporal(power, delta=0.4).verdict == "satisfied"
    assert check_spatiotemporal(lambda v: np.exp(-v), delta=0.1).verdict == "violated"
    gn = CovarianceModel("gneiting", {"alpha": 0.25, "gamma": 0.5, "d_space": 1})
    rep = check_spatiotemporal(gn, delta=0.25)
    assert rep.verdict == "satisfied"
    # int_0^r dv / (sqrt(v) + 1) = 2 sqrt(r) - 2 log(1 + sqrt(r))
    r = np.asarray(rep.sizes)
    exact = (2 * np.sqrt(r) - 2 * np.log1p(np.sqrt(r))) / r ** 0.25
    np.testing.assert_allclose(rep.values, exact, rtol=1e-6)


def test_lrd_classify():
    assert lrd_classify(FGN_LONG) == "long_range"
    assert lrd_classify(FGN_SHORT) == "short_range"
    assert lrd_classify(EXPO) == "short_range"
    assert lrd_classify(POWER) == "long_range"


def test_short_range_positive_model_violates_delta():
    for m in (EXPO, CovarianceModel("exponential", {"theta": 5.0})):
        if lrd_classify(m) == "short_range":
            assert delta_ratio(m).verdict == "violated"


@pytest.mark.parametrize("factor", [0.5, 3.0, 10.0])
def test_verdicts_are_scale_free(factor):
    probes = [factor * p for p in default_probes()]
    assert delta_ratio(POWER, probes).verdict == delta_ratio(POWER).verdict
    assert delta_ratio(EXPO, probes).verdict == delta_ratio(EXPO).verdict
    assert lrd_classify(FGN_LONG, probes) == lrd_classify(FGN_LONG)


def test_two_probes_inconclusive():
    assert delta_ratio(POWER, [100, 1000]).verdict == "inconclusive"


def test_report_serialization():
    rep = lrd_report(FGN_LONG)
    d = rep.to_dict()
    assert d["classification"] == "long_range" and len(d["values"]) == len(d["sizes"])
    buf = io.StringIO()
    csv.writer(buf).writerows(rep.csv_rows())
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == ["n", "value"] and len(rows) == len(rep.sizes) + 1
