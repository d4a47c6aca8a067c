
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.special import binom

from excursionlab.errors import DimensionError, PoleError
from excursionlab.fieldgen import FieldSample, GridSpec
from excursionlab.models import (CovarianceModel, SpectralDensity, Subordinator, cov_eval,
                                 rho_alpha, rho_alpha_series, subordinate)

MODELS = [
    CovarianceModel("power_law_iso", {"eta": 0.4, "d": 1}),
    CovarianceModel("power_law_iso", {"eta": 0.7, "d": 2}),
    CovarianceModel("example29_3d", {"alpha": 0.4, "c": 1.0}),
    CovarianceModel("gneiting", {"alpha": 0.25, "gamma": 0.5, "d_space": 2}),
    CovarianceModel("separable", {"spatial": {"kind": "exponential", "params": {"theta": 2.0}},
                                  "temporal": {"kind": "power_law_iso", "params": {"eta": 0.3}}}),
    CovarianceModel("fgn_product", {"H": [0.75, 0.3]}),
    CovarianceModel("exponential", {"theta": 1.0, "d": 2}),
]


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_unit_variance_bounded_and_symmetric(model):
    rng = np.random.default_rng(3)
    t = rng.uniform(-20, 20, size=(500, model.d))
    c = model(t)
    assert model(np.zeros(model.d)) == pytest.approx(1.0)
    assert np.all(np.abs(c) <= 1.0 + 1e-12)
    np.testing.assert_allclose(c, model(-t), rtol=0, atol=1e-15)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_gram_matrix_is_positive_definite(model):
    rng = np.random.default_rng(11)
    pts = rng.uniform(0, 10, size=(64, model.d))
    G = model(pts[:, None, :] - pts[None, :, :])
    for jitter in (0.0, 1e-12, 1e-11, 1e-10):
        try:
            np.linalg.cholesky(G + jitter * np.eye(64))
            break
        except np.linalg.LinAlgError:
            continue
    else:
        pytest.fail("Gram matrix not positive definite within jitter 1e-10")


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_serialization_round_trip(model):
    again = CovarianceModel.from_dict(model.to_dict())
    assert again.to_dict() == model.to_dict()
    t = np.full(model.d, 0.7)
    assert again(t) == model(t)


def test_cov_eval_examples():
    fgn = CovarianceModel("fgn_product", {"H": [0.75]})
    assert cov_eval(fgn, [2.5], [2.5]) == pytest.approx(1.0)
    gn = CovarianceModel("gneiting", {"alpha": 0.5, "gamma": 0.5, "d_space": 1})
    assert cov_eval(gn, [0.0, 0.0], [0.0, 0.0]) == pytest.approx(1.0)
    e29 = CovarianceModel("example29_3d", {"alpha": 0.4})
    assert cov_eval(e29, [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]) == pytest.approx(2 ** -0.4, abs=1e-6)
    assert 2 ** -0.4 == pytest.approx(0.757858, abs=1e-6)


def test_cov_eval_dimension_mismatch():
    with pytest.raises(DimensionError):
        cov_eval(MODELS[2], [1.0, 0.0], [0.0, 0.0, 0.0])


def test_gneiting_temporal_margin():
    gn = CovarianceModel("gneiting", {"alpha": 0.25, "gamma": 0.5, "d_space": 1})
    v = np.array([0.5, 2.0, 10.0])
    t = np.stack([np.zeros_like(v), v], axis=-1)
    np.testing.assert_allclose(gn(t), 1.0 / (v ** 0.5 + 1.0))


def test_fgn_product_separates():
    m = CovarianceModel("fgn_product", {"H": [0.7, 0.6]})
    ref = 0.25 * rho_alpha(0.7, 1.0) * rho_alpha(0.6, 1.0)
    assert m([1.0, 1.0]) == pytest.approx(ref)


# ---- rho_alpha -------------------------------------------------------------------

def test_rho_alpha_examples():
    assert rho_alpha(0.3, 0.0) == 2.0
    np.testing.assert_allclose(rho_alpha(0.5, [1.0, 2.5, 7.0]), 0.0, atol=1e-12)
    assert rho_alpha(0.75, 1.0) == pytest.approx(2 ** 1.5 - 2, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.55, 0.75, 0.9])
@pytest.mark.parametrize("s", [2.0, 5.0, 10.0])
def test_rho_alpha_series(alpha, s):
    # (1 + 1/s)^{2a} + (1 - 1/s)^{2a} - 2 = 2 sum_k binom(2a, 2k) s^{-2k}
    direct = rho_alpha(alpha, s) / s ** (2 * alpha)
    k = np.arange(1, 31)
    ref = 2 * np.sum(binom(2 * alpha, 2 * k) * s ** (-2.0 * k))
    assert float(rho_alpha_series(alpha, s)) == pytest.approx(ref, rel=1e-12)
    assert direct == pytest.approx(ref, rel=1e-9 if s > 2 else 1e-7)


@given(st.floats(0.51, 0.99), st.floats(0.0, 1e3))
def test_rho_alpha_positive_above_half(alpha, s):
    assert rho_alpha(alpha, s) > 0


def test_fgn_integral_grows_only_for_long_memory():
    def mass(h, R):
        val, _ = integrate.quad(lambda v: abs(rho_alpha(h, v)), 0, R, points=[1.0], limit=500)
        return val
    long_ = [mass(0.75, R) for R in (1e2, 1e3, 1e4)]
    short = [mass(0.25, R) for R in (1e2, 1e3, 1e4)]
    # per-decade increments grow for H > 1/2 and shrink like 10^(-1/2) for H = 1/4
    assert long_[2] - long_[1] > long_[1] - long_[0] > 0
    assert short[2] - short[1] < 0.35 * (short[1] - short[0])


# ---- spectral densities ----------------------------------------------------------

def test_spectral_examples():
    assert SpectralDensity("anisotropic_product", {"gamma": [0.3]})([2.0]) == pytest.approx(2 ** -0.7)
    assert 2 ** -0.7 == pytest.approx(0.615572, abs=1e-6)
    iso = SpectralDensity("isotropic_powerlaw", {"alpha": 0.5, "d": 2})
    assert iso([0.6, 0.8]) == pytest.approx(1.0)
    two = SpectralDensity("two_param_scaling", {"H1": 1.0, "H2": 1.0, "c": 1.0})
    assert two([1.0, 1.0]) == pytest.approx(2 ** -0.5)


def test_spectral_poles():
    with pytest.raises(PoleError):
        SpectralDensity("isotropic_powerlaw", {"alpha": 0.5, "d": 2})([0.0, 0.0])
    with pytest.raises(PoleError):
        SpectralDensity("anisotropic_product", {"gamma": [0.3, 0.2]})([1.0, 0.0])


@given(st.lists(st.floats(-50, 50).filter(lambda v: abs(v) > 1e-6), min_size=2, max_size=2))
def test_spectral_nonnegative(x):
    for g in (SpectralDensity("anisotropic_product", {"gamma": [0.3, 0.2]}),
              SpectralDensity("isotropic_powerlaw", {"alpha": 0.8, "d": 2}),
              SpectralDensity("two_param_scaling", {"H1": 0.7, "H2": 0.4, "c": 2.0})):
        assert g(x) >= 0


def test_rank_admissibility():
    g = SpectralDensity("anisotropic_product", {"gamma": [0.3, 0.2]})
    assert g.admissible_for_rank(3) and not g.admissible_for_rank(4)


# ---- subordinators ---------------------------------------------------------------

def test_flags_consistent_with_kind():
    assert Subordinator("square").even and not Subordinator("square").monotone
    assert Subordinator("identity").monotone
    assert Subordinator("cubic", {"beta": 2}).monotone
    assert not Subordinator("cubic", {"beta": -1}).monotone
    assert not Subordinator("quadratic", {"a": 1}).monotone


def _sample(values):
    v = np.asarray(values, dtype=float)
    return FieldSample(GridSpec([float(len(v))], [1.0]), v, 0, None)


def test_subordinate_examples():
    s = _sample([0.0, 1.0, -2.0])
    assert np.array_equal(subordinate(Subordinator("identity"), s).values, s.values)
    assert subordinate(Subordinator("quadratic", {"a": 1}), s).values[0] == -1.0
    out = subordinate(Subordinator("cubic", {"beta": 2}), s)
    assert out.values[1] == 3.0
    assert out.meta["subordinator"]["kind"] == "cubic"


def test_signed_exp_saturates_with_warning():
    s = _sample([0.5, 80.0, -80.0])
    with pytest.warns(RuntimeWarning):
        out = subordinate(Subordinator("signed_exp", {"beta": 2.1}), s)
    assert out.meta["saturated"] == 2
    assert out.values[1] == np.finfo(float).max and out.values[2] == -np.finfo(float).max


@given(st.floats(-5, 5))
@settings(deadline=None)
def test_generalized_inverse_of_cubic(u):
    f = Subordinator("cubic", {"beta": 0.5})
    x = f.generalized_inverse(u)
    assert f(x) == pytest.approx(u, abs=1e-9)
