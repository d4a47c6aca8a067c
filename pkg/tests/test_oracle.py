import math

import numpy as np
import pytest
from scipy import stats

from excursionlab.errors import PreconditionError, ResolutionError, TooFewSamplesError
from excursionlab.limit_lab import (HermiteOracle, ks_critical, ks_distance, moments,
                                    sample_hermite_oracle)
from excursionlab.limit_lab.oracle import (axis_cells, ball_volume, kernel_ball, kernel_box,
                                           kernel_box_1d, real_transform)
from excursionlab.models import SpectralDensity

ONE_D = SpectralDensity("anisotropic_product", {"gamma": [0.2]})


# ---- window kernels -------------------------------------------------------------

def test_box_kernel_at_origin_is_volume():
    assert kernel_box(np.zeros((1, 3)))[0] == pytest.approx(1.0)


@pytest.mark.parametrize("x", [1e-9, 1e-3, 0.7, 5.0, -12.0])
def test_box_kernel_1d_matches_integral(x):
    # int_0^1 e^{ixs} ds by quadrature of the real and imaginary parts
    from scipy.integrate import quad
    re, _ = quad(lambda s: math.cos(x * s), 0, 1)
    im, _ = quad(lambda s: math.sin(x * s), 0, 1)
    val = kernel_box_1d(np.array([x]))[0]
    assert val.real == pytest.approx(re, abs=1e-12)
    assert val.imag == pytest.approx(im, abs=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_ball_kernel_origin_and_continuity(d):
    assert kernel_ball(np.zeros((1, d)))[0].real == pytest.approx(ball_volume(d))
    near = np.zeros((2, d))
    near[0, 0], near[1, 0] = 0.999e-6, 1.001e-6
    a, b = kernel_ball(near).real
    assert a == pytest.approx(b, rel=1e-9)


def test_ball_kernel_in_one_dimension_is_segment_transform():
    # the unit ball in d = 1 is [-1, 1], whose transform is 2 sin(x)/x
    x = np.array([[0.3], [2.0], [7.5]])
    np.testing.assert_allclose(kernel_ball(x).real, 2 * np.sin(x[:, 0]) / x[:, 0], rtol=1e-10)


# ---- grids --------------------------------------------------------------------

def test_axis_cells_are_symmetric_and_tile():
    y, w, lo, hi = axis_cells(10, 1e-3, 1e2)
    np.testing.assert_allclose(y, -y[::-1])
    np.testing.assert_allclose(w, hi - lo)
    assert np.sum(w) == pytest.approx(2e2)


def test_real_transform_gives_hermitian_measure():
    _, w, _, _ = axis_cells(5, 1e-2, 10.0)
    T = real_transform(w)
    xi = np.random.default_rng(0).standard_normal(len(w))
    M = T @ xi
    np.testing.assert_allclose(M, np.conj(M[::-1]), atol=1e-14)
    # E|M_j|^2 = w_j
    np.testing.assert_allclose(np.sum(np.abs(T) ** 2, axis=1), w, rtol=1e-12)


# ---- the oracle -------------------------------------------------------------------

def test_non_integrable_kernel_rejected():
    with pytest.raises(PreconditionError):
        HermiteOracle(2, SpectralDensity("anisotropic_product", {"gamma": [0.6]}))
    with pytest.raises(PreconditionError):
        HermiteOracle(4, ONE_D)


def test_coarse_grid_raises_resolution_error():
    with pytest.raises(ResolutionError):
        HermiteOracle(2, ONE_D, per_decade=2, y_max=100.0)


def test_default_grid_passes_range_and_resolution_rules():
    o = HermiteOracle(2, ONE_D)
    assert o.discrepancy <= 0.05
    assert o.range_info["c"] >= 0.99 * o.range_info["c_next_decade"]


def test_cumulants_are_unit_variance():
    cum = HermiteOracle(2, ONE_D, per_decade=40, y_max=100.0, check_resolution=False).cumulants()
    assert cum["mean"] == 0.0
    assert cum["variance"] == pytest.approx(1.0, abs=1e-12)
    # a positively weighted chi-square sum is right skewed
    assert cum["skewness"] > 0


@pytest.mark.parametrize("gam", [0.1, 0.2])
def test_moments_stable_under_grid_doubling(gam):
    dens = SpectralDensity("anisotropic_product", {"gamma": [gam]})
    cums = [HermiteOracle(2, dens, per_decade=p, y_max=100.0, check_resolution=False).cumulants()
            for p in (50, 100)]
    for key in ("skewness", "excess_kurtosis"):
        assert abs(cums[1][key] / cums[0][key] - 1) < 0.02


def test_eigen_and_direct_draws_agree():
    kw = dict(per_decade=20, y_max=100.0, check_resolution=False)
    eig = HermiteOracle(2, ONE_D, **kw).sample(3000, seed=2)
    direct = HermiteOracle(2, ONE_D, method="direct", **kw).sample(3000, seed=3)
    assert stats.ks_2samp(eig, direct).pvalue > 1e-3


def test_direct_draws_are_real():
    o = HermiteOracle(2, ONE_D, per_decade=20, y_max=100.0, check_resolution=False, method="direct")
    _, imag = o.sample(200, return_imag=True)
    assert np.max(np.abs(imag)) < 1e-10


def test_anisotropic_two_axis_unit_variance():
    dens = SpectralDensity("anisotropic_product", {"gamma": [0.3, 0.2]})
    o = HermiteOracle(2, dens, per_decade=20, y_max=100.0)
    x = o.sample(10000, seed=1)
    assert np.var(x) == pytest.approx(1.0, abs=0.05)


def test_order_three_draws_centred_with_unit_variance():
    dens = SpectralDensity("anisotropic_product", {"gamma": [0.15]})
    o = HermiteOracle(3, dens, per_decade=6, y_max=10.0, check_resolution=False)
    x = o.sample(4000)
    # heavy tails: the sample variance has a standard error near 0.05 here
    assert abs(np.mean(x)) < 0.1
    assert np.var(x) == pytest.approx(1.0, abs=0.15)


def test_sampling_is_reproducible():
    grid = {"per_decade": 20, "y_max": 100.0, "check_resolution": False}
    a = sample_hermite_oracle(2, ONE_D, grid=grid, seed=9, size=50)
    b = sample_hermite_oracle(2, ONE_D, grid=grid, seed=9, size=50)
    assert np.array_equal(a, b)
    assert isinstance(sample_hermite_oracle(2, ONE_D, grid=grid, seed=9), float)


# ---- statistics -------------------------------------------------------------------

def test_ks_examples():
    x = np.random.default_rng(4).standard_normal(500)
    assert ks_distance(x, x)[0] == 0.0
    assert ks_distance(np.zeros(100))[0] >= 0.5
    assert ks_distance(x)[1] > 1e-3


def test_ks_too_few_samples():
    with pytest.raises(TooFewSamplesError):
        ks_distance(np.zeros(10))


def test_ks_uniform_half_reference():
    x = np.random.default_rng(1).uniform(0, 0.5, 2000)
    assert ks_distance(x, "uniform_0_half")[0] < 0.04


def test_ks_critical_value():
    assert ks_critical(2000, 0.01) == pytest.approx(1.6276 / math.sqrt(2000), rel=1e-3)


def test_moments_of_normal_draws():
    m = moments(np.random.default_rng(2).standard_normal(20000))
    assert m["mean"] == pytest.approx(0, abs=0.03)
    assert m["variance"] == pytest.approx(1, abs=0.03)
    assert abs(m["skewness"]) < 0.1 and abs(m["excess_kurtosis"]) < 0.15
