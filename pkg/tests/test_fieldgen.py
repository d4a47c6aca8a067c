import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from excursionlab.errors import DimensionError, ModelError, ResourceError
from excursionlab.fieldgen import (CirculantEmbedding, GridSpec, draw_volatility, read_sample_dump,
                                   rng_for, simulate_fgn, simulate_nonstationary,
                                   simulate_random_volatility, simulate_stationary,
                                   write_sample_dump)
from excursionlab.models import CovarianceModel, rho_alpha

POWER = CovarianceModel("power_law_iso", {"eta": 0.4, "d": 1})
EXPO = CovarianceModel("exponential", {"theta": 1.0})


def pool(model, grid, reps, seed=5, stream=0):
    emb = CirculantEmbedding(model, grid)
    return np.concatenate([ys for _, ys in emb.iter_batches(seed, reps, stream)])


# ---- grids -----------------------------------------------------------------

def test_grid_shape_and_volume():
    g = GridSpec([10.0, 4.0], [0.5, 1.0])
    assert g.shape == (20, 4)
    assert g.size == 80
    assert g.volume == pytest.approx(40.0)
    assert g.points().shape == (80, 2)


def test_grid_rejections():
    with pytest.raises(ValueError):
        GridSpec([1.0], [1.0])
    with pytest.raises(ValueError):
        GridSpec([-4.0])
    with pytest.raises(DimensionError):
        GridSpec([4.0] * 4)
    with pytest.raises(ResourceError):
        GridSpec([1e4, 1e4], memory_cap=2 ** 20)


def test_embedding_memory_cap():
    g = GridSpec([3000.0], memory_cap=4096)
    with pytest.raises(ResourceError):
        CirculantEmbedding(POWER, g)


# ---- determinism -------------------------------------------------------------

def test_same_seed_bitwise_identical():
    g = GridSpec([64.0, 32.0])
    m = CovarianceModel("power_law_iso", {"eta": 0.7, "d": 2})
    a = simulate_stationary(m, g, seed=42, replicate=3)
    b = simulate_stationary(m, g, seed=42, replicate=3)
    c = simulate_stationary(m, g, seed=42, replicate=4)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_replicate_independent_of_batching_and_threads():
    g = GridSpec([256.0])
    emb = CirculantEmbedding(POWER, g)
    full = emb.batch(9, range(10), workers=1)
    single = np.stack([emb.batch(9, [r], workers=2)[0] for r in range(10)])
    assert np.array_equal(full, single)


@given(st.integers(0, 2 ** 32), st.integers(0, 50), st.integers(0, 1000))
@settings(max_examples=30)
def test_rng_keys_reproduce(seed, stream, rep):
    assert rng_for(seed, stream, rep).random() == rng_for(seed, stream, rep).random()


# ---- distributional checks -------------------------------------------------------

def test_power_law_unit_variance_at_origin():
    ys = pool(POWER, GridSpec([4096.0]), 10000)
    assert np.var(ys[:, 0]) == pytest.approx(1.0, abs=0.05)


def test_exponential_lag_one_covariance():
    ys = pool(EXPO, GridSpec([128.0]), 10000)
    assert np.mean(ys[:, 10] * ys[:, 11]) == pytest.approx(math.exp(-1), abs=0.05)


@pytest.mark.parametrize("H, target", [(0.5, 0.0), (0.75, (2 ** 1.5 - 2) / 2)])
def test_fgn_lag_one(H, target):
    ys = np.stack([simulate_fgn([H], GridSpec([64.0]), 1, r).values for r in range(4000)])
    assert np.mean(ys[:, 20] * ys[:, 21]) == pytest.approx(target, abs=0.05)


def test_fgn_two_axes_is_separable():
    m = CovarianceModel("fgn_product", {"H": [0.7, 0.6]})
    ys = pool(m, GridSpec([16.0, 16.0]), 10000)
    emp = np.mean(ys[:, 5, 5] * ys[:, 6, 6])
    ref = 0.25 * rho_alpha(0.7, 1.0) * rho_alpha(0.6, 1.0)
    assert emp == pytest.approx(ref, abs=0.05)


@pytest.mark.parametrize("model, grid", [
    (POWER, GridSpec([512.0])),
    (CovarianceModel("gneiting", {"alpha": 0.25, "gamma": 0.5, "d_space": 1}), GridSpec([16.0, 16.0])),
    (CovarianceModel("example29_3d", {"alpha": 0.4}), GridSpec([8.0, 8.0, 8.0])),
], ids=["power", "gneiting", "three_axis"])
def test_marginal_and_covariance_fidelity(model, grid):
    ys = pool(model, grid, 10000)
    flat = ys.reshape(len(ys), -1)
    pooled = flat[np.arange(len(ys)), np.arange(len(ys)) % flat.shape[1]]
    assert stats.kstest(pooled, "norm").pvalue > 1e-3
    pts = grid.points()
    for j in (1, 3, 7):
        lag = pts[j] - pts[0]
        prod = flat[:, 0] * flat[:, j]
        se = prod.std() / math.sqrt(len(prod))
        assert abs(prod.mean() - float(model(lag))) < 3 * se


def test_negative_embedding_is_clipped_and_flagged():
    # a smooth kernel sampled finely on a short window embeds with negative eigenvalues
    emb = CirculantEmbedding(POWER, GridSpec([2.0], [0.01]), max_doublings=0)
    assert emb.approximate
    assert np.all(emb.sqrt_spec >= 0)


# ---- dense backend ---------------------------------------------------------------

def test_nonstationary_delta_covariance():
    delta = lambda t, s: np.all(t == s, axis=-1).astype(float)
    vals = simulate_nonstationary(delta, np.arange(3.0), 2, replicates=10000).values
    c = np.corrcoef(vals.T)
    assert np.max(np.abs(c - np.eye(3))) < 0.1


def test_nonstationary_constant_covariance():
    one = lambda t, s: np.ones(np.broadcast_shapes(t.shape, s.shape)[:-1])
    out = simulate_nonstationary(one, np.arange(5.0), 3, replicates=20)
    v = out.values
    assert np.max(np.abs(v - v[:, :1])) < 1e-10


def test_nonstationary_matches_circulant_backend():
    rho = lambda t, s: POWER(t - s)
    dense = simulate_nonstationary(rho, np.arange(64.0), 7, replicates=10000).values[:, 0]
    circ = pool(POWER, GridSpec([64.0]), 10000, seed=8)[:, 0]
    assert stats.ks_2samp(dense, circ).statistic <= 0.02


def test_nonstationary_rejects_indefinite():
    bad = lambda t, s: np.where(np.all(t == s, axis=-1), 1.0, -0.9)
    with pytest.raises(ModelError):
        simulate_nonstationary(bad, np.arange(4.0), 0)


def test_nonstationary_point_limit():
    with pytest.raises(ResourceError):
        simulate_nonstationary(lambda t, s: POWER(t - s), np.arange(10.0), 0, max_points=5)


# ---- random volatility ---------------------------------------------------------------

def test_constant_volatility_one_is_base_field():
    g = GridSpec([64.0])
    a = simulate_random_volatility(POWER, {"kind": "constant", "c": 1.0}, g, 3, 2)
    b = simulate_stationary(POWER, g, 3, 2)
    assert np.array_equal(a.values, b.values)


def test_constant_volatility_two_excursion_probability():
    ys = 2.0 * pool(EXPO, GridSpec([64.0]), 4000)
    u = 1.0
    p = np.mean(ys >= u)
    # pooled over correlated nodes; exponential mixing keeps the error small
    assert p == pytest.approx(stats.norm.sf(u / 2), abs=0.01)


def test_levy_volatility_positive_and_finite():
    xi = np.array([draw_volatility({"kind": "levy_sqrt", "u": 1.0}, 4, r) for r in range(100000)])
    assert np.all(np.isfinite(xi)) and np.all(xi > 0)
    # xi^2 ~ Levy(0, 1): P(xi^2 <= x) = 2 Psi(1/sqrt(x))
    assert stats.kstest(xi ** 2, stats.levy(scale=1.0).cdf).pvalue > 1e-3


# ---- dump format ------------------------------------------------------------------

def test_dump_round_trip(tmp_path):
    s = simulate_stationary(CovarianceModel("power_law_iso", {"eta": 0.7, "d": 2}),
                            GridSpec([12.0, 6.0], [1.0, 0.5]), 3)
    path = tmp_path / "field.lrdf"
    write_sample_dump(s, path)
    raw = path.read_bytes()
    assert raw[:4] == b"LRDF"
    assert len(raw) == 44 + 8 * s.values.size
    back = read_sample_dump(path)
    assert np.array_equal(back.values, s.values)
    assert back.grid.shape == s.grid.shape
    assert back.seed == 3
