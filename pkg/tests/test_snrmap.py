"""CDF mapping of instantaneous SNR and the per-bin statistics estimator."""

import numpy as np
import pytest

from mbtcn.dsp import AudioSignal, stft
from mbtcn.snrmap import (SIGMA_FLOOR_DB, SnrGrid, XiMapStats,
                          a_posteriori_from_xi, estimate_stats,
                          instantaneous_xi_db, map_xi, unmap_xi, unmap_xi_db)

RATE = 16000


def grid(values, kind="xi_db"):
    return SnrGrid(np.atleast_2d(np.asarray(values, dtype=float)), kind)


def stats(mu, sigma, bins=1):
    return XiMapStats(np.full(bins, float(mu)), np.full(bins, float(sigma)))


def test_map_at_mean_is_half():
    out = map_xi(grid([3.0]), stats(3.0, 2.0))
    assert out.values[0, 0] == 0.5      # erf(0) = 0, exactly


def test_map_one_sigma_root_two_above():
    # z = 1 inside the erf, so 0.5*(1 + erf(1)) = 0.921350
    out = map_xi(grid([5.0 + 4.0 * np.sqrt(2.0)]), stats(5.0, 4.0))
    assert out.values[0, 0] == pytest.approx(0.9213504, abs=1e-6)


def test_map_saturates_at_clamp_floor():
    out = map_xi(grid([-60.0]), stats(0.0, 1.0))
    assert out.values[0, 0] < 1e-300


def test_unmap_center_recovers_mu():
    out_db = unmap_xi_db(grid([0.5], "xi_mapped"), stats(3.0, 2.0))
    assert out_db.values[0, 0] == 3.0
    out = unmap_xi(grid([0.5], "xi_mapped"), stats(3.0, 2.0))
    assert out.values[0, 0] == pytest.approx(1.99526, abs=1e-5)


def test_unmap_pinned_erfinv_point():
    out_db = unmap_xi_db(grid([0.9213504], "xi_mapped"), stats(0.0, 1.0))
    assert out_db.values[0, 0] == pytest.approx(1.41421, abs=1e-5)


def test_round_trip_over_five_sigma():
    rng = np.random.default_rng(0)
    mu = rng.uniform(-20, 20, size=257)
    sigma = rng.uniform(0.5, 8.0, size=257)
    st = XiMapStats(mu, sigma)
    offsets = np.linspace(-5.0, 5.0, 41)
    xi_db = mu[None, :] + offsets[:, None] * sigma[None, :]
    back = unmap_xi_db(map_xi(SnrGrid(xi_db, "xi_db"), st), st)
    assert np.abs(back.values - xi_db).max() < 1e-6


def test_map_monotone_and_in_open_interval():
    rng = np.random.default_rng(1)
    mu, sigma = 2.0, 3.0
    xi = np.sort(mu + sigma * rng.uniform(-5, 5, size=10_000))
    out = map_xi(SnrGrid(xi[:, None], "xi_db"), stats(mu, sigma)).values[:, 0]
    assert np.all(np.diff(out) > 0)
    assert out.min() > 0.0 and out.max() < 1.0


def test_map_symmetry():
    t = np.linspace(0.0, 10.0, 101)
    st = stats(1.5, 2.5)
    up = map_xi(SnrGrid((1.5 + t)[:, None], "xi_db"), st).values
    down = map_xi(SnrGrid((1.5 - t)[:, None], "xi_db"), st).values
    assert np.abs(up + down - 1.0).max() < 1e-12


def test_a_posteriori_adds_one():
    out = a_posteriori_from_xi(grid([[0.5, 2.0]], "xi_linear"))
    assert out.kind == "gamma"
    np.testing.assert_allclose(out.values, [[1.5, 3.0]])


def test_grid_validation():
    with pytest.raises(ValueError):
        SnrGrid(np.zeros((2, 2)), "bogus")
    with pytest.raises(ValueError):
        SnrGrid(np.array([[0.5, -0.1]]), "xi_linear")     # must be positive
    with pytest.raises(ValueError):
        SnrGrid(np.array([[0.5, 1.2]]), "xi_mapped")      # must stay in [0,1]
    with pytest.raises(ValueError):
        SnrGrid(np.array([[np.nan]]), "xi_db")


def test_instantaneous_xi_clamps():
    loud = AudioSignal(np.ones(512), RATE)
    quiet = AudioSignal(np.full(512, 1e-9), RATE)
    xi = instantaneous_xi_db(stft(loud), stft(quiet))
    assert xi.values.max() == 60.0
    xi = instantaneous_xi_db(stft(quiet), stft(loud))
    assert xi.values.min() == -60.0


def test_stats_constant_ratio_floors_sigma():
    sig = AudioSignal(np.random.default_rng(2).standard_normal(RATE) * 0.1, RATE)
    st = estimate_stats([(sig, sig)])
    np.testing.assert_allclose(st.mu, 0.0, atol=1e-9)
    np.testing.assert_allclose(st.sigma, SIGMA_FLOOR_DB)


def test_stats_two_point_sample():
    # two single-frame mixtures with per-bin xi of exactly 0 dB and 10 dB
    rng = np.random.default_rng(3)
    a = rng.standard_normal(256) * 0.1
    b = rng.standard_normal(256) * 0.1
    pairs = [
        (AudioSignal(a, RATE), AudioSignal(a, RATE)),
        (AudioSignal(np.sqrt(10.0) * b, RATE), AudioSignal(b, RATE)),
    ]
    st = estimate_stats(pairs)
    np.testing.assert_allclose(st.mu, 5.0, atol=1e-9)
    np.testing.assert_allclose(st.sigma, np.sqrt(50.0), atol=1e-9)


def test_stats_match_naive_pooling():
    # the streaming merge must equal a single pass over all pooled frames
    rng = np.random.default_rng(4)
    pairs, grids = [], []
    for i in range(3):
        c = AudioSignal(rng.standard_normal(4000 + 700 * i) * 0.2, RATE)
        d = AudioSignal(rng.standard_normal(4000 + 700 * i) * 0.1, RATE)
        pairs.append((c, d))
        grids.append(instantaneous_xi_db(stft(c), stft(d)).values)
    st = estimate_stats(pairs)
    pooled = np.concatenate(grids, axis=0)
    np.testing.assert_allclose(st.mu, pooled.mean(axis=0), atol=1e-9)
    np.testing.assert_allclose(st.sigma, pooled.std(axis=0, ddof=1), atol=1e-9)


def test_stats_rejects_empty():
    with pytest.raises(ValueError):
        estimate_stats([])


def test_stats_rejects_misaligned_pair():
    a = AudioSignal(np.ones(512) * 0.1, RATE)
    b = AudioSignal(np.ones(1024) * 0.1, RATE)
    with pytest.raises(ValueError):
        estimate_stats([(a, b)])
