import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from homedispatch.config import PlantConfig
from homedispatch.probability import (
    RangeSpec,
    combine,
    forecast_matrix,
    historical_demand_matrix,
    historical_pv_matrix,
    hourly_stats,
    normalized_pv_stats,
    truncated_gaussian_column,
)
from homedispatch.solar import GeoLocation, build_envelope

LONDON = GeoLocation(51.5, -0.1)


def _hourly_range(start, days):
    return np.datetime64(start, "h") + np.arange(days * 24)


# ---------------------------------------------------------------- hourly_stats


def test_hourly_stats_hand_case():
    ts = _hourly_range("2023-01-01", 2)
    x = np.zeros(48)
    x[7] = 1.0
    x[31] = 3.0  # hour 7 of day 2
    st = hourly_stats(ts, x)
    assert st.mean[7] == pytest.approx(2.0)
    assert st.sigma[7] == pytest.approx(np.sqrt(2.0))


def test_hourly_stats_constant_series_floor():
    ts = _hourly_range("2023-01-01", 3)
    st = hourly_stats(ts, np.ones(72), sigma_floor=0.05)
    assert np.allclose(st.mean, 1.0)
    assert np.allclose(st.sigma, 0.05)


def test_hourly_stats_insufficient_data():
    ts = _hourly_range("2023-01-01", 1)
    with pytest.raises(ValueError):
        hourly_stats(ts, np.ones(24))


# ------------------------------------------------------------- forecast matrix


def test_truncated_gaussian_bin_value():
    rng = RangeSpec(0.0, 5.0, 100)
    col = truncated_gaussian_column(2.5, 0.5, rng)
    # bin [2.50, 2.55): mass Phi(0.1) - Phi(0) up to truncation renormalization
    k = rng.bin_of(2.51)
    raw = norm.cdf(0.1) - norm.cdf(0.0)
    total = norm.cdf((5.0 - 2.5) / 0.5) - norm.cdf((0.0 - 2.5) / 0.5)
    assert col[k] == pytest.approx(raw / total, abs=1e-12)
    assert col[k] == pytest.approx(0.0398, abs=2e-4)


def test_truncated_gaussian_matches_numerical_integration():
    rng = RangeSpec(0.0, 5.0, 100)
    edges = rng.edges()
    for mean, sigma in [(2.5, 0.5), (0.3, 0.2), (4.9, 1.0), (2.0, 0.05)]:
        col = truncated_gaussian_column(mean, sigma, rng)
        sd = max(sigma, rng.width)
        total = quad(lambda x: norm.pdf(x, mean, sd), rng.lo, rng.hi, limit=200)[0]
        for k in range(rng.bins):
            ref = quad(lambda x: norm.pdf(x, mean, sd), edges[k], edges[k + 1])[0] / total
            assert abs(col[k] - ref) < 1e-6


def test_forecast_matrix_columns_sum_to_one():
    rng = RangeSpec(0.0, 5.0, 100)
    ts = _hourly_range("2023-01-01", 5)
    st = hourly_stats(ts, np.abs(np.sin(np.arange(120))) * 2)
    f = forecast_matrix(np.linspace(0, 5, 24), st, rng, "demand")
    assert np.allclose(f.values.sum(axis=0), 1.0, atol=1e-9)
    assert f.kind == "forecast"


def test_forecast_matrix_point_mass_limit():
    # sigma at floor, mean on a bin center: >= 99% of mass within +-3 bins
    rng = RangeSpec(0.0, 5.0, 100)
    mean = rng.midpoints()[40]
    col = truncated_gaussian_column(mean, 0.0, rng)
    assert col[37:44].sum() >= 0.99


def test_forecast_values_clamp_into_range():
    rng = RangeSpec(0.0, 5.0, 100)
    ts = _hourly_range("2023-01-01", 5)
    st = hourly_stats(ts, np.ones(120), sigma_floor=rng.width)
    f = forecast_matrix(np.full(24, 99.0), st, rng, "demand")
    # clamped mean 5.0: mass concentrated at the top of the range
    assert f.values[-1, :].sum() > 0


# ----------------------------------------------------------- historical demand


def test_demand_matrix_point_mass_at_zero():
    rng = RangeSpec(0.0, 5.0, 100)
    ts = _hourly_range("2023-01-01", 4)
    m = historical_demand_matrix(ts, np.zeros(96), rng)
    assert np.allclose(m.values[0], 1.0)
    assert np.allclose(m.values[1:], 0.0)


def test_demand_matrix_hand_count():
    rng = RangeSpec(0.0, 5.0, 100)
    ts = _hourly_range("2023-01-01", 3)
    x = np.zeros(72)
    x[9], x[33], x[57] = 0.2, 0.2, 4.9  # hour 9 on three days
    m = historical_demand_matrix(ts, x, rng)
    assert m.values[rng.bin_of(0.2), 9] == pytest.approx(2 / 3)
    assert m.values[rng.bin_of(4.9), 9] == pytest.approx(1 / 3)


def test_demand_matrix_uniform_column():
    rng = RangeSpec(0.0, 1.0, 10)
    days = 10
    ts = _hourly_range("2023-01-01", days)
    x = np.zeros(days * 24)
    for d in range(days):
        x[d * 24 + 9] = (d + 0.5) / 10  # one sample per bin at hour 9
    m = historical_demand_matrix(ts, x, rng)
    assert np.allclose(m.values[:, 9], 0.1)


# --------------------------------------------------------------- historical pv


def _envelope_fixture(days=90):
    plant = PlantConfig()
    ts = _hourly_range("2023-07-01", days)
    from homedispatch.solar import clear_sky_power, day_of_year_index

    doy = day_of_year_index(ts)
    hours = (ts - ts.astype("datetime64[D]")).astype(int)
    clear = np.array([clear_sky_power(LONDON, plant, d, h) for d, h in zip(doy, hours)])
    return ts, clear


def test_pv_matrix_class_formula():
    # p_min=1, p_max=5, x=3, R=100 -> class 50
    rng = RangeSpec(0.0, 1.0, 100)
    cls = np.floor(100 * (3.0 - 1.0) / (5.0 - 1.0))
    assert cls == 50
    assert rng.bin_of((3.0 - 1.0) / (5.0 - 1.0)) == 50


def test_pv_matrix_boundary_classes():
    ts, clear = _envelope_fixture()
    plant = PlantConfig()
    env = build_envelope(ts, 0.5 * clear, LONDON, plant)
    # samples exactly at p_max clamp into the top class
    m_hi = historical_pv_matrix(ts, clear, env, 100)
    day_cols = env.p_max[182] > 1e-6  # July 1st daylight hours
    assert np.allclose(m_hi.values[99, day_cols], 1.0)
    # samples exactly at p_min land in class 0 (handmade envelope)
    from homedispatch.solar import PvEnvelope

    p_max = np.zeros((367, 24))
    p_min = np.zeros((367, 24))
    p_max[:, 12] = 5.0
    p_min[:, 12] = 1.0
    env2 = PvEnvelope(p_max=p_max, p_min=p_min)
    ts2 = _hourly_range("2023-07-01", 3)
    pv2 = np.zeros(72)
    pv2[12::24] = 1.0  # noon samples at p_min
    m_lo = historical_pv_matrix(ts2, pv2, env2, 100)
    assert m_lo.values[0, 12] == 1.0


def test_pv_matrix_night_columns_are_point_mass():
    ts, clear = _envelope_fixture()
    env = build_envelope(ts, clear * 0.7, LONDON, PlantConfig())
    m = historical_pv_matrix(ts, clear * 0.7, env, 100)
    assert np.allclose(m.values.sum(axis=0), 1.0, atol=1e-9)
    assert m.values[0, 0] == 1.0  # midnight column


def test_pv_matrix_scale_invariance():
    # rescaling history and envelope together leaves classes unchanged
    ts, clear = _envelope_fixture()
    plant = PlantConfig()
    rng = np.random.default_rng(3)
    pv = clear * rng.uniform(0.2, 0.95, size=len(ts))
    env1 = build_envelope(ts, pv, LONDON, plant)
    m1 = historical_pv_matrix(ts, pv, env1, 100)
    c = 0.37
    env2_pmax = env1.p_max * c
    env2_pmin = env1.p_min * c
    from homedispatch.solar import PvEnvelope

    env2 = PvEnvelope(p_max=env2_pmax, p_min=env2_pmin)
    m2 = historical_pv_matrix(ts, pv * c, env2, 100)
    assert np.allclose(m1.values, m2.values)


def test_normalized_pv_stats_floor_and_night():
    ts, clear = _envelope_fixture()
    env = build_envelope(ts, clear * 0.6, LONDON, PlantConfig())
    st = normalized_pv_stats(ts, clear * 0.6, env, 100)
    assert np.all(st.sigma >= 1.0 / 100 - 1e-15)
    assert st.mean[0] == 0.0  # no samples at midnight


# -------------------------------------------------------------------- combine


def test_combine_idempotent_and_weights():
    rng = RangeSpec(0.0, 5.0, 100)
    ts = _hourly_range("2023-01-01", 4)
    g = np.random.default_rng(0).uniform(0, 5, size=96)
    m = historical_demand_matrix(ts, g, rng)
    st = hourly_stats(ts, g)
    f = forecast_matrix(np.linspace(0.2, 4.8, 24), st, rng, "demand")
    same = combine(m, m, 0.5)
    assert np.allclose(same.values, m.values)
    only_f = combine(f, m, 1.0)
    assert np.array_equal(only_f.values, f.values)
    blend = combine(f, m, 0.5)
    assert np.allclose(blend.values.sum(axis=0), 1.0, atol=1e-9)
    assert blend.kind == "total"


def test_combine_shape_mismatch():
    rng1 = RangeSpec(0.0, 5.0, 100)
    rng2 = RangeSpec(0.0, 4.0, 100)
    ts = _hourly_range("2023-01-01", 4)
    x = np.random.default_rng(1).uniform(0, 3.9, size=96)
    m1 = historical_demand_matrix(ts, x, rng1)
    m2 = historical_demand_matrix(ts, x, rng2)
    with pytest.raises(ValueError):
        combine(m1, m2, 0.5)
