import math

import numpy as np
import pytest

from homedispatch.config import PlantConfig
from homedispatch.solar import (
    GeoLocation,
    build_envelope,
    clear_sky_ghi,
    clear_sky_power,
    cos_zenith_day,
    pv_power_from_ghi,
    solar_position,
)

LONDON = GeoLocation(51.5, -0.1)


def test_equinox_noon_at_equator():
    pos = solar_position(GeoLocation(0.0, 0.0), 81, 12)
    assert abs(pos.declination) < 0.5
    assert pos.cos_zenith == pytest.approx(1.0, abs=1e-4)


def test_midnight_is_night():
    for lat in (-60.0, 0.0, 51.5, 60.0):
        pos = solar_position(GeoLocation(lat, 0.0), 100, 0)
        assert pos.cos_zenith < 0.0


def test_summer_solstice_noon_zenith():
    pos = solar_position(LONDON, 172, 12)
    zenith = math.degrees(math.acos(pos.cos_zenith))
    # noon zenith = lat - declination, declination close to 23.45
    assert zenith == pytest.approx(51.5 - pos.declination, abs=1e-9)
    assert zenith == pytest.approx(28.1, abs=0.2)


def test_declination_range():
    decls = [solar_position(LONDON, d, 12).declination for d in range(1, 367)]
    assert max(decls) <= 23.45 + 1e-12
    assert min(decls) >= -23.45 - 1e-12


def test_position_rejects_out_of_range():
    with pytest.raises(ValueError):
        solar_position(LONDON, 0, 12)
    with pytest.raises(ValueError):
        solar_position(LONDON, 367, 12)
    with pytest.raises(ValueError):
        solar_position(LONDON, 100, 24)
    with pytest.raises(ValueError):
        GeoLocation(91.0, 0.0)


def test_ghi_at_horizon_and_overhead():
    assert clear_sky_ghi(SolarPositionStub(0.0)) == 0.0
    assert clear_sky_ghi(SolarPositionStub(-0.3)) == 0.0
    expected = 1098.0 * math.exp(-0.057)
    assert clear_sky_ghi(SolarPositionStub(1.0)) == pytest.approx(expected, abs=1e-9)
    assert expected == pytest.approx(1037.2, abs=0.1)


def test_ghi_monotone_in_cos_zenith():
    czs = np.linspace(1e-4, 1.0, 400)
    vals = [clear_sky_ghi(SolarPositionStub(c)) for c in czs]
    assert all(b > a for a, b in zip(vals, vals[1:]))


class SolarPositionStub:
    def __init__(self, cz):
        self.cos_zenith = cz


def test_pv_power_cases():
    plant = PlantConfig()
    assert pv_power_from_ghi(0.0, plant) == 0.0
    assert pv_power_from_ghi(1000.0, plant) == pytest.approx(8.5)
    assert pv_power_from_ghi(2000.0, plant) == pytest.approx(12.0)  # inverter cap
    with pytest.raises(ValueError):
        pv_power_from_ghi(-1.0, plant)


def _hourly_range(start, days):
    t0 = np.datetime64(start, "h")
    return t0 + np.arange(days * 24)


def _clear_sky_series(ts, loc, plant):
    from homedispatch.solar import day_of_year_index

    doy = day_of_year_index(ts)
    hours = (ts - ts.astype("datetime64[D]")).astype(int)
    return np.array([clear_sky_power(loc, plant, d, h) for d, h in zip(doy, hours)])


def test_envelope_all_zero_history():
    plant = PlantConfig()
    ts = _hourly_range("2023-07-01", 70)
    env = build_envelope(ts, np.zeros(len(ts)), LONDON, plant)
    assert np.all(env.p_min == 0.0)
    assert np.all(env.p_max >= 0.0)
    # night: clear-sky power is zero whenever the sun is down
    cz = cos_zenith_day(LONDON, 200)
    for h in range(24):
        if cz[h] <= 0:
            assert env.p_max[200, h] == 0.0


def test_envelope_constant_ratio_history():
    plant = PlantConfig()
    ts = _hourly_range("2023-07-01", 90)
    clear = _clear_sky_series(ts, LONDON, plant)
    env = build_envelope(ts, 0.5 * clear, LONDON, plant)
    # interior days: window minimum of 0.5*p_max is 0.5 * (window min of p_max);
    # check at hours where p_max varies smoothly
    for d in (200, 220, 240):
        for h in (10, 12, 14):
            window = [(dd - 1) % 366 + 1 for dd in range(d - 30, d + 31)]
            covered = [dd for dd in window if 182 <= dd <= 271]
            expected = 0.5 * min(env.p_max[dd, h] for dd in covered)
            assert env.p_min[d, h] == pytest.approx(expected, rel=1e-12)


def test_envelope_ordering_invariant():
    plant = PlantConfig()
    ts = _hourly_range("2023-07-01", 75)
    rng = np.random.default_rng(7)
    clear = _clear_sky_series(ts, LONDON, plant)
    pv = clear * rng.uniform(0.1, 0.9, size=len(ts))
    env = build_envelope(ts, pv, LONDON, plant)
    assert np.all(env.p_min >= -1e-12)
    assert np.all(env.p_min <= env.p_max + 1e-12)
    assert np.all(env.p_max <= plant.p_pv_max + 1e-12)


def test_envelope_clamps_spikes(caplog):
    plant = PlantConfig()
    ts = _hourly_range("2023-07-01", 70)
    pv = np.zeros(len(ts))
    pv[12] = 50.0  # impossible spike at noon of day 1
    with caplog.at_level("WARNING"):
        env = build_envelope(ts, pv, LONDON, plant)
    assert "clamped" in caplog.text
    assert np.all(env.p_min <= env.p_max + 1e-12)


def test_envelope_periodicity():
    plant = PlantConfig()
    ts1 = _hourly_range("2023-07-01", 70)
    ts2 = _hourly_range("2024-07-01", 70)  # one year later (2024 is leap)
    env1 = build_envelope(ts1, np.zeros(len(ts1)), LONDON, plant)
    env2 = build_envelope(ts2, np.zeros(len(ts2)), LONDON, plant)
    assert np.array_equal(env1.p_max, env2.p_max)


def test_envelope_rejects_short_or_gapped_history():
    plant = PlantConfig()
    ts = _hourly_range("2023-07-01", 30)
    with pytest.raises(ValueError):
        build_envelope(ts, np.zeros(len(ts)), LONDON, plant)
    ts = _hourly_range("2023-07-01", 70)
    ts = np.delete(ts, 100)
    with pytest.raises(ValueError):
        build_envelope(ts, np.zeros(len(ts)), LONDON, plant)
