"""Dataset ingestion, validation, and the bundled synthetic generator."""

import io

import numpy as np
import pytest

from homedispatch.data import (
    COLUMNS,
    DataError,
    Dataset,
    default_tariffs,
    eval_window,
    ingest,
    synthetic_dataset,
    write_csv,
)


def small_dataset(n_days=3) -> Dataset:
    return synthetic_dataset(seed=7, n_days=n_days)


def rows_from(ds: Dataset) -> list[str]:
    buf = io.StringIO()
    write_csv(ds, buf)
    return buf.getvalue().splitlines()


def parse(lines) -> Dataset:
    return ingest(io.StringIO("\n".join(lines) + "\n"))


class TestIngest:
    def test_round_trip_is_lossless(self):
        ds = small_dataset()
        again = parse(rows_from(ds))
        assert np.array_equal(ds.timestamps, again.timestamps)
        for name in ("demand_kw", "pv_kw", "tou_imp", "tou_exp"):
            assert np.array_equal(getattr(ds, name), getattr(again, name))

    def test_header_must_match(self):
        lines = rows_from(small_dataset())
        lines[0] = lines[0].replace("pv_kw", "pv")
        with pytest.raises(DataError, match="header"):
            parse(lines)

    def test_bad_float_names_row(self):
        lines = rows_from(small_dataset())
        lines[5] = lines[5].replace(lines[5].split(",")[1], "oops", 1)
        with pytest.raises(DataError, match="row 6"):
            parse(lines)

    def test_off_hour_timestamp_rejected(self):
        lines = rows_from(small_dataset())
        lines[3] = lines[3].replace(":00:00Z", ":30:00Z")
        with pytest.raises(DataError, match="not on the hour"):
            parse(lines)

    def test_duplicate_timestamp_named(self):
        lines = rows_from(small_dataset())
        lines.insert(4, lines[4])
        with pytest.raises(DataError, match="duplicated timestamp 2023-07-01T03"):
            parse(lines)

    def test_gap_named(self):
        lines = rows_from(small_dataset())
        del lines[4]
        with pytest.raises(DataError, match="gap after 2023-07-01T02"):
            parse(lines)

    def test_negative_value_named(self):
        ds = small_dataset()
        pv = ds.pv_kw.copy()
        pv[10] = -0.5
        with pytest.raises(DataError, match="negative pv_kw at 2023-07-01T10"):
            Dataset(timestamps=ds.timestamps, demand_kw=ds.demand_kw, pv_kw=pv,
                    tou_imp=ds.tou_imp, tou_exp=ds.tou_exp)

    def test_empty_input_rejected(self):
        with pytest.raises(DataError):
            parse([",".join(COLUMNS)])


class TestDatasetAccess:
    def test_dates_only_counts_full_days(self):
        ds = small_dataset(2)
        trimmed = ds.slice_hours(np.arange(ds.n_hours - 1))
        assert len(trimmed.dates()) == 1

    def test_day_index_needs_full_day(self):
        ds = small_dataset(2)
        trimmed = ds.slice_hours(np.arange(ds.n_hours - 1))
        with pytest.raises(DataError, match="not fully present"):
            trimmed.day_index(trimmed.timestamps[-1].astype("datetime64[D]"))

    def test_day_tariffs_match_columns(self):
        ds = small_dataset(2)
        day = ds.dates()[1]
        t = ds.day_tariffs(day)
        idx = ds.day_index(day)
        assert np.array_equal(t.tou_imp, ds.tou_imp[idx])
        assert np.array_equal(t.tou_exp, ds.tou_exp[idx])


class TestSynthetic:
    def test_deterministic_per_seed(self):
        a = synthetic_dataset(seed=42, n_days=5)
        b = synthetic_dataset(seed=42, n_days=5)
        c = synthetic_dataset(seed=43, n_days=5)
        assert np.array_equal(a.pv_kw, b.pv_kw)
        assert np.array_equal(a.demand_kw, b.demand_kw)
        assert not np.array_equal(a.pv_kw, c.pv_kw)

    def test_shape_and_positivity(self):
        ds = synthetic_dataset(seed=1, n_days=4)
        assert ds.n_hours == 96
        assert (ds.pv_kw >= 0).all() and (ds.demand_kw > 0).all()
        night = ds.timestamps.astype("datetime64[h]").astype(int) % 24 == 0
        assert ds.pv_kw[night].max() == 0.0  # local midnight has no sun

    def test_tariff_profile(self):
        imp, exp = default_tariffs()
        assert imp[3] == 0.10 and imp[18] == 0.32 and imp[12] == 0.18
        assert np.all(exp == 0.06)
        assert np.all(exp < imp)

    def test_eval_window_splits_trailing_days(self):
        ds = synthetic_dataset(seed=2, n_days=40)
        hist, ev = eval_window(ds, n_eval=30)
        assert len(hist) == 10 and len(ev) == 30
        assert hist[-1] < ev[0]
        assert list(hist) + list(ev) == list(ds.dates())

    def test_eval_window_needs_history(self):
        ds = synthetic_dataset(seed=2, n_days=10)
        with pytest.raises(DataError):
            eval_window(ds, n_eval=10)
