import datetime as dt

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from earlywarn.errors import DataError
from earlywarn.series import (
    DailySeries,
    Window,
    aggregate_weighted,
    clip_end,
    iter_windows,
    minmax_normalize,
    moving_average,
    rebase_min_one,
    shift_for_delay,
    truncate_excess,
    window_ending,
)

D0 = dt.date(2020, 1, 1)


def mk(values, delay_days=0, start=D0, location="MA", proxy_id="x") -> DailySeries:
    return DailySeries(
        location=location,
        proxy_id=proxy_id,
        start_date=start,
        values=np.asarray(values, dtype=float),
        delay_days=delay_days,
    )


class TestShiftForDelay:
    def test_shifts_dates_back_by_delay(self):
        s = mk(range(10), delay_days=3)
        out = shift_for_delay(s)
        assert out.start_date == D0 - dt.timedelta(days=3)
        assert out.delay_days == 0
        assert np.array_equal(out.values, s.values)

    def test_zero_delay_is_identity(self):
        s = mk([1.0, 2.0, 3.0])
        assert shift_for_delay(s) is s

    def test_idempotent(self):
        s = mk(range(6), delay_days=5)
        once = shift_for_delay(s)
        assert shift_for_delay(once) == once

    def test_negative_delay_rejected(self):
        with pytest.raises(DataError):
            mk([1.0], delay_days=-1)


class TestMinmaxNormalize:
    def test_basic(self):
        out = minmax_normalize(mk([2.0, 4.0, 6.0]))
        assert np.allclose(out.values, [0.0, 0.5, 1.0])

    def test_constant_series_rejected(self):
        with pytest.raises(DataError):
            minmax_normalize(mk([3.0, 3.0, 3.0]))

    @given(
        vals=st.lists(st.floats(-100, 100), min_size=2, max_size=20),
        a=st.floats(0.01, 50),
        b=st.floats(-100, 100),
    )
    def test_positive_affine_invariance(self, vals, a, b):
        arr = np.asarray(vals)
        if arr.max() - arr.min() < 1.0:  # keep cancellation well away from tolerance
            return
        base = minmax_normalize(mk(arr))
        scaled = minmax_normalize(mk(a * arr + b))
        assert np.allclose(base.values, scaled.values, atol=1e-9)


class TestMovingAverage:
    def test_trailing_mean(self):
        out = moving_average(mk([1.0, 2.0, 3.0, 4.0]), 2)
        assert np.allclose(out.values, [1.0, 1.5, 2.5, 3.5])

    def test_k1_identity(self):
        s = mk([5.0, 1.0, 2.0])
        assert np.array_equal(moving_average(s, 1).values, s.values)

    def test_expanding_start(self):
        out = moving_average(mk([0.0, 0.0, 6.0]), 3)
        assert np.allclose(out.values, [0.0, 0.0, 2.0])

    def test_keeps_length_and_dates(self):
        s = mk(range(9))
        out = moving_average(s, 4)
        assert len(out) == len(s) and out.start_date == s.start_date

    def test_window_too_large(self):
        with pytest.raises(DataError):
            moving_average(mk([1.0, 2.0]), 3)


class TestAggregateWeighted:
    def test_equal_weights_mean(self):
        out = aggregate_weighted([mk([1.0, 1.0]), mk([3.0, 3.0])], [1.0, 1.0])
        assert np.allclose(out.values, [2.0, 2.0])

    def test_weighted(self):
        out = aggregate_weighted([mk([1.0, 1.0]), mk([3.0, 3.0])], [3.0, 1.0])
        assert np.allclose(out.values, [1.5, 1.5])

    def test_singleton_identity(self):
        s = mk([4.0, 7.0])
        assert np.allclose(aggregate_weighted([s], [2.0]).values, s.values)

    @given(
        vals=st.lists(
            st.tuples(st.floats(0, 100), st.floats(0, 100), st.floats(0, 100)),
            min_size=2,
            max_size=8,
        ),
        c=st.floats(0.01, 100),
    )
    def test_weight_rescale_invariance(self, vals, c):
        series = [mk(list(v)) for v in vals]
        w = np.arange(1.0, len(series) + 1)
        a = aggregate_weighted(series, w)
        b = aggregate_weighted(series, c * w)
        assert np.allclose(a.values, b.values, atol=1e-9)

    @given(
        vals=st.lists(
            st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=2, max_size=6
        )
    )
    def test_equal_weights_is_arithmetic_mean(self, vals):
        series = [mk(list(v)) for v in vals]
        out = aggregate_weighted(series, np.ones(len(series)))
        expected = np.mean([list(v) for v in vals], axis=0)
        assert np.allclose(out.values, expected, atol=1e-9)

    def test_misaligned_dates_rejected(self):
        with pytest.raises(DataError):
            aggregate_weighted([mk([1.0, 2.0]), mk([1.0, 2.0], start=D0 + dt.timedelta(days=1))], [1, 1])


class TestTruncateExcess:
    def test_floor_at_zero(self):
        out = truncate_excess(mk([5.0, 2.0]), mk([3.0, 4.0]))
        assert np.allclose(out.values, [2.0, 0.0])

    def test_all_below_expected(self):
        out = truncate_excess(mk([1.0, 1.0]), mk([2.0, 3.0]))
        assert np.allclose(out.values, [0.0, 0.0])


class TestRebaseMinOne:
    def test_shifts_to_min_one(self):
        w = Window(location="MA", proxy_id="x", end_date=D0, values=np.array([0.0, 3.0, 7.0]))
        assert np.allclose(rebase_min_one(w).values, [1.0, 4.0, 8.0])

    def test_identity_when_min_already_one(self):
        w = Window(location="MA", proxy_id="x", end_date=D0, values=np.array([1.0, 2.0]))
        assert np.allclose(rebase_min_one(w).values, [1.0, 2.0])

    def test_constant_negative(self):
        w = Window(location="MA", proxy_id="x", end_date=D0, values=np.array([-5.0, -5.0]))
        assert np.allclose(rebase_min_one(w).values, [1.0, 1.0])

    @given(vals=st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=30))
    def test_preserves_pairwise_differences(self, vals):
        w = Window(location="MA", proxy_id="x", end_date=D0, values=np.asarray(vals))
        out = rebase_min_one(w)
        assert out.values.min() == 1.0
        assert np.allclose(np.diff(out.values), np.diff(w.values), atol=1e-6)


class TestWindows:
    def test_window_ending_takes_last_values(self):
        s = mk(range(10))
        w = window_ending(s, s.end_date, 4)
        assert w.end_date == s.end_date
        assert np.array_equal(w.values, [6.0, 7.0, 8.0, 9.0])

    def test_window_needs_enough_history(self):
        s = mk(range(5))
        with pytest.raises(DataError):
            window_ending(s, s.start_date + dt.timedelta(days=1), 4)

    def test_iter_windows_count(self):
        s = mk(range(20))
        ws = list(iter_windows(s, 14))
        assert len(ws) == 7
        assert ws[0].end_date == s.start_date + dt.timedelta(days=13)
        assert ws[-1].end_date == s.end_date

    def test_clip_end(self):
        s = mk(range(10))
        cut = clip_end(s, D0 + dt.timedelta(days=4))
        assert len(cut) == 5
        assert cut.end_date == D0 + dt.timedelta(days=4)

    def test_clip_end_beyond_range_is_identity(self):
        s = mk(range(3))
        assert clip_end(s, s.end_date + dt.timedelta(days=30)) == s
