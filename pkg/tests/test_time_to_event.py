"""Lag pooling, KDE arithmetic, and the days-until-outbreak posterior."""

import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from earlywarn.detector import Direction, TrendEvent
from earlywarn.errors import DataError
from earlywarn.series import SeriesKind
from earlywarn.time_to_event import (
    LagModel,
    first_event_date,
    kde_pdf,
    pool_lags,
    posterior_time_to_event,
    scott_bandwidth,
)

AS_OF = dt.date(2020, 4, 1)


def event(state, proxy_id, day_offset, direction=Direction.UPTREND) -> TrendEvent:
    return TrendEvent(
        location=state,
        proxy_id=proxy_id,
        direction=direction,
        event_date=dt.date(2020, 3, 1) + dt.timedelta(days=day_offset),
        p_at_event=0.01,
    )


class TestScottBandwidth:
    def test_sd_two_n_32(self):
        # 32^(1/5) = 2, so the bandwidth equals sd exactly halved
        a = 2.0 * math.sqrt(31.0 / 32.0)
        samples = np.array([a] * 16 + [-a] * 16)
        assert abs(scott_bandwidth(samples) - 1.0) < 1e-12

    def test_degenerate_spread_returns_floor(self):
        assert scott_bandwidth(np.array([10.0, 10.0, 10.0])) == 0.5

    def test_sd_one_n_1024(self):
        a = math.sqrt(1023.0 / 1024.0)
        samples = np.array([a, -a] * 512)
        assert abs(scott_bandwidth(samples) - 0.25) < 1e-12

    def test_single_sample_rejected(self):
        with pytest.raises(DataError):
            scott_bandwidth(np.array([3.0]))

    def test_custom_floor(self):
        assert scott_bandwidth(np.array([5.0, 5.1]), floor=2.0) == 2.0


class TestKdePdf:
    def test_single_kernel_at_center(self):
        model = LagModel(proxy_id="a", lag_samples=np.array([0.0]), bandwidth=1.0)
        assert abs(kde_pdf(model, 0.0) - 1.0 / math.sqrt(2.0 * math.pi)) < 1e-12

    def test_two_kernel_midpoint(self):
        model = LagModel(proxy_id="a", lag_samples=np.array([0.0, 2.0]), bandwidth=1.0)
        phi1 = math.exp(-0.5) / math.sqrt(2.0 * math.pi)
        assert abs(kde_pdf(model, 1.0) - phi1) < 1e-12

    @given(x=st.floats(-20, 20), h=st.floats(0.1, 5.0))
    def test_symmetric_samples_give_symmetric_density(self, x, h):
        model = LagModel(proxy_id="a", lag_samples=np.array([-1.0, 1.0]), bandwidth=h)
        assert abs(kde_pdf(model, x) - kde_pdf(model, -x)) < 1e-12

    def test_vector_evaluation_matches_scalars(self):
        model = LagModel(proxy_id="a", lag_samples=np.array([1.0, 4.0]), bandwidth=0.8)
        xs = np.array([0.0, 2.0, 5.0])
        vec = kde_pdf(model, xs)
        assert np.allclose(vec, [kde_pdf(model, float(x)) for x in xs], atol=1e-15)


class TestPoolLags:
    def test_collects_gold_minus_proxy(self):
        by_state = {
            "AA": ([event("AA", "search", 0)], event("AA", "cases", 8)),
            "BB": ([event("BB", "search", 5)], event("BB", "cases", 15)),
            "CC": ([event("CC", "search", 3)], event("CC", "cases", 15)),
        }
        model = pool_lags(by_state, "search")
        assert sorted(model.lag_samples) == [8.0, 10.0, 12.0]

    def test_state_missing_gold_excluded(self):
        by_state = {
            "AA": ([event("AA", "search", 0)], event("AA", "cases", 8)),
            "BB": ([event("BB", "search", 5)], None),
        }
        model = pool_lags(by_state, "search")
        assert list(model.lag_samples) == [8.0]
        assert model.bandwidth == 0.5  # singleton pool falls back to the floor

    def test_exclude_state(self):
        by_state = {
            "AA": ([event("AA", "search", 0)], event("AA", "cases", 8)),
            "BB": ([event("BB", "search", 0)], event("BB", "cases", 10)),
        }
        model = pool_lags(by_state, "search", exclude_state="AA")
        assert list(model.lag_samples) == [10.0]

    def test_no_qualifying_state_rejected(self):
        with pytest.raises(DataError):
            pool_lags({"AA": ([], event("AA", "cases", 8))}, "search")

    def test_uses_first_wave_event_per_proxy(self):
        evs = [event("AA", "search", 6), event("AA", "search", 2)]
        by_state = {"AA": (evs, event("AA", "cases", 10))}
        model = pool_lags(by_state, "search")
        assert list(model.lag_samples) == [8.0]  # earliest search event wins


def test_first_event_date():
    evs = [event("AA", "x", 5), event("AA", "x", 2), event("AA", "x", 9)]
    assert first_event_date(evs) == dt.date(2020, 3, 3)
    assert first_event_date([]) is None


def model_from(samples, floor=0.5) -> LagModel:
    arr = np.asarray(samples, dtype=float)
    return LagModel(proxy_id="m", lag_samples=arr, bandwidth=scott_bandwidth(arr, floor))


class TestPosterior:
    def test_all_eventless_is_exactly_uniform(self):
        post = posterior_time_to_event({"a": None, "b": None}, {}, AS_OF)
        assert post.support.tolist() == list(range(180))
        assert np.all(np.abs(post.pmf - 1.0 / 180.0) < 1e-12)

    def test_single_expert_mode_matches_median_lag_minus_delta(self):
        models = {"a": model_from([8.0, 10.0, 12.0])}
        post = posterior_time_to_event({"a": 4}, models, AS_OF)
        assert post.mode_day() == 6

    @pytest.mark.parametrize(
        "samples,delta",
        [([8.0, 10.0, 12.0], 4), ([25.0, 30.0, 31.0, 44.0], 12), ([7.0, 7.0, 9.0], 0)],
    )
    def test_mode_equals_direct_kde_argmax(self, samples, delta):
        models = {"a": model_from(samples)}
        post = posterior_time_to_event({"a": delta}, models, AS_OF)
        y = np.arange(180)
        direct = kde_pdf(models["a"], y + float(delta))
        assert post.mode_day() == int(np.argmax(direct))
        # normalized posterior is the smoothed expert, scale aside
        rescaled = post.pmf / post.pmf.sum() * (direct + 1e-6).sum()
        assert np.allclose(rescaled, direct + 1e-6, atol=1e-12)

    def test_two_consistent_experts_tighten_the_posterior(self):
        one = posterior_time_to_event({"a": 4}, {"a": model_from([8.0, 10.0, 12.0])}, AS_OF)
        other = posterior_time_to_event({"b": 2}, {"b": model_from([6.0, 8.0, 10.0])}, AS_OF)
        both = posterior_time_to_event(
            {"a": 4, "b": 2},
            {"a": model_from([8.0, 10.0, 12.0]), "b": model_from([6.0, 8.0, 10.0])},
            AS_OF,
        )

        def variance(post):
            mean = float(post.support @ post.pmf)
            return float(((post.support - mean) ** 2) @ post.pmf)

        assert variance(both) <= variance(one)
        assert variance(both) <= variance(other)

    def test_later_as_of_shifts_mode_down_one(self):
        models = {"a": model_from([20.0, 22.0, 24.0])}
        modes = [
            posterior_time_to_event({"a": delta}, models, AS_OF).mode_day()
            for delta in range(3, 9)
        ]
        assert modes == [19, 18, 17, 16, 15, 14]

    def test_mode_clips_at_zero(self):
        models = {"a": model_from([3.0, 5.0, 7.0])}
        post = posterior_time_to_event({"a": 30}, models, AS_OF)
        assert post.mode_day() == 0

    def test_mobility_ignored_for_uptrend_bitwise(self):
        kinds = {"a": SeriesKind.PROXY, "mob": SeriesKind.MOBILITY}
        models = {"a": model_from([8.0, 10.0, 12.0]), "mob": model_from([1.0, 2.0, 3.0])}
        without = posterior_time_to_event(
            {"a": 4}, models, AS_OF, proxy_kinds=kinds, direction=Direction.UPTREND
        )
        with_mob = posterior_time_to_event(
            {"a": 4, "mob": 1}, models, AS_OF, proxy_kinds=kinds, direction=Direction.UPTREND
        )
        assert np.array_equal(without.pmf, with_mob.pmf)

    def test_mobility_contributes_for_downtrend(self):
        kinds = {"a": SeriesKind.PROXY, "mob": SeriesKind.MOBILITY}
        models = {"a": model_from([8.0, 10.0, 12.0]), "mob": model_from([1.0, 2.0, 3.0])}
        without = posterior_time_to_event(
            {"a": 4}, models, AS_OF, proxy_kinds=kinds, direction=Direction.DOWNTREND
        )
        with_mob = posterior_time_to_event(
            {"a": 4, "mob": 1}, models, AS_OF, proxy_kinds=kinds, direction=Direction.DOWNTREND
        )
        assert not np.array_equal(without.pmf, with_mob.pmf)

    def test_expert_order_invariance(self):
        models = {"a": model_from([8.0, 10.0, 12.0]), "b": model_from([6.0, 8.0, 10.0])}
        fwd = posterior_time_to_event({"a": 4, "b": 2}, models, AS_OF)
        rev = posterior_time_to_event({"b": 2, "a": 4}, models, AS_OF)
        assert np.array_equal(fwd.pmf, rev.pmf)

    def test_unfired_proxy_is_flat_and_harmless(self):
        models = {"a": model_from([8.0, 10.0, 12.0])}
        alone = posterior_time_to_event({"a": 4}, models, AS_OF)
        with_flat = posterior_time_to_event({"a": 4, "b": None}, models, AS_OF)
        assert np.allclose(alone.pmf, with_flat.pmf, atol=1e-12)

    def test_pmf_sums_to_one(self):
        models = {"a": model_from([8.0, 10.0, 12.0])}
        post = posterior_time_to_event({"a": 170}, models, AS_OF)
        assert abs(float(post.pmf.sum()) - 1.0) <= 1e-9
        assert post.pmf.min() >= 0.0

    def test_negative_delta_rejected(self):
        with pytest.raises(DataError):
            posterior_time_to_event({"a": -1}, {"a": model_from([8.0, 10.0])}, AS_OF)

    def test_fired_proxy_without_model_rejected(self):
        with pytest.raises(DataError):
            posterior_time_to_event({"a": 4}, {}, AS_OF)

    def test_only_mobility_under_uptrend_rejected(self):
        kinds = {"mob": SeriesKind.MOBILITY}
        with pytest.raises(DataError):
            posterior_time_to_event(
                {"mob": 3},
                {"mob": model_from([1.0, 2.0])},
                AS_OF,
                proxy_kinds=kinds,
                direction=Direction.UPTREND,
            )
