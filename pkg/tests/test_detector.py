"""Sampler, p-value, and event-rule behavior.

Windowed MCMC is the one stochastic component of the package, so the tests
here lean on three anchors: exact log-likelihood arithmetic, the analytic
inverse-Gamma conditional, and the quadrature oracle from the synth module.
All sampled values are pinned by explicit seeds.
"""

import datetime as dt
import math

import numpy as np
import pytest

from earlywarn.detector import (
    DetectorConfig,
    Direction,
    PosteriorDraws,
    PValueSeries,
    detect_events,
    downtrend_pvalue,
    gibbs_noise_var,
    log_likelihood,
    pvalue_series,
    pvalue_series_pair,
    sample_posterior,
    uptrend_pvalue,
    window_seed,
)
from earlywarn.errors import ConfigError, DataError
from earlywarn.series import DailySeries, Window, rebase_min_one
from earlywarn.synth import (
    gen_exponential_series,
    grid_posterior_moments,
    grid_posterior_oracle,
)

CFG = DetectorConfig()
D = dt.date(2020, 3, 1)


def win(values, end=D) -> Window:
    return Window(location="t", proxy_id="w", end_date=end, values=np.asarray(values, dtype=float))


def draws_with_rates(rates) -> PosteriorDraws:
    n = len(rates)
    return PosteriorDraws(
        amplitude=np.ones(n), rate=np.asarray(rates, dtype=float), noise_var=np.ones(n)
    )


class TestLogLikelihood:
    def test_zero_residuals_unit_variance(self):
        ll = log_likelihood(win([1.0, 1.0]), amplitude=1.0, rate=0.0, noise_var=1.0)
        assert math.isclose(ll, -math.log(2.0 * math.pi), rel_tol=1e-12)

    def test_exact_exponential(self):
        ll = log_likelihood(win([1.0, math.e]), amplitude=1.0, rate=1.0, noise_var=1.0)
        assert math.isclose(ll, -math.log(2.0 * math.pi), rel_tol=1e-12)

    def test_single_unit_residual(self):
        ll = log_likelihood(win([1.0, 2.0]), amplitude=1.0, rate=0.0, noise_var=0.5)
        assert math.isclose(ll, -math.log(math.pi) - 1.0, rel_tol=1e-12)

    def test_nonpositive_variance_rejected(self):
        with pytest.raises(DataError):
            log_likelihood(win([1.0, 1.0]), amplitude=1.0, rate=0.0, noise_var=0.0)


class TestGibbsNoiseVar:
    # defaults: prior shape 4, prior scale 1

    def test_mean_zero_residuals(self):
        rng = np.random.default_rng(0)
        zeros = np.zeros(14)
        draws = np.array([gibbs_noise_var(zeros, CFG, rng) for _ in range(20000)])
        # inverse-Gamma(11, 1) mean = 1/10
        assert abs(draws.mean() - 0.1) < 0.005

    def test_mean_with_residual_mass(self):
        rng = np.random.default_rng(1)
        resid = np.full(14, math.sqrt(18.0 / 14.0))  # sum of squares 18
        draws = np.array([gibbs_noise_var(resid, CFG, rng) for _ in range(20000)])
        # inverse-Gamma(11, 10) mean = 1
        assert abs(draws.mean() - 1.0) < 0.05

    def test_seed_determinism(self):
        a = gibbs_noise_var(np.ones(5), CFG, np.random.default_rng(42))
        b = gibbs_noise_var(np.ones(5), CFG, np.random.default_rng(42))
        assert a == b

    def test_empty_residuals_rejected(self):
        with pytest.raises(DataError):
            gibbs_noise_var(np.array([]), CFG, np.random.default_rng(0))


class TestTailFractions:
    def test_uptrend_counting(self):
        assert uptrend_pvalue(draws_with_rates([-1.0, 1.0, 2.0, 3.0])) == 0.25

    def test_uptrend_boundaries(self):
        assert uptrend_pvalue(draws_with_rates([0.5, 1.0])) == 0.0
        assert uptrend_pvalue(draws_with_rates([-0.5, -1.0, 0.0])) == 1.0

    def test_downtrend_counting(self):
        assert downtrend_pvalue(draws_with_rates([-1.0, 1.0, 2.0, 3.0])) == 0.75

    def test_downtrend_boundaries(self):
        assert downtrend_pvalue(draws_with_rates([-0.5, -1.0])) == 0.0
        assert downtrend_pvalue(draws_with_rates([0.0])) == 1.0

    def test_tails_sum_to_one_without_zero_rates(self):
        d = draws_with_rates([-2.0, -0.1, 0.3, 1.0])
        assert uptrend_pvalue(d) + downtrend_pvalue(d) == 1.0

    def test_zero_rate_counts_in_both_tails(self):
        d = draws_with_rates([-1.0, 0.0, 1.0, 2.0])
        total = uptrend_pvalue(d) + downtrend_pvalue(d)
        assert total == 1.25  # 1 + fraction of exact zeros


class TestSamplePosterior:
    def test_retained_draw_count(self):
        d = sample_posterior(win(np.linspace(1, 3, 14)), CFG, seed=1)
        assert len(d) == (CFG.n_draws - CFG.burn_in) // CFG.thin == 900

    def test_bitwise_seed_determinism(self):
        w = win(np.linspace(1, 4, 14))
        seed = window_seed(CFG.seed, "t", "w", D)
        a = sample_posterior(w, CFG, seed=seed)
        b = sample_posterior(w, CFG, seed=seed)
        assert np.array_equal(a.amplitude, b.amplitude)
        assert np.array_equal(a.rate, b.rate)
        assert np.array_equal(a.noise_var, b.noise_var)

    def test_different_seeds_differ(self):
        w = win(np.linspace(1, 4, 14))
        a = sample_posterior(w, CFG, seed=1)
        b = sample_posterior(w, CFG, seed=2)
        assert not np.array_equal(a.rate, b.rate)

    def test_value_translation_leaves_draws_unchanged(self):
        # detection rebases every window, so adding a constant must not matter;
        # dyadic values keep the translation exact in floating point
        base = np.array([3.0, 5.5, 4.25, 8.0, 6.75, 9.5, 7.0, 10.25, 12.0, 11.5, 13.75, 15.0, 14.5, 16.25])
        a = sample_posterior(rebase_min_one(win(base)), CFG, seed=7)
        b = sample_posterior(rebase_min_one(win(base + 123.0)), CFG, seed=7)
        assert np.array_equal(a.rate, b.rate)
        assert np.array_equal(a.amplitude, b.amplitude)

    def test_recovers_exact_curve_parameters(self):
        s = gen_exponential_series(2.0, 0.3, noise_sd=1e-3, n_days=14, seed=3)
        w = win(s.values)
        d = sample_posterior(w, CFG, seed=window_seed(0, "unit", "clean", D))
        assert abs(d.amplitude.mean() - 2.0) / 2.0 < 0.05
        assert abs(d.rate.mean() - 0.3) / 0.3 < 0.05
        # independent quadrature evaluation of the same posterior
        amp_oracle, rate_oracle = grid_posterior_moments(w, CFG)
        assert abs(d.amplitude.mean() - amp_oracle) < 0.05
        assert abs(d.rate.mean() - rate_oracle) < 0.01

    def test_constant_window_straddles_zero(self):
        w = rebase_min_one(win(np.ones(14)))
        d = sample_posterior(w, CFG, seed=window_seed(0, "unit", "const", D))
        assert 0.2 <= uptrend_pvalue(d) <= 0.8
        assert 0.2 <= grid_posterior_oracle(w, CFG) <= 0.8

    def test_draws_respect_prior_bounds(self):
        cfg = DetectorConfig(rate_bounds=(-0.5, 0.5), amplitude_bounds=(0.5, 50.0))
        d = sample_posterior(win(np.linspace(1, 40, 14)), cfg, seed=5)
        assert d.rate.min() >= -0.5 and d.rate.max() <= 0.5
        assert d.amplitude.min() >= 0.5 and d.amplitude.max() <= 50.0

    def test_non_finite_window_rejected(self):
        vals = np.ones(14)
        vals[3] = np.nan
        with pytest.raises(DataError):
            sample_posterior(win(vals), CFG, seed=1)

    @pytest.mark.parametrize(
        "amp,rate,sd,seed",
        [(2.0, 0.2, 0.1, 5), (2.0, -0.2, 0.1, 6), (2.0, 0.02, 0.3, 7)],
    )
    def test_agrees_with_grid_oracle(self, amp, rate, sd, seed):
        s = gen_exponential_series(amp, rate, noise_sd=sd, n_days=14, seed=seed)
        w = rebase_min_one(win(s.values))
        d = sample_posterior(w, CFG, seed=window_seed(0, "unit", "w", D))
        assert abs(uptrend_pvalue(d) - grid_posterior_oracle(w, CFG)) <= 0.03

    def test_posterior_rate_mean_tracks_true_rate(self):
        means = []
        for g in (0.05, 0.15, 0.3):
            s = gen_exponential_series(2.0, g, noise_sd=0.01, n_days=14, seed=9)
            d = sample_posterior(
                rebase_min_one(win(s.values)), CFG, seed=window_seed(1, "rank", f"{g}", D)
            )
            means.append(d.rate.mean())
        assert means[0] < means[1] < means[2]


def test_window_seed_is_deterministic_and_key_sensitive():
    a = window_seed(0, "NY", "cases", D)
    b = window_seed(0, "NY", "cases", D)
    assert a.entropy == b.entropy
    assert window_seed(0, "NY", "cases", D + dt.timedelta(days=1)).entropy != a.entropy
    assert window_seed(0, "NY", "fever", D).entropy != a.entropy
    assert window_seed(1, "NY", "cases", D).entropy != a.entropy


def daily(values, start=dt.date(2020, 1, 1)) -> DailySeries:
    return DailySeries(
        location="GR", proxy_id="sig", start_date=start, values=np.asarray(values, dtype=float)
    )


class TestPValueSeries:
    def test_flat_then_growth_crosses_in_expected_band(self):
        rng = np.random.default_rng(12)
        t = np.arange(60.0)
        vals = np.where(t < 30, 1.0, np.exp(0.25 * (t - 30))) + rng.normal(0, 0.02, 60)
        pv = pvalue_series(daily(vals), Direction.UPTREND, CFG)
        offsets = [i + CFG.window_days - 1 for i, p in enumerate(pv.p) if p < 0.05]
        assert offsets, "growth was never flagged"
        assert 30 <= offsets[0] <= 39

    def test_constant_series_never_flags(self):
        pv = pvalue_series(daily(np.full(30, 7.0)), Direction.UPTREND, CFG)
        assert (pv.p >= 0.05).all()

    def test_monotone_growth_flags_first_date(self):
        s = daily(2.0 * np.exp(0.3 * np.arange(20.0)))
        pv = pvalue_series(s, Direction.UPTREND, CFG)
        events = detect_events(pv)
        assert events and events[0].event_date == pv.dates[0]

    def test_pair_shares_one_sampler_pass(self):
        s = daily(np.linspace(1, 10, 16))
        up, down = pvalue_series_pair(s, CFG)
        assert up.dates == down.dates
        # both tails from the same draws: sums are 1 + mass at exactly zero
        assert ((up.p + down.p) >= 1.0 - 1e-12).all()

    def test_series_shorter_than_window_rejected(self):
        with pytest.raises(DataError):
            pvalue_series(daily(np.ones(10)), Direction.UPTREND, CFG)

    def test_rerun_equality(self):
        s = daily(np.linspace(1, 6, 15))
        a = pvalue_series(s, Direction.UPTREND, CFG)
        b = pvalue_series(s, Direction.UPTREND, CFG)
        assert np.array_equal(a.p, b.p)


def pv_of(ps, start=dt.date(2020, 1, 1)) -> PValueSeries:
    dates = tuple(start + dt.timedelta(days=i) for i in range(len(ps)))
    return PValueSeries(
        location="GR",
        proxy_id="sig",
        direction=Direction.UPTREND,
        dates=dates,
        p=np.asarray(ps, dtype=float),
    )


class TestDetectEvents:
    def test_crossing_with_refractory_merge(self):
        pv = pv_of([0.5, 0.2, 0.04, 0.01, 0.3, 0.02])
        events = detect_events(pv, threshold=0.05, refractory_days=14)
        assert len(events) == 1
        assert events[0].event_date == pv.dates[2]
        assert events[0].p_at_event == 0.04

    def test_no_crossing(self):
        assert detect_events(pv_of([0.5, 0.05, 0.9])) == []

    def test_immediately_significant_series_fires_on_first_date(self):
        events = detect_events(pv_of([0.01, 0.02, 0.9]))
        assert [e.event_date for e in events] == [dt.date(2020, 1, 1)]

    def test_refractory_boundary(self):
        # second crossing 14 days after the first is merged; 15 days is not
        merged = [0.01] + [0.5] * 13 + [0.01]
        assert len(detect_events(pv_of(merged))) == 1
        separate = [0.01] + [0.5] * 14 + [0.01]
        assert len(detect_events(pv_of(separate))) == 2

    def test_events_carry_series_identity(self):
        ev = detect_events(pv_of([0.5, 0.01]))[0]
        assert (ev.location, ev.proxy_id, ev.direction) == ("GR", "sig", Direction.UPTREND)


def test_config_validation():
    with pytest.raises(ConfigError):
        DetectorConfig(burn_in=5000, n_draws=5000)
    with pytest.raises(ConfigError):
        DetectorConfig(thin=0)
    with pytest.raises(ConfigError):
        DetectorConfig(threshold=1.5)
    with pytest.raises(ConfigError):
        DetectorConfig(window_days=1)
