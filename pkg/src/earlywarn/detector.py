"""Windowed Bayesian detection of exponential growth and decay.

Each trailing 14-day window is modeled as ``y(t) = A * exp(r * t) + noise``
with Gaussian noise of unknown variance. A Metropolis-within-Gibbs sampler
draws from the joint posterior of (amplitude A, daily rate r, noise variance);
the uptrend p-value for a window is the fraction of retained draws with
r <= 0, so small values mean confident growth. Repeating the procedure day by
day yields a p-value series, and threshold down-crossings become trend events.
"""

from __future__ import annotations

import datetime as dt
import enum
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .series import DailySeries, Window, iter_windows, rebase_min_one


class Direction(str, enum.Enum):
    UPTREND = "uptrend"
    DOWNTREND = "downtrend"


# random-walk covariance multiplier after burn-in shape estimation
_PROPOSAL_FACTOR = 2.38 / math.sqrt(2.0)


@dataclass(frozen=True)
class DetectorConfig:
    """Sampler and event-rule settings.

    ``n_draws`` counts total MCMC iterations; the first ``burn_in`` are
    discarded and every ``thin``-th of the rest is retained. The noise-variance
    prior is inverse-Gamma with the given shape and scale. Rate is per day.
    """

    window_days: int = 14
    n_draws: int = 5000
    burn_in: int = 500
    thin: int = 5
    noise_prior_shape: float = 4.0
    noise_prior_scale: float = 1.0
    rate_bounds: tuple[float, float] = (-2.0, 2.0)
    amplitude_bounds: tuple[float, float] = (1e-6, 1e6)
    threshold: float = 0.05
    refractory_days: int = 14
    seed: int = 0

    def __post_init__(self):
        if self.window_days < 2:
            raise ConfigError("window_days must be >= 2")
        if not 0 <= self.burn_in < self.n_draws:
            raise ConfigError("burn_in must satisfy 0 <= burn_in < n_draws")
        if self.thin < 1:
            raise ConfigError("thin must be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError("threshold must lie in (0, 1)")
        if self.noise_prior_shape <= 0 or self.noise_prior_scale <= 0:
            raise ConfigError("noise prior shape and scale must be positive")
        lo_r, hi_r = self.rate_bounds
        lo_a, hi_a = self.amplitude_bounds
        if not lo_r < hi_r:
            raise ConfigError("rate_bounds interval is empty")
        if not 0 < lo_a < hi_a:
            raise ConfigError("amplitude_bounds must be a positive, non-empty interval")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")

    @property
    def n_retained(self) -> int:
        return (self.n_draws - self.burn_in) // self.thin


@dataclass(frozen=True)
class PosteriorDraws:
    """Retained samples of (amplitude, rate, noise variance) for one window."""

    amplitude: np.ndarray
    rate: np.ndarray
    noise_var: np.ndarray

    def __post_init__(self):
        n = self.amplitude.size
        if self.rate.size != n or self.noise_var.size != n:
            raise DataError("posterior draw vectors must have equal length")
        for name in ("amplitude", "rate", "noise_var"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.amplitude.size


@dataclass(frozen=True)
class PValueSeries:
    location: str
    proxy_id: str
    direction: Direction
    dates: tuple[dt.date, ...]
    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.p, dtype=float)
        if arr.shape != (len(self.dates),):
            raise DataError("p-value series: dates and p lengths differ")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise DataError("p-values must lie in [0, 1]")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise DataError("p-value series dates must be strictly increasing")
        arr.flags.writeable = False
        object.__setattr__(self, "p", arr)
        object.__setattr__(self, "dates", tuple(self.dates))

    def __len__(self) -> int:
        return self.p.size


@dataclass(frozen=True)
class TrendEvent:
    location: str
    proxy_id: str
    direction: Direction
    event_date: dt.date
    p_at_event: float


def log_likelihood(window: Window, amplitude: float, rate: float, noise_var: float) -> float:
    """Gaussian log-likelihood of the window under an exact exponential curve.

    Time is indexed from the window start, so the amplitude is the expected
    value on the window's first day.
    """
    if noise_var <= 0:
        raise DataError(f"noise variance must be positive, got {noise_var}")
    y = window.values
    t = np.arange(y.size, dtype=float)
    resid = y - amplitude * np.exp(rate * t)
    n = y.size
    return float(-0.5 * n * math.log(2.0 * math.pi * noise_var) - (resid @ resid) / (2.0 * noise_var))


def gibbs_noise_var(residuals, cfg: DetectorConfig, rng: np.random.Generator) -> float:
    """One draw of the noise variance from its inverse-Gamma conditional.

    Shape is N/2 plus the prior shape; scale is the prior scale plus half the
    residual sum of squares.
    """
    resid = np.asarray(residuals, dtype=float)
    if resid.size < 1:
        raise DataError("gibbs_noise_var needs at least one residual")
    shape = resid.size / 2.0 + cfg.noise_prior_shape
    scale = cfg.noise_prior_scale + float(resid @ resid) / 2.0
    # scale / Gamma(shape, 1) is an inverse-Gamma(shape, scale) draw
    return scale / rng.gamma(shape)


def window_seed(base_seed: int, location: str, proxy_id: str, end_date: dt.date) -> np.random.SeedSequence:
    """Deterministic per-window seed, independent of scheduling order.

    The direction is deliberately absent: both tail fractions are read off the
    same posterior sample for a window.
    """
    key = f"{location}|{proxy_id}|{end_date.isoformat()}".encode()
    digest = hashlib.sha256(key).digest()
    return np.random.SeedSequence([base_seed, int.from_bytes(digest[:16], "little")])


def _init_state(y: np.ndarray, t: np.ndarray, cfg: DetectorConfig) -> tuple[float, float, float]:
    lo_a, hi_a = cfg.amplitude_bounds
    lo_r, hi_r = cfg.rate_bounds
    amp = float(np.clip(y[0], lo_a, hi_a))
    logy = np.log(np.clip(y, 1e-12, None))
    slope = float(np.polyfit(t, logy, 1)[0])
    rate = float(np.clip(slope, lo_r, hi_r))
    resid = y - amp * np.exp(rate * t)
    noise_var = max(float(resid.var()), 1e-8)
    return amp, rate, noise_var


def sample_posterior(window: Window, cfg: DetectorConfig, seed=None) -> PosteriorDraws:
    """Run the Metropolis-within-Gibbs sampler on one (rebased) window.

    (amplitude, rate) moves jointly by a Gaussian random walk whose scale and
    covariance adapt during burn-in (frozen afterwards, so retained samples
    satisfy detailed balance); the noise variance is re-drawn from its exact
    inverse-Gamma conditional after every walk step. Proposals outside the
    prior bounds are rejected. All randomness is pre-drawn in a fixed order,
    so a given seed yields bitwise-identical draws regardless of adaptation.
    """
    y = np.asarray(window.values, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DataError("window contains non-finite values")
    n = y.size
    t = np.arange(n, dtype=float)
    lo_a, hi_a = cfg.amplitude_bounds
    lo_r, hi_r = cfg.rate_bounds

    rng = np.random.default_rng(seed if seed is not None else cfg.seed)
    zs = rng.standard_normal((cfg.n_draws, 2))
    log_u = np.log(rng.random(cfg.n_draws))
    gammas = rng.gamma(n / 2.0 + cfg.noise_prior_shape, 1.0, cfg.n_draws)

    c0 = float(y @ y)

    def ssr_of(amp: float, rate: float) -> float:
        curve = np.exp(rate * t)
        return c0 - 2.0 * amp * float(y @ curve) + amp * amp * float(curve @ curve)

    amp, rate, noise_var = _init_state(y, t, cfg)
    ssr = ssr_of(amp, rate)

    # proposal = scale * L @ z; L carries shape, scale tracks acceptance
    base_l = np.array([[0.1 * max(amp, 1e-6), 0.0], [0.0, 0.05]])
    scale = 1.0
    adapt_block = 50
    accepted_in_block = 0
    history = np.empty((cfg.burn_in, 2)) if cfg.burn_in else None
    cov_updates = {cfg.burn_in // 2, (9 * cfg.burn_in) // 10} if cfg.burn_in >= 100 else set()

    n_keep = cfg.n_retained
    out_amp = np.empty(n_keep)
    out_rate = np.empty(n_keep)
    out_nv = np.empty(n_keep)
    kept = 0

    for i in range(cfg.n_draws):
        step = scale * (base_l @ zs[i])
        amp_p = amp + step[0]
        rate_p = rate + step[1]
        if lo_a <= amp_p <= hi_a and lo_r <= rate_p <= hi_r:
            with np.errstate(over="ignore"):
                ssr_p = ssr_of(amp_p, rate_p)
            if math.isfinite(ssr_p) and log_u[i] < -(ssr_p - ssr) / (2.0 * noise_var):
                amp, rate, ssr = amp_p, rate_p, ssr_p
                accepted_in_block += 1
        noise_var = (cfg.noise_prior_scale + ssr / 2.0) / gammas[i]

        if i < cfg.burn_in:
            history[i] = (amp, rate)
            if (i + 1) % adapt_block == 0:
                frac = accepted_in_block / adapt_block
                if frac < 0.2:
                    scale *= 0.7
                elif frac > 0.5:
                    scale *= 1.4
                accepted_in_block = 0
            if (i + 1) in cov_updates:
                seen = history[(i + 1) // 2 : i + 1]
                cov = np.cov(seen.T)
                diag = np.maximum(np.diag(cov), 1e-12)
                cov = cov + 1e-6 * np.diag(diag)
                try:
                    chol = np.linalg.cholesky(cov)
                    base_l = _PROPOSAL_FACTOR * chol
                    scale = 1.0
                except np.linalg.LinAlgError:
                    pass
        else:
            j = i - cfg.burn_in
            if j % cfg.thin == 0 and kept < n_keep:
                out_amp[kept] = amp
                out_rate[kept] = rate
                out_nv[kept] = noise_var
                kept += 1

    return PosteriorDraws(amplitude=out_amp, rate=out_rate, noise_var=out_nv)


def uptrend_pvalue(draws: PosteriorDraws) -> float:
    """Fraction of retained draws with rate <= 0 (small = confident growth)."""
    if len(draws) == 0:
        raise DataError("empty posterior draws")
    return float(np.count_nonzero(draws.rate <= 0.0)) / len(draws)


def downtrend_pvalue(draws: PosteriorDraws) -> float:
    """Fraction of retained draws with rate >= 0 (small = confident decay)."""
    if len(draws) == 0:
        raise DataError("empty posterior draws")
    return float(np.count_nonzero(draws.rate >= 0.0)) / len(draws)


def pvalue_series_pair(s: DailySeries, cfg: DetectorConfig) -> tuple[PValueSeries, PValueSeries]:
    """Both direction p-value series from one sampler pass per window.

    Each trailing window is rebased to a minimum of 1 and sampled with a seed
    derived from (cfg.seed, location, proxy_id, window end date).
    """
    if len(s) < cfg.window_days:
        raise DataError(
            f"series {s.location}/{s.proxy_id} has {len(s)} days, "
            f"shorter than one {cfg.window_days}-day window"
        )
    dates: list[dt.date] = []
    p_up: list[float] = []
    p_down: list[float] = []
    for w in iter_windows(s, cfg.window_days):
        draws = sample_posterior(
            rebase_min_one(w),
            cfg,
            seed=window_seed(cfg.seed, s.location, s.proxy_id, w.end_date),
        )
        dates.append(w.end_date)
        p_up.append(uptrend_pvalue(draws))
        p_down.append(downtrend_pvalue(draws))
    mk = lambda direction, p: PValueSeries(
        location=s.location,
        proxy_id=s.proxy_id,
        direction=direction,
        dates=tuple(dates),
        p=np.array(p),
    )
    return mk(Direction.UPTREND, p_up), mk(Direction.DOWNTREND, p_down)


def pvalue_series(s: DailySeries, direction: Direction, cfg: DetectorConfig) -> PValueSeries:
    up, down = pvalue_series_pair(s, cfg)
    return up if Direction(direction) is Direction.UPTREND else down


def detect_events(pv: PValueSeries, threshold: float = 0.05, refractory_days: int = 14) -> list[TrendEvent]:
    """Threshold down-crossings of a p-value series.

    A crossing is the first date with p < threshold after a date with
    p >= threshold (the state before the series counts as above threshold, so
    an immediately-significant series fires on its first date). Crossings
    within ``refractory_days`` of the previous retained event are folded into
    it. The first element of the result is the first-wave event.
    """
    events: list[TrendEvent] = []
    above = True
    for day, p in zip(pv.dates, pv.p):
        if p >= threshold:
            above = True
            continue
        if above:
            above = False
            if events and (day - events[-1].event_date).days <= refractory_days:
                continue
            events.append(
                TrendEvent(
                    location=pv.location,
                    proxy_id=pv.proxy_id,
                    direction=pv.direction,
                    event_date=day,
                    p_at_event=float(p),
                )
            )
    return events
