"""Days-until-outbreak estimation from the pattern of proxy activations.

For each proxy, the historical lags between its trend event and the gold
outbreak event are pooled across states into a Gaussian KDE. On a given day,
a proxy that fired Dx days ago votes for "outbreak in y days" with density
f(y + Dx); proxies that have not fired vote uniformly. Multiplying the votes
under a uniform prior over the horizon gives a discrete posterior pmf.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np

from .detector import Direction, TrendEvent
from .errors import DataError
from .series import SeriesKind

HORIZON_DAYS = 180
SMOOTHING_DEFAULT = 1e-6
BANDWIDTH_FLOOR = 0.5


@dataclass(frozen=True)
class LagModel:
    """Pooled (gold event date - proxy event date) lags with a KDE bandwidth."""

    proxy_id: str
    lag_samples: np.ndarray
    bandwidth: float

    def __post_init__(self):
        arr = np.asarray(self.lag_samples, dtype=float)
        if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
            raise DataError(f"lag model for {self.proxy_id} needs finite, non-empty samples")
        if self.bandwidth <= 0:
            raise DataError(f"lag model for {self.proxy_id} needs a positive bandwidth")
        arr.flags.writeable = False
        object.__setattr__(self, "lag_samples", arr)


@dataclass(frozen=True)
class TimeToEventPosterior:
    as_of_date: dt.date
    support: np.ndarray
    pmf: np.ndarray = field(repr=False)

    def __post_init__(self):
        support = np.asarray(self.support, dtype=int)
        pmf = np.asarray(self.pmf, dtype=float)
        if support.shape != pmf.shape or support.ndim != 1:
            raise DataError("posterior support and pmf must align")
        if pmf.min() < 0 or abs(float(pmf.sum()) - 1.0) > 1e-9:
            raise DataError("posterior pmf must be non-negative and sum to 1")
        for name, arr in (("support", support), ("pmf", pmf)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def mode_day(self) -> int:
        return int(self.support[int(np.argmax(self.pmf))])

    def mass_within(self, center: int, radius: int) -> float:
        sel = np.abs(self.support - center) <= radius
        return float(self.pmf[sel].sum())


def scott_bandwidth(samples, floor: float = BANDWIDTH_FLOOR) -> float:
    """Scott's rule for a univariate KDE: sample sd times n^(-1/5).

    A spread below ``floor`` (default half a day) is degenerate for daily
    event lags; the floor itself is returned in that case.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.size < 2:
        raise DataError("scott_bandwidth needs at least two samples")
    sd = float(arr.std(ddof=1))
    if sd < floor:
        return floor
    return sd * arr.size ** (-0.2)


def kde_pdf(model: LagModel, x) -> float | np.ndarray:
    """Gaussian-kernel density of the pooled lags at x (scalar or vector)."""
    xs = np.asarray(x, dtype=float)
    z = (xs[..., None] - model.lag_samples) / model.bandwidth
    dens = np.exp(-0.5 * z * z).sum(axis=-1) / (
        model.lag_samples.size * model.bandwidth * math.sqrt(2.0 * math.pi)
    )
    return float(dens) if np.isscalar(x) or xs.ndim == 0 else dens


def first_event_date(events: list[TrendEvent]) -> dt.date | None:
    return min((e.event_date for e in events), default=None)


def pool_lags(
    events_by_state: dict[str, tuple[list[TrendEvent], TrendEvent | None]],
    proxy_id: str,
    exclude_state: str | None = None,
    bandwidth_floor: float = BANDWIDTH_FLOOR,
) -> LagModel:
    """Pool (gold date - proxy date) across states into a lag model.

    Each state contributes one lag, computed from its first-wave events;
    states missing either event are skipped. ``exclude_state`` supports
    leave-one-state-out evaluation. A single-state pool cannot feed Scott's
    rule, so it falls back to the floor bandwidth.
    """
    lags: list[float] = []
    for state, (proxy_events, gold_event) in sorted(events_by_state.items()):
        if state == exclude_state or gold_event is None:
            continue
        mine = first_event_date([e for e in proxy_events if e.proxy_id == proxy_id])
        if mine is None:
            continue
        lags.append(float((gold_event.event_date - mine).days))
    if not lags:
        raise DataError(f"no state has both a {proxy_id} event and a gold event")
    arr = np.array(lags)
    bandwidth = scott_bandwidth(arr, bandwidth_floor) if arr.size >= 2 else bandwidth_floor
    return LagModel(proxy_id=proxy_id, lag_samples=arr, bandwidth=bandwidth)


def posterior_time_to_event(
    deltas: dict[str, int | None],
    models: dict[str, LagModel],
    as_of: dt.date,
    direction: Direction = Direction.UPTREND,
    proxy_kinds: dict[str, SeriesKind] | None = None,
    horizon_days: int = HORIZON_DAYS,
    smoothing: float = SMOOTHING_DEFAULT,
) -> TimeToEventPosterior:
    """Discrete posterior over days until the gold event.

    ``deltas`` holds, per proxy, the age of its trend event in days as of
    ``as_of`` (None while it has not fired). An aged event implies the lag
    y + delta, so its expert is the KDE evaluated there; unfired proxies
    contribute a flat 1/horizon. Experts receive additive smoothing before the
    product with the uniform prior. Mobility proxies are ignored entirely for
    uptrend estimation, so their presence cannot change the result.
    """
    kinds = proxy_kinds or {}
    contributing = {
        pid: delta
        for pid, delta in deltas.items()
        if not (
            direction is Direction.UPTREND
            and kinds.get(pid, SeriesKind.PROXY) is SeriesKind.MOBILITY
        )
    }
    if not contributing:
        raise DataError("no contributing proxies for time-to-event estimation")
    y = np.arange(horizon_days)
    log_post = np.zeros(horizon_days)
    for pid in sorted(contributing):
        delta = contributing[pid]
        if delta is None:
            expert = np.full(horizon_days, 1.0 / horizon_days)
        else:
            if delta < 0:
                raise DataError(f"proxy {pid} event lies after as_of ({delta} days)")
            model = models.get(pid)
            if model is None:
                raise DataError(f"proxy {pid} has an event but no fitted lag model")
            expert = kde_pdf(model, y + float(delta))
        log_post += np.log(expert + smoothing)
    log_post -= log_post.max()
    pmf = np.exp(log_post)
    pmf /= pmf.sum()
    return TimeToEventPosterior(as_of_date=as_of, support=y, pmf=pmf)
