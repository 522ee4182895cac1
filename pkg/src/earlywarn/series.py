"""Daily time-series container and the shared transforms built on it.

Everything downstream (detection, combination, timing estimation) consumes
:class:`DailySeries`: a location-tagged run of daily values with an explicit
reporting delay. All transforms are pure functions returning new instances;
value arrays are locked read-only so instances can be shared across workers.
"""

from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError


class SeriesKind(str, enum.Enum):
    """Role a series plays in the pipeline."""

    PROXY = "proxy"
    GOLD = "gold"
    MOBILITY = "mobility"


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DataError("series values must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise DataError("series values must be finite (resolve gaps at load time)")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class DailySeries:
    """Uniformly daily-spaced observations for one (location, proxy) pair.

    Index ``i`` corresponds to ``start_date + i`` days. ``delay_days`` is the
    typical lag between an observation occurring and it becoming available;
    :func:`shift_for_delay` folds it into the dates.
    """

    location: str
    proxy_id: str
    start_date: dt.date
    values: np.ndarray
    delay_days: int = 0
    kind: SeriesKind = SeriesKind.PROXY

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))
        if self.delay_days < 0:
            raise DataError(f"delay_days must be >= 0, got {self.delay_days}")
        if not isinstance(self.kind, SeriesKind):
            object.__setattr__(self, "kind", SeriesKind(self.kind))

    def __len__(self) -> int:
        return self.values.size

    @property
    def end_date(self) -> dt.date:
        return self.start_date + dt.timedelta(days=len(self) - 1)

    def dates(self) -> list[dt.date]:
        return [self.start_date + dt.timedelta(days=i) for i in range(len(self))]

    def index_of(self, day: dt.date) -> int:
        """Array index of ``day``; DataError if outside the covered range."""
        i = (day - self.start_date).days
        if not 0 <= i < len(self):
            raise DataError(f"{day} outside series range {self.start_date}..{self.end_date}")
        return i

    def value_on(self, day: dt.date) -> float:
        return float(self.values[self.index_of(day)])


@dataclass(frozen=True)
class Window:
    """A fixed-length run of consecutive observations ending at ``end_date``."""

    location: str
    proxy_id: str
    end_date: dt.date
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))

    def __len__(self) -> int:
        return self.values.size


def shift_for_delay(s: DailySeries) -> DailySeries:
    """Move the series earlier by its reporting delay and zero the delay.

    Idempotent once applied (a zero-delay series is returned unchanged).
    """
    if s.delay_days == 0:
        return s
    return replace(
        s,
        start_date=s.start_date - dt.timedelta(days=s.delay_days),
        delay_days=0,
    )


def minmax_normalize(s: DailySeries) -> DailySeries:
    """Affinely rescale values onto [0, 1]. Errors on constant series."""
    lo = float(s.values.min())
    hi = float(s.values.max())
    if hi == lo:
        raise DataError(f"cannot min-max normalize constant series {s.location}/{s.proxy_id}")
    return replace(s, values=(s.values - lo) / (hi - lo))


def moving_average(s: DailySeries, k: int) -> DailySeries:
    """Trailing k-day mean with an expanding start.

    Output index i is the mean of the last k values ending at i; the first
    k-1 entries average all values available so far, so the output keeps the
    input's length and dates. Causal by construction: no future values enter.
    """
    if k < 1:
        raise DataError(f"moving average window must be >= 1, got {k}")
    if k > len(s):
        raise DataError(f"moving average window {k} exceeds series length {len(s)}")
    csum = np.cumsum(s.values)
    out = np.empty_like(s.values)
    head = min(k, len(s))
    out[:head] = csum[:head] / np.arange(1, head + 1)
    if len(s) > k:
        out[k:] = (csum[k:] - csum[:-k]) / k
    return replace(s, values=out)


def _require_aligned(a: DailySeries, b: DailySeries, what: str) -> None:
    if a.start_date != b.start_date or len(a) != len(b):
        raise DataError(
            f"{what}: series are misaligned "
            f"({a.start_date}+{len(a)}d vs {b.start_date}+{len(b)}d)"
        )


def aggregate_weighted(series: list[DailySeries], weights) -> DailySeries:
    """Weighted average of aligned series (e.g. county -> state roll-up)."""
    if not series:
        raise DataError("aggregate_weighted: no series given")
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(series),):
        raise DataError("aggregate_weighted: weights do not align with series")
    total = w.sum()
    if total <= 0:
        raise DataError(f"aggregate_weighted: total weight must be positive, got {total}")
    first = series[0]
    for s in series[1:]:
        _require_aligned(first, s, "aggregate_weighted")
        if s.proxy_id != first.proxy_id:
            raise DataError("aggregate_weighted: series must share a proxy_id")
    stacked = np.stack([s.values for s in series])
    return replace(first, values=(w @ stacked) / total)


def truncate_excess(observed: DailySeries, expected: DailySeries) -> DailySeries:
    """Observed minus expected, clipped at zero (excess cannot go negative)."""
    _require_aligned(observed, expected, "truncate_excess")
    return replace(observed, values=np.maximum(observed.values - expected.values, 0.0))


def rebase_min_one(w: Window) -> Window:
    """Shift window values so the minimum is exactly 1.

    Pure translation: pairwise differences are preserved, which is what makes
    detection invariant to the level of the series.
    """
    return Window(
        location=w.location,
        proxy_id=w.proxy_id,
        end_date=w.end_date,
        values=w.values - w.values.min() + 1.0,
    )


def window_ending(s: DailySeries, end: dt.date, length: int) -> Window:
    """Extract the trailing window of ``length`` days ending at ``end``."""
    j = s.index_of(end)
    if j + 1 < length:
        raise DataError(f"series too short for a {length}-day window ending {end}")
    return Window(
        location=s.location,
        proxy_id=s.proxy_id,
        end_date=end,
        values=s.values[j + 1 - length : j + 1],
    )


def iter_windows(s: DailySeries, length: int):
    """Yield every trailing window of the given length, earliest first."""
    if length > len(s):
        raise DataError(
            f"series {s.location}/{s.proxy_id} shorter than one {length}-day window"
        )
    for j in range(length - 1, len(s)):
        end = s.start_date + dt.timedelta(days=j)
        yield window_ending(s, end, length)


def clip_end(s: DailySeries, last_date: dt.date) -> DailySeries:
    """Drop all observations after ``last_date`` (as-of truncation)."""
    if last_date >= s.end_date:
        return s
    if last_date < s.start_date:
        raise DataError(
            f"clip to {last_date} empties series {s.location}/{s.proxy_id}"
        )
    keep = (last_date - s.start_date).days + 1
    return replace(s, values=s.values[:keep])
