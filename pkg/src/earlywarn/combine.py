"""Fusing per-proxy p-value series with the harmonic-mean p-value.

The combined indicator for a location is, per day, the weighted harmonic mean
of the p-values of every proxy reporting that day. The harmonic mean is
dominated by its smallest entries, so one confident proxy can pull the
combined value under the event threshold while disagreeing proxies dampen it.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .detector import Direction, PValueSeries, TrendEvent, detect_events
from .errors import DataError

P_FLOOR_DEFAULT = 1e-6


@dataclass(frozen=True)
class WeightedPSet:
    """One day's (proxy, p-value, weight) triples, weights normalized to 1."""

    entries: tuple[tuple[str, float, float], ...]

    def __post_init__(self):
        if not self.entries:
            raise DataError("WeightedPSet needs at least one entry")
        total = sum(w for _, _, w in self.entries)
        if total <= 0:
            raise DataError("weights must have a positive sum")
        normalized = []
        for proxy_id, p, w in self.entries:
            if not 0.0 < p <= 1.0:
                raise DataError(f"p-value for {proxy_id} must lie in (0, 1], got {p}")
            if w <= 0:
                raise DataError(f"weight for {proxy_id} must be positive")
            normalized.append((proxy_id, float(p), float(w / total)))
        object.__setattr__(self, "entries", tuple(normalized))


def harmonic_mean_p(ps: WeightedPSet) -> float:
    """Weighted harmonic mean: (sum of weights) / (sum of weight/p)."""
    num = sum(w for _, _, w in ps.entries)
    den = sum(w / p for _, p, w in ps.entries)
    return num / den


def combined_pvalue_series(
    pvs: list[PValueSeries],
    weights: dict[str, float] | None = None,
    p_floor: float = P_FLOOR_DEFAULT,
) -> PValueSeries:
    """Daily harmonic-mean combination of the given per-proxy series.

    Only dates carrying at least two proxies enter the output; weights are
    renormalized over the proxies present on each date. Sampled p-values can
    be exactly zero, which the harmonic mean cannot accept, so every p is
    floored at ``p_floor`` first.
    """
    if len(pvs) < 2:
        raise DataError("combining requires at least two p-value series")
    locations = {pv.location for pv in pvs}
    directions = {pv.direction for pv in pvs}
    if len(locations) != 1 or len(directions) != 1:
        raise DataError("all combined series must share location and direction")
    ids = [pv.proxy_id for pv in pvs]
    if len(set(ids)) != len(ids):
        raise DataError(f"duplicate proxy ids in combination: {sorted(ids)}")
    if weights is not None:
        missing = set(ids) - set(weights)
        if missing:
            raise DataError(f"no combine weight for proxies {sorted(missing)}")

    by_date: dict[dt.date, list[tuple[str, float]]] = {}
    for pv in pvs:
        for day, p in zip(pv.dates, pv.p):
            by_date.setdefault(day, []).append((pv.proxy_id, max(float(p), p_floor)))

    dates = []
    combined = []
    for day in sorted(by_date):
        present = by_date[day]
        if len(present) < 2:
            continue
        pset = WeightedPSet(
            tuple(
                (pid, p, 1.0 if weights is None else weights[pid])
                for pid, p in present
            )
        )
        dates.append(day)
        combined.append(harmonic_mean_p(pset))
    if not dates:
        raise DataError("no date has two or more overlapping proxies")
    return PValueSeries(
        location=next(iter(locations)),
        proxy_id="combined",
        direction=next(iter(directions)),
        dates=tuple(dates),
        p=np.array(combined),
    )


def detect_combined_events(
    pv: PValueSeries, threshold: float = 0.05, refractory_days: int = 14
) -> list[TrendEvent]:
    """Threshold down-crossings of the combined series (same rule as per-proxy)."""
    return detect_events(pv, threshold=threshold, refractory_days=refractory_days)
