"""Orchestration: fan detection out over sources and wire stages together.

Every (location, proxy) series is an independent inference task; results are
assembled in sorted key order and all randomness comes from per-window seeds,
so the outputs are identical at any worker count.
"""

from __future__ import annotations

import datetime as dt
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .detector import (
    DetectorConfig,
    Direction,
    PValueSeries,
    TrendEvent,
    detect_events,
    pvalue_series_pair,
)
from .combine import combined_pvalue_series, detect_combined_events
from .errors import DataError
from .ingest import CombineConfig, T2EConfig
from .series import DailySeries, SeriesKind, clip_end
from .synth import ScenarioSpec, gen_multistate_scenario
from .time_to_event import (
    LagModel,
    TimeToEventPosterior,
    first_event_date,
    pool_lags,
    posterior_time_to_event,
)

SeriesKey = tuple[str, str]


@dataclass(frozen=True)
class DetectionResult:
    """P-value series and events for every (location, proxy, direction)."""

    pvalues: dict[tuple[str, str, Direction], PValueSeries]
    events: dict[tuple[str, str, Direction], list[TrendEvent]]

    def first_wave(self, location: str, proxy_id: str, direction: Direction) -> TrendEvent | None:
        evs = self.events.get((location, proxy_id, direction), [])
        return evs[0] if evs else None


def _detect_task(args: tuple[SeriesKey, DailySeries, DetectorConfig]):
    key, series, cfg = args
    up, down = pvalue_series_pair(series, cfg)
    return key, up, down


def run_detection(
    series_map: dict[SeriesKey, DailySeries],
    cfg: DetectorConfig,
    threads: int = 1,
    as_of: dt.date | None = None,
) -> DetectionResult:
    """Detect both trend directions for every series.

    With ``as_of``, series are truncated first and those left shorter than
    one window are silently skipped (they have no evaluable dates yet).
    """
    tasks = []
    for key in sorted(series_map):
        series = series_map[key]
        if as_of is not None:
            if as_of < series.start_date + dt.timedelta(days=cfg.window_days - 1):
                continue
            series = clip_end(series, as_of)
        tasks.append((key, series, cfg))
    if not tasks:
        raise DataError("no series long enough to detect on")

    results: dict[SeriesKey, tuple[PValueSeries, PValueSeries]] = {}
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for key, up, down in pool.map(_detect_task, tasks):
                results[key] = (up, down)
    else:
        for task in tasks:
            key, up, down = _detect_task(task)
            results[key] = (up, down)

    pvalues: dict[tuple[str, str, Direction], PValueSeries] = {}
    events: dict[tuple[str, str, Direction], list[TrendEvent]] = {}
    for key in sorted(results):
        up, down = results[key]
        for pv in (up, down):
            full_key = (key[0], key[1], pv.direction)
            pvalues[full_key] = pv
            events[full_key] = detect_events(
                pv, threshold=cfg.threshold, refractory_days=cfg.refractory_days
            )
    return DetectionResult(pvalues=pvalues, events=events)


def combine_location(
    detection: DetectionResult,
    series_map: dict[SeriesKey, DailySeries],
    location: str,
    direction: Direction,
    combine_cfg: CombineConfig,
) -> tuple[PValueSeries, list[TrendEvent]]:
    """Harmonic-mean fusion of all non-gold proxies of one location."""
    pvs = [
        detection.pvalues[(loc, pid, direction)]
        for (loc, pid, direc) in sorted(detection.pvalues)
        if loc == location
        and direc == direction
        and series_map[(loc, pid)].kind is not SeriesKind.GOLD
    ]
    if len(pvs) < 2:
        raise DataError(f"location {location} has fewer than two proxies to combine")
    combined = combined_pvalue_series(pvs, weights=combine_cfg.weights, p_floor=combine_cfg.p_floor)
    return combined, detect_combined_events(combined)


def proxy_kind_map(series_map: dict[SeriesKey, DailySeries]) -> dict[str, SeriesKind]:
    kinds: dict[str, SeriesKind] = {}
    for (_, pid), series in series_map.items():
        prev = kinds.setdefault(pid, series.kind)
        if prev is not series.kind:
            raise DataError(f"proxy {pid} declared with conflicting kinds")
    return kinds


def _events_by_state(
    detection: DetectionResult,
    series_map: dict[SeriesKey, DailySeries],
    gold_proxy: str,
    direction: Direction,
) -> dict[str, tuple[list[TrendEvent], TrendEvent | None]]:
    states = sorted({loc for loc, _ in series_map})
    out: dict[str, tuple[list[TrendEvent], TrendEvent | None]] = {}
    for state in states:
        proxy_events: list[TrendEvent] = []
        for (loc, pid) in sorted(series_map):
            if loc != state or pid == gold_proxy:
                continue
            ev = detection.first_wave(state, pid, direction)
            if ev is not None:
                proxy_events.append(ev)
        out[state] = (proxy_events, detection.first_wave(state, gold_proxy, direction))
    return out


def fit_lag_models(
    detection: DetectionResult,
    series_map: dict[SeriesKey, DailySeries],
    t2e_cfg: T2EConfig,
    direction: Direction = Direction.UPTREND,
    exclude_state: str | None = None,
) -> dict[str, LagModel]:
    """Pool per-proxy lag models across states from first-wave events."""
    by_state = _events_by_state(detection, series_map, t2e_cfg.gold_proxy, direction)
    proxy_ids = sorted({pid for _, pid in series_map if pid != t2e_cfg.gold_proxy})
    models: dict[str, LagModel] = {}
    for pid in proxy_ids:
        try:
            models[pid] = pool_lags(
                by_state, pid, exclude_state=exclude_state, bandwidth_floor=t2e_cfg.bandwidth_floor
            )
        except DataError:
            continue
    return models


def predict_location(
    location: str,
    series_map: dict[SeriesKey, DailySeries],
    models: dict[str, LagModel],
    cfg: DetectorConfig,
    t2e_cfg: T2EConfig,
    as_of: dt.date,
    direction: Direction = Direction.UPTREND,
    threads: int = 1,
) -> TimeToEventPosterior:
    """Posterior over days to the location's gold event, using data <= as_of."""
    local = {
        (loc, pid): s
        for (loc, pid), s in series_map.items()
        if loc == location and pid != t2e_cfg.gold_proxy
    }
    if not local:
        raise DataError(f"location {location} has no proxy series")
    deltas: dict[str, int | None] = {pid: None for _, pid in local}
    try:
        asof_detection = run_detection(local, cfg, threads=threads, as_of=as_of)
    except DataError:
        asof_detection = None
    if asof_detection is not None:
        for (loc, pid) in sorted(local):
            ev = asof_detection.first_wave(loc, pid, direction)
            if ev is not None:
                deltas[pid] = (as_of - ev.event_date).days
    return posterior_time_to_event(
        deltas,
        models,
        as_of,
        direction=direction,
        proxy_kinds=proxy_kind_map(series_map),
        horizon_days=t2e_cfg.horizon_days,
        smoothing=t2e_cfg.smoothing,
    )


def scenario_series_map(spec: ScenarioSpec) -> dict[SeriesKey, DailySeries]:
    return gen_multistate_scenario(spec)


def scenario_lead_diffs(
    detection: DetectionResult,
    spec: ScenarioSpec,
    proxy_id: str,
    direction: Direction = Direction.UPTREND,
) -> dict[str, int]:
    """Per-state (proxy event - gold event) day differences for a scenario."""
    diffs: dict[str, int] = {}
    for state in spec.states:
        pe = detection.first_wave(state, proxy_id, direction)
        ge = detection.first_wave(state, spec.gold_id, direction)
        if pe is not None and ge is not None:
            diffs[state] = (pe.event_date - ge.event_date).days
    return diffs


def loso_scenario_posteriors(
    series_map: dict[SeriesKey, DailySeries],
    detection: DetectionResult,
    cfg: DetectorConfig,
    t2e_cfg: T2EConfig,
    days_before_gold: int = 7,
    direction: Direction = Direction.UPTREND,
) -> dict[str, TimeToEventPosterior]:
    """Leave-one-state-out prediction, evaluated shortly before each gold event.

    For every state with a gold event: lag models are pooled from the other
    states only, and the posterior is computed as of ``days_before_gold``
    days before the held-out state's own gold event, so the true answer is
    exactly ``days_before_gold``.
    """
    out: dict[str, TimeToEventPosterior] = {}
    states = sorted({loc for loc, _ in series_map})
    for state in states:
        gold_ev = detection.first_wave(state, t2e_cfg.gold_proxy, direction)
        if gold_ev is None:
            continue
        models = fit_lag_models(
            detection, series_map, t2e_cfg, direction=direction, exclude_state=state
        )
        as_of = gold_ev.event_date - dt.timedelta(days=days_before_gold)
        out[state] = predict_location(
            state, series_map, models, cfg, t2e_cfg, as_of, direction=direction
        )
    return out


def detector_with_seed(cfg: DetectorConfig, seed: int) -> DetectorConfig:
    """The run seed flows from the manifest into every per-window derivation."""
    return replace(cfg, seed=seed)
