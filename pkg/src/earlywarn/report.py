"""Stable CSV/JSON emission.

Every writer formats floats through one shared rule and writes sorted,
newline-terminated content, so reruns with identical inputs produce
byte-identical files regardless of worker count or dict order.
"""

from __future__ import annotations

import datetime as dt
import json
from pathlib import Path

from .detector import PValueSeries, TrendEvent
from .excess_ili import WeeklySeries
from .leadlag import LeadLagSummary
from .series import DailySeries
from .time_to_event import TimeToEventPosterior


def fmt(x: float) -> str:
    return format(float(x), ".12g")


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


_write_text = write_text


def write_series_csv(path: Path, series: DailySeries) -> Path:
    lines = ["date,value"]
    lines += [f"{d.isoformat()},{fmt(v)}" for d, v in zip(series.dates(), series.values)]
    return _write_text(path, "\n".join(lines) + "\n")


def write_json(path: Path, payload) -> Path:
    return _write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def write_pvalue_csv(path: Path, pv: PValueSeries) -> Path:
    lines = ["date,p"]
    lines += [f"{day.isoformat()},{fmt(p)}" for day, p in zip(pv.dates, pv.p)]
    return _write_text(path, "\n".join(lines) + "\n")


def event_record(e: TrendEvent) -> dict:
    return {
        "location": e.location,
        "proxy_id": e.proxy_id,
        "direction": e.direction.value,
        "event_date": e.event_date.isoformat(),
        "p_at_event": float(e.p_at_event),
    }


def write_events_json(path: Path, events: list[TrendEvent]) -> Path:
    records = sorted(
        (event_record(e) for e in events),
        key=lambda r: (r["location"], r["proxy_id"], r["direction"], r["event_date"]),
    )
    return write_json(path, records)


def write_posterior_json(path: Path, location: str, posterior: TimeToEventPosterior) -> Path:
    return write_json(
        path,
        {
            "location": location,
            "as_of": posterior.as_of_date.isoformat(),
            "support": [int(v) for v in posterior.support],
            "pmf": [float(v) for v in posterior.pmf],
        },
    )


def write_posterior_csv(path: Path, posterior: TimeToEventPosterior) -> Path:
    lines = ["days_ahead,probability"]
    lines += [f"{int(d)},{fmt(p)}" for d, p in zip(posterior.support, posterior.pmf)]
    return _write_text(path, "\n".join(lines) + "\n")


def write_weekly_csv(path: Path, header: list[str], rows: list[tuple]) -> Path:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, dt.date):
                cells.append(cell.isoformat())
            elif isinstance(cell, str):
                cells.append(cell)
            else:
                cells.append(fmt(cell))
        lines.append(",".join(cells))
    return _write_text(path, "\n".join(lines) + "\n")


def write_leadlag_csv(path: Path, summary: LeadLagSummary) -> Path:
    lines = ["input,reference,state,diff_days"]
    lines += [
        f"{summary.input_proxy},{summary.reference_proxy},{state},{diff}"
        for state, diff in zip(summary.states, summary.diffs)
    ]
    return _write_text(path, "\n".join(lines) + "\n")


def leadlag_record(summary: LeadLagSummary) -> dict:
    return {
        "input": summary.input_proxy,
        "reference": summary.reference_proxy,
        "n_states": len(summary.diffs),
        "median": summary.median,
        "q1": summary.q1,
        "q3": summary.q3,
    }


def write_excess_ili_csv(
    path: Path,
    observed: WeeklySeries,
    virology: WeeklySeries,
    excess: WeeklySeries,
    idea: WeeklySeries | None = None,
) -> Path:
    """Weekly excess table with both counterfactual columns.

    The IDEA column is in visit-count units and blank for weeks it does not
    cover (before the fitted season start); the virology column is in the
    same activity units as the observations.
    """
    idea_by_week = dict(zip(idea.week_starts, idea.values)) if idea is not None else {}
    rows = []
    for week, obs, flu, exc in zip(
        observed.week_starts, observed.values, virology.values, excess.values
    ):
        idea_val = idea_by_week.get(week)
        rows.append((week, obs, flu, exc, "" if idea_val is None else idea_val))
    return write_weekly_csv(
        path,
        [
            "week_start",
            "observed_activity",
            "virology_counterfactual",
            "excess_ili",
            "idea_counterfactual_visits",
        ],
        rows,
    )
