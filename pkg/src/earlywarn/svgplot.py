"""Hand-rolled static SVG figures.

Plotting libraries embed run-dependent metadata (ids, timestamps) that breaks
byte-identical reruns, so the few figures this pipeline emits are assembled
from SVG primitives directly. All coordinates are formatted to fixed
precision and every element is emitted in a deterministic order.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .detector import PValueSeries, TrendEvent
from .series import DailySeries
from .time_to_event import TimeToEventPosterior

PALETTE = ("#1b6ca8", "#c0392b", "#1e8449", "#8e44ad", "#b7950b", "#34495e", "#d35400")
WIDTH = 900
PANEL_H = 220
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 28, 36


def _f(x: float) -> str:
    return f"{x:.2f}"


@dataclass
class _Frame:
    """Affine map from data coordinates to one SVG panel."""

    x0: float
    x1: float
    y0: float
    y1: float
    top: float

    def x(self, v: float) -> float:
        span = self.x1 - self.x0 or 1.0
        return MARGIN_L + (v - self.x0) / span * (WIDTH - MARGIN_L - MARGIN_R)

    def y(self, v: float) -> float:
        span = self.y1 - self.y0 or 1.0
        frac = (v - self.y0) / span
        return self.top + MARGIN_T + (1.0 - frac) * (PANEL_H - MARGIN_T - MARGIN_B)


def _polyline(frame: _Frame, xs, ys, color: str, width: float = 1.5, dash: str = "") -> str:
    pts = " ".join(f"{_f(frame.x(x))},{_f(frame.y(y))}" for x, y in zip(xs, ys))
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{extra} '
        f'points="{pts}"/>'
    )


def _text(x: float, y: float, s: str, size: int = 11, anchor: str = "start", color: str = "#333") -> str:
    return (
        f'<text x="{_f(x)}" y="{_f(y)}" font-family="sans-serif" font-size="{size}" '
        f'text-anchor="{anchor}" fill="{color}">{s}</text>'
    )


def _month_ticks(start: dt.date, end: dt.date) -> list[dt.date]:
    ticks = []
    day = dt.date(start.year, start.month, 1)
    while day <= end:
        if day >= start:
            ticks.append(day)
        day = dt.date(day.year + day.month // 12, day.month % 12 + 1, 1)
    return ticks or [start]


def _date_axis(frame: _Frame, origin: dt.date, start: dt.date, end: dt.date) -> list[str]:
    parts = []
    base_y = frame.top + PANEL_H - MARGIN_B
    parts.append(
        f'<line x1="{_f(MARGIN_L)}" y1="{_f(base_y)}" x2="{_f(WIDTH - MARGIN_R)}" '
        f'y2="{_f(base_y)}" stroke="#999" stroke-width="1"/>'
    )
    for tick in _month_ticks(start, end):
        tx = frame.x((tick - origin).days)
        parts.append(
            f'<line x1="{_f(tx)}" y1="{_f(base_y)}" x2="{_f(tx)}" y2="{_f(base_y + 4)}" '
            f'stroke="#999" stroke-width="1"/>'
        )
        parts.append(_text(tx, base_y + 16, tick.strftime("%Y-%m"), size=10, anchor="middle"))
    return parts


def _document(parts: list[str], height: int) -> str:
    body = "\n".join(parts)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}">\n'
        f'<rect width="{WIDTH}" height="{height}" fill="white"/>\n{body}\n</svg>\n'
    )


def detect_figure(
    location: str,
    series: list[DailySeries],
    pvalues: list[PValueSeries],
    events: list[TrendEvent],
) -> str:
    """Two stacked panels: normalized series, and p-values with the threshold.

    Event dates appear as vertical markers in both panels; series and
    p-value lines share one color per proxy.
    """
    all_starts = [s.start_date for s in series]
    all_ends = [s.end_date for s in series]
    origin = min(all_starts)
    end = max(all_ends)
    n_days = (end - origin).days

    top = _Frame(0, n_days, 0.0, 1.0, 0)
    bottom = _Frame(0, n_days, 0.0, 1.0, PANEL_H)
    parts = [_text(MARGIN_L, 18, f"{location}: normalized signals and trend p-values", size=13)]
    color_of = {s.proxy_id: PALETTE[i % len(PALETTE)] for i, s in enumerate(series)}

    for s in series:
        lo, hi = float(s.values.min()), float(s.values.max())
        norm = (s.values - lo) / (hi - lo) if hi > lo else np.zeros_like(s.values)
        offset = (s.start_date - origin).days
        xs = np.arange(len(s)) + offset
        parts.append(_polyline(top, xs, norm, color_of[s.proxy_id]))
    for i, s in enumerate(series):
        parts.append(
            _text(WIDTH - MARGIN_R - 150, 34 + 13 * i, s.proxy_id, size=10, color=color_of[s.proxy_id])
        )

    thr_y = bottom.y(0.05)
    parts.append(
        f'<line x1="{_f(MARGIN_L)}" y1="{_f(thr_y)}" x2="{_f(WIDTH - MARGIN_R)}" '
        f'y2="{_f(thr_y)}" stroke="#888" stroke-width="1" stroke-dasharray="4 3"/>'
    )
    parts.append(_text(MARGIN_L + 4, thr_y - 4, "p = 0.05", size=9, color="#888"))
    for pv in pvalues:
        xs = [(d - origin).days for d in pv.dates]
        dash = "5 3" if pv.direction.value == "downtrend" else ""
        parts.append(_polyline(bottom, xs, pv.p, color_of.get(pv.proxy_id, "#333"), 1.2, dash))

    for ev in sorted(events, key=lambda e: (e.event_date, e.proxy_id, e.direction.value)):
        ex = top.x((ev.event_date - origin).days)
        color = color_of.get(ev.proxy_id, "#333")
        for frame in (top, bottom):
            parts.append(
                f'<line x1="{_f(ex)}" y1="{_f(frame.top + MARGIN_T)}" x2="{_f(ex)}" '
                f'y2="{_f(frame.top + PANEL_H - MARGIN_B)}" stroke="{color}" '
                f'stroke-width="1" stroke-dasharray="2 2" opacity="0.7"/>'
            )

    parts += _date_axis(top, origin, origin, end)
    parts += _date_axis(bottom, origin, origin, end)
    parts.append(_text(14, top.y(0.5), "signal", size=10, anchor="middle"))
    parts.append(_text(14, bottom.y(0.5), "p", size=10, anchor="middle"))
    return _document(parts, 2 * PANEL_H)


def _pmf_bars(frame: _Frame, xs: np.ndarray, pmf: np.ndarray, bar_w: float) -> list[str]:
    base_y = frame.y(0.0)
    parts = []
    for x, p in zip(xs, pmf):
        if p <= 0:
            continue
        top_y = frame.y(float(p))
        parts.append(
            f'<rect x="{_f(frame.x(float(x)))}" y="{_f(top_y)}" '
            f'width="{_f(max(bar_w - 0.5, 0.5))}" height="{_f(base_y - top_y)}" '
            f'fill="{PALETTE[0]}" opacity="0.85"/>'
        )
    return parts


def posterior_figure(
    location: str,
    posterior: TimeToEventPosterior,
    gold: DailySeries | None = None,
) -> str:
    """Bar chart of the days-until-outbreak pmf.

    When the gold series is given the bars are placed on its calendar axis
    (anchored after the as-of date) with the normalized gold curve behind
    them; otherwise a plain days-ahead axis is used.
    """
    pmf = posterior.pmf
    support = posterior.support
    peak = float(pmf.max()) or 1.0
    title = f"{location}: days until outbreak as of {posterior.as_of_date.isoformat()}"
    parts = [_text(MARGIN_L, 18, title, size=13)]

    if gold is None:
        frame = _Frame(float(support[0]), float(support[-1]) + 1.0, 0.0, peak, 0)
        bar_w = (WIDTH - MARGIN_L - MARGIN_R) / len(support)
        parts += _pmf_bars(frame, support.astype(float), pmf, bar_w)
        base_y = frame.y(0.0)
        parts.append(
            f'<line x1="{_f(MARGIN_L)}" y1="{_f(base_y)}" x2="{_f(WIDTH - MARGIN_R)}" '
            f'y2="{_f(base_y)}" stroke="#999" stroke-width="1"/>'
        )
        for tick in range(0, int(support[-1]) + 1, 30):
            tx = frame.x(float(tick))
            parts.append(
                f'<line x1="{_f(tx)}" y1="{_f(base_y)}" x2="{_f(tx)}" y2="{_f(base_y + 4)}" '
                f'stroke="#999" stroke-width="1"/>'
            )
            parts.append(_text(tx, base_y + 16, str(tick), size=10, anchor="middle"))
        parts.append(_text(WIDTH / 2, base_y + 30, "days ahead", size=10, anchor="middle"))
        return _document(parts, PANEL_H)

    origin = gold.start_date
    as_of_day = (posterior.as_of_date - origin).days
    last_day = max((gold.end_date - origin).days, as_of_day + int(support[-1]) + 1)
    frame = _Frame(0.0, float(last_day), 0.0, 1.0, 0)

    lo, hi = float(gold.values.min()), float(gold.values.max())
    norm = (gold.values - lo) / (hi - lo) if hi > lo else np.zeros_like(gold.values)
    parts.append(_polyline(frame, np.arange(len(gold)), norm, PALETTE[6], 1.2))
    parts.append(
        _text(WIDTH - MARGIN_R - 150, 34, f"{gold.proxy_id} (normalized)", size=10, color=PALETTE[6])
    )
    parts.append(_text(WIDTH - MARGIN_R - 150, 47, "posterior mass", size=10, color=PALETTE[0]))

    # pmf rescaled to the panel height so shape stays readable next to the curve
    bar_w = (WIDTH - MARGIN_L - MARGIN_R) / float(last_day + 1)
    parts += _pmf_bars(frame, as_of_day + support.astype(float), pmf / peak, bar_w)

    ax = frame.x(float(as_of_day))
    parts.append(
        f'<line x1="{_f(ax)}" y1="{_f(MARGIN_T)}" x2="{_f(ax)}" '
        f'y2="{_f(PANEL_H - MARGIN_B)}" stroke="#555" stroke-width="1" '
        f'stroke-dasharray="4 3"/>'
    )
    parts.append(_text(ax + 4, MARGIN_T + 10, "as of", size=9, color="#555"))
    parts += _date_axis(frame, origin, origin, origin + dt.timedelta(days=last_day))
    return _document(parts, PANEL_H)
