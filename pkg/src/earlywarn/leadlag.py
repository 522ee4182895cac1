"""Cross-state summaries of which signals fire first and by how much."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detector import TrendEvent
from .errors import DataError

MAX_ABS_DIFF_DAYS = 50


@dataclass(frozen=True)
class LeadLagSummary:
    """Per-state day differences (input minus reference) with quartiles.

    Negative medians mean the input signal typically fires before the
    reference. States missing either event, or differing by more than the
    outlier cutoff, are excluded from ``diffs``.
    """

    input_proxy: str
    reference_proxy: str
    states: tuple[str, ...]
    diffs: tuple[int, ...]
    median: float
    q1: float
    q3: float

    def __post_init__(self):
        if len(self.states) != len(self.diffs):
            raise DataError("one state per diff is required")
        if not self.q1 <= self.median <= self.q3:
            raise DataError("median must lie between the quartiles")


def summarize_leads(
    events: dict[tuple[str, str], TrendEvent],
    input_proxy: str,
    reference_proxy: str,
    max_abs_days: int = MAX_ABS_DIFF_DAYS,
) -> LeadLagSummary:
    """Quartile summary of per-state event-date differences.

    ``events`` maps (state, proxy_id) to that state's first-wave event.
    Quartiles use the linear-interpolation convention.
    """
    kept_states = []
    diffs = []
    for state in sorted({s for s, _ in events}):
        a = events.get((state, input_proxy))
        b = events.get((state, reference_proxy))
        if a is None or b is None:
            continue
        diff = (a.event_date - b.event_date).days
        if abs(diff) > max_abs_days:
            continue
        kept_states.append(state)
        diffs.append(diff)
    if not diffs:
        raise DataError(
            f"no state has events for both {input_proxy} and {reference_proxy} "
            f"within {max_abs_days} days"
        )
    arr = np.array(diffs, dtype=float)
    q1, med, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
    return LeadLagSummary(
        input_proxy=input_proxy,
        reference_proxy=reference_proxy,
        states=tuple(kept_states),
        diffs=tuple(diffs),
        median=float(med),
        q1=float(q1),
        q3=float(q3),
    )


def first_activation_tally(events: dict[tuple[str, str], TrendEvent]) -> dict[str, float]:
    """How many states each proxy fired first in, splitting ties evenly."""
    by_state: dict[str, list[TrendEvent]] = {}
    for (state, _), event in events.items():
        by_state.setdefault(state, []).append(event)
    tally: dict[str, float] = {}
    for state, evs in by_state.items():
        earliest = min(e.event_date for e in evs)
        winners = [e.proxy_id for e in evs if e.event_date == earliest]
        for pid in winners:
            tally[pid] = tally.get(pid, 0.0) + 1.0 / len(winners)
    return dict(sorted(tally.items()))
