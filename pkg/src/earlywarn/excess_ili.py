"""Counterfactual flu baselines and the Excess ILI gold-standard series.

Observed influenza-like-illness activity in early 2020 mixes true influenza
with the incoming pandemic signal. Two counterfactuals estimate what flu
alone would have produced: a descriptive epidemic model (IDEA) fitted to the
pre-pandemic season, and an extrapolation of laboratory flu-positivity to all
ILI patients. Excess ILI is observed activity minus the virology-based
counterfactual, negative values retained.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import DataError, NumericalError

SEASON_ACTIVITY_THRESHOLD_PCT = 2.0
R0_BOUNDS = (1.0, 10.0)
DISCOUNT_BOUNDS = (0.0, 1.0)


@dataclass(frozen=True)
class WeeklySeries:
    """Weekly observations; weeks are start dates, 7-day aligned, increasing."""

    location: str
    week_starts: tuple[dt.date, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise DataError("weekly series needs a non-empty 1-D value vector")
        if not np.all(np.isfinite(arr)):
            raise DataError("weekly series contains non-finite values")
        if len(self.week_starts) != arr.size:
            raise DataError("weekly series weeks and values differ in length")
        for a, b in zip(self.week_starts, self.week_starts[1:]):
            gap = (b - a).days
            if gap <= 0 or gap % 7:
                raise DataError(f"weeks must increase in 7-day steps, got {a} -> {b}")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "week_starts", tuple(self.week_starts))

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class IdeaFit:
    """Fitted incidence-decay model: incidence (r0 / (1+d)^t)^t at step t."""

    r0: float
    d: float
    season_start: dt.date
    serial_interval_days: float = 3.5

    def __post_init__(self):
        if self.r0 <= 0:
            raise DataError("r0 must be positive")
        if self.d < 0:
            raise DataError("discount factor must be non-negative")
        if self.serial_interval_days <= 0:
            raise DataError("serial interval must be positive")


@dataclass(frozen=True)
class VirologyRecord:
    week: dt.date
    flu_positive: float
    total_specimens: float
    ili_visits: float

    def __post_init__(self):
        if self.flu_positive < 0 or self.total_specimens < 0 or self.ili_visits < 0:
            raise DataError(f"virology counts for {self.week} must be non-negative")
        if self.flu_positive > self.total_specimens:
            raise DataError(f"{self.week}: more flu positives than specimens")


def flu_season_start(
    ili_activity: WeeklySeries, threshold_pct: float = SEASON_ACTIVITY_THRESHOLD_PCT
) -> dt.date:
    """First week of two consecutive weeks with activity above the threshold.

    Consecutive means adjacent rows exactly one week apart.
    """
    weeks = ili_activity.week_starts
    vals = ili_activity.values
    for i in range(len(vals) - 1):
        adjacent = (weeks[i + 1] - weeks[i]).days == 7
        if adjacent and vals[i] > threshold_pct and vals[i + 1] > threshold_pct:
            return weeks[i]
    raise DataError(
        f"no two consecutive weeks above {threshold_pct}% activity "
        f"in {ili_activity.location}"
    )


def idea_incidence(fit: IdeaFit, t) -> float | np.ndarray:
    """Incident count at serial-interval step t: (r0 / (1+d)^t)^t."""
    ts = np.asarray(t, dtype=float)
    if np.any(ts < 0):
        raise DataError("IDEA steps must be non-negative")
    out = np.exp(ts * (np.log(fit.r0) - ts * np.log1p(fit.d)))
    return float(out) if np.isscalar(t) or ts.ndim == 0 else out


def _idea_steps(
    weeks: tuple[dt.date, ...], season_start: dt.date, serial_interval_days: float = 3.5
) -> np.ndarray:
    offsets = np.array([(w - season_start).days for w in weeks], dtype=float)
    if np.any(offsets % 7):
        raise DataError("ILI weeks are not aligned to the season start week")
    # two serial intervals per week at the default half-week interval
    return offsets / serial_interval_days


def fit_idea(
    ili_counts: WeeklySeries,
    season_start: dt.date,
    fit_end: dt.date,
    serial_interval_days: float = 3.5,
) -> IdeaFit:
    """Least-squares IDEA fit on weeks in [season_start, fit_end].

    Coarse grid search over the (r0, discount) box followed by a local
    simplex polish; the growth side of the box is open at r0 = 1.
    """
    sel = [
        i
        for i, w in enumerate(ili_counts.week_starts)
        if season_start <= w <= fit_end
    ]
    if len(sel) < 4:
        raise DataError(
            f"IDEA fit needs at least 4 weeks in range, found {len(sel)}"
        )
    weeks = tuple(ili_counts.week_starts[i] for i in sel)
    observed = ili_counts.values[sel]
    steps = _idea_steps(weeks, season_start, serial_interval_days)

    def ssr_grid(r0s: np.ndarray, ds: np.ndarray) -> np.ndarray:
        log_r0 = np.log(r0s)[:, None, None]
        log_1d = np.log1p(ds)[None, :, None]
        curves = np.exp(steps[None, None, :] * (log_r0 - steps[None, None, :] * log_1d))
        resid = curves - observed[None, None, :]
        return np.einsum("ijk,ijk->ij", resid, resid)

    r0s = np.linspace(R0_BOUNDS[0] + 0.01, R0_BOUNDS[1], 180)
    ds = np.linspace(DISCOUNT_BOUNDS[0], DISCOUNT_BOUNDS[1], 101)
    grid = ssr_grid(r0s, ds)
    i, j = np.unravel_index(int(np.argmin(grid)), grid.shape)

    def ssr_point(params) -> float:
        r0, d = params
        curve = np.exp(steps * (np.log(r0) - steps * np.log1p(d)))
        resid = curve - observed
        return float(resid @ resid)

    result = minimize(
        ssr_point,
        x0=np.array([r0s[i], ds[j]]),
        method="Nelder-Mead",
        bounds=[(R0_BOUNDS[0] + 1e-9, R0_BOUNDS[1]), DISCOUNT_BOUNDS],
        options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000},
    )
    if not result.success:
        raise NumericalError(f"IDEA fit did not converge: {result.message}")
    r0, d = result.x
    return IdeaFit(
        r0=float(r0),
        d=float(d),
        season_start=season_start,
        serial_interval_days=serial_interval_days,
    )


def idea_counterfactual(fit: IdeaFit, weeks: tuple[dt.date, ...]) -> WeeklySeries:
    """IDEA-implied weekly counts on the given weeks (documentation output)."""
    steps = _idea_steps(weeks, fit.season_start, fit.serial_interval_days)
    if np.any(steps < 0):
        raise DataError("counterfactual weeks precede the season start")
    return WeeklySeries(location="idea", week_starts=weeks, values=idea_incidence(fit, steps))


def virology_counterfactual(records: list[VirologyRecord], location: str = "") -> WeeklySeries:
    """Flu burden extrapolated to all ILI patients: positives/specimens * visits.

    Weeks without any tested specimens carry no information and are omitted.
    """
    kept = sorted((r for r in records if r.total_specimens > 0), key=lambda r: r.week)
    if not kept:
        raise DataError("no virology week has a positive specimen count")
    return WeeklySeries(
        location=location,
        week_starts=tuple(r.week for r in kept),
        values=np.array([r.flu_positive * r.ili_visits / r.total_specimens for r in kept]),
    )


def map_flu_to_ili(
    flu_counts: WeeklySeries, ili_activity: WeeklySeries, precovid_end: dt.date
) -> WeeklySeries:
    """Affine map from extrapolated flu counts to ILI activity units.

    Ordinary least squares a*F + b fitted on overlapping weeks up to
    ``precovid_end``, then applied to every week of ``flu_counts``.
    """
    ili_by_week = dict(zip(ili_activity.week_starts, ili_activity.values))
    train = [
        (f, ili_by_week[w])
        for w, f in zip(flu_counts.week_starts, flu_counts.values)
        if w <= precovid_end and w in ili_by_week
    ]
    if len(train) < 3:
        raise DataError(f"OLS mapping needs >= 3 overlapping weeks, found {len(train)}")
    f = np.array([x for x, _ in train])
    target = np.array([y for _, y in train])
    if float(f.std()) == 0.0:
        raise DataError("flu counterfactual is constant over training weeks")
    design = np.column_stack([f, np.ones_like(f)])
    (a, b), *_ = np.linalg.lstsq(design, target, rcond=None)
    return WeeklySeries(
        location=flu_counts.location,
        week_starts=flu_counts.week_starts,
        values=a * flu_counts.values + b,
    )


def excess_ili(observed: WeeklySeries, counterfactual: WeeklySeries) -> WeeklySeries:
    """Observed minus counterfactual activity; negative excess is retained."""
    if observed.week_starts != counterfactual.week_starts:
        raise DataError("excess_ili requires identical week grids")
    return WeeklySeries(
        location=observed.location,
        week_starts=observed.week_starts,
        values=observed.values - counterfactual.values,
    )
