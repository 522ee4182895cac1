"""Regenerate the bundled New York case-count series.

Daily new confirmed COVID-19 cases for New York State, reconstructed from
widely published cumulative totals (state health department figures as
mirrored by the public dashboards). Cumulative counts are interpolated on a
log scale with a monotone cubic (PCHIP), differenced to daily counts, and
rounded to whole cases. The result approximates the public daily series
without reproducing any single repository byte-for-byte; see data/README.md.

Run from the repository root:  python3 scripts/make_bundled_data.py
"""

from __future__ import annotations

import datetime as dt
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

# (date, cumulative confirmed cases) anchor points, state-wide
MILESTONES: list[tuple[str, int]] = [
    ("2020-03-01", 1),
    ("2020-03-04", 11),
    ("2020-03-06", 44),
    ("2020-03-08", 106),
    ("2020-03-10", 173),
    ("2020-03-12", 328),
    ("2020-03-14", 613),
    ("2020-03-16", 950),
    ("2020-03-18", 2382),
    ("2020-03-20", 7102),
    ("2020-03-22", 15168),
    ("2020-03-25", 30811),
    ("2020-03-28", 52318),
    ("2020-03-31", 75795),
    ("2020-04-03", 102863),
    ("2020-04-06", 130689),
    ("2020-04-10", 170512),
    ("2020-04-14", 202208),
    ("2020-04-18", 236732),
    ("2020-04-22", 257216),
    ("2020-04-26", 288045),
    ("2020-04-30", 304372),
    ("2020-05-05", 321192),
    ("2020-05-10", 333122),
    ("2020-05-15", 343051),
    ("2020-05-20", 352845),
    ("2020-05-25", 361515),
    ("2020-05-31", 368284),
    ("2020-06-07", 377714),
    ("2020-06-15", 383944),
    ("2020-06-22", 388488),
    ("2020-06-30", 392539),
]

OUT = Path(__file__).resolve().parent.parent / "data" / "ny_cases.csv"


def main() -> None:
    dates = [dt.date.fromisoformat(d) for d, _ in MILESTONES]
    totals = np.array([c for _, c in MILESTONES], dtype=float)
    if np.any(np.diff(totals) <= 0):
        raise SystemExit("milestones must be strictly increasing")
    t0 = dates[0]
    knots = np.array([(d - t0).days for d in dates], dtype=float)
    spline = PchipInterpolator(knots, np.log(totals))

    days = np.arange(0.0, knots[-1] + 1.0)
    cumulative = np.exp(spline(days))
    # monotone on the log scale, so diffs stay non-negative
    new_cases = np.diff(cumulative, prepend=0.0)
    counts = np.rint(new_cases).astype(int)

    lines = ["date,value"]
    lines += [
        f"{(t0 + dt.timedelta(days=int(i))).isoformat()},{c}"
        for i, c in zip(days, counts)
    ]
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(lines) + "\n", encoding="utf-8")
    peak = int(np.argmax(counts))
    print(
        f"wrote {OUT} ({len(counts)} days, peak {counts[peak]} on "
        f"{t0 + dt.timedelta(days=peak)})"
    )


if __name__ == "__main__":
    main()
