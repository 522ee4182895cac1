"""CSV loading, gap resolution, and the run manifest.

Input files are one-per-(location, proxy) CSVs with a `date,value` header.
Interior gaps (missing rows or blank values) are filled by linear
interpolation; leading and trailing gaps are dropped, so a loaded series is
always contiguous and NaN-free. Weekly files are expanded to a daily grid by
repeating each week's value over its seven days.

The manifest is a YAML document declaring the sources plus detector, combine,
and time-to-event settings; `load_manifest` turns it into typed config
objects and refuses unknown keys so typos fail loudly.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .detector import DetectorConfig
from .errors import ConfigError, DataError
from .series import DailySeries, SeriesKind, aggregate_weighted, shift_for_delay

_KINDS = {k.value: k for k in SeriesKind}
_CADENCES = ("daily", "weekly")


def _parse_date(text: str, where: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError as exc:
        raise DataError(f"{where}: bad ISO date {text!r}") from exc


def read_date_value_csv(path: Path | str) -> list[tuple[dt.date, float | None]]:
    """Raw `date,value` rows, sorted; blank values become None (a gap)."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    rows: list[tuple[dt.date, float | None]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["date", "value"]:
            raise DataError(f"{path}: expected header 'date,value', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise DataError(f"{path}:{lineno}: expected two columns")
            day = _parse_date(row[0], f"{path}:{lineno}")
            raw = row[1].strip()
            if not raw:
                rows.append((day, None))
                continue
            try:
                value = float(raw)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad value {raw!r}") from exc
            if not np.isfinite(value):
                raise DataError(f"{path}:{lineno}: non-finite value")
            rows.append((day, value))
    rows.sort(key=lambda r: r[0])
    for (a, _), (b, _) in zip(rows, rows[1:]):
        if a == b:
            raise DataError(f"{path}: duplicate date {a}")
    return rows


def _fill_gaps(days: list[dt.date], values: list[float | None], step: int, where: str) -> tuple[dt.date, np.ndarray]:
    """Contiguous grid with interior gaps interpolated, edge gaps dropped."""
    present = [i for i, v in enumerate(values) if v is not None]
    if not present:
        raise DataError(f"{where}: no usable values")
    days = days[present[0] : present[-1] + 1]
    values = values[present[0] : present[-1] + 1]
    start, end = days[0], days[-1]
    span = (end - start).days
    if span % step:
        raise DataError(f"{where}: dates are not aligned to a {step}-day grid")
    n = span // step + 1
    grid = np.full(n, np.nan)
    for day, v in zip(days, values):
        offset = (day - start).days
        if offset % step:
            raise DataError(f"{where}: date {day} off the {step}-day grid")
        if v is not None:
            grid[offset // step] = v
    known = np.flatnonzero(~np.isnan(grid))
    missing = np.flatnonzero(np.isnan(grid))
    if missing.size:
        grid[missing] = np.interp(missing, known, grid[known])
    return start, grid


def load_daily_csv(
    path: Path | str,
    location: str,
    proxy_id: str,
    kind: SeriesKind = SeriesKind.PROXY,
    delay_days: int = 0,
) -> DailySeries:
    rows = read_date_value_csv(path)
    start, values = _fill_gaps([d for d, _ in rows], [v for _, v in rows], 1, str(path))
    return DailySeries(
        location=location,
        proxy_id=proxy_id,
        start_date=start,
        values=values,
        delay_days=delay_days,
        kind=kind,
    )


def load_weekly_csv_as_daily(
    path: Path | str,
    location: str,
    proxy_id: str,
    kind: SeriesKind = SeriesKind.PROXY,
    delay_days: int = 0,
) -> DailySeries:
    """Weekly `date,value` rows expanded to a daily step function.

    Week rows must share a weekday; each value covers the seven days starting
    at its row date.
    """
    rows = read_date_value_csv(path)
    start, weekly = _fill_gaps([d for d, _ in rows], [v for _, v in rows], 7, str(path))
    return DailySeries(
        location=location,
        proxy_id=proxy_id,
        start_date=start,
        values=np.repeat(weekly, 7),
        delay_days=delay_days,
        kind=kind,
    )


@dataclass(frozen=True)
class SourceSpec:
    path: str
    proxy_id: str
    location: str
    kind: SeriesKind = SeriesKind.PROXY
    delay_days: int = 0
    cadence: str = "daily"
    weight: float | None = None

    def __post_init__(self):
        if self.delay_days < 0:
            raise ConfigError(f"{self.path}: delay_days must be >= 0")
        if self.cadence not in _CADENCES:
            raise ConfigError(f"{self.path}: cadence must be one of {_CADENCES}")
        if self.weight is not None and self.weight <= 0:
            raise ConfigError(f"{self.path}: aggregation weight must be positive")


@dataclass(frozen=True)
class CombineConfig:
    p_floor: float = 1e-6
    weights: dict[str, float] | None = None

    def __post_init__(self):
        if not 0 < self.p_floor < 1:
            raise ConfigError("p_floor must lie in (0, 1)")
        if self.weights is not None:
            if not self.weights:
                raise ConfigError("combine weights, if given, must be non-empty")
            for pid, w in self.weights.items():
                if w <= 0:
                    raise ConfigError(f"combine weight for {pid} must be positive")


@dataclass(frozen=True)
class T2EConfig:
    gold_proxy: str = "confirmed_cases"
    horizon_days: int = 180
    smoothing: float = 1e-6
    bandwidth_floor: float = 0.5

    def __post_init__(self):
        if self.horizon_days < 1:
            raise ConfigError("horizon_days must be >= 1")
        if self.smoothing < 0:
            raise ConfigError("smoothing must be >= 0")
        if self.bandwidth_floor <= 0:
            raise ConfigError("bandwidth_floor must be positive")


@dataclass(frozen=True)
class ExcessIliSpec:
    location: str
    ili_path: str
    virology_path: str
    precovid_end: dt.date = dt.date(2020, 2, 29)
    serial_interval_days: float = 3.5

    def __post_init__(self):
        if self.serial_interval_days <= 0:
            raise ConfigError("serial_interval_days must be positive")


@dataclass(frozen=True)
class PipelineManifest:
    sources: tuple[SourceSpec, ...]
    detector: DetectorConfig = DetectorConfig()
    combine: CombineConfig = CombineConfig()
    t2e: T2EConfig = T2EConfig()
    excess_ili: tuple[ExcessIliSpec, ...] = ()
    output_dir: str = "out"
    seed: int = 0
    base_dir: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        seen: dict[tuple[str, str], bool] = {}
        for src in self.sources:
            key = (src.location, src.proxy_id)
            weighted = src.weight is not None
            if key in seen:
                if not (seen[key] and weighted):
                    raise ConfigError(
                        f"duplicate source {key}: repeated (location, proxy_id) is only "
                        "allowed for weighted sub-region files"
                    )
            seen[key] = weighted


def _build(cls, raw: dict, where: str, converters: dict | None = None):
    allowed = {f.name for f in fields(cls) if f.name != "base_dir"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = dict(raw)
    for key, conv in (converters or {}).items():
        if key in kwargs:
            kwargs[key] = conv(kwargs[key])
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _as_date(value) -> dt.date:
    if isinstance(value, dt.date):
        return value
    return _parse_date(str(value), "manifest date")


def load_manifest(path: Path | str) -> PipelineManifest:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"manifest not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: YAML parse error: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: manifest must be a mapping")
    known = {"sources", "detector", "combine", "t2e", "excess_ili", "output_dir", "seed"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}: unknown top-level keys {sorted(unknown)}")
    sources_raw = raw.get("sources")
    if not sources_raw or not isinstance(sources_raw, list):
        raise ConfigError(f"{path}: manifest needs a non-empty 'sources' list")
    sources = tuple(
        _build(SourceSpec, s, f"{path} source #{i}", {"kind": _parse_kind})
        for i, s in enumerate(sources_raw)
    )
    detector = _build(
        DetectorConfig,
        raw.get("detector", {}) or {},
        f"{path} detector",
        {"rate_bounds": tuple, "amplitude_bounds": tuple},
    )
    combine = _build(CombineConfig, raw.get("combine", {}) or {}, f"{path} combine")
    t2e = _build(T2EConfig, raw.get("t2e", {}) or {}, f"{path} t2e")
    excess = tuple(
        _build(ExcessIliSpec, e, f"{path} excess_ili #{i}", {"precovid_end": _as_date})
        for i, e in enumerate(raw.get("excess_ili", []) or [])
    )
    return PipelineManifest(
        sources=sources,
        detector=detector,
        combine=combine,
        t2e=t2e,
        excess_ili=excess,
        output_dir=str(raw.get("output_dir", "out")),
        seed=int(raw.get("seed", 0)),
        base_dir=path.parent,
    )


def _parse_kind(value) -> SeriesKind:
    try:
        return _KINDS[str(value).lower()]
    except KeyError:
        raise ConfigError(f"unknown series kind {value!r}; use one of {sorted(_KINDS)}")


def load_sources(manifest: PipelineManifest) -> dict[tuple[str, str], DailySeries]:
    """Load, delay-shift, and sub-region-aggregate every declared source.

    Paths are resolved relative to the manifest file. Sources sharing a
    (location, proxy_id) are combined with aggregate_weighted.
    """
    groups: dict[tuple[str, str], list[tuple[DailySeries, float]]] = {}
    for src in manifest.sources:
        loader = load_daily_csv if src.cadence == "daily" else load_weekly_csv_as_daily
        raw = loader(
            manifest.base_dir / src.path,
            location=src.location,
            proxy_id=src.proxy_id,
            kind=src.kind,
            delay_days=src.delay_days,
        )
        groups.setdefault((src.location, src.proxy_id), []).append(
            (shift_for_delay(raw), 1.0 if src.weight is None else src.weight)
        )
    out: dict[tuple[str, str], DailySeries] = {}
    for key, members in groups.items():
        if len(members) == 1:
            out[key] = members[0][0]
        else:
            aligned = _intersect_dates([s for s, _ in members])
            out[key] = aggregate_weighted(aligned, [w for _, w in members])
    return out


def _intersect_dates(series: list[DailySeries]) -> list[DailySeries]:
    start = max(s.start_date for s in series)
    end = min(s.end_date for s in series)
    if end < start:
        raise DataError(
            f"sub-region files for {series[0].location}/{series[0].proxy_id} share no dates"
        )
    out = []
    for s in series:
        i = (start - s.start_date).days
        j = (end - s.start_date).days + 1
        out.append(replace(s, start_date=start, values=s.values[i:j]))
    return out


def read_weekly_table(path: Path | str, columns: tuple[str, ...]) -> dict[dt.date, tuple[float, ...]]:
    """Weekly CSV with a `week_start` column plus the named numeric columns."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    out: dict[dt.date, tuple[float, ...]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        have = tuple(reader.fieldnames or ())
        missing = {"week_start", *columns} - set(have)
        if missing:
            raise DataError(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            week = _parse_date(row["week_start"], f"{path}:{lineno}")
            if week in out:
                raise DataError(f"{path}: duplicate week {week}")
            try:
                out[week] = tuple(float(row[c]) for c in columns)
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: bad numeric value") from exc
    if not out:
        raise DataError(f"{path}: no data rows")
    return dict(sorted(out.items()))


def _as_leads(value) -> tuple[tuple[str, int], ...]:
    if isinstance(value, dict):
        items = value.items()
    elif isinstance(value, (list, tuple)):
        items = [(p[0], p[1]) for p in value]
    else:
        raise ConfigError("proxy_leads must be a mapping or a list of pairs")
    return tuple((str(pid), int(lead)) for pid, lead in items)


def load_scenario(path: Path | str):
    """Synthetic scenario spec from the same YAML format as the manifest."""
    from .synth import ScenarioSpec

    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"scenario spec not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: YAML parse error: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: scenario spec must be a mapping")
    return _build(
        ScenarioSpec,
        raw,
        str(path),
        {
            "states": lambda v: tuple(str(s) for s in v),
            "onset_days": lambda v: tuple(int(d) for d in v),
            "proxy_leads": _as_leads,
            "start_date": _as_date,
        },
    )
