"""Command line interface.

Subcommands mirror the pipeline stages: detect, combine, predict,
excess-ili, simulate, leadlag. All randomness flows from the manifest seed
(--seed overrides it), every output writer is deterministic, and the worker
count never changes results, so identical invocations produce byte-identical
output trees.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import report, svgplot
from .detector import Direction
from .errors import ConfigError, DataError, EarlywarnError
from .excess_ili import (
    VirologyRecord,
    WeeklySeries,
    excess_ili,
    fit_idea,
    flu_season_start,
    idea_counterfactual,
    map_flu_to_ili,
    virology_counterfactual,
)
from .ingest import PipelineManifest, load_manifest, load_scenario, load_sources, read_weekly_table
from .leadlag import first_activation_tally, summarize_leads
from .pipeline import (
    DetectionResult,
    combine_location,
    detector_with_seed,
    fit_lag_models,
    predict_location,
    run_detection,
)
from .series import SeriesKind, clip_end
from .synth import gen_multistate_scenario


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9.-]+", "_", name)


def _parse_cli_date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError as exc:
        raise ConfigError(f"--as-of must be an ISO date (YYYY-MM-DD), got {text!r}") from exc


def _prepare(args) -> tuple[PipelineManifest, Path]:
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    manifest = load_manifest(args.manifest)
    if args.seed is not None:
        manifest = replace(manifest, seed=int(args.seed))
    out_dir = Path(args.out) if args.out else manifest.base_dir / manifest.output_dir
    return manifest, out_dir


def _as_of(args) -> dt.date | None:
    return _parse_cli_date(args.as_of) if getattr(args, "as_of", None) else None


def _detect(manifest: PipelineManifest, args):
    series_map = load_sources(manifest)
    cfg = detector_with_seed(manifest.detector, manifest.seed)
    detection = run_detection(series_map, cfg, threads=args.threads, as_of=_as_of(args))
    return series_map, cfg, detection


def cmd_detect(args) -> None:
    manifest, out = _prepare(args)
    series_map, cfg, detection = _detect(manifest, args)
    as_of = _as_of(args)

    for (loc, pid, direction) in sorted(detection.pvalues):
        report.write_pvalue_csv(
            out / "pvalues" / f"{_slug(loc)}_{_slug(pid)}_{direction.value}.csv",
            detection.pvalues[(loc, pid, direction)],
        )
    all_events = [e for key in sorted(detection.events) for e in detection.events[key]]
    report.write_events_json(out / "events.json", all_events)

    locations = sorted({loc for loc, _, _ in detection.pvalues})
    for loc in locations:
        shown = sorted({(l, p) for (l, p, _) in detection.pvalues if l == loc})
        series = [series_map[key] for key in shown]
        if as_of is not None:
            series = [clip_end(s, as_of) for s in series]
        pvs = [
            detection.pvalues[key] for key in sorted(detection.pvalues) if key[0] == loc
        ]
        events = [
            e
            for key in sorted(detection.events)
            if key[0] == loc
            for e in detection.events[key]
        ]
        report.write_text(
            out / "plots" / f"{_slug(loc)}.svg",
            svgplot.detect_figure(loc, series, pvs, events),
        )
    print(
        f"detect: {len(detection.pvalues)} p-value series, {len(all_events)} events, "
        f"{len(locations)} locations -> {out}"
    )


def cmd_combine(args) -> None:
    manifest, out = _prepare(args)
    series_map, cfg, detection = _detect(manifest, args)

    locations = sorted({loc for loc, _ in series_map})
    all_events = []
    wrote = 0
    for loc in locations:
        present = {
            pid
            for (l, pid, d) in detection.pvalues
            if l == loc
            and d is Direction.UPTREND
            and series_map[(l, pid)].kind is not SeriesKind.GOLD
        }
        if len(present) < 2:
            continue
        for direction in (Direction.UPTREND, Direction.DOWNTREND):
            combined, events = combine_location(
                detection, series_map, loc, direction, manifest.combine
            )
            report.write_pvalue_csv(
                out / "combined" / f"{_slug(loc)}_{direction.value}.csv", combined
            )
            all_events += events
            wrote += 1
    if not wrote:
        raise DataError("no location has two or more proxy series to combine")
    report.write_events_json(out / "combined" / "events.json", all_events)
    print(f"combine: {wrote} combined series, {len(all_events)} events -> {out / 'combined'}")


def cmd_predict(args) -> None:
    if not args.as_of:
        raise ConfigError("predict requires --as-of")
    as_of = _parse_cli_date(args.as_of)
    manifest, out = _prepare(args)
    series_map = load_sources(manifest)
    cfg = detector_with_seed(manifest.detector, manifest.seed)

    # lag models pool first-wave events from the full history
    detection = run_detection(series_map, cfg, threads=args.threads)
    models = fit_lag_models(detection, series_map, manifest.t2e)

    gold = manifest.t2e.gold_proxy
    locations = sorted(
        {loc for (loc, pid) in series_map if pid != gold}
    )
    if not locations:
        raise DataError("manifest declares no proxy series to predict from")
    for loc in locations:
        posterior = predict_location(
            loc, series_map, models, cfg, manifest.t2e, as_of, threads=args.threads
        )
        report.write_posterior_json(out / "predict" / f"{_slug(loc)}.json", loc, posterior)
        report.write_posterior_csv(out / "predict" / f"{_slug(loc)}.csv", posterior)
        gold_series = series_map.get((loc, gold))
        if gold_series is not None and gold_series.start_date <= as_of:
            gold_series = clip_end(gold_series, as_of)
        report.write_text(
            out / "predict" / f"{_slug(loc)}.svg",
            svgplot.posterior_figure(loc, posterior, gold=gold_series),
        )
    print(f"predict: posteriors for {len(locations)} locations as of {as_of} -> {out / 'predict'}")


def cmd_excess_ili(args) -> None:
    manifest, out = _prepare(args)
    if not manifest.excess_ili:
        raise ConfigError("manifest declares no excess_ili inputs")
    for spec in manifest.excess_ili:
        ili = read_weekly_table(
            manifest.base_dir / spec.ili_path, ("activity_pct", "ili_visits")
        )
        weeks = tuple(ili)
        activity = WeeklySeries(
            spec.location, weeks, np.array([ili[w][0] for w in weeks])
        )
        counts = WeeklySeries(spec.location, weeks, np.array([ili[w][1] for w in weeks]))
        season = flu_season_start(activity)
        fit = fit_idea(counts, season, spec.precovid_end, spec.serial_interval_days)
        idea = idea_counterfactual(fit, tuple(w for w in weeks if w >= season))

        virology = read_weekly_table(
            manifest.base_dir / spec.virology_path, ("flu_positive", "total_specimens")
        )
        records = [
            VirologyRecord(
                week=w,
                flu_positive=flu_pos,
                total_specimens=total,
                ili_visits=ili[w][1],
            )
            for w, (flu_pos, total) in virology.items()
            if w in ili
        ]
        flu = virology_counterfactual(records, spec.location)
        mapped = map_flu_to_ili(flu, activity, spec.precovid_end)
        act_by_week = dict(zip(weeks, activity.values))
        observed = WeeklySeries(
            spec.location,
            mapped.week_starts,
            np.array([act_by_week[w] for w in mapped.week_starts]),
        )
        excess = excess_ili(observed, mapped)
        report.write_excess_ili_csv(
            out / "excess_ili" / f"{_slug(spec.location)}.csv",
            observed,
            mapped,
            excess,
            idea=idea,
        )
        print(
            f"excess-ili: {spec.location} season start {season}, "
            f"r0 {fit.r0:.3f}, discount {fit.d:.3f} -> {out / 'excess_ili'}"
        )


def cmd_simulate(args) -> None:
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    spec = load_scenario(args.manifest)
    if args.seed is not None:
        spec = replace(spec, seed=int(args.seed))
    out = Path(args.out) if args.out else Path("scenario_out")

    series_map = gen_multistate_scenario(spec)
    sources = []
    for key in sorted(series_map):
        state, pid = key
        s = series_map[key]
        rel = f"series/{_slug(state)}_{_slug(pid)}.csv"
        report.write_series_csv(out / rel, s)
        sources.append(
            {
                "path": rel,
                "proxy_id": pid,
                "location": state,
                "kind": "gold" if s.kind is SeriesKind.GOLD else "proxy",
            }
        )
    manifest_payload = {
        "sources": sources,
        "seed": spec.seed,
        "output_dir": "detect_out",
    }
    report.write_text(
        out / "manifest.yaml",
        yaml.safe_dump(manifest_payload, sort_keys=True, default_flow_style=False),
    )
    print(f"simulate: {len(sources)} series for {len(spec.states)} states -> {out}")


def cmd_leadlag(args) -> None:
    manifest, out = _prepare(args)
    series_map, cfg, detection = _detect(manifest, args)
    gold = manifest.t2e.gold_proxy

    first_events = {}
    for (loc, pid, direction), events in detection.events.items():
        if direction is Direction.UPTREND and events:
            first_events[(loc, pid)] = events[0]

    proxies = sorted({pid for _, pid in series_map if pid != gold})
    records = []
    for pid in proxies:
        try:
            summary = summarize_leads(first_events, pid, gold)
        except DataError:
            continue
        report.write_leadlag_csv(
            out / "leadlag" / f"{_slug(pid)}_vs_{_slug(gold)}.csv", summary
        )
        records.append(report.leadlag_record(summary))
    if not records:
        raise DataError(f"no proxy shares a first-wave uptrend event with {gold}")
    report.write_json(out / "leadlag" / "summary.json", records)
    report.write_json(out / "leadlag" / "first_activation.json", first_activation_tally(first_events))
    print(f"leadlag: {len(records)} proxy comparisons vs {gold} -> {out / 'leadlag'}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="earlywarn",
        description="Early-warning trend detection on epidemic proxy time series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_text: str, *, as_of: bool = False):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--manifest", required=True, help="pipeline manifest (YAML)")
        p.add_argument("--seed", type=int, default=None, help="override the manifest seed")
        p.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")
        p.add_argument("--out", default=None, help="override the manifest output directory")
        if as_of:
            p.add_argument(
                "--as-of",
                dest="as_of",
                default=None,
                help="use only data up to this date (YYYY-MM-DD)",
            )
        p.set_defaults(func=func)
        return p

    add("detect", cmd_detect, "per-proxy trend p-values, events, and figures", as_of=True)
    add("combine", cmd_combine, "harmonic-mean combined p-values and events", as_of=True)
    add("predict", cmd_predict, "days-until-outbreak posterior per location", as_of=True)
    add("excess-ili", cmd_excess_ili, "weekly excess ILI with both counterfactuals")
    sim = add("simulate", cmd_simulate, "materialize a synthetic scenario as CSV sources")
    sim.description += " (--manifest points at a scenario spec)"
    add("leadlag", cmd_leadlag, "event lead/lag summaries of proxies vs the gold series", as_of=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except EarlywarnError as exc:
        print(f"earlywarn: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"earlywarn: error: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0
