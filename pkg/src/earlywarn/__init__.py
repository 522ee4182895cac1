"""Early-warning trend detection for epidemic proxy time series.

The package turns daily proxy signals (search interest, sensor readings,
case counts) into growth/decay trend events via windowed Bayesian
regression, fuses the per-proxy evidence with the harmonic-mean p-value,
and converts historical proxy-vs-outbreak lags into a posterior over days
until the next outbreak.
"""

from .combine import combined_pvalue_series, harmonic_mean_p
from .detector import (
    DetectorConfig,
    Direction,
    PosteriorDraws,
    PValueSeries,
    TrendEvent,
    detect_events,
    pvalue_series,
    pvalue_series_pair,
    sample_posterior,
)
from .errors import ConfigError, DataError, EarlywarnError, NumericalError
from .ingest import PipelineManifest, load_manifest, load_sources
from .pipeline import DetectionResult, predict_location, run_detection
from .series import DailySeries, SeriesKind
from .synth import ScenarioSpec, gen_exponential_series, gen_multistate_scenario
from .time_to_event import LagModel, TimeToEventPosterior, posterior_time_to_event

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DailySeries",
    "DataError",
    "DetectionResult",
    "DetectorConfig",
    "Direction",
    "EarlywarnError",
    "LagModel",
    "NumericalError",
    "PValueSeries",
    "PipelineManifest",
    "PosteriorDraws",
    "ScenarioSpec",
    "SeriesKind",
    "TimeToEventPosterior",
    "TrendEvent",
    "combined_pvalue_series",
    "detect_events",
    "gen_exponential_series",
    "gen_multistate_scenario",
    "harmonic_mean_p",
    "load_manifest",
    "load_sources",
    "posterior_time_to_event",
    "predict_location",
    "pvalue_series",
    "pvalue_series_pair",
    "run_detection",
    "sample_posterior",
    "__version__",
]
