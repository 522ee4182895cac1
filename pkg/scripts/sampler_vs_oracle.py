"""Benchmark the MCMC detector against the quadrature oracle.

Sweeps synthetic windows across rates and noise levels, reports the worst
absolute p-value gap, and cross-checks the grid oracle against the
quasi-Monte Carlo one. Run this before touching sampler defaults.
"""

from __future__ import annotations

import argparse
import datetime as dt
import time

import numpy as np

from earlywarn.detector import (
    DetectorConfig,
    sample_posterior,
    uptrend_pvalue,
    window_seed,
)
from earlywarn.series import Window, rebase_min_one
from earlywarn.synth import grid_posterior_oracle, mc_posterior_oracle


def make_window(amplitude: float, rate: float, noise_sd: float, seed: int) -> Window:
    rng = np.random.default_rng(seed)
    t = np.arange(14, dtype=float)
    y = amplitude * np.exp(rate * t)
    if noise_sd > 0:
        y = y + rng.normal(0.0, noise_sd, 14)
    return rebase_min_one(
        Window(location="bench", proxy_id="w", end_date=dt.date(2020, 3, 1), values=y)
    )


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=3, help="noise replicates per grid cell")
    ap.add_argument("--mc-check", action="store_true", help="also cross-check the two oracles")
    args = ap.parse_args()

    cfg = DetectorConfig()
    rates = [-0.3, -0.1, -0.03, 0.0, 0.03, 0.1, 0.3]
    noises = [0.01, 0.1, 0.5]
    amplitudes = [2.0, 5.0]

    rows = []
    t0 = time.time()
    for amp in amplitudes:
        for rate in rates:
            for sd in noises:
                for rep in range(args.reps):
                    seed = hash((amp, rate, sd, rep)) % (2**31)
                    w = make_window(amp, rate, sd, seed)
                    oracle = grid_posterior_oracle(w, cfg)
                    draws = sample_posterior(
                        w, cfg, seed=window_seed(rep, "bench", f"{amp}/{rate}/{sd}", w.end_date)
                    )
                    p_hat = uptrend_pvalue(draws)
                    gap = abs(p_hat - oracle)
                    rows.append((amp, rate, sd, rep, oracle, p_hat, gap))
                    if args.mc_check:
                        mc = mc_posterior_oracle(w, cfg)
                        print(
                            f"  oracle-vs-mc amp={amp} rate={rate:+.2f} sd={sd}: "
                            f"grid={oracle:.4f} mc={mc:.4f} "
                            f"gap={abs(oracle - mc):.4f}"
                        )
    elapsed = time.time() - t0

    rows.sort(key=lambda r: -r[-1])
    print(f"\n{len(rows)} windows in {elapsed:.1f}s; worst gaps:")
    for amp, rate, sd, rep, p_or, p_hat, gap in rows[:12]:
        print(
            f"  amp={amp} rate={rate:+.2f} sd={sd} rep={rep}: "
            f"oracle={p_or:.4f} sampler={p_hat:.4f} gap={gap:.4f}"
        )
    gaps = np.array([r[-1] for r in rows])
    print(f"max gap {gaps.max():.4f}, mean {gaps.mean():.4f}, p95 {np.quantile(gaps, 0.95):.4f}")


if __name__ == "__main__":
    main()
