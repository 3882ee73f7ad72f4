#!/usr/bin/env python3
"""Empirical coverage of the asymptotic confidence intervals.

Runs the H > 1/2 interval on the Ornstein-Uhlenbeck model and the H = 1/2
least-squares interval on the same model with a finer grid, and reports the
fraction of replications whose interval contains theta0.

Usage: python3 scripts/aci_coverage.py [--seed SEED] [--workers K]
"""

import argparse

from fpdrift import ExperimentConfig, coverage_experiment


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    fbm_cfg = ExperimentConfig(
        model="model2", hurst=0.9, horizon=0.75, sigma=1.0,
        n_max=50, replications=100, seed=args.seed,
    )
    bm_cfg = ExperimentConfig(
        model="model2", hurst=0.5, horizon=0.75, sigma=1.0, mode="bm",
        n_max=200, steps=200, replications=200, seed=args.seed,
    )
    for label, cfg in [("fbm (H=0.9, N=50)", fbm_cfg), ("bm (H=0.5, N=200)", bm_cfg)]:
        report = coverage_experiment(cfg, workers=args.workers)
        print(f"{label}: coverage = {report.coverage:.3f} "
              f"(target >= {1 - cfg.alpha:.2f} asymptotically)")


if __name__ == "__main__":
    main()
