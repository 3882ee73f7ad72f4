"""Replicated-experiment engine: trial orchestration, reproducible seeding,
summaries, threshold sweeps and coverage studies.

Each trial draws one noise bundle of n_max copies from a seed derived as
SeedSequence(master_seed, spawn_key=(trial_index,)), simulates the solutions
once, and evaluates the estimator on path prefixes 1..N. This prefix reuse
makes the per-trial trajectory N -> estimate a function of a single simulation,
and keeps every trial deterministic in (config, trial_index) regardless of how
trials are scheduled across workers.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DegenerateStatisticsError, DivergenceError
from .fbm import CrossCorrelation, Grid, HurstParams, block_correlation, sample_fbm_bundle
from .sde import DriftModel, SdeSpec, drift_model, euler_additive
from .estimators import BmEstimatorCache, FbmEstimatorCache, DEFAULT_TOL


@dataclass(frozen=True)
class ExperimentConfig:
    """Full specification of a replicated estimation experiment."""

    model: str
    hurst: float
    horizon: float
    sigma: float
    x0: float = 5.0
    theta0: float = 1.0
    steps: int = 20
    n_max: int = 50
    replications: int = 100
    seed: int = 0
    contraction: float = 0.5
    d_threshold: float = 0.0
    alpha: float = 0.05
    max_iters: Optional[int] = None
    tol: float = DEFAULT_TOL
    enforce_omega: bool = False
    corr_block: int = 1       # cluster size q; 1 means independent copies
    corr_rho: float = 0.0     # within-cluster correlation
    mode: str = "fbm"         # "fbm" (H > 1/2) | "bm" (H = 1/2)
    eval_points: Optional[tuple[int, ...]] = None  # N values to evaluate; default 1..n_max
    fresh_paths_per_n: bool = False  # resample per N instead of reusing prefixes

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.n_max < 1:
            raise ConfigError("n_max must be >= 1")
        if self.mode not in ("fbm", "bm"):
            raise ConfigError(f"mode must be 'fbm' or 'bm', got {self.mode!r}")
        if self.mode == "bm" and self.hurst != 0.5:
            raise ConfigError("mode 'bm' forces H = 1/2")
        if self.mode == "fbm" and not 0.5 < self.hurst < 1.0:
            raise ConfigError("mode 'fbm' requires H in (1/2, 1)")
        if self.eval_points is not None:
            pts = tuple(self.eval_points)
            if not pts or any(not 1 <= p <= self.n_max for p in pts) or list(pts) != sorted(set(pts)):
                raise ConfigError("eval_points must be strictly increasing values in 1..n_max")

    @property
    def points(self) -> tuple[int, ...]:
        return self.eval_points if self.eval_points is not None else tuple(range(1, self.n_max + 1))

    def grid(self) -> Grid:
        return Grid(horizon=self.horizon, steps=self.steps)

    def hurst_params(self) -> HurstParams:
        return HurstParams(h=self.hurst)

    def drift(self) -> DriftModel:
        return drift_model(self.model)

    def correlation(self) -> CrossCorrelation:
        if self.corr_block == 1:
            return CrossCorrelation.identity(self.n_max)
        return block_correlation(self.n_max, self.corr_block, self.corr_rho)


@dataclass
class TrialResult:
    """Per-trial estimate trajectory over the evaluated prefix sizes.

    Arrays are aligned with `ns`. Failed evaluations (degenerate statistics or
    divergent iteration) are recorded as NaN rather than aborting the trial.
    """

    trial_index: int
    ns: np.ndarray
    estimates: np.ndarray       # reported estimate (theta_tilde or theta_hat)
    truncated: np.ndarray       # Omega- and threshold-gated value
    aci_lower: np.ndarray
    aci_upper: np.ndarray
    omega: np.ndarray           # bool; always True in bm mode
    d_stats: np.ndarray
    r_n: np.ndarray             # NaN in bm mode
    residuals: np.ndarray       # NaN in bm mode

    def final_error(self, theta0: float) -> float:
        return abs(float(self.estimates[-1]) - theta0)

    def covers(self, theta0: float) -> bool:
        return bool(self.aci_lower[-1] <= theta0 <= self.aci_upper[-1])


@dataclass
class SummaryReport:
    mean_error: float
    std_error: float
    coverage: float
    seconds: float
    n_trials: int
    per_threshold: Optional[list[tuple[float, float]]] = None

    def __post_init__(self):
        if not math.isnan(self.coverage) and not 0.0 <= self.coverage <= 1.0:
            raise ValueError("coverage must lie in [0, 1]")


def summarize(errors: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation (divisor R, not R - 1)."""
    if len(errors) == 0:
        raise ValueError("cannot summarize an empty error list")
    arr = np.asarray(errors, dtype=float)
    return float(arr.mean()), float(arr.std(ddof=0))


def _trial_rng(config: ExperimentConfig, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=config.seed, spawn_key=(trial_index,))
    )


def _simulate_bundle(config: ExperimentConfig, rng: np.random.Generator, n: int):
    grid = config.grid()
    hurst = config.hurst_params()
    if config.corr_block == 1:
        corr = CrossCorrelation.identity(n)
    else:
        corr = block_correlation(n, config.corr_block, config.corr_rho)
    noise = sample_fbm_bundle(hurst, grid, corr, rng)
    spec = SdeSpec(x0=config.x0, theta0=config.theta0, sigma=config.sigma,
                   drift=config.drift(), hurst=hurst, grid=grid)
    return euler_additive(spec, noise)


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialResult:
    """One deterministic trial: simulate once, estimate on each prefix size."""
    rng = _trial_rng(config, trial_index)
    points = config.points
    k = len(points)
    nan = float("nan")
    est = np.full(k, nan)
    trunc = np.full(k, nan)
    lo = np.full(k, nan)
    hi = np.full(k, nan)
    omega = np.zeros(k, dtype=bool)
    d_stats = np.full(k, nan)
    r_n = np.full(k, nan)
    resid = np.full(k, nan)

    drift = config.drift()
    hurst = config.hurst_params()

    def _eval_fbm(cache: FbmEstimatorCache, n: int, idx: int) -> None:
        try:
            e = cache.estimate(
                n, c=config.contraction, d_threshold=config.d_threshold,
                alpha=config.alpha, enforce_omega=config.enforce_omega,
                max_iters=config.max_iters, tol=config.tol,
            )
        except (DegenerateStatisticsError, DivergenceError):
            return
        est[idx] = e.theta_tilde
        trunc[idx] = e.theta_tilde_cd
        lo[idx], hi[idx] = e.aci[0], e.aci[1]
        omega[idx] = e.omega_holds
        d_stats[idx] = e.d_n
        r_n[idx] = e.r_n
        resid[idx] = e.residual

    def _eval_bm(cache: BmEstimatorCache, n: int, idx: int) -> None:
        try:
            e = cache.estimate(n, d_threshold=config.d_threshold, alpha=config.alpha)
        except DegenerateStatisticsError:
            return
        est[idx] = e.theta_hat
        trunc[idx] = e.theta_hat_d
        if e.aci is not None:
            lo[idx], hi[idx] = e.aci[0], e.aci[1]
        omega[idx] = True
        d_stats[idx] = e.d_nn

    if config.fresh_paths_per_n:
        for idx, n in enumerate(points):
            paths = _simulate_bundle(config, rng, n)
            if config.mode == "fbm":
                _eval_fbm(FbmEstimatorCache(paths, drift, hurst, config.sigma), n, idx)
            else:
                _eval_bm(BmEstimatorCache(paths, drift, sigma=config.sigma), n, idx)
    else:
        paths = _simulate_bundle(config, rng, config.n_max)
        if config.mode == "fbm":
            cache = FbmEstimatorCache(paths, drift, hurst, config.sigma)
            for idx, n in enumerate(points):
                _eval_fbm(cache, n, idx)
        else:
            cache = BmEstimatorCache(paths, drift, sigma=config.sigma)
            for idx, n in enumerate(points):
                _eval_bm(cache, n, idx)

    return TrialResult(
        trial_index=trial_index, ns=np.asarray(points, dtype=int),
        estimates=est, truncated=trunc, aci_lower=lo, aci_upper=hi,
        omega=omega, d_stats=d_stats, r_n=r_n, residuals=resid,
    )


def run_trials(config: ExperimentConfig, workers: int = 1) -> list[TrialResult]:
    """All replications, aggregated in trial-index order regardless of workers."""
    indices = range(config.replications)
    if workers <= 1 or config.replications == 1:
        return [run_trial(config, i) for i in indices]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves input order, so aggregation order is fixed.
        return list(pool.map(partial(run_trial, config), indices, chunksize=1))


def run_experiment(config: ExperimentConfig, workers: int = 1) -> tuple[SummaryReport, list[TrialResult]]:
    """Replicated experiment; summary of final (N = n_max eval point) errors."""
    start = time.perf_counter()
    trials = run_trials(config, workers)
    errors = [t.final_error(config.theta0) for t in trials]
    mean, std = summarize(errors)
    covered = [t.covers(config.theta0) for t in trials]
    coverage = float(np.mean(covered))
    seconds = time.perf_counter() - start
    report = SummaryReport(mean_error=mean, std_error=std, coverage=coverage,
                           seconds=seconds, n_trials=len(trials))
    return report, trials


def threshold_sweep(
    config: ExperimentConfig,
    thresholds: Sequence[float],
    n_fixed: int,
    workers: int = 1,
) -> SummaryReport:
    """Mean error of the Omega- and D-threshold-truncated estimator versus the
    truncation level, reusing one set of simulated trials for every level."""
    if len(thresholds) == 0:
        raise ValueError("thresholds must be nonempty")
    if not 1 <= n_fixed <= config.n_max:
        raise ValueError("n_fixed must lie in 1..n_max")
    start = time.perf_counter()
    base = replace(config, eval_points=(n_fixed,), d_threshold=0.0)
    trials = run_trials(base, workers)
    theta0 = config.theta0
    # Omega-gated raw values and their D_N statistics at the fixed prefix size.
    gated = np.array([t.estimates[0] if t.omega[0] else 0.0 for t in trials])
    d_stats = np.array([t.d_stats[0] for t in trials])
    per_threshold = []
    for d in thresholds:
        vals = np.where(d_stats >= d, gated, 0.0)
        per_threshold.append((float(d), float(np.abs(vals - theta0).mean())))
    errors = [err for _, err in per_threshold]
    seconds = time.perf_counter() - start
    return SummaryReport(mean_error=float(np.mean(errors)), std_error=float(np.std(errors)),
                         coverage=float("nan"), seconds=seconds, n_trials=len(trials),
                         per_threshold=per_threshold)


def coverage_experiment(config: ExperimentConfig, workers: int = 1) -> SummaryReport:
    """Empirical fraction of replications whose interval at n_max contains theta0."""
    cfg = replace(config, eval_points=(config.n_max,))
    report, _ = run_experiment(cfg, workers)
    return report
