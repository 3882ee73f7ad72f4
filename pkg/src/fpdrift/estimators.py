"""Estimator computations: sufficient statistics, the fixed-point map and its
iteration, contraction certificate, truncations, thresholds and confidence
intervals.

All integrals are replaced by left-point Riemann sums on the bundle's grid.
The singular kernel |t - s|^(2H-2) is only evaluated at distinct nodes since
inner sums always exclude the diagonal.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateStatisticsError, DivergenceError
from .fbm import HurstParams, PathBundle
from .sde import DriftModel, VolModel

DEFAULT_CONTRACTION = 0.5
DEFAULT_TOL = 1e-12
MIN_ITERATIONS = 30


# ---------------------------------------------------------------------------
# Standard normal quantile / distribution function.
# ---------------------------------------------------------------------------

def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# Acklam's rational approximation coefficients for the inverse normal CDF.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF via Acklam's rational approximation,
    refined with one Halley step (accuracy well below 1e-8)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {p}")
    p_low, p_high = 0.02425, 1.0 - 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((( _C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    elif p <= p_high:
        q = p - 0.5
        r = q * q
        x = ((((( _A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -((((( _C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    # Halley refinement against erfc.
    e = normal_cdf(x) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


# ---------------------------------------------------------------------------
# Result records.
# ---------------------------------------------------------------------------

@dataclass
class SufficientStats:
    """D_N, I_N, M_N and the cumulative b' integrals feeding the fixed-point map."""

    d_n: float
    i_n: float
    m_n: float
    cumulative: np.ndarray  # (N, steps + 1): C_i(t_j) = sum_{l<j} b'(X_i(t_l)) * mesh


@dataclass
class EstimateFBM:
    theta_tilde: float
    r_n: float
    iterations: int
    residual: float
    omega_holds: bool
    c_contraction: float
    threshold: float
    theta_tilde_c: float
    theta_tilde_cd: float
    d_n: float
    i_n: float
    aci: Optional[tuple[float, float, float]] = None  # (lower, upper, alpha)
    ybar: Optional[float] = None


@dataclass
class EstimateBM:
    d_nn: float
    v_nn: float
    theta_hat: float
    theta_hat_d: float
    ybar: float
    aci: Optional[tuple[float, float, float]] = None


# ---------------------------------------------------------------------------
# Sufficient statistics.
# ---------------------------------------------------------------------------

def compute_DN(paths: PathBundle, drift: DriftModel) -> float:
    """Time-and-path average of b(X)^2 by the left-point Riemann sum."""
    x = paths.values
    t_total = paths.grid.horizon
    bsq = drift.b(x[:, :-1]) ** 2
    return float(bsq.sum() * paths.grid.mesh / (x.shape[0] * t_total))


def compute_IN(paths: PathBundle, drift: DriftModel, d_n: float) -> float:
    """Young-integral statistic via the antiderivative of b."""
    if d_n <= 0.0:
        raise DegenerateStatisticsError("D_N vanished; I_N is undefined")
    x = paths.values
    increments = drift.antiderivative(x[:, -1]) - drift.antiderivative(x[:, 0])
    return float(increments.sum() / (x.shape[0] * paths.grid.horizon * d_n))


def cumulative_b_prime(paths: PathBundle, drift: DriftModel) -> np.ndarray:
    """C_i(t_j) = sum_{l<j} b'(X_i(t_l)) * mesh, with C_i(t_0) = 0."""
    bp = drift.b_prime(paths.values[:, :-1])
    c = np.zeros_like(paths.values)
    np.cumsum(bp * paths.grid.mesh, axis=1, out=c[:, 1:])
    return c


def sufficient_stats(paths: PathBundle, drift: DriftModel) -> SufficientStats:
    d_n = compute_DN(paths, drift)
    i_n = compute_IN(paths, drift, d_n)
    m_n = math.exp(drift.sup_norm_b_prime * abs(i_n) * paths.grid.horizon)
    return SufficientStats(d_n=d_n, i_n=i_n, m_n=m_n,
                           cumulative=cumulative_b_prime(paths, drift))


# ---------------------------------------------------------------------------
# Fixed-point map.
# ---------------------------------------------------------------------------

def _pair_indices(steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Ordered node pairs (j, l) with j = 1..steps and l < j."""
    j_idx, l_idx = np.tril_indices(steps, k=0)
    return j_idx + 1, l_idx


def phi_map(
    r: float,
    stats: SufficientStats,
    paths: PathBundle,
    drift: DriftModel,
    hurst: HurstParams,
    sigma: float,
) -> float:
    """One evaluation of the Skorokhod-correction map at r."""
    if hurst.h <= 0.5:
        raise ValueError("the fixed-point map requires H > 1/2")
    if stats.d_n <= 0.0:
        raise DegenerateStatisticsError("D_N vanished; the fixed-point map is undefined")
    w, a = _phi_tables(paths, drift, hurst)
    n, t_total = paths.n_paths, paths.grid.horizon
    total = float(np.dot(w.ravel(), np.exp((r + stats.i_n) * a.ravel())))
    return -hurst.alpha * sigma**2 / (n * t_total * stats.d_n) * total


def _phi_tables(paths: PathBundle, drift: DriftModel, hurst: HurstParams):
    """Per-pair weights W_i(j,l) = b'(X_i(t_j)) (t_j - t_l)^(2H-2) mesh^2 and
    exponent bases A_i(j,l) = C_i(t_j) - C_i(t_l)."""
    t = paths.grid.nodes
    dt = paths.grid.mesh
    j_idx, l_idx = _pair_indices(paths.grid.steps)
    kernel = (t[j_idx] - t[l_idx]) ** (2.0 * hurst.h - 2.0) * dt * dt
    bp = drift.b_prime(paths.values)
    c = cumulative_b_prime(paths, drift)
    w = bp[:, j_idx] * kernel
    a = c[:, j_idx] - c[:, l_idx]
    return w, a


def check_omega(
    stats: SufficientStats,
    hurst: HurstParams,
    sigma: float,
    sup_norm_b_prime: float,
    t_total: float,
    c: float,
) -> bool:
    """Contraction certificate: T^2H M_N / D_N <= c / (alpha_bar sigma^2 |b'|_inf^2)."""
    if not 0.0 < c < 1.0:
        raise ValueError(f"contraction constant must lie in (0, 1), got {c}")
    if sup_norm_b_prime == 0.0:
        return True  # the map is identically zero, trivially a contraction
    if stats.d_n <= 0.0:
        raise DegenerateStatisticsError("D_N vanished; the contraction event is undefined")
    lhs = t_total ** (2.0 * hurst.h) * stats.m_n / stats.d_n
    rhs = c / (hurst.alpha_bar * sigma**2 * sup_norm_b_prime**2)
    return lhs <= rhs


def fixed_point(
    phi: Callable[[float], float],
    c: float,
    max_iters: int,
    tol: float,
) -> tuple[float, int, float]:
    """Picard iteration from 0; returns (last iterate, iterations, |phi(R) - R|)."""
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if tol < 0.0:
        raise ValueError("tol must be nonnegative")
    r = 0.0
    iterations = 0
    for _ in range(max_iters):
        r_next = phi(r)
        iterations += 1
        if not math.isfinite(r_next):
            raise DivergenceError(f"non-finite iterate after {iterations} steps")
        step = abs(r_next - r)
        r = r_next
        if step <= tol:
            break
    residual = abs(phi(r) - r)
    return r, iterations, residual


def iteration_schedule(
    n: int,
    c: float,
    t_total: float,
    sup_norm_b_prime: float,
    hurst: HurstParams,
) -> int:
    """Iteration count guaranteeing the iterate error is o(N^-1/2), floored at 30."""
    if not 0.0 < c < 1.0:
        raise ValueError(f"contraction constant must lie in (0, 1), got {c}")
    if sup_norm_b_prime == 0.0:
        return 1
    m = c / (1.0 - c) / (2.0 * t_total * hurst.alpha_bar * sup_norm_b_prime)
    needed = -math.log(m * math.sqrt(n)) / math.log(c)
    return max(MIN_ITERATIONS, math.ceil(needed))


# ---------------------------------------------------------------------------
# Thresholds and horizon bound.
# ---------------------------------------------------------------------------

def dmax_from_lower_bound(frak_b: float) -> float:
    """Recommended truncation threshold when b(.)^2 >= frak_b > 0."""
    if frak_b <= 0.0:
        raise ValueError("no computable threshold without a positive lower bound on b^2")
    return frak_b / 2.0


def dmax_ou(x0: float, theta_max: float, t_max: float) -> float:
    """Recommended threshold for Ornstein-Uhlenbeck copies: (x0^2/2) e^(-2 theta_max T_max)."""
    if theta_max <= 0.0 or t_max <= 0.0:
        raise ValueError("theta_max and t_max must be positive")
    if x0 == 0.0:
        warnings.warn("x0 = 0 gives a degenerate (zero) threshold", stacklevel=2)
        return 0.0
    return 0.5 * x0**2 * math.exp(-2.0 * theta_max * t_max)


def max_horizon(
    ell: float,
    theta_max: float,
    t_max: float,
    hurst: HurstParams,
    sigma: float,
    drift: DriftModel,
    c: float,
    x0: float,
) -> float:
    """Largest admissible estimation horizon given a lower bound ell on |b|_f."""
    if ell <= 0.0:
        raise ValueError("ell must be positive")
    sup_bp = drift.sup_norm_b_prime
    if sup_bp == 0.0:
        return math.inf
    s = abs(sigma)
    c1 = max(abs(float(drift.b(x0))), sup_bp / 2.0)
    inner = (
        theta_max**2 * t_max**2
        + theta_max * t_max / ell
        + s * t_max**hurst.h * (1.0 + s * t_max**hurst.h) / ell**2
    )
    base = c * ell**2 / (hurst.alpha_bar * sigma**2 * sup_bp**2)
    return (base * math.exp(-2.0 * c1 * sup_bp * inner)) ** (1.0 / (2.0 * hurst.h))


# ---------------------------------------------------------------------------
# Confidence-interval statistic for H > 1/2.
# ---------------------------------------------------------------------------

def _ybar_contributions(
    paths: PathBundle,
    drift: DriftModel,
    hurst: HurstParams,
    sigma: float,
) -> np.ndarray:
    """Per-path contributions y_i to the asymptotic-variance statistic.

    The quadruple sum factorizes over its two (outer, inner) index pairs into a
    perfect square, so it costs O(steps^2) per path and is never negative.
    """
    t = paths.grid.nodes
    dt = paths.grid.mesh
    nu = paths.grid.steps
    expo = 2.0 * hurst.h - 2.0
    x_nodes = paths.values[:, 1:]  # nodes t_1..t_nu

    diff = np.abs(t[1:, None] - t[None, 1:])
    kernel = np.zeros((nu, nu))
    off = ~np.eye(nu, dtype=bool)
    kernel[off] = diff[off] ** expo

    babs = np.abs(drift.b(x_nodes))
    double_term = hurst.alpha * dt * dt * np.einsum("ij,jk,ik->i", babs, kernel, babs)

    # kappa_j = sum_{l<j} (t_j - t_l)^(2H-2) * mesh for j = 1..nu
    j_idx, l_idx = _pair_indices(nu)
    kern_pairs = (t[j_idx] - t[l_idx]) ** expo * dt
    kappa = np.bincount(j_idx - 1, weights=kern_pairs, minlength=nu)
    s_lin = (drift.b_prime(x_nodes) * kappa * dt).sum(axis=1)
    quad_term = hurst.alpha**2 * sigma**2 * s_lin**2

    return double_term + quad_term


def ybar_fbm(paths: PathBundle, drift: DriftModel, hurst: HurstParams, sigma: float) -> float:
    y = _ybar_contributions(paths, drift, hurst, sigma)
    n, t_total = paths.n_paths, paths.grid.horizon
    return float(sigma**2 / (n * t_total**2) * y.sum())


def aci_fbm(
    paths: PathBundle,
    drift: DriftModel,
    hurst: HurstParams,
    sigma: float,
    stats: SufficientStats,
    theta_center: float,
    alpha: float,
) -> tuple[float, float]:
    """Asymptotic confidence interval of half-width 2 sqrt(Ybar) u_{1-a/4} / (sqrt(N) D_N)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if stats.d_n <= 0.0:
        raise DegenerateStatisticsError("D_N vanished; no confidence interval")
    ybar = ybar_fbm(paths, drift, hurst, sigma)
    if ybar < 0.0:
        raise DegenerateStatisticsError("negative variance statistic")
    half = 2.0 * math.sqrt(ybar) * normal_quantile(1.0 - alpha / 4.0) / (
        math.sqrt(paths.n_paths) * stats.d_n
    )
    return theta_center - half, theta_center + half


# ---------------------------------------------------------------------------
# Bundle-level caches (per-path contributions are prefix-summable, so the
# Monte Carlo engine can reuse one simulation across N = 1..N_max).
# ---------------------------------------------------------------------------

class FbmEstimatorCache:
    """Precomputes per-path statistics of a solution bundle once, then serves
    fixed-point estimates on path prefixes."""

    def __init__(self, paths: PathBundle, drift: DriftModel, hurst: HurstParams, sigma: float):
        if hurst.h <= 0.5:
            raise ValueError("the fixed-point estimator requires H > 1/2")
        self.paths = paths
        self.drift = drift
        self.hurst = hurst
        self.sigma = sigma
        self.t_total = paths.grid.horizon
        x = paths.values
        dt = paths.grid.mesh
        self._d_i = (drift.b(x[:, :-1]) ** 2).sum(axis=1) * dt
        self._ib_i = drift.antiderivative(x[:, -1]) - drift.antiderivative(x[:, 0])
        self._w, self._a = _phi_tables(paths, drift, hurst)
        self._y_i = _ybar_contributions(paths, drift, hurst, sigma)
        self._cumulative = cumulative_b_prime(paths, drift)

    def stats(self, n: Optional[int] = None) -> SufficientStats:
        n = self.paths.n_paths if n is None else n
        d_n = float(self._d_i[:n].sum() / (n * self.t_total))
        if d_n <= 0.0:
            raise DegenerateStatisticsError("D_N vanished on this prefix")
        i_n = float(self._ib_i[:n].sum() / (n * self.t_total * d_n))
        m_n = math.exp(self.drift.sup_norm_b_prime * abs(i_n) * self.t_total)
        return SufficientStats(d_n=d_n, i_n=i_n, m_n=m_n, cumulative=self._cumulative[:n])

    def phi(self, n: int, stats: SufficientStats) -> Callable[[float], float]:
        w = self._w[:n].ravel()
        a = self._a[:n].ravel()
        scale = -self.hurst.alpha * self.sigma**2 / (n * self.t_total * stats.d_n)
        i_n = stats.i_n

        def _phi(r: float) -> float:
            return scale * float(np.dot(w, np.exp((r + i_n) * a)))

        return _phi

    def ybar(self, n: int) -> float:
        return float(self.sigma**2 / (n * self.t_total**2) * self._y_i[:n].sum())

    def estimate(
        self,
        n: Optional[int] = None,
        *,
        c: float = DEFAULT_CONTRACTION,
        d_threshold: float = 0.0,
        alpha: float = 0.05,
        enforce_omega: bool = False,
        max_iters: Optional[int] = None,
        tol: float = DEFAULT_TOL,
        with_aci: bool = True,
    ) -> EstimateFBM:
        n = self.paths.n_paths if n is None else n
        stats = self.stats(n)
        omega = check_omega(stats, self.hurst, self.sigma,
                            self.drift.sup_norm_b_prime, self.t_total, c)
        if max_iters is None:
            max_iters = iteration_schedule(n, c, self.t_total,
                                           self.drift.sup_norm_b_prime, self.hurst)
        r_n, iters, residual = fixed_point(self.phi(n, stats), c, max_iters, tol)
        theta = stats.i_n + r_n
        theta_c = theta if omega else 0.0
        theta_cd = theta_c if stats.d_n >= d_threshold else 0.0
        theta_reported = theta if not enforce_omega else theta_c
        aci = None
        ybar = None
        if with_aci:
            ybar = self.ybar(n)
            half = 2.0 * math.sqrt(ybar) * normal_quantile(1.0 - alpha / 4.0) / (
                math.sqrt(n) * stats.d_n
            )
            aci = (theta_reported - half, theta_reported + half, alpha)
        return EstimateFBM(
            theta_tilde=theta_reported,
            r_n=r_n,
            iterations=iters,
            residual=residual,
            omega_holds=omega,
            c_contraction=c,
            threshold=d_threshold,
            theta_tilde_c=theta_c,
            theta_tilde_cd=theta_cd,
            d_n=stats.d_n,
            i_n=stats.i_n,
            aci=aci,
            ybar=ybar,
        )


class BmEstimatorCache:
    """Per-path statistics of the discrete-time least-squares estimator (H = 1/2)."""

    def __init__(self, paths: PathBundle, drift: DriftModel,
                 vol: Optional[VolModel] = None, sigma: Optional[float] = None):
        if vol is None and sigma is None:
            raise ValueError("either a volatility model or a constant sigma is required")
        x = paths.values
        dt = paths.grid.mesh
        self.t_total = paths.grid.horizon
        self.n_paths = paths.n_paths
        b_nodes = drift.b(x[:, :-1])
        sig_nodes = vol.sigma_fn(x[:, :-1]) if vol is not None else np.full_like(b_nodes, sigma)
        self._d_i = (b_nodes**2).sum(axis=1) * dt
        self._v_i = (b_nodes * np.diff(x, axis=1)).sum(axis=1)
        self._y_i = (b_nodes**2 * sig_nodes**2).sum(axis=1) * dt

    def estimate(self, n: Optional[int] = None, *, d_threshold: float = 0.0,
                 alpha: float = 0.05) -> EstimateBM:
        n = self.n_paths if n is None else n
        nt = n * self.t_total
        d_nn = float(self._d_i[:n].sum() / nt)
        v_nn = float(self._v_i[:n].sum() / nt)
        ybar = float(self._y_i[:n].sum() / (n * self.t_total**2))
        if d_nn <= 0.0:
            if d_threshold <= 0.0:
                raise DegenerateStatisticsError("D_{N,n} vanished; estimator undefined")
            return EstimateBM(d_nn=d_nn, v_nn=v_nn, theta_hat=math.nan,
                              theta_hat_d=0.0, ybar=ybar, aci=None)
        theta_hat = v_nn / d_nn
        theta_hat_d = theta_hat if d_nn >= d_threshold else 0.0
        half = math.sqrt(ybar) * normal_quantile(1.0 - alpha / 2.0) / (math.sqrt(n) * d_nn)
        return EstimateBM(d_nn=d_nn, v_nn=v_nn, theta_hat=theta_hat,
                          theta_hat_d=theta_hat_d, ybar=ybar,
                          aci=(theta_hat - half, theta_hat + half, alpha))


# ---------------------------------------------------------------------------
# One-shot entry points.
# ---------------------------------------------------------------------------

def estimate_fbm(
    paths: PathBundle,
    drift: DriftModel,
    hurst: HurstParams,
    sigma: float,
    c: float = DEFAULT_CONTRACTION,
    d_threshold: float = 0.0,
    alpha: float = 0.05,
    enforce_omega: bool = False,
    max_iters: Optional[int] = None,
    tol: float = DEFAULT_TOL,
) -> EstimateFBM:
    """Fixed-point estimate from a solution bundle (H > 1/2)."""
    cache = FbmEstimatorCache(paths, drift, hurst, sigma)
    return cache.estimate(c=c, d_threshold=d_threshold, alpha=alpha,
                          enforce_omega=enforce_omega, max_iters=max_iters, tol=tol)


def estimate_bm(
    paths: PathBundle,
    drift: DriftModel,
    vol: Optional[VolModel] = None,
    sigma: Optional[float] = None,
    d_threshold: float = 0.0,
    alpha: float = 0.05,
) -> EstimateBM:
    """Discrete-time least-squares estimate from a solution bundle (H = 1/2)."""
    cache = BmEstimatorCache(paths, drift, vol=vol, sigma=sigma)
    return cache.estimate(d_threshold=d_threshold, alpha=alpha)
