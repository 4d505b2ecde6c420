"""Confidence intervals for quantiles.

Eight constructions plus a truth-based oracle used to validate the Monte
Carlo harness:

  A  representative-family QOR bandwidth, direct kernel density estimate
  B  adaptive Lomax-shape QOR bandwidth (positive data)
  C  GLD fit: center and standard error from the fitted quantile density
  D  GLD fit: beta-calibrated order-statistic levels mapped through the
     fitted quantile function
  E  GLD fit used only for the bandwidth; density estimated from the data
  F  reciprocal kernel estimator at a constant bandwidth
  G  direct kernel estimator at a constant bandwidth
  H  rank-weighted kernel estimator at a constant bandwidth

All methods except D produce an estimated standard-error kernel tau_hat,
which also powers the two-sample difference interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .distributions import Cauchy, DistributionModel, parse_model
from .errors import DataError, DomainError, FitError
from .estimators import (
    EPANECHNIKOV,
    AdaptivePareto,
    BandwidthRule,
    KernelSpec,
    QuantileDensityEstimate,
    optimal_bandwidth,
    qdens_direct,
    qdens_reciprocal,
    qdens_soni,
    sample_quantile_type8,
    SONI_DEFAULT_BANDWIDTH,
)
from .gld import GldFit, GldParams, fit_gld_mle, gld_quantile, gld_quantile_density, gld_support
from .numerics import beta_quantile, std_normal_quantile

__all__ = [
    "QuantileCI",
    "TwoSampleCI",
    "MethodConfig",
    "ci_method_a",
    "ci_method_b_pareto",
    "ci_method_c",
    "ci_method_d",
    "method_d_interval",
    "ci_method_e",
    "ci_methods_fgh",
    "ci_two_sample",
    "compute_ci",
    "default_correction",
    "CI_CSV_COLUMNS",
    "ci_csv_row",
    "ci_json_dict",
]

CI_CSV_COLUMNS = ("method", "u", "estimate", "lower", "upper", "level", "bandwidth", "std_width")


@dataclass(frozen=True)
class QuantileCI:
    """A two-sided interval for Q(u) at confidence `level`."""

    u: float
    estimate: float
    lower: float
    upper: float
    level: float
    method: str
    bandwidth_used: Optional[float]
    standardized_width: float
    flag: Optional[str] = None


@dataclass(frozen=True)
class TwoSampleCI:
    """Interval for the difference Q_x(u) - Q_y(p) from independent samples."""

    u: float
    p: float
    estimate: float
    lower: float
    upper: float
    level: float
    method: str
    n: int
    m: int
    flag: Optional[str] = None


def _check_level(level: float) -> None:
    if not 0.5 < level < 1.0:
        raise DomainError(f"confidence level must be in (0.5, 1), got {level}")


def default_correction(model_or_support) -> str:
    """Lower-boundary correction when the support's lower endpoint is finite."""
    if isinstance(model_or_support, DistributionModel):
        lo, _ = model_or_support.support()
    else:
        lo, _ = model_or_support
    return "lower" if math.isfinite(lo) else "none"


def _symmetric_ci(
    center: float,
    tau: float,
    n: int,
    u: float,
    level: float,
    method: str,
    bandwidth: Optional[float],
    flag: Optional[str] = None,
) -> QuantileCI:
    z = std_normal_quantile(0.5 * (1.0 + level))
    half = z * tau / math.sqrt(n)
    if tau == 0.0:
        flag = flag or "degenerate-width"
    return QuantileCI(
        u=u,
        estimate=center,
        lower=center - half,
        upper=center + half,
        level=level,
        method=method,
        bandwidth_used=bandwidth,
        standardized_width=2.0 * z * tau,
        flag=flag,
    )


def _direct_tau(data, u: float, rule: BandwidthRule, n: int) -> tuple[float, float, bool]:
    """(tau_hat, bandwidth, floored) via the direct estimator; on a floored
    (negative) sum the bandwidth falls back to min{u, 1-u} and the estimate
    is recomputed."""
    b = optimal_bandwidth(rule, u, n, data=data)
    est = qdens_direct(data, u, b, rule.kernel)
    if est.floored:
        b = min(u, 1.0 - u)
        est = qdens_direct(data, u, b, rule.kernel)
    tau = math.sqrt(u * (1.0 - u)) * est.value
    return tau, b, est.floored


def ci_method_a(
    data,
    u: float,
    level: float = 0.95,
    qor_model: DistributionModel | str = "cauchy",
    kernel: KernelSpec = EPANECHNIKOV,
    min_n: int = 30,
) -> QuantileCI:
    """Representative-family interval: bandwidth from the model's QOR with
    support-appropriate boundary correction, width from the direct kernel
    estimate, centered at the Type-8 sample quantile."""
    _check_level(level)
    if isinstance(qor_model, str):
        qor_model = parse_model(qor_model)
    xs = np.asarray(data, dtype=float)
    n = xs.size
    if n < min_n:
        raise DataError(f"method A needs at least {min_n} observations, got {n}")
    rule = BandwidthRule(qor_model, kernel, default_correction(qor_model))
    tau, b, floored = _direct_tau(xs, u, rule, n)
    center = sample_quantile_type8(xs, u)
    flag = "floored-density" if floored else None
    return _symmetric_ci(center, tau, n, u, level, f"A-{qor_model.family.label()}", b, flag)


def ci_method_b_pareto(
    data,
    u: float,
    level: float = 0.95,
    kernel: KernelSpec = EPANECHNIKOV,
    min_n: int = 30,
) -> QuantileCI:
    """Adaptive interval for positive data: Lomax shape by MLE, its QOR
    bandwidth with lower-boundary correction."""
    _check_level(level)
    xs = np.asarray(data, dtype=float)
    if np.any(xs <= 0.0):
        raise DataError("method B requires strictly positive data")
    n = xs.size
    if n < min_n:
        raise DataError(f"method B needs at least {min_n} observations, got {n}")
    rule = BandwidthRule(AdaptivePareto(), kernel, "lower")
    tau, b, floored = _direct_tau(xs, u, rule, n)
    center = sample_quantile_type8(xs, u)
    flag = "floored-density" if floored else None
    return _symmetric_ci(center, tau, n, u, level, "B", b, flag)


def ci_method_c(
    data,
    u: float,
    level: float = 0.95,
    parameterization: str = "fkml",
    fit: Optional[GldFit] = None,
) -> QuantileCI:
    """GLD-based interval centered at the fitted quantile with standard
    error sqrt(u(1-u)) times the fitted quantile density."""
    _check_level(level)
    xs = np.asarray(data, dtype=float)
    if fit is None:
        fit = fit_gld_mle(xs, parameterization)
    center = gld_quantile(fit.params, u)
    tau = math.sqrt(u * (1.0 - u)) * gld_quantile_density(fit.params, u)
    return _symmetric_ci(center, tau, xs.size, u, level, "C", None)


def method_d_interval(params: GldParams, n: int, u: float, level: float) -> QuantileCI:
    """Beta-calibrated interval through a fitted quantile function: with
    m = floor(n u), the endpoints are Q at the alpha/2 and 1 - alpha/2
    quantiles of Beta(m+1, n-m)."""
    _check_level(level)
    m = int(math.floor(n * u))
    if m + 1 <= 0 or n - m <= 0:
        raise DomainError(f"degenerate beta parameters for n={n}, u={u}")
    alpha = 1.0 - level
    p_lo = beta_quantile(0.5 * alpha, m + 1, n - m)
    p_hi = beta_quantile(1.0 - 0.5 * alpha, m + 1, n - m)
    lower = gld_quantile(params, p_lo)
    upper = gld_quantile(params, p_hi)
    center = gld_quantile(params, u)
    return QuantileCI(
        u=u,
        estimate=center,
        lower=lower,
        upper=upper,
        level=level,
        method="D",
        bandwidth_used=None,
        standardized_width=math.sqrt(n) * (upper - lower),
    )


def ci_method_d(
    data,
    u: float,
    level: float = 0.95,
    parameterization: str = "fkml",
    fit: Optional[GldFit] = None,
) -> QuantileCI:
    xs = np.asarray(data, dtype=float)
    if fit is None:
        fit = fit_gld_mle(xs, parameterization)
    return method_d_interval(fit.params, xs.size, u, level)


def ci_method_e(
    data,
    u: float,
    level: float = 0.95,
    kernel: KernelSpec = EPANECHNIKOV,
    parameterization: str = "fkml",
    fit: Optional[GldFit] = None,
) -> QuantileCI:
    """Adaptive interval: the fitted GLD supplies only the QOR bandwidth;
    the quantile density is still estimated from the data and the center is
    the Type-8 sample quantile.  If the fit fails the interval falls back
    to method A with the Cauchy QOR and is flagged."""
    _check_level(level)
    xs = np.asarray(data, dtype=float)
    if fit is None:
        try:
            fit = fit_gld_mle(xs, parameterization)
        except (FitError, DataError):
            fallback = ci_method_a(xs, u, level, DistributionModel(Cauchy()), kernel)
            return replace(fallback, method="E", flag="fallback-a-cauchy")
    correction = default_correction(gld_support(fit.params))
    rule = BandwidthRule(fit.params, kernel, correction)
    tau, b, floored = _direct_tau(xs, u, rule, xs.size)
    center = sample_quantile_type8(xs, u)
    flag = "floored-density" if floored else None
    return _symmetric_ci(center, tau, xs.size, u, level, "E", b, flag)


def ci_methods_fgh(
    data,
    u: float,
    level: float = 0.95,
    estimator: str = "G",
    b: float = SONI_DEFAULT_BANDWIDTH,
    kernel: KernelSpec = EPANECHNIKOV,
) -> QuantileCI:
    """Constant-bandwidth intervals: F (reciprocal), G (direct) or H
    (rank-weighted) estimate of the quantile density."""
    _check_level(level)
    xs = np.asarray(data, dtype=float)
    est = _fgh_estimate(xs, u, estimator, b, kernel)
    tau = math.sqrt(u * (1.0 - u)) * est.value
    center = sample_quantile_type8(xs, u)
    flag = "floored-density" if est.floored else None
    return _symmetric_ci(center, tau, xs.size, u, level, estimator.upper(), b, flag)


def _fgh_estimate(xs, u, estimator, b, kernel) -> QuantileDensityEstimate:
    tag = estimator.upper()
    if tag == "F":
        return qdens_reciprocal(xs, u, b, kernel)
    if tag == "G":
        return qdens_direct(xs, u, b, kernel)
    if tag == "H":
        return qdens_soni(xs, u, b, kernel)
    raise DomainError(f"estimator must be 'F', 'G' or 'H', got {estimator!r}")


@dataclass(frozen=True)
class MethodConfig:
    """A fully-specified interval method as used by the CLI and the Monte
    Carlo harness.

    method: one of A, B, C, D, E, F, G, H, or 'oracle' (true-tau interval
    used to validate the harness; requires qor_model = generating model).
    qor_model: representative model for A / truth for oracle.
    bandwidth: constant bandwidth for F/G/H.
    """

    method: str
    qor_model: Optional[DistributionModel] = None
    parameterization: str = "fkml"
    bandwidth: float = SONI_DEFAULT_BANDWIDTH
    kernel: KernelSpec = EPANECHNIKOV
    min_n: int = 30

    def label(self) -> str:
        if self.method == "A":
            model = self.qor_model.family.label() if self.qor_model else "?"
            return f"A-{model}"
        if self.method in ("C", "D", "E") and self.parameterization != "fkml":
            return f"{self.method}-{self.parameterization}"
        if self.method in ("F", "G", "H") and self.bandwidth != SONI_DEFAULT_BANDWIDTH:
            return f"{self.method}@{self.bandwidth:g}"
        return self.method


def compute_ci(
    config: MethodConfig,
    data,
    u: float,
    level: float = 0.95,
    fit: Optional[GldFit] = None,
) -> QuantileCI:
    """Dispatch a MethodConfig to the matching construction.  `fit` lets a
    caller reuse one GLD fit across methods C/D/E on the same data."""
    m = config.method.upper() if config.method != "oracle" else "oracle"
    if m == "A":
        if config.qor_model is None:
            raise DomainError("method A requires qor_model")
        ci = ci_method_a(data, u, level, config.qor_model, config.kernel, config.min_n)
    elif m == "B":
        ci = ci_method_b_pareto(data, u, level, config.kernel, config.min_n)
    elif m == "C":
        ci = ci_method_c(data, u, level, config.parameterization, fit)
    elif m == "D":
        ci = ci_method_d(data, u, level, config.parameterization, fit)
    elif m == "E":
        ci = ci_method_e(data, u, level, config.kernel, config.parameterization, fit)
    elif m in ("F", "G", "H"):
        ci = ci_methods_fgh(data, u, level, m, config.bandwidth, config.kernel)
    elif m == "oracle":
        if config.qor_model is None:
            raise DomainError("oracle method requires qor_model (the generating model)")
        xs = np.asarray(data, dtype=float)
        tau = math.sqrt(u * (1.0 - u)) * config.qor_model.quantile_density(u)
        center = sample_quantile_type8(xs, u)
        ci = _symmetric_ci(center, tau, xs.size, u, level, "oracle", None)
    else:
        raise DomainError(f"unknown method {config.method!r}")
    return replace(ci, method=config.label()) if ci.method != config.label() else ci


def _tau_parts(
    config: MethodConfig, data, u: float, level: float, fit: Optional[GldFit] = None
) -> tuple[float, float, Optional[str]]:
    """(estimate, tau_hat, flag) for the methods that produce a standard
    error; method D has none and is rejected."""
    if config.method.upper() == "D":
        raise DomainError("method D produces no standard error and cannot enter a difference interval")
    ci = compute_ci(config, data, u, level, fit)
    z = std_normal_quantile(0.5 * (1.0 + level))
    tau = ci.standardized_width / (2.0 * z)
    return ci.estimate, tau, ci.flag


def ci_two_sample(
    data_x,
    data_y,
    u: float,
    p: float,
    level: float = 0.95,
    method_x: MethodConfig | None = None,
    method_y: MethodConfig | None = None,
) -> TwoSampleCI:
    """Interval for Q_x(u) - Q_y(p) from independent samples: the point
    estimates subtract and the standard-error kernels combine as
    sqrt(tau^2/n + nu^2/m)."""
    _check_level(level)
    if method_x is None:
        method_x = MethodConfig(method="E")
    if method_y is None:
        method_y = method_x
    xs = np.asarray(data_x, dtype=float)
    ys = np.asarray(data_y, dtype=float)
    x_est, tau, flag_x = _tau_parts(method_x, xs, u, level)
    y_est, nu, flag_y = _tau_parts(method_y, ys, p, level)
    n, m = xs.size, ys.size
    z = std_normal_quantile(0.5 * (1.0 + level))
    half = z * math.sqrt(tau * tau / n + nu * nu / m)
    diff = x_est - y_est
    flag = flag_x or flag_y
    label = method_x.label() if method_x.label() == method_y.label() else f"{method_x.label()}|{method_y.label()}"
    return TwoSampleCI(
        u=u,
        p=p,
        estimate=diff,
        lower=diff - half,
        upper=diff + half,
        level=level,
        method=label,
        n=n,
        m=m,
        flag=flag,
    )


def ci_csv_row(ci: QuantileCI, fmt: str = "%.6g") -> list[str]:
    def num(v):
        return "" if v is None else fmt % v

    return [
        ci.method,
        num(ci.u),
        num(ci.estimate),
        num(ci.lower),
        num(ci.upper),
        num(ci.level),
        num(ci.bandwidth_used),
        num(ci.standardized_width),
    ]


def ci_json_dict(ci: QuantileCI) -> dict:
    return {
        "method": ci.method,
        "u": ci.u,
        "estimate": ci.estimate,
        "lower": ci.lower,
        "upper": ci.upper,
        "level": ci.level,
        "bandwidth": ci.bandwidth_used,
        "std_width": ci.standardized_width,
    }
