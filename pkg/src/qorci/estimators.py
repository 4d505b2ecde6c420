"""Sample-based quantile and quantile-density estimation.

Contains the compact kernels with their constants, the Type-8 order
statistic quantile, the asymptotically MSE-optimal bandwidth driven by a
curvature-ratio (QOR) source with lower-boundary correction, and three
kernel quantile-density estimators: the direct order-statistic form, the
reciprocal-of-a-density form, and the rank-weighted form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .distributions import DistributionModel
from .errors import DataError, DomainError, ZeroDensityError
from .gld import GldParams, gld_qor

__all__ = [
    "KernelSpec",
    "EPANECHNIKOV",
    "TRIANGULAR",
    "kernel_by_name",
    "bandwidth_constant",
    "AdaptivePareto",
    "BandwidthRule",
    "optimal_bandwidth",
    "pareto_shape_mle",
    "sample_quantile_type8",
    "QuantileDensityEstimate",
    "qdens_direct",
    "kernel_quantile_estimate",
    "qdens_reciprocal",
    "qdens_soni",
    "SONI_DEFAULT_BANDWIDTH",
]

SONI_DEFAULT_BANDWIDTH = 0.19


def _epanechnikov(x):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= 1.0, 0.75 * (1.0 - x * x), 0.0)


def _epanechnikov_antiderivative(x):
    x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
    return 0.5 + 0.75 * x - 0.25 * x**3


def _triangular(x):
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    return np.where(ax <= 1.0, 1.0 - ax, 0.0)


def _triangular_antiderivative(x):
    x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
    left = 0.5 * (x + 1.0) ** 2
    right = 0.5 + x - 0.5 * x**2
    return np.where(x < 0.0, left, right)


@dataclass(frozen=True)
class KernelSpec:
    """Even kernel on [-1, 1] with its variance, roughness and antiderivative."""

    name: str
    evaluate: Callable
    antiderivative: Callable
    sigma_k_sq: float
    kappa: float


EPANECHNIKOV = KernelSpec(
    name="epanechnikov",
    evaluate=_epanechnikov,
    antiderivative=_epanechnikov_antiderivative,
    sigma_k_sq=0.2,
    kappa=0.6,
)

TRIANGULAR = KernelSpec(
    name="triangular",
    evaluate=_triangular,
    antiderivative=_triangular_antiderivative,
    sigma_k_sq=1.0 / 6.0,
    kappa=2.0 / 3.0,
)

_KERNELS = {k.name: k for k in (EPANECHNIKOV, TRIANGULAR)}


def kernel_by_name(name: str) -> KernelSpec:
    try:
        return _KERNELS[name.lower()]
    except KeyError:
        raise DomainError(f"unknown kernel {name!r}; available: {sorted(_KERNELS)}") from None


def bandwidth_constant(kernel: KernelSpec) -> float:
    """(kappa / sigma_k^4)^(1/5); 15^(1/5) = 1.7188 for Epanechnikov."""
    return (kernel.kappa / kernel.sigma_k_sq**2) ** 0.2


class AdaptivePareto:
    """Marker source: estimate the Lomax shape from the data, then use its
    curvature ratio a^2 (1-u)^2 / ((1+a)(1+2a))."""


QorSource = Union[DistributionModel, GldParams, AdaptivePareto, float]


@dataclass(frozen=True)
class BandwidthRule:
    """How to produce a bandwidth: a QOR source (fixed family, fitted GLD,
    adaptive Pareto) or a constant, plus kernel and boundary correction.

    boundary_correction: 'none', 'lower' (b <- min{u, b}) or
    'both' (b <- min{u, 1-u, b}).
    """

    source: QorSource
    kernel: KernelSpec = EPANECHNIKOV
    boundary_correction: str = "none"

    def __post_init__(self):
        if self.boundary_correction not in ("none", "lower", "both"):
            raise DomainError(
                f"boundary_correction must be 'none', 'lower' or 'both', "
                f"got {self.boundary_correction!r}"
            )
        if isinstance(self.source, float) and not 0.0 < self.source < 1.0:
            raise DomainError(f"constant bandwidth must be in (0, 1), got {self.source}")


def pareto_shape_mle(data) -> float:
    """Lomax shape MLE a = n / sum(log(1 + x_i)); needs all x_i > -1."""
    xs = np.asarray(data, dtype=float)
    if np.any(xs <= -1.0):
        raise DataError("adaptive Pareto bandwidth needs all observations > -1")
    total = float(np.sum(np.log1p(xs)))
    if total <= 0.0:
        raise DataError("adaptive Pareto shape estimate is not positive")
    return xs.size / total


def _resolve_qor(rule: BandwidthRule, u: float, data) -> float:
    src = rule.source
    if isinstance(src, DistributionModel):
        return src.qor_value(u)
    if isinstance(src, GldParams):
        return gld_qor(src, u)
    if isinstance(src, AdaptivePareto) or src is AdaptivePareto:
        if data is None:
            raise DataError("adaptive Pareto bandwidth requires the data vector")
        a = pareto_shape_mle(data)
        return a * a * (1.0 - u) ** 2 / ((1.0 + a) * (1.0 + 2.0 * a))
    raise DomainError(f"unsupported bandwidth source {src!r}")


def optimal_bandwidth(rule: BandwidthRule, u: float, n: int, data=None) -> float:
    """Bandwidth (kappa/sigma_k^4)^(1/5) |QOR(u)|^(2/5) / n^(1/5), then the
    rule's boundary correction.  An infinite QOR (zero curvature) clamps the
    bandwidth to min{u, 1-u}.  Always returns a value in (0, 1)."""
    if not 0.0 < u < 1.0:
        raise DomainError(f"u must be in (0, 1), got {u}")
    if n < 2:
        raise DomainError(f"sample size must be >= 2, got {n}")
    if isinstance(rule.source, float):
        b = rule.source
    else:
        qor = _resolve_qor(rule, u, data)
        if not math.isfinite(qor):
            b = min(u, 1.0 - u)
        else:
            b = bandwidth_constant(rule.kernel) * abs(qor) ** 0.4 / n**0.2
    if rule.boundary_correction == "lower":
        b = min(u, b)
    elif rule.boundary_correction == "both":
        b = min(u, 1.0 - u, b)
    return min(b, 1.0 - 1e-9)


def _sorted_data(data) -> np.ndarray:
    xs = np.asarray(data, dtype=float).ravel()
    if xs.size == 0:
        raise DataError("data vector is empty")
    if not np.all(np.isfinite(xs)):
        raise DataError("data contains non-finite values")
    return np.sort(xs)


def sample_quantile_type8(data, u) -> float:
    """Order-statistic interpolation at h = (n + 1/3) u + 1/3, clamped to [1, n]."""
    xs = _sorted_data(data)
    n = xs.size
    arr = np.asarray(u, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"u must be in (0, 1), got {u!r}")
    h = np.clip((n + 1.0 / 3.0) * arr + 1.0 / 3.0, 1.0, float(n))
    lo = np.floor(h).astype(int)
    g = h - lo
    hi = np.minimum(lo + 1, n)
    val = xs[lo - 1] + g * (xs[hi - 1] - xs[lo - 1])
    return float(val) if np.ndim(u) == 0 else val


def _check_estimator_args(xs: np.ndarray, u: float, b: float) -> None:
    if xs.size < 2:
        raise DataError(f"need at least 2 observations, got {xs.size}")
    if not 0.0 < u < 1.0:
        raise DomainError(f"u must be in (0, 1), got {u}")
    if not 0.0 < b < 1.0:
        raise DomainError(f"bandwidth must be in (0, 1), got {b}")


@dataclass(frozen=True)
class QuantileDensityEstimate:
    u: float
    value: float
    bandwidth_used: float
    estimator: str
    floored: bool = False


def qdens_direct(data, u: float, b: float, kernel: KernelSpec = EPANECHNIKOV) -> QuantileDensityEstimate:
    """Direct order-statistic estimator
    sum_i X_(i) {k_b(u - (i-1)/n) - k_b(u - i/n)} with k_b(t) = k(t/b)/b.

    A negative sum (possible near the boundaries) is floored at 0 and
    flagged via ``floored``.
    """
    xs = _sorted_data(data)
    _check_estimator_args(xs, u, b)
    n = xs.size
    i = np.arange(1, n + 1)
    left = kernel.evaluate((u - (i - 1) / n) / b)
    right = kernel.evaluate((u - i / n) / b)
    value = float(np.sum(xs * (left - right)) / b)
    floored = value < 0.0
    if floored:
        value = 0.0
    return QuantileDensityEstimate(u=u, value=value, bandwidth_used=b, estimator="direct", floored=floored)


def kernel_quantile_estimate(data, u: float, b: float, kernel: KernelSpec = EPANECHNIKOV) -> float:
    """Kernel-smoothed quantile sum_i X_(i) * integral of k_b(u - y) over
    ((i-1)/n, i/n), evaluated exactly through the kernel antiderivative."""
    xs = _sorted_data(data)
    _check_estimator_args(xs, u, b)
    n = xs.size
    i = np.arange(1, n + 1)
    weights = kernel.antiderivative((u - (i - 1) / n) / b) - kernel.antiderivative((u - i / n) / b)
    return float(np.sum(xs * weights))


def _density_at(xs: np.ndarray, points: np.ndarray, b_data: float, kernel: KernelSpec) -> np.ndarray:
    """Kernel density estimate (1/n) sum_i k_b(X_i - x) at each point,
    with a data-scale bandwidth."""
    diffs = (xs[None, :] - points[:, None]) / b_data
    return kernel.evaluate(diffs).sum(axis=1) / (xs.size * b_data)


def _data_scale_bandwidth(xs: np.ndarray, b: float) -> float:
    sd = float(np.std(xs, ddof=1))
    if sd <= 0.0:
        raise ZeroDensityError("sample standard deviation is zero; density estimate is degenerate")
    return b * sd


def qdens_reciprocal(data, u: float, b: float, kernel: KernelSpec = EPANECHNIKOV) -> QuantileDensityEstimate:
    """Reciprocal estimator 1 / f_hat(Q_hat(u)).

    Q_hat is the kernel quantile estimate; f_hat is the kernel density of
    the data with bandwidth b * (sample standard deviation).
    """
    xs = _sorted_data(data)
    _check_estimator_args(xs, u, b)
    b_data = _data_scale_bandwidth(xs, b)
    q_hat = kernel_quantile_estimate(xs, u, b, kernel)
    f_hat = float(_density_at(xs, np.array([q_hat]), b_data, kernel)[0])
    if f_hat <= 0.0:
        raise ZeroDensityError(
            f"no observation within kernel reach of the quantile estimate {q_hat:g}"
        )
    return QuantileDensityEstimate(u=u, value=1.0 / f_hat, bandwidth_used=b, estimator="reciprocal")


def qdens_soni(data, u: float, b: float = SONI_DEFAULT_BANDWIDTH, kernel: KernelSpec = EPANECHNIKOV) -> QuantileDensityEstimate:
    """Rank-weighted estimator (1/n) sum_i k_b(S_i - u) / f_hat(X_(i)), where
    S_i is the proportion of observations <= X_(i) (ties share their rank)."""
    xs = _sorted_data(data)
    _check_estimator_args(xs, u, b)
    n = xs.size
    b_data = _data_scale_bandwidth(xs, b)
    s = np.searchsorted(xs, xs, side="right") / n
    w = kernel.evaluate((s - u) / b) / b
    mask = w > 0.0
    if not np.any(mask):
        return QuantileDensityEstimate(u=u, value=0.0, bandwidth_used=b, estimator="soni")
    f_hat = _density_at(xs, xs[mask], b_data, kernel)
    if np.any(f_hat <= 0.0):
        raise ZeroDensityError("kernel density vanished at an order statistic with nonzero weight")
    value = float(np.sum(w[mask] / f_hat) / n)
    return QuantileDensityEstimate(u=u, value=value, bandwidth_used=b, estimator="soni")
