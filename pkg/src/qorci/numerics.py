"""Special functions, bracketed root finding, Nelder-Mead minimization and
reproducible counter-based random streams.

The probability functions are thin, contract-checked wrappers over scipy's
implementations; the optimizer and the stream layer are self-contained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, special

from .errors import DomainError, NumericalError

__all__ = [
    "std_normal_cdf",
    "std_normal_quantile",
    "std_normal_pdf",
    "regularized_incomplete_beta",
    "beta_quantile",
    "regularized_incomplete_gamma",
    "gamma_quantile",
    "RootBracket",
    "brent_root",
    "NelderMeadOptions",
    "NelderMeadResult",
    "nelder_mead",
    "RngStream",
    "rng_uniform",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def std_normal_cdf(z):
    """Standard normal distribution function, accurate to ~1e-15 absolute."""
    return special.ndtr(z)


def std_normal_quantile(p):
    """Inverse of the standard normal distribution function.

    Raises DomainError unless 0 < p < 1 (elementwise for arrays).
    """
    arr = np.asarray(p, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"normal quantile requires 0 < p < 1, got {p!r}")
    out = special.ndtri(arr)
    return float(out) if np.isscalar(p) else out


def std_normal_pdf(z):
    """Standard normal density exp(-z^2/2)/sqrt(2*pi)."""
    z = np.asarray(z, dtype=float)
    out = np.exp(-0.5 * z * z) / _SQRT_2PI
    return float(out) if out.ndim == 0 else out


def regularized_incomplete_beta(x, a: float, b: float):
    """Regularized incomplete beta I_x(a, b), the Beta(a, b) CDF at x."""
    if a <= 0.0 or b <= 0.0:
        raise DomainError(f"beta shape parameters must be positive, got a={a}, b={b}")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"incomplete beta requires 0 <= x <= 1, got {x!r}")
    out = special.betainc(a, b, arr)
    return float(out) if np.isscalar(x) else out


def beta_quantile(p, a: float, b: float):
    """Inverse of the Beta(a, b) CDF."""
    if a <= 0.0 or b <= 0.0:
        raise DomainError(f"beta shape parameters must be positive, got a={a}, b={b}")
    arr = np.asarray(p, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"beta quantile requires 0 < p < 1, got {p!r}")
    out = special.betaincinv(a, b, arr)
    return float(out) if np.isscalar(p) else out


def regularized_incomplete_gamma(x, shape: float):
    """Regularized lower incomplete gamma P(shape, x): Gamma(shape, 1) CDF."""
    if shape <= 0.0:
        raise DomainError(f"gamma shape must be positive, got {shape}")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0):
        raise DomainError(f"incomplete gamma requires x >= 0, got {x!r}")
    out = special.gammainc(shape, arr)
    return float(out) if np.isscalar(x) else out


def gamma_quantile(p, shape: float):
    """Inverse of the Gamma(shape, 1) CDF."""
    if shape <= 0.0:
        raise DomainError(f"gamma shape must be positive, got {shape}")
    arr = np.asarray(p, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"gamma quantile requires 0 < p < 1, got {p!r}")
    out = special.gammaincinv(shape, arr)
    return float(out) if np.isscalar(p) else out


@dataclass(frozen=True)
class RootBracket:
    """An interval [lo, hi] on which a continuous function changes sign."""

    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise NumericalError(f"invalid bracket: lo={self.lo} must be < hi={self.hi}")
        if self.f_lo * self.f_hi > 0.0:
            raise NumericalError(
                f"invalid bracket: f(lo)={self.f_lo} and f(hi)={self.f_hi} have the same sign"
            )

    @classmethod
    def from_function(cls, f: Callable[[float], float], lo: float, hi: float) -> "RootBracket":
        return cls(lo, hi, f(lo), f(hi))


def brent_root(f: Callable[[float], float], bracket: RootBracket, tol: float = 1e-12) -> float:
    """Root of f inside a validated sign-change bracket (Brent's method)."""
    if bracket.f_lo == 0.0:
        return bracket.lo
    if bracket.f_hi == 0.0:
        return bracket.hi
    return float(optimize.brentq(f, bracket.lo, bracket.hi, xtol=tol, maxiter=200))


@dataclass(frozen=True)
class NelderMeadOptions:
    """Simplex coefficients and stopping rules for :func:`nelder_mead`.

    Convergence requires the simplex diameter to fall below `tol` and the
    spread of vertex values to fall below ``tol * (1 + |f_best|)`` (the
    relative form keeps large-magnitude objectives from grinding against
    their own rounding noise).
    """

    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    tol: float = 1e-8
    max_iter: int = 2000
    # Per-coordinate absolute offsets for the initial simplex.  When None,
    # each coordinate is perturbed by 5% of its value (0.00025 if zero).
    initial_steps: Sequence[float] | None = None


@dataclass(frozen=True)
class NelderMeadResult:
    x: np.ndarray
    fun: float
    converged: bool
    iterations: int
    evaluations: int


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    start: Sequence[float],
    options: NelderMeadOptions | None = None,
) -> NelderMeadResult:
    """Minimize a scalar function of a real vector with the Nelder-Mead simplex.

    The objective must be finite at `start`; elsewhere it may return +inf,
    which is treated as worse than any finite value (penalty convention).
    The search is fully deterministic given (start, options).  Convergence is
    declared when both the simplex diameter and the spread of function values
    fall below `options.tol`; otherwise the best vertex found within
    `options.max_iter` iterations is returned with ``converged=False``.
    """
    opts = options or NelderMeadOptions()
    x0 = np.asarray(start, dtype=float)
    if x0.ndim != 1 or x0.size == 0:
        raise DomainError("start must be a non-empty 1-d vector")
    f0 = float(objective(x0))
    if not math.isfinite(f0):
        raise NumericalError(f"objective is not finite at the starting point: {f0}")

    dim = x0.size
    simplex = [x0]
    for i in range(dim):
        p = x0.copy()
        if opts.initial_steps is not None:
            p[i] += opts.initial_steps[i]
        elif p[i] != 0.0:
            p[i] *= 1.05
        else:
            p[i] = 0.00025
        simplex.append(p)
    values = [f0] + [float(objective(p)) for p in simplex[1:]]
    evaluations = dim + 1

    alpha, gamma, rho, sigma = opts.reflection, opts.expansion, opts.contraction, opts.shrink
    iterations = 0
    converged = False
    while iterations < opts.max_iter:
        order = sorted(range(dim + 1), key=lambda k: values[k])
        simplex = [simplex[k] for k in order]
        values = [values[k] for k in order]
        diameter = max(float(np.max(np.abs(p - simplex[0]))) for p in simplex[1:])
        spread = values[-1] - values[0]
        if diameter <= opts.tol and spread <= opts.tol * (1.0 + abs(values[0])):
            converged = True
            break
        iterations += 1

        centroid = np.mean(simplex[:-1], axis=0)
        reflected = centroid + alpha * (centroid - simplex[-1])
        f_r = float(objective(reflected))
        evaluations += 1
        if values[0] <= f_r < values[-2]:
            simplex[-1], values[-1] = reflected, f_r
        elif f_r < values[0]:
            expanded = centroid + gamma * (centroid - simplex[-1])
            f_e = float(objective(expanded))
            evaluations += 1
            if f_e < f_r:
                simplex[-1], values[-1] = expanded, f_e
            else:
                simplex[-1], values[-1] = reflected, f_r
        else:
            contracted = centroid + rho * (simplex[-1] - centroid)
            f_c = float(objective(contracted))
            evaluations += 1
            if f_c < values[-1]:
                simplex[-1], values[-1] = contracted, f_c
            else:
                for k in range(1, dim + 1):
                    simplex[k] = simplex[0] + sigma * (simplex[k] - simplex[0])
                    values[k] = float(objective(simplex[k]))
                evaluations += dim

    order = sorted(range(dim + 1), key=lambda k: values[k])
    best = order[0]
    return NelderMeadResult(
        x=simplex[best].copy(),
        fun=values[best],
        converged=converged,
        iterations=iterations,
        evaluations=evaluations,
    )


@dataclass(frozen=True)
class RngStream:
    """Descriptor of an independent uniform stream.

    The same (seed, stream_index) pair yields the same sequence on every
    platform and regardless of threading, courtesy of the counter-based
    Philox generator keyed by the pair.
    """

    seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        if self.stream_index < 0:
            raise DomainError(f"stream_index must be >= 0, got {self.stream_index}")

    def child(self, offset: int) -> "RngStream":
        """A derived stream with a shifted index (same seed)."""
        return RngStream(self.seed, self.stream_index + offset)


def rng_uniform(stream: RngStream, count: int) -> np.ndarray:
    """First `count` uniforms of the stream, strictly inside (0, 1).

    Values are (k + 1/2) / 2^53 for a 53-bit Philox integer k, so neither
    endpoint can ever be returned and inverse-transform sampling is safe.
    """
    if count < 0:
        raise DomainError(f"count must be >= 0, got {count}")
    key = np.array(
        [np.uint64(stream.seed & 0xFFFFFFFFFFFFFFFF), np.uint64(stream.stream_index)],
        dtype=np.uint64,
    )
    gen = np.random.Generator(np.random.Philox(key=key))
    k = gen.integers(0, 1 << 53, size=count, dtype=np.uint64)
    return (k.astype(np.float64) + 0.5) * 2.0**-53
