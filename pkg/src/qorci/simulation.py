"""Seeded Monte Carlo harness for coverage, width, MSE and GLD-bias studies.

Replicate r always draws from stream_index r (2r and 2r+1 for two-sample
runs), so reports are byte-identical regardless of worker count or
scheduling; aggregation follows replicate order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Optional, Sequence

import numpy as np

from .distributions import DistributionModel, parse_model
from .errors import DataError, DomainError, FitError, QorciError
from .estimators import (
    BandwidthRule,
    kernel_by_name,
    optimal_bandwidth,
    qdens_direct,
    qdens_reciprocal,
    qdens_soni,
)
from .gld import fit_gld_mle, gld_quantile
from .intervals import MethodConfig, ci_method_a, compute_ci
from .numerics import RngStream
from .errors import ZeroDensityError

__all__ = [
    "ExperimentSpec",
    "EstimatorConfig",
    "CoverageRow",
    "CoverageReport",
    "MseRow",
    "MseReport",
    "GldBiasRow",
    "GldBiasReport",
    "run_coverage",
    "run_two_sample_coverage",
    "run_mse",
    "run_gld_bias",
    "run_experiment",
    "spec_from_dict",
    "spec_to_dict",
    "method_config_from_dict",
]

_FAILURE_RATE_LIMIT = 0.02  # beyond this a report is marked unreliable


@dataclass(frozen=True)
class EstimatorConfig:
    """A quantile-density estimator arm for MSE studies: F, G or H with
    either a constant bandwidth or a family-optimal one."""

    estimator: str
    bandwidth: Optional[float] = None
    qor_family: Optional[str] = None
    kernel: str = "epanechnikov"

    def __post_init__(self):
        if self.estimator.upper() not in ("F", "G", "H"):
            raise DomainError(f"estimator must be F, G or H, got {self.estimator!r}")
        if (self.bandwidth is None) == (self.qor_family is None):
            raise DomainError("exactly one of bandwidth / qor_family must be set")

    def label(self) -> str:
        if self.bandwidth is not None:
            return f"{self.estimator.upper()}@{self.bandwidth:g}"
        return f"{self.estimator.upper()}@optimal:{self.qor_family}"


@dataclass(frozen=True)
class ExperimentSpec:
    """A declarative Monte Carlo experiment; see README for the JSON form."""

    kind: str  # coverage | two_sample_coverage | mse | gld_bias
    generator: str
    n: int
    u_grid: tuple
    replicates: int
    seed: int
    level: float = 0.95
    methods: tuple = ()
    estimators: tuple = ()
    n_list: tuple = ()
    parameterization: str = "fkml"
    generator_y: Optional[str] = None
    m: Optional[int] = None
    p_grid: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("coverage", "two_sample_coverage", "mse", "gld_bias"):
            raise DomainError(f"/kind: unknown experiment kind {self.kind!r}")
        if self.replicates < 1:
            raise DomainError(f"/replicates: must be >= 1, got {self.replicates}")
        if self.n < 2 and self.kind != "gld_bias":
            raise DomainError(f"/n: must be >= 2, got {self.n}")
        if not self.u_grid or any(not 0.0 < u < 1.0 for u in self.u_grid):
            raise DomainError(f"/u_grid: probabilities must lie in (0, 1), got {self.u_grid}")
        if not 0.5 < self.level < 1.0:
            raise DomainError(f"/level: must be in (0.5, 1), got {self.level}")
        parse_model(self.generator)  # raises DomainError for unknown families
        if self.kind in ("coverage", "two_sample_coverage") and not self.methods:
            raise DomainError("/methods: at least one method is required")
        if self.kind == "two_sample_coverage":
            if self.generator_y is None or self.m is None:
                raise DomainError("/generator_y and /m are required for two-sample runs")
            parse_model(self.generator_y)
            p = self.p_grid or self.u_grid
            if len(p) != len(self.u_grid):
                raise DomainError("/p_grid: must match /u_grid in length")
        if self.kind == "mse" and not self.estimators:
            raise DomainError("/estimators: at least one estimator arm is required")
        if self.kind == "gld_bias" and not self.n_list:
            raise DomainError("/n_list: at least one sample size is required")


@dataclass(frozen=True)
class CoverageRow:
    method: str
    u: float
    coverage: float
    mc_error: float
    mean_std_width: float
    failures: int


@dataclass(frozen=True)
class CoverageReport:
    rows: tuple
    replicates: int
    unreliable: bool

    def to_csv_lines(self, fmt: str = "%.6g") -> list[str]:
        lines = ["method,u,coverage,mc_error,mean_std_width,failures"]
        for r in self.rows:
            lines.append(
                f"{r.method},{fmt % r.u},{fmt % r.coverage},{fmt % r.mc_error},"
                f"{fmt % r.mean_std_width},{r.failures}"
            )
        return lines


@dataclass(frozen=True)
class MseRow:
    estimator: str
    u: float
    bias: float
    variance: float
    mse: float
    failures: int


@dataclass(frozen=True)
class MseReport:
    rows: tuple
    replicates: int

    def to_csv_lines(self, fmt: str = "%.6g") -> list[str]:
        lines = ["estimator,u,bias,variance,mse,failures"]
        for r in self.rows:
            lines.append(
                f"{r.estimator},{fmt % r.u},{fmt % r.bias},{fmt % r.variance},"
                f"{fmt % r.mse},{r.failures}"
            )
        return lines


@dataclass(frozen=True)
class GldBiasRow:
    n: int
    u: float
    percent_diff: float
    absolute: bool  # True when the true quantile is 0 and the difference is absolute
    failures: int


@dataclass(frozen=True)
class GldBiasReport:
    rows: tuple
    replicates: int

    def to_csv_lines(self, fmt: str = "%.6g") -> list[str]:
        lines = ["n,u,percent_diff,absolute,failures"]
        for r in self.rows:
            lines.append(
                f"{r.n},{fmt % r.u},{fmt % r.percent_diff},{int(r.absolute)},{r.failures}"
            )
        return lines


def _needed_parameterizations(methods: Sequence[MethodConfig]) -> tuple:
    return tuple(sorted({m.parameterization for m in methods if m.method.upper() in ("C", "D", "E")}))


def _fit_states(xs: np.ndarray, parameterizations: Sequence[str]) -> dict:
    states: dict = {}
    for p in parameterizations:
        try:
            states[p] = fit_gld_mle(xs, p)
        except (FitError, DataError) as exc:
            states[p] = exc
    return states


def _interval_or_fallback(config: MethodConfig, xs, u, level, fit_states):
    method = config.method.upper() if config.method != "oracle" else "oracle"
    if method in ("C", "D", "E"):
        state = fit_states[config.parameterization]
        if isinstance(state, Exception):
            if method == "E":
                fallback = ci_method_a(xs, u, level, "cauchy", config.kernel)
                return replace(fallback, method=config.label(), flag="fallback-a-cauchy")
            raise state
        return compute_ci(config, xs, u, level, fit=state)
    return compute_ci(config, xs, u, level)


def _coverage_replicate(spec: ExperimentSpec, r: int):
    gen = parse_model(spec.generator)
    xs = np.sort(gen.sample(spec.n, RngStream(spec.seed, r)))
    n_m, n_u = len(spec.methods), len(spec.u_grid)
    covered = np.zeros((n_m, n_u), dtype=bool)
    width = np.zeros((n_m, n_u))
    failed = np.zeros((n_m, n_u), dtype=bool)
    truths = [gen.quantile(u) for u in spec.u_grid]
    fit_states = _fit_states(xs, _needed_parameterizations(spec.methods))
    for i, cfg in enumerate(spec.methods):
        for j, u in enumerate(spec.u_grid):
            try:
                ci = _interval_or_fallback(cfg, xs, u, spec.level, fit_states)
            except QorciError:
                failed[i, j] = True
                continue
            covered[i, j] = ci.lower <= truths[j] <= ci.upper
            width[i, j] = math.sqrt(spec.n) * (ci.upper - ci.lower)
    return covered, width, failed


def _two_sample_replicate(spec: ExperimentSpec, r: int):
    gen_x = parse_model(spec.generator)
    gen_y = parse_model(spec.generator_y)
    xs = np.sort(gen_x.sample(spec.n, RngStream(spec.seed, 2 * r)))
    ys = np.sort(gen_y.sample(spec.m, RngStream(spec.seed, 2 * r + 1)))
    p_grid = spec.p_grid or spec.u_grid
    n_m, n_u = len(spec.methods), len(spec.u_grid)
    covered = np.zeros((n_m, n_u), dtype=bool)
    width = np.zeros((n_m, n_u))
    failed = np.zeros((n_m, n_u), dtype=bool)
    fits_x = _fit_states(xs, _needed_parameterizations(spec.methods))
    fits_y = _fit_states(ys, _needed_parameterizations(spec.methods))
    z_consts = {}
    for i, cfg in enumerate(spec.methods):
        if cfg.method.upper() == "D":
            raise DomainError("method D cannot enter a two-sample difference interval")
        for j, (u, p) in enumerate(zip(spec.u_grid, p_grid)):
            truth = gen_x.quantile(u) - gen_y.quantile(p)
            try:
                ci_x = _interval_or_fallback(cfg, xs, u, spec.level, fits_x)
                ci_y = _interval_or_fallback(cfg, ys, p, spec.level, fits_y)
            except QorciError:
                failed[i, j] = True
                continue
            if spec.level not in z_consts:
                from .numerics import std_normal_quantile

                z_consts[spec.level] = std_normal_quantile(0.5 * (1.0 + spec.level))
            z = z_consts[spec.level]
            tau = ci_x.standardized_width / (2.0 * z)
            nu = ci_y.standardized_width / (2.0 * z)
            diff = ci_x.estimate - ci_y.estimate
            half = z * math.sqrt(tau * tau / spec.n + nu * nu / spec.m)
            covered[i, j] = diff - half <= truth <= diff + half
            width[i, j] = math.sqrt(spec.n) * 2.0 * half
    return covered, width, failed


def _run_replicates(worker, spec: ExperimentSpec, workers: int):
    """Execute worker(spec, r) for r in range(replicates), in order."""
    task = partial(worker, spec)
    if workers <= 1:
        return [task(r) for r in range(spec.replicates)]
    chunk = max(1, spec.replicates // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, range(spec.replicates), chunksize=chunk))


def _aggregate_coverage(spec: ExperimentSpec, results) -> CoverageReport:
    n_m, n_u = len(spec.methods), len(spec.u_grid)
    cov_sum = np.zeros((n_m, n_u), dtype=np.int64)
    width_sum = np.zeros((n_m, n_u))
    fail_sum = np.zeros((n_m, n_u), dtype=np.int64)
    for covered, width, failed in results:
        cov_sum += covered
        width_sum += width
        fail_sum += failed
    rows = []
    unreliable = False
    for i, cfg in enumerate(spec.methods):
        for j, u in enumerate(spec.u_grid):
            fails = int(fail_sum[i, j])
            effective = spec.replicates - fails
            if fails > _FAILURE_RATE_LIMIT * spec.replicates:
                unreliable = True
            if effective == 0:
                rows.append(CoverageRow(cfg.label(), u, math.nan, math.nan, math.nan, fails))
                continue
            c = cov_sum[i, j] / effective
            rows.append(
                CoverageRow(
                    method=cfg.label(),
                    u=u,
                    coverage=c,
                    mc_error=math.sqrt(c * (1.0 - c) / effective),
                    mean_std_width=width_sum[i, j] / effective,
                    failures=fails,
                )
            )
    return CoverageReport(rows=tuple(rows), replicates=spec.replicates, unreliable=unreliable)


def run_coverage(spec: ExperimentSpec, workers: int = 1) -> CoverageReport:
    """Empirical coverage of each (method, u): the fraction of replicates
    whose interval contains the generator's true quantile.  Failed method
    evaluations are excluded from the denominator and counted."""
    if spec.kind != "coverage":
        raise DomainError(f"spec kind must be 'coverage', got {spec.kind!r}")
    return _aggregate_coverage(spec, _run_replicates(_coverage_replicate, spec, workers))


def run_two_sample_coverage(spec: ExperimentSpec, workers: int = 1) -> CoverageReport:
    """Coverage of the difference Q_x(u) - Q_y(p) (truths from closed forms)."""
    if spec.kind != "two_sample_coverage":
        raise DomainError(f"spec kind must be 'two_sample_coverage', got {spec.kind!r}")
    return _aggregate_coverage(spec, _run_replicates(_two_sample_replicate, spec, workers))


def _estimate_qdens(cfg: EstimatorConfig, xs: np.ndarray, u: float, n: int):
    kernel = kernel_by_name(cfg.kernel)
    if cfg.bandwidth is not None:
        b = cfg.bandwidth
    else:
        model = parse_model(cfg.qor_family)
        from .intervals import default_correction

        rule = BandwidthRule(model, kernel, default_correction(model))
        b = optimal_bandwidth(rule, u, n, data=xs)
    tag = cfg.estimator.upper()
    if tag == "F":
        return qdens_reciprocal(xs, u, b, kernel).value
    if tag == "G":
        return qdens_direct(xs, u, b, kernel).value
    return qdens_soni(xs, u, b, kernel).value


def _mse_replicate(spec: ExperimentSpec, r: int):
    gen = parse_model(spec.generator)
    xs = np.sort(gen.sample(spec.n, RngStream(spec.seed, r)))
    n_e, n_u = len(spec.estimators), len(spec.u_grid)
    values = np.full((n_e, n_u), np.nan)
    failed = np.zeros((n_e, n_u), dtype=bool)
    for i, cfg in enumerate(spec.estimators):
        for j, u in enumerate(spec.u_grid):
            try:
                values[i, j] = _estimate_qdens(cfg, xs, u, spec.n)
            except QorciError:
                failed[i, j] = True
    return values, failed


def run_mse(
    generator: str,
    n: int,
    u_grid: Sequence[float],
    estimators: Sequence[EstimatorConfig],
    replicates: int,
    seed: int,
    workers: int = 1,
) -> MseReport:
    """Bias, variance and MSE of quantile-density estimators against the
    generator's closed-form q(u)."""
    spec = ExperimentSpec(
        kind="mse",
        generator=generator,
        n=n,
        u_grid=tuple(u_grid),
        replicates=replicates,
        seed=seed,
        estimators=tuple(estimators),
    )
    gen = parse_model(generator)
    results = _run_replicates(_mse_replicate, spec, workers)
    rows = []
    for i, cfg in enumerate(spec.estimators):
        for j, u in enumerate(spec.u_grid):
            vals = np.array([res[0][i, j] for res in results])
            fails = int(sum(res[1][i, j] for res in results))
            ok = vals[~np.isnan(vals)]
            q_true = gen.quantile_density(u)
            if ok.size == 0:
                rows.append(MseRow(cfg.label(), u, math.nan, math.nan, math.nan, fails))
                continue
            bias = float(np.mean(ok) - q_true)
            variance = float(np.mean((ok - np.mean(ok)) ** 2))
            mse = float(np.mean((ok - q_true) ** 2))
            rows.append(MseRow(cfg.label(), u, bias, variance, mse, fails))
    return MseReport(rows=tuple(rows), replicates=replicates)


def _gld_bias_replicate(spec: ExperimentSpec, r: int):
    gen = parse_model(spec.generator)
    n_n, n_u = len(spec.n_list), len(spec.u_grid)
    values = np.full((n_n, n_u), np.nan)
    failed = np.zeros(n_n, dtype=bool)
    for i, n in enumerate(spec.n_list):
        xs = np.sort(gen.sample(n, RngStream(spec.seed, r)))
        try:
            fit = fit_gld_mle(xs, spec.parameterization)
        except (FitError, DataError):
            failed[i] = True
            continue
        for j, u in enumerate(spec.u_grid):
            values[i, j] = gld_quantile(fit.params, u)
    return values, failed


def run_gld_bias(
    true_model: str,
    n_list: Sequence[int],
    u_grid: Sequence[float],
    replicates: int,
    seed: int,
    parameterization: str = "fkml",
    workers: int = 1,
) -> GldBiasReport:
    """Percent difference between the mean fitted quantile and the true
    quantile, per (n, u); where the true quantile is 0 the absolute
    difference is reported and flagged."""
    spec = ExperimentSpec(
        kind="gld_bias",
        generator=true_model,
        n=max(n_list),
        u_grid=tuple(u_grid),
        replicates=replicates,
        seed=seed,
        n_list=tuple(int(v) for v in n_list),
        parameterization=parameterization,
    )
    gen = parse_model(true_model)
    results = _run_replicates(_gld_bias_replicate, spec, workers)
    rows = []
    for i, n in enumerate(spec.n_list):
        fails = int(sum(res[1][i] for res in results))
        for j, u in enumerate(spec.u_grid):
            vals = np.array([res[0][i, j] for res in results])
            ok = vals[~np.isnan(vals)]
            q_true = gen.quantile(u)
            if ok.size == 0:
                rows.append(GldBiasRow(n, u, math.nan, False, fails))
                continue
            mean_fitted = float(np.mean(ok))
            if q_true == 0.0:
                rows.append(GldBiasRow(n, u, mean_fitted, True, fails))
            else:
                rows.append(GldBiasRow(n, u, 100.0 * (mean_fitted - q_true) / q_true, False, fails))
    return GldBiasReport(rows=tuple(rows), replicates=replicates)


def run_experiment(spec: ExperimentSpec, workers: int = 1):
    """Dispatch on spec.kind; returns the matching report object."""
    if spec.kind == "coverage":
        return run_coverage(spec, workers)
    if spec.kind == "two_sample_coverage":
        return run_two_sample_coverage(spec, workers)
    if spec.kind == "mse":
        return run_mse(
            spec.generator, spec.n, spec.u_grid, spec.estimators, spec.replicates,
            spec.seed, workers,
        )
    return run_gld_bias(
        spec.generator, spec.n_list, spec.u_grid, spec.replicates, spec.seed,
        spec.parameterization, workers,
    )


def method_config_from_dict(obj: dict, path: str = "/methods") -> MethodConfig:
    if not isinstance(obj, dict) or "method" not in obj:
        raise DomainError(f"{path}: each method needs a 'method' key")
    known = {"method", "qor_family", "parameterization", "bandwidth", "kernel", "min_n"}
    unknown = set(obj) - known
    if unknown:
        raise DomainError(f"{path}: unknown keys {sorted(unknown)}")
    method = str(obj["method"])
    qor_model = None
    if obj.get("qor_family") is not None:
        qor_model = parse_model(str(obj["qor_family"]))
    elif method.upper() == "A" or method == "oracle":
        raise DomainError(f"{path}/qor_family: required for method {method!r}")
    try:
        kernel = kernel_by_name(obj.get("kernel", "epanechnikov"))
    except DomainError as exc:
        raise DomainError(f"{path}/kernel: {exc}") from None
    return MethodConfig(
        method=method,
        qor_model=qor_model,
        parameterization=obj.get("parameterization", "fkml"),
        bandwidth=float(obj.get("bandwidth", 0.19)),
        kernel=kernel,
        min_n=int(obj.get("min_n", 30)),
    )


def _estimator_config_from_dict(obj: dict, path: str) -> EstimatorConfig:
    if not isinstance(obj, dict) or "estimator" not in obj:
        raise DomainError(f"{path}: each arm needs an 'estimator' key")
    known = {"estimator", "bandwidth", "qor_family", "kernel"}
    unknown = set(obj) - known
    if unknown:
        raise DomainError(f"{path}: unknown keys {sorted(unknown)}")
    bw = obj.get("bandwidth")
    return EstimatorConfig(
        estimator=str(obj["estimator"]),
        bandwidth=None if bw is None else float(bw),
        qor_family=obj.get("qor_family"),
        kernel=obj.get("kernel", "epanechnikov"),
    )


def spec_from_dict(obj: dict) -> ExperimentSpec:
    """Build and validate an ExperimentSpec from a parsed JSON object;
    validation errors carry JSON-pointer-style paths."""
    if not isinstance(obj, dict):
        raise DomainError("/: experiment spec must be a JSON object")
    known = {
        "kind", "generator", "n", "u_grid", "replicates", "seed", "level",
        "methods", "estimators", "n_list", "parameterization", "generator_y",
        "m", "p_grid",
    }
    unknown = set(obj) - known
    if unknown:
        raise DomainError(f"/: unknown keys {sorted(unknown)}")
    for key in ("kind", "generator", "u_grid", "replicates", "seed"):
        if key not in obj:
            raise DomainError(f"/{key}: required")
    if obj["kind"] != "gld_bias" and "n" not in obj:
        raise DomainError("/n: required")
    methods = tuple(
        method_config_from_dict(m, f"/methods/{i}") for i, m in enumerate(obj.get("methods", []))
    )
    estimators = tuple(
        _estimator_config_from_dict(e, f"/estimators/{i}")
        for i, e in enumerate(obj.get("estimators", []))
    )
    return ExperimentSpec(
        kind=str(obj["kind"]),
        generator=str(obj["generator"]),
        n=int(obj.get("n", 0) or max(obj.get("n_list", [2]))),
        u_grid=tuple(float(u) for u in obj["u_grid"]),
        replicates=int(obj["replicates"]),
        seed=int(obj["seed"]),
        level=float(obj.get("level", 0.95)),
        methods=methods,
        estimators=estimators,
        n_list=tuple(int(v) for v in obj.get("n_list", [])),
        parameterization=str(obj.get("parameterization", "fkml")),
        generator_y=obj.get("generator_y"),
        m=None if obj.get("m") is None else int(obj["m"]),
        p_grid=None if obj.get("p_grid") is None else tuple(float(p) for p in obj["p_grid"]),
    )


def spec_to_dict(spec: ExperimentSpec) -> dict:
    """Round-trippable echo of the spec with defaults filled in."""
    out = {
        "kind": spec.kind,
        "generator": spec.generator,
        "n": spec.n,
        "u_grid": list(spec.u_grid),
        "replicates": spec.replicates,
        "seed": spec.seed,
        "level": spec.level,
    }
    if spec.methods:
        out["methods"] = [
            {
                "method": m.method,
                "qor_family": m.qor_model.label() if m.qor_model else None,
                "parameterization": m.parameterization,
                "bandwidth": m.bandwidth,
                "kernel": m.kernel.name,
                "min_n": m.min_n,
            }
            for m in spec.methods
        ]
    if spec.estimators:
        out["estimators"] = [
            {
                "estimator": e.estimator,
                "bandwidth": e.bandwidth,
                "qor_family": e.qor_family,
                "kernel": e.kernel,
            }
            for e in spec.estimators
        ]
    if spec.n_list:
        out["n_list"] = list(spec.n_list)
        out["parameterization"] = spec.parameterization
    if spec.generator_y is not None:
        out["generator_y"] = spec.generator_y
        out["m"] = spec.m
        out["p_grid"] = list(spec.p_grid or spec.u_grid)
    return out
