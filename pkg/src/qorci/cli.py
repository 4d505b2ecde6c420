"""Command-line interface.

Subcommands: qor (ratio/bandwidth tables), ci (intervals on a data file),
ci-diff (two-sample difference), fit-gld (MLE fit as JSON), simulate
(Monte Carlo studies from a JSON spec), sample (fixture generation).

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
Every run echoes its fully-resolved configuration as JSON on stderr (or
into the simulate metadata file).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import FAMILY_NAMES, parse_model
from .errors import DataError, DomainError, NumericalError, QorciError
from .estimators import BandwidthRule, kernel_by_name, optimal_bandwidth
from .gld import fit_gld_mle, fit_to_json
from .intervals import (
    CI_CSV_COLUMNS,
    MethodConfig,
    ci_csv_row,
    ci_two_sample,
    compute_ci,
    default_correction,
)
from .numerics import RngStream
from .simulation import run_experiment, spec_from_dict, spec_to_dict

_ENV_SEED = "QCI_SEED"


def read_data_file(path: str) -> np.ndarray:
    """Single-column CSV or newline-delimited floats; rejects non-numeric
    rows with their line numbers."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read data file {path!r}: {exc}") from exc
    values = []
    bad = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        item = line.strip().rstrip(",")
        if not item:
            continue
        try:
            values.append(float(item))
        except ValueError:
            bad.append(lineno)
    if bad:
        shown = ", ".join(str(b) for b in bad[:10])
        more = "" if len(bad) <= 10 else f" (+{len(bad) - 10} more)"
        raise DataError(f"non-numeric rows in {path!r} at line(s): {shown}{more}")
    if not values:
        raise DataError(f"data file {path!r} contains no numbers")
    return np.array(values)


def parse_u_list(text: str) -> list[float]:
    """'0.5', '0.1,0.25,0.5' or 'start:stop:step' (inclusive stop)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise DomainError(f"grid must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0.0 or stop < start:
            raise DomainError(f"invalid grid {text!r}")
        count = int(round((stop - start) / step)) + 1
        return [round(start + k * step, 12) for k in range(count) if start + k * step <= stop + 1e-12]
    return [float(p) for p in text.split(",") if p.strip()]


def _seed_default() -> int:
    env = os.environ.get(_ENV_SEED)
    return int(env) if env else 0


def _echo_config(args_dict: dict) -> None:
    print(json.dumps({"config": args_dict}, sort_keys=True), file=sys.stderr)


def _emit(lines: list[str], out: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_method(text: str) -> MethodConfig:
    """Method flag grammar: 'A:<family>' or one of B C D E F G H."""
    name, _, family = text.partition(":")
    name = name.strip()
    if name.upper() == "A":
        if not family:
            raise DomainError("method A needs a family, e.g. --method A:cauchy")
        return MethodConfig(method="A", qor_model=parse_model(family))
    if family:
        raise DomainError(f"method {name!r} takes no family argument")
    if name.upper() not in ("B", "C", "D", "E", "F", "G", "H"):
        raise DomainError(f"unknown method {text!r}; use A:<family>, B, C, D, E, F, G or H")
    return MethodConfig(method=name.upper())


def cmd_qor(args) -> int:
    model = parse_model(args.family)
    kernel = kernel_by_name(args.kernel)
    us = parse_u_list(args.u)
    fmt = f"%.{args.precision}g"
    rule = BandwidthRule(model, kernel, default_correction(model))
    lines = ["u,qor,A_u,bandwidth"]
    for u in us:
        ev = model.qor(u)
        a_u = (kernel.kappa / kernel.sigma_k_sq**2) ** 0.2 * abs(ev.qor) ** 0.4
        if args.n:
            b = fmt % optimal_bandwidth(rule, u, args.n)
        else:
            b = ""
        lines.append(f"{fmt % u},{fmt % ev.qor},{fmt % a_u},{b}")
    _echo_config({"command": "qor", "family": model.label(), "u": us, "n": args.n,
                  "kernel": kernel.name, "precision": args.precision})
    _emit(lines, args.out)
    return 0


def cmd_ci(args) -> int:
    data = read_data_file(args.data)
    config = _parse_method(args.method)
    if args.bandwidth is not None:
        config = MethodConfig(
            method=config.method, qor_model=config.qor_model,
            parameterization=args.param, bandwidth=args.bandwidth,
            kernel=kernel_by_name(args.kernel),
        )
    else:
        config = MethodConfig(
            method=config.method, qor_model=config.qor_model,
            parameterization=args.param, kernel=kernel_by_name(args.kernel),
        )
    us = parse_u_list(args.u)
    fmt = f"%.{args.precision}g"
    lines = [",".join(CI_CSV_COLUMNS)]
    for u in us:
        ci = compute_ci(config, data, u, args.level)
        if ci.flag:
            print(f"warning: u={u:g}: {ci.flag}", file=sys.stderr)
        lines.append(",".join(ci_csv_row(ci, fmt)))
    _echo_config({"command": "ci", "data": args.data, "method": config.label(),
                  "u": us, "level": args.level, "kernel": args.kernel,
                  "param": args.param, "bandwidth": args.bandwidth,
                  "precision": args.precision})
    _emit(lines, args.out)
    return 0


def cmd_ci_diff(args) -> int:
    data_x = read_data_file(args.data1)
    data_y = read_data_file(args.data2)
    config = _parse_method(args.method)
    if config.method.upper() == "D":
        raise DomainError("method D cannot be used for a difference interval")
    fmt = f"%.{args.precision}g"
    ci = ci_two_sample(data_x, data_y, args.u, args.p, args.level, config, config)
    if ci.flag:
        print(f"warning: {ci.flag}", file=sys.stderr)
    lines = [
        "method,u,p,estimate,lower,upper,level,n,m",
        f"{ci.method},{fmt % ci.u},{fmt % ci.p},{fmt % ci.estimate},{fmt % ci.lower},"
        f"{fmt % ci.upper},{fmt % ci.level},{ci.n},{ci.m}",
    ]
    _echo_config({"command": "ci-diff", "data1": args.data1, "data2": args.data2,
                  "method": config.label(), "u": args.u, "p": args.p,
                  "level": args.level, "precision": args.precision})
    _emit(lines, args.out)
    return 0


def cmd_fit_gld(args) -> int:
    data = read_data_file(args.data)
    fit = fit_gld_mle(data, args.param)
    if not fit.converged:
        print("warning: optimizer did not meet its convergence tolerances", file=sys.stderr)
    _echo_config({"command": "fit-gld", "data": args.data, "param": args.param})
    _emit([fit_to_json(fit)], args.out)
    return 0


def cmd_simulate(args) -> int:
    try:
        obj = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise DataError(f"cannot read config {args.config!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"config {args.config!r} is not valid JSON: {exc}") from exc
    spec = spec_from_dict(obj)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    report = run_experiment(spec, workers=args.workers)
    wall = time.time() - started
    fmt = f"%.{args.precision}g"
    stem = Path(args.config).stem
    csv_path = out_dir / f"{stem}.csv"
    meta_path = out_dir / f"{stem}.meta.json"
    csv_path.write_text("\n".join(report.to_csv_lines(fmt)) + "\n")
    meta = {
        "spec": spec_to_dict(spec),
        "wall_time_s": wall,
        "seed": spec.seed,
        "workers": args.workers,
        "version": __version__,
    }
    if hasattr(report, "unreliable"):
        meta["unreliable"] = report.unreliable
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {csv_path} and {meta_path}", file=sys.stderr)
    return 0


def cmd_sample(args) -> int:
    model = parse_model(args.family)
    seed = args.seed if args.seed is not None else _seed_default()
    values = model.sample(args.n, RngStream(seed, args.stream))
    fmt = f"%.{args.precision}g"
    lines = [fmt % v for v in values]
    _echo_config({"command": "sample", "family": model.label(), "n": args.n,
                  "seed": seed, "stream": args.stream, "precision": args.precision})
    _emit(lines, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qorci",
        description="Distribution-informed confidence intervals for quantiles.",
    )
    parser.add_argument("--version", action="version", version=f"qorci {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--precision", type=int, default=6,
                       help="significant digits in numeric output (default 6)")
        p.add_argument("--out", default=None, help="write output to this file instead of stdout")

    p = sub.add_parser("qor", help="tabulate the curvature ratio and optimal bandwidth")
    p.add_argument("--family", required=True, help=f"one of: {', '.join(FAMILY_NAMES)}")
    p.add_argument("--u", required=True, help="list '0.1,0.5' or grid 'start:stop:step'")
    p.add_argument("--n", type=int, default=None, help="sample size for the bandwidth column")
    p.add_argument("--kernel", default="epanechnikov", choices=["epanechnikov", "triangular"])
    common(p)
    p.set_defaults(func=cmd_qor)

    p = sub.add_parser("ci", help="confidence intervals for quantiles of a data file")
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True, help="A:<family>, B, C, D, E, F, G or H")
    p.add_argument("--u", required=True)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--kernel", default="epanechnikov", choices=["epanechnikov", "triangular"])
    p.add_argument("--param", default="fkml", choices=["fkml", "rs"])
    p.add_argument("--bandwidth", type=float, default=None,
                   help="constant bandwidth for methods F/G/H (default 0.19)")
    common(p)
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("ci-diff", help="interval for a difference of two quantiles")
    p.add_argument("--data1", required=True)
    p.add_argument("--data2", required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--method", required=True)
    p.add_argument("--level", type=float, default=0.95)
    common(p)
    p.set_defaults(func=cmd_ci_diff)

    p = sub.add_parser("fit-gld", help="maximum-likelihood generalized lambda fit")
    p.add_argument("--data", required=True)
    p.add_argument("--param", default="fkml", choices=["fkml", "rs"])
    common(p)
    p.set_defaults(func=cmd_fit_gld)

    p = sub.add_parser("simulate", help="run a Monte Carlo study from a JSON spec")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--precision", type=int, default=6)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sample", help="draw a reproducible sample from a family")
    p.add_argument("--family", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=None, help=f"default: ${_ENV_SEED} or 0")
    p.add_argument("--stream", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_sample)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError,) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, QorciError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
