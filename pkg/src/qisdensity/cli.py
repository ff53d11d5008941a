"""Command-line interface.

Every subcommand writes a table (CSV by default, JSON with ``--format json``)
to standard output or ``--out``. Exit status is 0 on success, 2 on a usage
error and 1 on a runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import bounds, estimate, formats
from .bitdensity import PgModel, Quantizer, SeriesPolicy, bit_density
from .simulate import SimConfig, empirical_density, simulate_planes
from .svg import write_line_chart

TAIL_MASS_ENV = "QIS_TAIL_MASS"
SAT_TOKEN = "sat"
FAIL_TOKEN = "nan"


@dataclass(frozen=True)
class OutputSpec:
    format: str = "csv"
    path: str | None = None
    precision: int = 10
    svg: str | None = None

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.format!r}")
        if not 6 <= self.precision <= 17:
            raise ValueError("precision must lie in [6, 17]")


def _fmt(value, precision: int):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return f"{float(value):.{precision}g}"


def _json_value(value, precision: int):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, str):
        return value
    v = float(f"{float(value):.{precision}g}")
    return v if math.isfinite(v) else str(v)


def render(columns: list[str], rows: list[list], spec: OutputSpec) -> str:
    if spec.format == "json":
        records = [{c: _json_value(v, spec.precision) for c, v in zip(columns, row)}
                   for row in rows]
        return json.dumps(records, indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v, spec.precision) for v in row])
    return buf.getvalue()


def emit(columns: list[str], rows: list[list], spec: OutputSpec) -> None:
    text = render(columns, rows, spec)
    if spec.path:
        with open(spec.path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def default_policy() -> SeriesPolicy:
    raw = os.environ.get(TAIL_MASS_ENV)
    return SeriesPolicy(tail_mass=float(raw)) if raw else SeriesPolicy()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_density(args, spec: OutputSpec, policy: SeriesPolicy) -> None:
    res = bit_density(PgModel(args.theta, args.sigma), Quantizer(args.q), policy)
    emit(["d", "d_star", "residue", "k_used"],
         [[res.d, res.d_star, res.residue, res.k_used]], spec)


def cmd_dlogh(args, spec: OutputSpec, policy: SeriesPolicy) -> None:
    sigmas = args.sigma or [0.0]
    thetas = np.geomspace(args.theta_min, args.theta_max, args.points)
    quantizer = Quantizer(args.q)
    cols = {f"d_sigma_{s:g}": [bit_density(PgModel(float(t), s), quantizer, policy).d
                               for t in thetas]
            for s in sigmas}
    rows = [[float(t), *(c[i] for c in cols.values())] for i, t in enumerate(thetas)]
    emit(["theta", *cols], rows, spec)
    if spec.svg:
        write_line_chart(spec.svg, thetas, cols, logx=True, xlabel="theta", ylabel="D")


def cmd_cutoff(args, spec: OutputSpec, policy: SeriesPolicy) -> None:
    quantizer = Quantizer(args.q)
    sigmas = np.linspace(0.0, args.sigma_max, args.points)
    rows = []
    for s in sigmas:
        res = bit_density(PgModel(args.theta, float(s)), quantizer, policy)
        rel = res.residue / res.d_star if res.d_star > 0 else math.nan
        rows.append([float(s), res.d, rel])
    emit(["sigma", "d", "rel_residue"], rows, spec)
    if spec.svg:
        write_line_chart(spec.svg, sigmas, {"D": [r[1] for r in rows]},
                         xlabel="sigma", ylabel="D")


def cmd_bound(args, spec: OutputSpec, policy: SeriesPolicy, parser) -> None:
    mode = args.mode
    given = {name for name in ("alpha", "q", "theta") if getattr(args, name) is not None}
    allowed = {
        "theorem1": {"alpha"},
        "coarse": set(),
        "general": {"alpha", "q"},
        "search": {"alpha", "q", "theta"},
    }[mode]
    required = {"theorem1": {"alpha"}, "coarse": set(), "general": {"alpha", "q"},
                "search": {"alpha"}}[mode]
    if given - allowed:
        parser.error(f"--mode {mode} does not accept " + ", ".join(f"--{n}" for n in sorted(given - allowed)))
    if required - given:
        parser.error(f"--mode {mode} requires " + ", ".join(f"--{n}" for n in sorted(required - given)))
    try:
        if mode == "theorem1":
            sigma = bounds.sigma_max_theorem1(args.alpha)
        elif mode == "coarse":
            sigma = bounds.sigma_max_coarse()
        elif mode == "general":
            sigma = bounds.sigma_max_general_q(args.q, args.alpha)
        else:
            q = 0.5 if args.q is None else args.q
            theta = 1.0 if args.theta is None else args.theta
            sigma = bounds.sigma_range_search(theta, q, args.alpha, policy).sigma
    except ValueError as exc:
        parser.error(str(exc))
    emit(["mode", "sigma"], [[mode, sigma]], spec)


def cmd_table1(args, spec: OutputSpec, policy: SeriesPolicy) -> None:
    emit(["alpha", "sigma"], [list(r) for r in bounds.table1()], spec)


def cmd_sigma_range(args, spec: OutputSpec, policy: SeriesPolicy) -> None:
    qs = np.linspace(args.q_min, args.q_max, args.points)
    # round so that q and 1 - q rows are printed from identical thresholds
    qs = np.round(qs, 12)
    ranges = [bounds.sigma_range_search(args.theta, float(q), args.alpha, policy).sigma
              for q in qs]
    emit(["q", "sigma_range"], [[float(q), s] for q, s in zip(qs, ranges)], spec)
    if spec.svg:
        write_line_chart(spec.svg, qs, {"sigma range": ranges}, xlabel="q", ylabel="sigma")


def cmd_simulate(args, spec: OutputSpec, policy: SeriesPolicy) -> None:
    exposure = formats.read_exposure_map(args.exposure_map)
    cfg = SimConfig(frames=args.frames, sigma=args.sigma, q=args.q, master_seed=args.seed)
    planes = simulate_planes(exposure, cfg, workers=args.workers)
    formats.write_bitplanes(args.out, planes)
    ones = float(empirical_density(planes).mean())
    emit(["width", "height", "frames", "ones_fraction"],
         [[planes.width, planes.height, planes.frames, ones]], spec)


def cmd_estimate(args, spec: OutputSpec, policy: SeriesPolicy) -> None:
    quantizer = Quantizer(args.q)
    if args.density is not None:
        res = estimate.invert_density(args.density, quantizer, args.sigma, policy)
        emit(["theta_hat", "iterations", "converged"],
             [[res.theta_hat, res.iterations, res.converged]], spec)
        return
    planes = formats.read_bitplanes(args.bitplanes)
    est = estimate.estimate_map(planes, quantizer, args.sigma, policy)
    rows = []
    for r in range(planes.height):
        row = []
        for c in range(planes.width):
            if est.saturated[r, c]:
                row.append(SAT_TOKEN)
            elif est.failed[r, c]:
                row.append(FAIL_TOKEN)
            else:
                row.append(float(est.theta_hat[r, c]))
        rows.append(row)
    emit([f"c{c}" for c in range(planes.width)], rows, spec)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _nonneg(text: str) -> float:
    v = float(text)
    if not math.isfinite(v) or v < 0:
        raise argparse.ArgumentTypeError(f"expected a finite value >= 0, got {text!r}")
    return v


def _positive(text: str) -> float:
    v = float(text)
    if not math.isfinite(v) or v <= 0:
        raise argparse.ArgumentTypeError(f"expected a finite value > 0, got {text!r}")
    return v


def _finite(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a finite value, got {text!r}")
    return v


def _alpha(text: str) -> float:
    v = float(text)
    if not 0 < v < 0.5:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 0.5), got {text!r}")
    return v


def _count(minimum: int):
    def parse(text: str) -> int:
        v = int(text)
        if v < minimum:
            raise argparse.ArgumentTypeError(f"expected an integer >= {minimum}, got {text!r}")
        return v
    return parse


def _precision(text: str) -> int:
    v = int(text)
    if not 6 <= v <= 17:
        raise argparse.ArgumentTypeError("precision must lie in [6, 17]")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qisdensity",
        description="Bit density of one-bit Poisson-Gaussian (quanta image sensor) data.")
    sub = parser.add_subparsers(dest="command", required=True)

    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=("csv", "json"), default="csv")
    fmt.add_argument("--precision", type=_precision, default=10,
                     help="significant digits for numeric fields (6-17)")
    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--out", help="output file (default: standard output)")
    svg = argparse.ArgumentParser(add_help=False)
    svg.add_argument("--svg", help="also write a line chart to this SVG file")

    p = sub.add_parser("density", parents=[fmt, out], help="D, D* and residue at one point")
    p.add_argument("--theta", type=_nonneg, required=True)
    p.add_argument("--q", type=_finite, required=True)
    p.add_argument("--sigma", type=_nonneg, required=True)
    p.add_argument("--tail-mass", type=float, default=None)
    p.set_defaults(func=cmd_density, subparser=p)

    p = sub.add_parser("dlogh", parents=[fmt, out, svg], help="D versus log theta per sigma")
    p.add_argument("--theta-min", type=_positive, default=0.01)
    p.add_argument("--theta-max", type=_positive, default=100.0)
    p.add_argument("--points", type=_count(2), default=201)
    p.add_argument("--q", type=_finite, default=0.5)
    p.add_argument("--sigma", type=_nonneg, action="append",
                   help="read noise; repeat for several curves")
    p.set_defaults(func=cmd_dlogh, subparser=p)

    p = sub.add_parser("cutoff", parents=[fmt, out, svg], help="D versus sigma")
    p.add_argument("--theta", type=_nonneg, default=1.0)
    p.add_argument("--q", type=_finite, default=0.5)
    p.add_argument("--sigma-max", type=_positive, default=1.0)
    p.add_argument("--points", type=_count(2), default=101)
    p.set_defaults(func=cmd_cutoff, subparser=p)

    p = sub.add_parser("bound", parents=[fmt, out], help="read-noise bound")
    p.add_argument("--mode", choices=("theorem1", "coarse", "general", "search"),
                   default="theorem1")
    p.add_argument("--alpha", type=_alpha, default=None)
    p.add_argument("--q", type=_finite, default=None)
    p.add_argument("--theta", type=_nonneg, default=None)
    p.set_defaults(func=cmd_bound, subparser=p)

    p = sub.add_parser("table1", parents=[fmt, out], help="relative error versus sigma bound")
    p.set_defaults(func=cmd_table1, subparser=p)

    p = sub.add_parser("sigma-range", parents=[fmt, out, svg],
                       help="largest tolerated sigma versus threshold")
    p.add_argument("--alpha", type=_alpha, default=1e-4)
    p.add_argument("--q-min", type=float, default=0.1)
    p.add_argument("--q-max", type=float, default=0.9)
    p.add_argument("--points", type=_count(2), default=9)
    p.add_argument("--theta", type=_positive, default=1.0)
    p.set_defaults(func=cmd_sigma_range, subparser=p)

    p = sub.add_parser("simulate", parents=[fmt], help="write QBP1 bit planes")
    p.add_argument("--exposure-map", required=True, help="QEM1 file")
    p.add_argument("--frames", type=_count(1), required=True)
    p.add_argument("--q", type=_finite, default=0.5)
    p.add_argument("--sigma", type=_nonneg, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_count(1), default=1)
    p.add_argument("--out", required=True, help="QBP1 output file")
    p.set_defaults(func=cmd_simulate, subparser=p)

    p = sub.add_parser("estimate", parents=[fmt, out], help="invert density to exposure")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--bitplanes", help="QBP1 file")
    src.add_argument("--density", type=float)
    p.add_argument("--q", type=_finite, default=0.5)
    p.add_argument("--sigma", type=_nonneg, default=0.0)
    p.set_defaults(func=cmd_estimate, subparser=p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = args.subparser

    if args.command == "dlogh" and args.theta_min >= args.theta_max:
        sub.error("--theta-min must be smaller than --theta-max")
    if args.command == "sigma-range" and not 0 < args.q_min <= args.q_max < 1:
        sub.error("need 0 < --q-min <= --q-max < 1")
    if args.command == "estimate" and args.density is not None and not 0 < args.density <= 1:
        sub.error("--density must lie in (0, 1]")

    try:
        policy = default_policy()
        if getattr(args, "tail_mass", None) is not None:
            policy = SeriesPolicy(tail_mass=args.tail_mass)
    except ValueError as exc:
        sub.error(str(exc))
    spec = OutputSpec(format=args.format, path=getattr(args, "out", None)
                      if args.command != "simulate" else None,
                      precision=args.precision, svg=getattr(args, "svg", None))

    try:
        if args.func is cmd_bound:
            cmd_bound(args, spec, policy, sub)
        else:
            args.func(args, spec, policy)
    except (OSError, ValueError) as exc:
        print(f"qisdensity {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0
