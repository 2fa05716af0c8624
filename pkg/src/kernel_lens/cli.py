"""``kernel-lens`` command line: one subcommand per experiment.

Tabular commands write CSV preceded by '#' comment lines that carry the
command, the fully resolved configuration as JSON, the seed, the wall-clock
duration and every check verdict. Only the duration varies between identical
runs; the CSV body is byte-identical. ``read_report`` parses a report back.

Exit status: 0 when every built-in check passes, 1 when a check fails, 2 on
bad arguments.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import shlex
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import analytic, diagnostics, experiments
from .analytic import Activation, KernelQuery
from .distributions import FAMILIES, DistributionSpec, calibrate

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


def parse_dist(text: str) -> DistributionSpec:
    """Parse ``family=t,nu=5,scale=1`` (or a bare family name) into a spec."""
    items = [f.strip() for f in text.split(",") if f.strip()]
    if not items:
        raise ValueError("empty distribution")
    head, params = items[0], {}
    family = head.split("=", 1)[1] if head.startswith("family=") else head
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {sorted(FAMILIES)}")
    cls = FAMILIES[family]
    for item in items[1:]:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {item!r}")
        allowed = [f.name for f in fields(cls)]
        if key not in allowed:
            raise ValueError(f"{family} has no parameter {key!r}; expected one of {allowed}")
        try:
            params[key] = float(value)
        except ValueError:
            raise ValueError(f"{key} must be a number, got {value!r}") from None
    return cls(**params)


def format_dist(spec: DistributionSpec) -> str:
    return ",".join([f"family={spec.family}"] + [f"{k}={v!r}" for k, v in spec.params().items()])


def parse_activation(kind: str, a: float) -> Activation:
    if kind == "relu":
        if a != 0.0:
            raise ValueError("--a is only valid with --activation lrelu")
        return Activation.relu()
    if kind == "lrelu":
        return Activation.lrelu(a)
    if kind == "elu":
        return Activation.elu()
    return Activation.tanh()


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return value


def _fmt(value) -> str:
    # repr round-trips floats exactly; plain float() strips numpy scalar wrappers
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


@dataclass
class Report:
    command: str
    config: dict
    seed: int | None
    duration: float
    columns: tuple[str, ...]
    rows: list[tuple]
    checks: list[experiments.Check]
    notes: list[str]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def header(self) -> str:
        lines = [
            f"# command: {self.command}",
            f"# config: {json.dumps(self.config, sort_keys=True)}",
            f"# seed: {self.seed if self.seed is not None else 'none'}",
            f"# duration_s: {self.duration:.3f}",
        ]
        lines += [f"# check: {c.name} {'PASS' if c.passed else 'FAIL'} {c.detail}" for c in self.checks]
        lines += [f"# note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"

    def body(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        return buf.getvalue()

    def render(self) -> str:
        return self.header() + self.body()


def read_report(text: str) -> dict:
    """Parse a CSV report into its config, seed, checks, notes, columns and rows."""
    out = {"config": None, "seed": None, "checks": {}, "notes": [], "columns": [], "rows": []}
    body = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            if key == "config":
                out["config"] = json.loads(value)
            elif key == "seed":
                out["seed"] = None if value == "none" else int(value)
            elif key == "command":
                out["command"] = value
            elif key == "duration_s":
                out["duration_s"] = float(value)
            elif key == "check":
                name, verdict = value.split(" ")[:2]
                out["checks"][name] = verdict == "PASS"
            elif key == "note":
                out["notes"].append(value)
        elif line:
            body.append(line)
    if body:
        out["columns"] = body[0].split(",")
        out["rows"] = [[float(v) for v in line.split(",")] for line in body[1:]]
    return out


def _base_config(args) -> dict:
    skip = {"out", "workers"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _table_report(args, argv, table: experiments.Table, config: dict, started: float) -> int:
    report = Report(
        command=shlex.join(["kernel-lens", *argv]),
        config=config,
        seed=config.get("seed"),
        duration=time.perf_counter() - started,
        columns=table.columns,
        rows=table.rows,
        checks=table.checks,
        notes=table.notes,
    )
    _emit(args, report.render())
    for c in report.checks:
        print(f"{c.name}: {'PASS' if c.passed else 'FAIL'} ({c.detail})", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _json_report(args, payload: dict) -> int:
    _emit(args, json.dumps(payload, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_kernel_curve(args):
    act = parse_activation(args.activation, args.a)
    return experiments.kernel_curve(act, w2=args.w2, grid=args.grid), {}


def cmd_mc_verify(args):
    act = parse_activation(args.activation, args.a)
    dist = parse_dist(args.dist)
    if args.oracle == "closed-form" and not act.has_closed_form:
        raise ValueError(f"{act.kind} has no closed-form kernel; pass --oracle mc-gaussian")
    table = experiments.mc_verify(
        dist, act, m=args.m, n=args.n, grid=args.theta0_grid, seed=args.seed, repeats=args.repeats,
        oracle=args.oracle, oracle_n=args.oracle_n, z_tol=args.z_tol, workers=args.workers,
    )
    return table, {"dist": format_dist(dist), "w2": dist.second_moment()}


def cmd_depth_curve(args):
    dist = parse_dist(args.dist)
    table = experiments.depth_curve(
        a=args.a, depths=args.depths, mode=args.mode, grid=args.grid, m=args.m, n=args.n, dist=dist,
        seed=args.seed, repeats=args.repeats, tol=args.tol, workers=args.workers,
    )
    return table, {"dist": format_dist(dist)}


def cmd_norm_hist(args):
    dist = parse_dist(args.dist)
    table = experiments.norm_hist(
        a=args.a, init=args.init, depths=args.depths, count=args.count, bins=args.bins, m=args.m, n=args.n,
        dist=dist, seed=args.seed, networks=args.networks, tol=args.tol, workers=args.workers,
    )
    return table, {"dist": format_dist(dist)}


def cmd_universality(args):
    act = parse_activation(args.activation, args.a)
    dist = parse_dist(args.dist)
    table = experiments.universality(
        dist, act, m_list=args.m_list, n=args.n, theta0=args.theta0, seed=args.seed,
        oracle_n=args.oracle_n, gap_tol=args.gap_tol, workers=args.workers,
    )
    return table, {"dist": format_dist(dist)}


def cmd_hypothesis_scan(args):
    data = diagnostics.read_vectors(args.input, args.format)
    scheme = diagnostics.SequenceScheme(tuple(args.factors), renormalize=not args.no_renormalize)
    points = diagnostics.dataset_curve(data, scheme, args.statistic)
    table = experiments.Table(columns=("m", "mean", "std", "excluded_count"))
    for p in points:
        table.rows.append((p.m, p.mean, p.std, p.excluded_count))
    table.notes.append(f"vectors={len(data)} dim={data.shape[1]}")
    return table, {}


TABLE_COMMANDS = {
    "kernel-curve": cmd_kernel_curve,
    "mc-verify": cmd_mc_verify,
    "depth-curve": cmd_depth_curve,
    "norm-hist": cmd_norm_hist,
    "universality": cmd_universality,
    "hypothesis-scan": cmd_hypothesis_scan,
}


def cmd_ode_check(args) -> dict:
    q = KernelQuery(math.pi / 2, args.norm_x, args.norm_y, args.w2)
    res = analytic.ode_forcing_residual(q, grid_size=args.grid, method=args.method)
    tol = 1e-12 if args.method == "analytic" else 1e-6
    boundary_ok = abs(res.k_pi) <= 1e-12 and abs(res.kprime_pi) <= 1e-12
    return {
        "max_residual": res.max_residual,
        "k_pi": res.k_pi,
        "kprime_pi": res.kprime_pi,
        "forcing_constant": res.forcing_constant,
        "method": res.method,
        "grid": res.grid_size,
        "residual_tolerance": tol,
        "passed": bool(res.max_residual < tol and boundary_ok),
    }


def cmd_init_calc(args) -> dict:
    std = analytic.init_stddev(args.a, args.n)
    spec = calibrate(parse_dist(args.dist), std * std)
    return {
        "a": args.a,
        "n": args.n,
        "stddev": std,
        "w2": std * std,
        "calibrated_spec": format_dist(spec),
        "calibrated_params": spec.params(),
    }


def _add_common(p, seed=True, workers=True):
    if seed:
        p.add_argument("--seed", type=_seed, default=0, help="master seed (default 0)")
    if workers:
        p.add_argument("--workers", type=_positive_int, default=None,
                       help="thread count; never changes results (also capped by KERNEL_LENS_THREADS)")
    p.add_argument("--out", default=None, help="write to this file instead of stdout")


def _add_activation(p):
    p.add_argument("--activation", choices=("relu", "lrelu", "elu", "tanh"), default="relu")
    p.add_argument("--a", type=float, default=0.0, help="LReLU negative slope in [0, 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kernel-lens",
        description="Equivalent kernels of wide random networks: closed forms and Monte Carlo checks.",
        epilog="Exit status: 0 when all checks pass, 1 when a check fails, 2 on bad arguments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel-curve", help="closed-form kernel on a uniform angle grid")
    _add_activation(p)
    p.add_argument("--w2", type=float, default=1.0, help="weight second moment E[W_i^2]")
    p.add_argument("--grid", type=_positive_int, default=181, help="number of angles in [0, pi]")
    _add_common(p, seed=False, workers=False)

    dist_help = "weight distribution, e.g. family=t,nu=5,scale=1 (families: %s)" % ", ".join(sorted(FAMILIES))

    p = sub.add_parser("mc-verify", help="simulated single-layer kernel against its oracle",
                       description="Check: max |z| <= --z-tol (default 4).")
    p.add_argument("--dist", default="family=gaussian,sigma=1", help=dist_help)
    _add_activation(p)
    p.add_argument("--m", type=_positive_int, default=1000, help="input dimension")
    p.add_argument("--n", type=_positive_int, default=1000, help="hidden width")
    p.add_argument("--theta0-grid", type=_positive_int, default=16, help="number of angles in [0, pi]")
    p.add_argument("--repeats", type=_positive_int, default=1, help="independent networks per angle")
    p.add_argument("--oracle", choices=("closed-form", "mc-gaussian"), default="closed-form",
                   help="mc-gaussian simulates Gaussian weights at m=2; required for elu and tanh")
    p.add_argument("--oracle-n", type=_positive_int, default=1_000_000, help="width of the Gaussian oracle")
    p.add_argument("--z-tol", type=float, default=experiments.Z_TOL, help="|z| tolerance (default 4)")
    _add_common(p)

    p = sub.add_parser("depth-curve", help="cos(theta_j) through an LReLU network",
                       description="MC mode check: |mc - analytic| <= --tol (default 0.05) everywhere.")
    p.add_argument("--a", type=float, default=0.0, help="LReLU negative slope in [0, 1)")
    p.add_argument("--depths", type=_int_list, default=[1, 2, 4, 8, 16, 32, 64, 128])
    p.add_argument("--mode", choices=("analytic", "mc"), default="analytic")
    p.add_argument("--grid", type=_positive_int, default=64, help="number of input angles in [0, pi]")
    p.add_argument("--m", type=_positive_int, default=1000)
    p.add_argument("--n", type=_positive_int, default=1000)
    p.add_argument("--dist", default="family=gaussian,sigma=1", help=dist_help + "; rescaled to the norm-preserving variance")
    p.add_argument("--repeats", type=_positive_int, default=1, help="independent networks per angle")
    p.add_argument("--tol", type=float, default=experiments.DEPTH_TOL, help="absolute tolerance (default 0.05)")
    _add_common(p)

    p = sub.add_parser("norm-hist", help="histogram of ||h_j(x)|| / ||x|| over Gaussian inputs",
                       description="Check: mean ratio within --tol (relative, default 0.1) of 1 (eq8) or (1+a^2)^(j/2) (he).")
    p.add_argument("--a", type=float, default=0.2)
    p.add_argument("--init", choices=("eq8", "he"), default="eq8",
                   help="eq8: std sqrt(2/((1+a^2) n)); he: std sqrt(2/n)")
    p.add_argument("--depths", type=_int_list, default=[1, 2, 4, 8, 16, 32])
    p.add_argument("--count", type=_positive_int, default=1000, help="number of inputs")
    p.add_argument("--bins", type=_positive_int, default=40)
    p.add_argument("--m", type=_positive_int, default=1000)
    p.add_argument("--n", type=_positive_int, default=1000)
    p.add_argument("--networks", type=_positive_int, default=50, help="independent networks the inputs are spread over")
    p.add_argument("--dist", default="family=gaussian,sigma=1", help=dist_help)
    p.add_argument("--tol", type=float, default=0.1)
    _add_common(p)

    p = sub.add_parser("universality", help="kernel gap to the Gaussian-weight kernel as m grows",
                       description="Checks: the normalized gap shrinks from the first to the last m and ends below --gap-tol (default 0.02).")
    p.add_argument("--dist", default="family=gengauss,alpha=1,beta=4", help=dist_help)
    _add_activation(p)
    p.add_argument("--m-list", type=_int_list, default=[16, 64, 256, 1024])
    p.add_argument("--n", type=_positive_int, default=100_000)
    p.add_argument("--theta0", type=float, default=math.pi / 2)
    p.add_argument("--oracle-n", type=_positive_int, default=1_000_000, help="width of the Gaussian oracle (non-closed-form activations)")
    p.add_argument("--gap-tol", type=float, default=0.02)
    _add_common(p)

    p = sub.add_parser("hypothesis-scan", help="coordinate-spread statistic along decimated inputs")
    p.add_argument("--input", required=True, help="vectors, one per row")
    p.add_argument("--format", choices=("csv", "raw"), default="csv",
                   help="raw: little-endian float64 with a <input>.json sidecar {count, dim}")
    p.add_argument("--factors", type=_int_list, default=[1, 4, 16, 64], help="strictly increasing decimation strides")
    p.add_argument("--statistic", choices=diagnostics.STATISTICS, default="linear")
    p.add_argument("--no-renormalize", action="store_true", help="keep decimated vectors at their own norm")
    _add_common(p, seed=False, workers=False)

    p = sub.add_parser("ode-check", help="residual of k'' + k = K sin(theta) for the ReLU kernel (JSON)",
                       description="Tolerances: residual < 1e-12 (analytic) or 1e-6 (fd); |k(pi)|, |k'(pi)| <= 1e-12.")
    p.add_argument("--grid", type=int, default=64, help="interior grid points (at least 16)")
    p.add_argument("--method", choices=("analytic", "fd"), default="fd")
    p.add_argument("--w2", type=float, default=1.0)
    p.add_argument("--norm-x", type=float, default=1.0)
    p.add_argument("--norm-y", type=float, default=1.0)
    _add_common(p, seed=False, workers=False)

    p = sub.add_parser("init-calc", help="norm-preserving weight std and the matching distribution (JSON)")
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--n", type=_positive_int, required=True, help="layer width")
    p.add_argument("--dist", default="family=gaussian,sigma=1", help=dist_help)
    _add_common(p, seed=False, workers=False)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        if args.command == "ode-check":
            payload = cmd_ode_check(args)
            _json_report(args, payload)
            return EXIT_OK if payload["passed"] else EXIT_CHECK_FAILED
        if args.command == "init-calc":
            return _json_report(args, cmd_init_calc(args))
        table, extra = TABLE_COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"kernel-lens {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    config = _base_config(args)
    config.update(extra)
    return _table_report(args, argv, table, config, started)


if __name__ == "__main__":
    sys.exit(main())
