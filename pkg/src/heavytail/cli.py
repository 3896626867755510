"""Command-line interface: sample ingestion, estimates, k-paths and asymptotic tables.

Machine-readable output (TSV/JSON) goes to stdout or ``--output``; all
diagnostics go to stderr through :mod:`logging`.  Exit status is 0 on
success and a category-specific nonzero code otherwise.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import logging
import math
import re
import sys
import warnings
from pathlib import Path

from . import __version__
from .asymptotics import (
    SecondOrderParams,
    amse_curve,
    areff_grid,
    optimal_k0,
)
from .errors import ExtrapolationWarning, HeavyTailError, SampleError
from .estimators import estimate_path, estimate_quantile, fit_tail
from .sample import Convention, Kind, Sample
from .simulation import Family, ModelSpec, MonteCarloConfig, run_monte_carlo

log = logging.getLogger("heavytail")

SCHEMA_VERSION = 1

EXIT_CODES = {
    "error": 1,
    "usage": 2,
    "sample": 3,
    "level": 4,
    "probability": 5,
    "parameter": 6,
    "zero-rho": 7,
    "config": 8,
    "io": 9,
}

_SPLIT = re.compile(r"[,;\t ]+")


def read_sample(path, column: int | None = None) -> Sample:
    """Read one positive number per line (``-`` for stdin).

    A non-numeric first line is treated as a header.  With ``column``, lines
    are split on commas, semicolons or whitespace and that 0-based field is used.
    """
    if str(path) == "-":
        lines = sys.stdin.read().splitlines()
        name = "<stdin>"
    else:
        name = str(path)
        lines = Path(path).read_text().splitlines()
    values = []
    seen_data = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        field = line
        if column is not None:
            parts = _SPLIT.split(line)
            if column >= len(parts):
                if not seen_data:
                    continue
                raise SampleError(f"{name}:{lineno}: no column {column} in {raw!r}")
            field = parts[column].strip('"')
        try:
            x = float(field)
        except ValueError:
            if not seen_data:
                seen_data = True
                log.info("%s:%d: skipping header %r", name, lineno, raw)
                continue
            raise SampleError(f"{name}:{lineno}: cannot parse {raw!r} as a number") from None
        seen_data = True
        if not (x > 0 and math.isfinite(x)):
            raise SampleError(f"{name}:{lineno}: observations must be positive and finite, got {raw!r}")
        values.append(x)
    if len(values) < 2:
        raise SampleError(f"{name}: need at least 2 observations, got {len(values)}")
    sample = Sample.from_values(values)
    log.info("%s: n=%d min=%.6g max=%.6g", name, sample.n, sample.values[-1], sample.values[0])
    return sample


def fmt(x) -> str:
    """17 significant digits: exact round trip for doubles."""
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def _tsv(header: list[str], rows) -> str:
    out = io.StringIO()
    out.write("\t".join(header) + "\n")
    for row in rows:
        out.write("\t".join(fmt(v) for v in row) + "\n")
    return out.getvalue()


def _json(payload: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2) + "\n"


def _kinds(value: str) -> list[Kind]:
    if value == "both":
        return [Kind.HILL, Kind.PLPWM]
    return [Kind(value)]


def _rho_params(args) -> SecondOrderParams:
    return SecondOrderParams(rho=args.rho, beta=args.beta)


# -- commands ----------------------------------------------------------------


def cmd_estimate(args) -> str:
    sample = read_sample(args.input, args.column)
    fits = [fit_tail(sample, args.k, kind, args.convention) for kind in _kinds(args.kind)]
    if args.format == "tsv":
        return _tsv(["kind", "k", "gamma", "scale"], [(f.estimator_kind.value, f.k, f.gamma, f.scale) for f in fits])
    if args.format == "json":
        return _json(
            {
                "command": "estimate",
                "n": sample.n,
                "convention": Convention(args.convention).value,
                "fits": [
                    {"kind": f.estimator_kind.value, "k": f.k, "gamma": f.gamma, "scale": f.scale} for f in fits
                ],
            }
        )
    return "".join(f"{f.estimator_kind.value:<6} k={f.k}: gamma={f.gamma:.3f} scale={f.scale:.3f}\n" for f in fits)


def cmd_quantile(args) -> str:
    sample = read_sample(args.input, args.column)
    rows = []
    for kind in _kinds(args.kind):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ExtrapolationWarning)
            q = estimate_quantile(sample, args.k, args.p, kind, args.convention)
        for w in caught:
            log.warning("%s: %s", kind.value, w.message)
        rows.append((kind.value, args.k, args.p, q))
    if args.format == "tsv":
        return _tsv(["kind", "k", "p", "quantile"], rows)
    if args.format == "json":
        return _json(
            {
                "command": "quantile",
                "n": sample.n,
                "convention": Convention(args.convention).value,
                "estimates": [{"kind": r[0], "k": r[1], "p": r[2], "quantile": r[3]} for r in rows],
            }
        )
    return "".join(f"{kind:<6} k={k} p={p:g}: q={q:.0f}\n" for kind, k, p, q in rows)


def cmd_kpath(args) -> str:
    sample = read_sample(args.input, args.column)
    k_max = args.k_max
    if k_max is None:
        k_max = sample.n - 1 if Kind(args.kind) is Kind.HILL or args.convention == Convention.TOPK_PLUS_1.value else sample.n
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ExtrapolationWarning)
        path = estimate_path(sample, args.kind, args.k_min, k_max, args.p, args.convention)
    for w in caught:
        log.warning("%s", w.message)
    header = ["k", "estimate"]
    columns = [path.ks.tolist(), path.evi.tolist()]
    if path.quantiles is not None:
        header.append("quantile")
        columns.append(path.quantiles.tolist())
    rows = list(zip(*columns))
    if args.format == "json":
        return _json(
            {
                "command": "kpath",
                "kind": path.kind.value,
                "convention": path.convention.value,
                "n": sample.n,
                "p": path.p,
                "rows": [dict(zip(header, row)) for row in rows],
            }
        )
    return _tsv(header, rows)


def cmd_optimal_k(args) -> str:
    params = _rho_params(args)
    results = [(kind, optimal_k0(args.n, args.gamma, params, kind)) for kind in _kinds(args.kind)]
    for kind, r in results:
        if r.clamped:
            log.warning("%s: optimal level %.4g clamped to %d", kind.value, r.k_continuous, r.k)
    if args.format == "tsv":
        return _tsv(
            ["kind", "k0", "k0_continuous", "clamped"],
            [(kind.value, r.k, r.k_continuous, r.clamped) for kind, r in results],
        )
    if args.format == "json":
        return _json(
            {
                "command": "optimal-k",
                "n": args.n,
                "rho": args.rho,
                "beta": args.beta,
                "levels": [
                    {"kind": kind.value, "k0": r.k, "k0_continuous": r.k_continuous, "clamped": r.clamped}
                    for kind, r in results
                ],
            }
        )
    if len(results) == 1:
        return f"{results[0][1].k}\n"
    return "".join(f"{kind.value} {r.k}\n" for kind, r in results)


def _parse_pair(text: str) -> tuple[Kind, Kind]:
    try:
        a, b = text.split(":")
        return Kind(a), Kind(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"pair must look like 'plpwm:hill', got {text!r}") from None


def cmd_areff(args) -> str:
    gamma_range = None
    if args.gamma_min is not None or args.gamma_max is not None:
        lo = args.gamma_min if args.gamma_min is not None else args.gamma_max
        hi = args.gamma_max if args.gamma_max is not None else args.gamma_min
        gamma_range = (lo, hi)
    grid = areff_grid(args.pair, (args.rho_min, args.rho_max), args.rho_step, gamma_range, args.gamma_step)
    with_gamma = gamma_range is not None
    header = (["gamma"] if with_gamma else []) + ["rho", "areff"]
    rows = [((g,) if with_gamma else ()) + (r, v) for g, r, v in grid.triples()]
    if args.format == "json":
        return _json(
            {
                "command": "areff",
                "pair": [k.value for k in grid.pair],
                "rows": [dict(zip(header, row)) for row in rows],
            }
        )
    return _tsv(header, rows)


def cmd_amse_curve(args) -> str:
    ks, curve = amse_curve(args.n, args.gamma, _rho_params(args), args.kind, args.k_min, args.k_max)
    header = ["k", "variance", "bias_sq", "total"]
    rows = list(zip(ks.tolist(), curve.variance.tolist(), curve.bias_sq.tolist(), curve.total.tolist()))
    if args.format == "json":
        return _json(
            {
                "command": "amse-curve",
                "kind": Kind(args.kind).value,
                "n": args.n,
                "gamma": args.gamma,
                "rho": args.rho,
                "beta": args.beta,
                "rows": [dict(zip(header, row)) for row in rows],
            }
        )
    return _tsv(header, rows)


def cmd_simulate(args) -> str:
    model = ModelSpec(
        family=Family(args.family),
        gamma=args.gamma,
        scale=args.scale,
        rho=args.burr_rho if Family(args.family) is Family.BURR else None,
    )
    config = MonteCarloConfig(
        model=model,
        n=args.n,
        k_set=tuple(args.k),
        replications=args.replications,
        base_seed=args.seed,
        estimators=tuple(_kinds(args.kind)),
        quantile_p=args.p,
        convention=args.convention,
    )
    report = run_monte_carlo(config, workers=args.workers)
    return report.to_json(indent=2) + "\n"


# -- parser ------------------------------------------------------------------


def _levels(text: str) -> list[int]:
    """``500`` or ``10,20,50`` or ``10:200:10`` (inclusive)."""
    out = []
    for part in text.split(","):
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            start, stop = bits[0], bits[1]
            step = bits[2] if len(bits) > 2 else 1
            out.extend(range(start, stop + 1, step))
        else:
            out.append(int(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heavytail", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, default_format, formats=("tsv", "json", "text")):
        p.add_argument("--format", choices=formats, default=default_format)
        p.add_argument("-o", "--output", help="write data here instead of stdout")

    def data_input(p):
        p.add_argument("input", help="file with one positive value per line ('-' for stdin)")
        p.add_argument("--column", type=int, default=None, help="0-based field for delimited files")
        p.add_argument(
            "--convention",
            choices=[c.value for c in Convention],
            default=Convention.TOPK.value,
            help="PLPWM reads k (topk) or k+1 (topk_plus_1) top order statistics",
        )

    def second_order(p):
        p.add_argument("--rho", type=float, required=True)
        p.add_argument("--beta", type=float, required=True)

    p = sub.add_parser("estimate", help="EVI and scale at one level")
    data_input(p)
    p.add_argument("--kind", choices=["hill", "plpwm", "both"], default="both")
    p.add_argument("-k", type=int, required=True)
    common(p, "text")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("quantile", help="extreme quantile at one level")
    data_input(p)
    p.add_argument("--kind", choices=["hill", "plpwm", "both"], default="both")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("-p", type=float, required=True, help="exceedance probability")
    common(p, "text")
    p.set_defaults(func=cmd_quantile)

    p = sub.add_parser("kpath", help="estimates for a range of levels")
    data_input(p)
    p.add_argument("--kind", choices=["hill", "plpwm"], required=True)
    p.add_argument("--k-min", type=int, default=None)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("-p", type=float, default=None, help="also emit quantile estimates")
    common(p, "tsv", ("tsv", "json"))
    p.set_defaults(func=cmd_kpath)

    p = sub.add_parser("optimal-k", help="AMSE-optimal level for given (rho, beta)")
    p.add_argument("-n", type=int, required=True)
    second_order(p)
    p.add_argument("--gamma", type=float, default=1.0, help="only matters for ppwm")
    p.add_argument("--kind", choices=["hill", "plpwm", "ppwm", "both"], default="hill")
    common(p, "text")
    p.set_defaults(func=cmd_optimal_k)

    p = sub.add_parser("areff", help="asymptotic root efficiency on a (gamma, rho) grid")
    p.add_argument("--pair", type=_parse_pair, default=(Kind.PLPWM, Kind.HILL))
    p.add_argument("--rho-min", type=float, default=-5.0)
    p.add_argument("--rho-max", type=float, default=-0.01)
    p.add_argument("--rho-step", type=float, default=0.01)
    p.add_argument("--gamma-min", type=float, default=None)
    p.add_argument("--gamma-max", type=float, default=None)
    p.add_argument("--gamma-step", type=float, default=None)
    common(p, "tsv", ("tsv", "json"))
    p.set_defaults(func=cmd_areff)

    p = sub.add_parser("amse-curve", help="asymptotic variance, squared bias and AMSE against k")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    second_order(p)
    p.add_argument("--kind", choices=["hill", "plpwm", "ppwm"], default="hill")
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=None)
    common(p, "tsv", ("tsv", "json"))
    p.set_defaults(func=cmd_amse_curve)

    p = sub.add_parser("simulate", help="seeded Monte Carlo study (JSON report)")
    p.add_argument("--family", choices=[f.value for f in Family], default=Family.STRICT_PARETO.value)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--burr-rho", type=float, default=None)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-k", type=_levels, required=True, help="levels: 500 | 10,20 | 10:200:10")
    p.add_argument("--replications", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--kind", choices=["hill", "plpwm", "both"], default="both")
    p.add_argument("-p", type=float, default=None, help="also collect quantile error statistics")
    p.add_argument("--convention", choices=[c.value for c in Convention], default=Convention.TOPK.value)
    p.add_argument("--workers", type=int, default=1)
    common(p, "json", ("json",))
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("heavytail: %(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.propagate = False
    log.setLevel(logging.WARNING if args.quiet else logging.INFO)

    if getattr(args, "k_min", "absent") is None and args.command == "kpath":
        args.k_min = 2 if args.kind == "plpwm" and args.convention == Convention.TOPK.value else 1
    try:
        text = args.func(args)
    except HeavyTailError as exc:
        print(f"heavytail: error [{exc.category}]: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.category, 1)
    except OSError as exc:
        print(f"heavytail: error [io]: {exc}", file=sys.stderr)
        return EXIT_CODES["io"]
    if args.output:
        Path(args.output).write_text(text)
    else:
        with contextlib.suppress(BrokenPipeError):
            sys.stdout.write(text)
            sys.stdout.flush()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
