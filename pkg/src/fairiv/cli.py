"""Command-line front end: ``fairiv <subcommand> [flags]``.

Every table is written to a temporary file in the output directory and then
renamed over the target, so an existing file is never left half-written.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import npiv
from .fairness import DegenerateGroupError, FairnessDefinition, sample_spec
from .npiv import (Sample, Tuning, build_system, curve_on_grid, estimate_penalized,
                   estimate_projected, estimate_restricted, estimate_unconstrained,
                   evaluation_grid, rho_grid, rho_path, select_alpha, select_bandwidths,
                   select_rho)
from .simulate import METHODS, DgpConfig, generate_sample, group_cdfs, rate_study

SAMPLE_COLUMNS = ("y", "z", "s", "w")


class InputError(ValueError):
    pass


def format_float(x) -> str:
    return format(float(x), ".17g")


def _atomic_write(path: Path, write):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header, rows):
    def write(fh):
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow([v if isinstance(v, str) else
                          str(v) if isinstance(v, (int, np.integer)) else format_float(v)
                          for v in row])
    _atomic_write(path, write)


def write_json(path: Path, obj):
    _atomic_write(path, lambda fh: fh.write(json.dumps(obj, indent=2, sort_keys=True) + "\n"))


def read_sample(path) -> Sample:
    """Read a ``y,z,s,w`` CSV; errors name the offending line."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: no such file")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{path}: line 1: missing header")
        header = [h.strip() for h in header]
        if tuple(header) != SAMPLE_COLUMNS:
            raise InputError(f"{path}: line 1: expected header {','.join(SAMPLE_COLUMNS)}, "
                             f"got {','.join(header)}")
        rows = []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(SAMPLE_COLUMNS):
                raise InputError(f"{path}: line {line}: expected {len(SAMPLE_COLUMNS)} "
                                 f"fields, got {len(row)}")
            try:
                values = [float(v) for v in row]
            except ValueError:
                raise InputError(f"{path}: line {line}: non-numeric field") from None
            if not all(math.isfinite(v) for v in values):
                raise InputError(f"{path}: line {line}: non-finite value")
            if values[2] not in (0.0, 1.0):
                raise InputError(f"{path}: line {line}: s must be 0 or 1, got {row[2]}")
            rows.append(values)
    if not rows:
        raise InputError(f"{path}: no data rows")
    y, z, s, w = np.array(rows).T
    return Sample(y=y, z=z, s=s, w=w)


def _auto_or_float(text: str):
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") \
            from None


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairiv", description="Fairness-constrained nonparametric IV estimation.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    def common(p, data=True, fairness=True):
        p.add_argument("--out", required=True, type=Path, help="output directory")
        if data:
            p.add_argument("--data", type=Path,
                           help="sample CSV (y,z,s,w); simulated from --n/--seed if omitted")
        p.add_argument("--n", type=int, default=DgpConfig.n, help="simulated sample size")
        p.add_argument("--seed", type=int, default=DgpConfig.seed, help="simulation seed")
        if fairness:
            p.add_argument("--fairness", choices=[d.value for d in FairnessDefinition],
                           default=FairnessDefinition.STATISTICAL_PARITY.value)

    def tuning(p, rho=True):
        p.add_argument("--alpha", type=_auto_or_float, default="auto",
                       help="'auto' or a positive regularization level")
        if rho:
            p.add_argument("--rho", type=_auto_or_float, default="auto",
                           help="'auto' or a nonnegative penalty weight")
        p.add_argument("--varsigma", type=float, default=1.0,
                       help="weight on unfairness in the rho criterion")
        p.add_argument("--bandwidth-grid-size", type=_positive_int,
                       default=npiv.BANDWIDTH_GRID_SIZE)
        p.add_argument("--alpha-grid-size", type=_positive_int, default=npiv.ALPHA_GRID_SIZE)
        p.add_argument("--rho-grid-size", type=_positive_int, default=npiv.RHO_GRID_SIZE)
        p.add_argument("--eval-grid-size", type=_positive_int, default=npiv.EVAL_GRID_SIZE)

    p = sub.add_parser("simulate", help="draw a sample from the simulation design")
    common(p, data=False, fairness=False)

    p = sub.add_parser("estimate", help="fit one estimator and write its curves")
    common(p)
    p.add_argument("--method", choices=METHODS, default="penalized")
    tuning(p)

    p = sub.add_parser("select-rho", help="write the rho selection criterion curves")
    common(p)
    tuning(p, rho=False)

    p = sub.add_parser("tradeoff", help="write the loss/violation trade-off over rho")
    common(p)
    tuning(p, rho=False)

    p = sub.add_parser("cdf-report", help="write group CDFs of Z, Y and fitted values")
    common(p)
    tuning(p)

    p = sub.add_parser("rates", help="Monte Carlo median errors across sample sizes")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--n-list", type=_int_list, default=[100, 200, 400])
    p.add_argument("--reps", type=_positive_int, default=30)
    p.add_argument("--seed", type=int, default=0, help="seed of the first replication")
    p.add_argument("--fairness", choices=[d.value for d in FairnessDefinition],
                   default=FairnessDefinition.STATISTICAL_PARITY.value)
    return parser


def _load(args) -> Sample:
    if args.data is not None:
        return read_sample(args.data)
    return generate_sample(DgpConfig(n=args.n, seed=args.seed))


def _tune(sample: Sample, args):
    """Bandwidths always by cross-validation; ``alpha`` unless given."""
    if args.alpha != "auto" and not args.alpha > 0:
        raise ValueError(f"alpha must be positive, got {args.alpha}")
    if sample.n < 30:
        raise ValueError(f"tuning selection needs n >= 30, got {sample.n}")
    h_z, h_w, _ = select_bandwidths(sample, args.bandwidth_grid_size)
    system = build_system(sample, h_z, h_w)
    if args.alpha == "auto":
        alpha, _ = select_alpha(sample, system, args.alpha_grid_size)
    else:
        alpha = float(args.alpha)
    return Tuning(h_z=h_z, h_w=h_w, alpha=alpha), system


def _context(args):
    sample = _load(args)
    spec = sample_spec(args.fairness, sample.s)
    tuning, system = _tune(sample, args)
    if not args.varsigma > 0:
        raise ValueError(f"varsigma must be positive, got {args.varsigma}")
    return sample, spec, tuning, system


def _rho(args, sample, system, spec, tuning) -> float:
    if args.rho == "auto":
        rhos = rho_grid(args.rho_grid_size)
        return select_rho(sample, system, spec, tuning.alpha, args.varsigma, rhos).rho
    if args.rho < 0:
        raise ValueError(f"rho must be nonnegative, got {args.rho}")
    return float(args.rho)


def _fit(method, system, spec, alpha, rho):
    if method == "unconstrained":
        return estimate_unconstrained(system, alpha)
    if method == "projected":
        return estimate_projected(system, spec, alpha)
    if method == "restricted":
        return estimate_restricted(system, spec, alpha)
    return estimate_penalized(system, spec, alpha, rho)


def _tuning_json(tuning: Tuning, rho, **extra) -> dict:
    out = {"h_z": tuning.h_z, "h_w": tuning.h_w, "alpha": tuning.alpha, "rho": rho}
    out.update(extra)
    return out


def cmd_simulate(args):
    sample = generate_sample(DgpConfig(n=args.n, seed=args.seed))
    write_csv(args.out / "sample.csv", SAMPLE_COLUMNS,
              zip(sample.y, sample.z[:, 0], sample.s.astype(int), sample.w[:, 0]))


def cmd_estimate(args):
    sample, spec, tuning, system = _context(args)
    rho = _rho(args, sample, system, spec, tuning) if args.method == "penalized" else None
    phi = _fit(args.method, system, spec, tuning.alpha, rho)
    grid = evaluation_grid(args.eval_grid_size)
    c0, c1 = curve_on_grid(phi, sample.z, tuning.h_z, grid)
    write_csv(args.out / "estimate.csv", ("z_grid", "phi0_hat", "phi1_hat"), zip(grid, c0, c1))
    write_json(args.out / "tuning.json",
               _tuning_json(tuning, rho, method=args.method, fairness=args.fairness))


def _path(args):
    sample, spec, tuning, system = _context(args)
    path = rho_path(system, spec, tuning.alpha, rho_grid(args.rho_grid_size))
    return sample, spec, tuning, system, path


def cmd_select_rho(args):
    sample, spec, tuning, system, path = _path(args)
    sel1 = select_rho(sample, system, spec, tuning.alpha, args.varsigma, path=path)
    sel2 = select_rho(sample, system, spec, tuning.alpha, 2.0 * args.varsigma, path=path)
    write_csv(args.out / "rho_curve.csv", ("rho", "criterion_varsigma1", "criterion_varsigma2"),
              zip(path.rhos, sel1.criterion, sel2.criterion))
    write_json(args.out / "tuning.json",
               _tuning_json(tuning, sel1.rho, rho_varsigma2=sel2.rho, varsigma=args.varsigma,
                            fairness=args.fairness))


def cmd_tradeoff(args):
    _, _, _, _, path = _path(args)
    write_csv(args.out / "tradeoff.csv", ("rho", "loss", "violation"),
              zip(path.rhos, path.loss, path.violation))


def cmd_cdf_report(args):
    sample, spec, tuning, system = _context(args)
    rho = _rho(args, sample, system, spec, tuning)
    size = args.eval_grid_size
    fitted = {"data": sample.y}
    for method in METHODS:
        fitted[method] = _fit(method, system, spec, tuning.alpha, rho).scores(sample.s)
    lo = min(float(v.min()) for v in fitted.values())
    hi = max(float(v.max()) for v in fitted.values())
    value_grid = np.linspace(lo, hi, size)
    tables = {"z": group_cdfs(sample.z[:, 0], sample.s, evaluation_grid(size))}
    tables.update({name: group_cdfs(v, sample.s, value_grid) for name, v in fitted.items()})
    rows = [(g, a, b, source) for source, (grid, c0, c1) in tables.items()
            for g, a, b in zip(grid, c0, c1)]
    write_csv(args.out / "cdf.csv", ("grid", "cdf_s0", "cdf_s1", "source"), rows)


def cmd_rates(args):
    table = rate_study(args.n_list, args.reps, args.seed, args.fairness)
    write_csv(args.out / "rates.csv", ("n", "median_err_unconstrained", "median_err_projected"),
              [(r["n"], r["median_err_unconstrained"], r["median_err_projected"])
               for r in table.records()])


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "select-rho": cmd_select_rho,
    "tradeoff": cmd_tradeoff,
    "cdf-report": cmd_cdf_report,
    "rates": cmd_rates,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except DegenerateGroupError as exc:
        print(f"fairiv: degenerate group: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"fairiv: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
