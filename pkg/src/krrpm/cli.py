"""Command-line interface.

Exit codes: 0 success, 1 numeric or validity failure, 2 usage/input error.
The default output directory is ``$KRRPM_OUT_DIR`` or the working directory.
"""
import argparse
import csv
import json
import logging
import os
from pathlib import Path
import sys

import numpy as np

from krrpm.cps import Variant, krrpm_predict
from krrpm.errors import InputError, NumericError
from krrpm.gpr import bayes_predict, gaussian_cdf
from krrpm.kernels import KERNEL_NAMES, KernelSpec, parse_kernel
from krrpm.ridge import fit, leverage_terms
from krrpm.validation import (
    GENERATORS,
    KS_CRITICAL_5PCT,
    calibration_suite,
    curve_grid,
    run_figure1,
    run_figure23,
    step_curve,
)

log = logging.getLogger("krrpm")

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


def read_table(path, labelled=True):
    """Read ``x1..xd[,y]`` CSV; returns ``(X, y)`` (``y`` is None if unlabelled)."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: empty file (expected a header row)")
    header = [h.strip() for h in rows[0]]
    n_feat = len(header) - 1 if labelled else len(header)
    expected = [f"x{j + 1}" for j in range(n_feat)] + (["y"] if labelled else [])
    if n_feat < 1 or header != expected:
        raise InputError(f"{path}:1: header must be {','.join(expected) or 'x1,...,xd' + (',y' if labelled else '')}, got {','.join(header)}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric field in {row}") from None
        if not all(np.isfinite(vals)):
            raise InputError(f"{path}:{lineno}: non-finite value")
        data.append(vals)
    if not data:
        raise InputError(f"{path}: no data rows")
    arr = np.array(data)
    if labelled:
        return arr[:, :-1], arr[:, -1]
    return arr, None


def write_curve(path, table):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y", "Q0", "Q1"])
        for row in table:
            w.writerow([repr(float(v)) for v in row])


def write_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _kernel_from_args(args):
    gram = None
    if args.kernel == "precomputed":
        if not args.gram:
            raise InputError("--kernel precomputed requires --gram FILE.npy")
        gram = np.load(args.gram)
    return parse_kernel(args.kernel, scale=args.scale, gram=gram)


def _out_dir(args):
    out = Path(args.out or os.environ.get("KRRPM_OUT_DIR") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _test_object(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad test object {text!r}") from None


def cmd_predict(args):
    kernel = _kernel_from_args(args)
    X, Y = read_table(args.train)
    tests = []
    if args.test:
        T, _ = read_table(args.test, labelled=False)
        tests.extend(T)
    tests.extend(np.asarray(t) for t in args.test_object or [])
    if not tests:
        raise InputError("supply test objects with --test FILE or --test-object x1,...,xd")
    for t in tests:
        if t.shape[0] != X.shape[1]:
            raise InputError(f"test object has dimension {t.shape[0]}, training data {X.shape[1]}")
    state = fit(X, Y, kernel, args.a)
    out = _out_dir(args)
    for j, t in enumerate(tests):
        terms = leverage_terms(state, t)
        dist = krrpm_predict(state, t, args.variant, terms=terms)
        grid = curve_grid([dist], args.grid, args.span)
        payload = dist.to_json()
        payload["test"] = [float(v) for v in t]
        write_json(out / f"pred_{j:03d}.json", payload)
        write_curve(out / f"pred_{j:03d}.csv", step_curve(dist, grid))
        if args.sigma is not None:
            g = bayes_predict(state, t, args.sigma, terms=terms)
            F = gaussian_cdf(g, grid)
            write_json(out / f"pred_{j:03d}_bayes.json",
                       {"mean": g.mean, "variance": g.variance, "sigma": g.sigma, "test": payload["test"]})
            write_curve(out / f"pred_{j:03d}_bayes.csv", np.column_stack([grid, F, F]))
    log.info("wrote %d predictions to %s", len(tests), out)
    return EXIT_OK


def cmd_calibrate(args):
    kernel = _kernel_from_args(args)
    report = calibration_suite(args.generator, args.n, kernel, args.a, args.variant,
                               args.trials, args.seed)
    threshold = report.threshold if args.threshold is None else args.threshold
    payload = report.to_json()
    payload["threshold"] = threshold
    payload["passed"] = bool(report.ks_statistic < threshold)
    path = Path(args.out) if args.out and args.out.endswith(".json") else _out_dir(args) / "calibration.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_json(path, payload)
    print(f"KS = {report.ks_statistic:.5f} (threshold {threshold:.5f}): "
          f"{'pass' if payload['passed'] else 'FAIL'}")
    return EXIT_OK if payload["passed"] else EXIT_NUMERIC


def cmd_experiment(args):
    out = _out_dir(args)
    if args.figure == "fig1":
        result = run_figure1(n=args.n or 1000, seed=args.seed)
    else:
        kernel = _kernel_from_args(args)
        n = args.n or (1000 if args.figure == "fig2" else 10)
        result = run_figure23(n=n, seed=args.seed, kernel=kernel, a=args.a)
    for name, table in result.curves.items():
        write_curve(out / f"{args.figure}_{name}.csv", table)
    write_json(out / f"{args.figure}_metrics.json", result.metrics)
    for key, value in result.metrics.items():
        print(f"{key}: {value}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="krrpm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, a_default=1.0):
        p.add_argument("--kernel", choices=KERNEL_NAMES, default="laplacian")
        p.add_argument("--scale", type=_positive, default=1.0, help="Laplacian length scale")
        p.add_argument("--gram", help="Gram matrix (.npy) for --kernel precomputed")
        p.add_argument("--a", type=_positive, default=a_default, help="ridge parameter")
        p.add_argument("--variant", choices=[v.value for v in Variant], default="studentized")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output directory (default $KRRPM_OUT_DIR or .)")

    p = sub.add_parser("predict", help="conformal predictive distributions for test objects")
    p.add_argument("train", help="training CSV with header x1,...,xd,y")
    p.add_argument("--test", help="test CSV with header x1,...,xd")
    p.add_argument("--test-object", type=_test_object, action="append",
                   help="comma-separated test object; repeatable")
    p.add_argument("--sigma", type=_positive, help="also emit the Bayesian predictive distribution")
    p.add_argument("--grid", type=int, default=512, help="curve points")
    p.add_argument("--span", type=_positive, help="curve margin beyond extreme critical values")
    common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("calibrate", help="Monte Carlo calibration (PIT uniformity) check")
    p.add_argument("--generator", choices=sorted(GENERATORS), default="trig")
    p.add_argument("--n", type=int, default=20, help="training set size")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--threshold", type=float,
                   help=f"KS threshold (default {KS_CRITICAL_5PCT}/sqrt(trials))")
    common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("experiment", help="reproduce the synthetic experiments")
    p.add_argument("figure", choices=["fig1", "fig2", "fig3"])
    p.add_argument("--n", type=int, help="training size (default 1000; 10 for fig3)")
    common(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"krrpm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"krrpm: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
