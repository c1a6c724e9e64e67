"""Command-line surface.

Subcommands: test, power, tvbound, drift, diagnose, design.  Model input
is a JSON document with a versioned schema

    {"schema": 1, "k": int, "beta0": real, "sigma": [[real]],
     "mu": [real]?, "mu_hat": [real]?, "vec_r": [real]?,
     "alpha": real?, "report": {...}?}

(sigma row-major 2k x 2k; unknown keys and unknown schema versions are
rejected).  Emitted reports embed their inputs, so every report re-parses
under the same validator.  Exit codes: 0 success, 2 input validation
failure (machine-readable error on stderr), 1 numerical failure with the
error name echoed.  Tables print at 7 significant digits; JSON carries
full precision.  ``--threads``/``WEAKIV_THREADS`` caps worker threads
without affecting results.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys

import numpy as np

from ._engine import ALL_TESTS, TEST_CLC
from .asymptotics import lm_fa_drift, lm_fa_variance, lm_id_limit, AsymptoticInputs
from .conditional import McOptions, run_test
from .diagnostics import diagnose, make_id_design
from .distance import clr_power_lower_bound, hull_tv_upper_bound, tv_gaussian
from .errors import (
    DegenerateDenominator,
    NumericalError,
    ValidationError,
    WeakIvError,
)
from .model import ModelConfig, build_blocks
from .power import PowerRequest, power_curve

SCHEMA_VERSION = 1
_ALLOWED_KEYS = {"schema", "k", "beta0", "sigma", "mu", "mu_hat", "vec_r",
                 "alpha", "report"}


def validate_model_json(doc):
    """Validate a model document against the versioned input schema."""
    if not isinstance(doc, dict):
        raise ValidationError("input document must be a JSON object")
    unknown = set(doc) - _ALLOWED_KEYS
    if unknown:
        raise ValidationError(f"unknown keys: {sorted(unknown)}")
    if doc.get("schema") != SCHEMA_VERSION:
        raise ValidationError(
            f"unsupported schema version {doc.get('schema')!r}; expected {SCHEMA_VERSION}"
        )
    for key in ("k", "beta0", "sigma"):
        if key not in doc:
            raise ValidationError(f"missing required key {key!r}")
    if not isinstance(doc["k"], int):
        raise ValidationError("k must be an integer")
    k = doc["k"]
    sigma = np.asarray(doc["sigma"], dtype=float)
    if sigma.shape != (2 * k, 2 * k):
        raise ValidationError(f"sigma must be a {2*k}x{2*k} array")
    for key in ("mu", "mu_hat", "vec_r"):
        if key in doc and doc[key] is not None:
            arr = np.asarray(doc[key], dtype=float)
            want = 2 * k if key == "vec_r" else k
            if arr.shape != (want,):
                raise ValidationError(f"{key} must be a length-{want} vector")
    if "alpha" in doc and doc["alpha"] is not None:
        a = float(doc["alpha"])
        if not 0.0 < a <= 0.5:
            raise ValidationError("alpha must lie in (0, 0.5]")
    return doc


def load_model(path):
    with open(path) as fh:
        doc = json.load(fh)
    validate_model_json(doc)
    config = ModelConfig(k=doc["k"], beta0=float(doc["beta0"]),
                         sigma=np.asarray(doc["sigma"], dtype=float))
    return doc, config


def model_to_json(config, mu=None, mu_hat=None, vec_r=None, alpha=None,
                  report=None):
    doc = {
        "schema": SCHEMA_VERSION,
        "k": config.k,
        "beta0": config.beta0,
        "sigma": [[float(v) for v in row] for row in config.sigma],
    }
    if mu is not None:
        doc["mu"] = [float(v) for v in mu]
    if mu_hat is not None:
        doc["mu_hat"] = [float(v) for v in mu_hat]
    if vec_r is not None:
        doc["vec_r"] = [float(v) for v in vec_r]
    if alpha is not None:
        doc["alpha"] = float(alpha)
    if report is not None:
        doc["report"] = report
    return doc


def _emit(text, output):
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


@contextlib.contextmanager
def _thread_cap(n):
    if n is None:
        yield
        return
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        print("threadpoolctl not installed; --threads ignored", file=sys.stderr)
        yield
        return
    import numba

    old = numba.get_num_threads()
    numba.set_num_threads(max(1, min(n, old)))
    try:
        with threadpool_limits(limits=n):
            yield
    finally:
        numba.set_num_threads(old)


def _parse_tests(spec):
    tests = tuple(t.strip().upper() for t in spec.split(",") if t.strip())
    for t in tests:
        if t not in ALL_TESTS:
            raise ValidationError(f"unknown test {t!r}; choose from {ALL_TESTS}")
    if TEST_CLC in tests:
        raise ValidationError("CLC needs a weight function; not exposed on the CLI")
    return tests


def _parse_grid(spec):
    try:
        grid = tuple(float(x) for x in spec.split(","))
    except ValueError as exc:
        raise ValidationError(f"bad delta grid {spec!r}") from exc
    if list(grid) != sorted(grid):
        raise ValidationError("delta grid must be sorted ascending")
    return grid


def cmd_test(args):
    doc, config = load_model(args.input)
    if doc.get("vec_r") is None:
        raise ValidationError("'test' requires vec_r in the input document")
    vec_r = np.asarray(doc["vec_r"], dtype=float)
    alpha = args.alpha if args.alpha is not None else doc.get("alpha", 0.05)
    tests = _parse_tests(args.tests)
    opts = McOptions(n_cond=args.n_cond, seed=args.seed)
    outcomes = [run_test(t, vec_r, config, alpha, opts) for t in tests]
    rows = [
        {
            "test": o.test_name,
            "statistic": o.statistic,
            "critical_value": o.critical_value,
            "reject": o.reject,
            "alpha": o.alpha,
            "n_cond_draws": o.n_cond_draws,
            "seed": o.seed,
            "degenerate": o.degenerate,
        }
        for o in outcomes
    ]
    doc = model_to_json(config, vec_r=vec_r, alpha=alpha,
                        report={"outcomes": rows})
    validate_model_json(doc)
    _emit(json.dumps(doc, indent=2) + "\n", args.output)
    if args.output:
        for o in outcomes:
            print(f"{o.test_name:6s} stat={o.statistic:.7g} "
                  f"crit={o.critical_value:.7g} reject={o.reject}")
    return 0


def cmd_power(args):
    if args.design == "id":
        config, mu = make_id_design(args.k, args.lam, args.offdiag)
    else:
        doc, config = load_model(args.input)
        if doc.get("mu") is None:
            raise ValidationError("'power' requires mu in the input document")
        mu = np.asarray(doc["mu"], dtype=float)
    req = PowerRequest(
        config=config, mu=mu, delta_grid=_parse_grid(args.delta_grid),
        tests=_parse_tests(args.tests), alpha=args.alpha,
        n_outer=args.n_outer, n_cond=args.n_cond, seed=args.seed,
    )
    table = power_curve(req)
    _emit(table.to_csv(), args.output)
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(table.to_json())
    return 0


def cmd_tvbound(args):
    lines = []
    if args.d is not None:
        lines.append(f"{hull_tv_upper_bound(args.d):.7g}")
        if args.k is not None:
            lines.append(
                f"{clr_power_lower_bound(args.d, args.k, args.alpha):.7g}"
            )
    if args.delta is not None:
        lines.append(f"{tv_gaussian(args.delta):.7g}")
    if not lines:
        raise ValidationError("tvbound requires --d or --delta")
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def cmd_drift(args):
    doc, config = load_model(args.input)
    if doc.get("mu") is None:
        raise ValidationError("'drift' requires mu in the input document")
    mu = np.asarray(doc["mu"], dtype=float)
    blocks = build_blocks(config)
    inputs = AsymptoticInputs(pi=mu / np.linalg.norm(mu), d_mat=np.eye(config.k))
    try:
        mbar = lm_id_limit(mu, blocks)
        mbar_txt = f"{mbar:.7g}"
    except DegenerateDenominator:
        mbar_txt = "not applicable"
    rows = [f"# drift ceiling m_bar: {mbar_txt}",
            f"{'delta':>12s} {'drift':>14s} {'variance':>14s}"]
    out_json = []
    for delta in _parse_grid(args.delta_grid):
        c = lm_fa_drift(delta, mu, blocks)
        v = lm_fa_variance(delta, inputs, blocks)
        rows.append(f"{delta:12.7g} {c:14.7g} {v:14.7g}")
        out_json.append({"delta": delta, "drift": c, "variance": v})
    _emit("\n".join(rows) + "\n", args.output)
    if args.json:
        doc = model_to_json(config, mu=mu,
                            report={"m_bar": mbar_txt, "rows": out_json})
        validate_model_json(doc)
        with open(args.json, "w") as fh:
            json.dump(doc, fh, indent=2)
    return 0


def cmd_diagnose(args):
    doc, config = load_model(args.input)
    if doc.get("mu_hat") is None:
        raise ValidationError("'diagnose' requires mu_hat in the input document")
    mu_hat = np.asarray(doc["mu_hat"], dtype=float)
    alpha = args.alpha if args.alpha is not None else doc.get("alpha", 0.05)
    report = diagnose(mu_hat, config, alpha)
    out = model_to_json(config, mu_hat=mu_hat, alpha=alpha,
                        report=report.to_dict())
    validate_model_json(out)
    _emit(json.dumps(out, indent=2) + "\n", args.output)

    def fmt(x):
        return "not applicable" if x is None else f"{x:.7g}"

    table = (
        f"feasible:                 {report.feasible}\n"
        f"AR noncentrality (d=1):   {fmt(report.ar_noncentrality)}\n"
        f"confidence bound:         {fmt(report.confidence_bound)}\n"
        f"F-statistic:              {report.f_stat:.7g}\n"
        f"cutoff q_(1-alpha)(k):    {report.cutoff:.7g}\n"
        f"intersects:               {report.intersects}\n"
        f"minimal eta:              {fmt(report.eta_min)}\n"
    )
    print(table, file=sys.stderr if not args.output else sys.stdout, end="")
    return 0


def cmd_design(args):
    config, mu = make_id_design(args.k, args.lam, args.offdiag)
    doc = model_to_json(config, mu=mu, mu_hat=mu)
    validate_model_json(doc)
    _emit(json.dumps(doc, indent=2) + "\n", args.output)
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="weakiv",
        description="Weak-instrument robust tests, TV power bounds, and "
                    "impossibility-design diagnostics",
    )
    p.add_argument("--threads", type=int, default=None,
                   help="cap worker threads (env: WEAKIV_THREADS)")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("test", help="evaluate tests on one observation")
    sp.add_argument("--input", required=True)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-cond", type=int, default=10_000)
    sp.add_argument("--tests", default="AR,LM,CLR,CQLR1,CQLR2")
    sp.add_argument("--output", default=None)
    sp.set_defaults(fn=cmd_test)

    sp = sub.add_parser("power", help="Monte-Carlo power curves (CSV)")
    sp.add_argument("--input", default=None)
    sp.add_argument("--design", choices=["id"], default=None)
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--lambda", dest="lam", type=float, default=100.0)
    sp.add_argument("--offdiag", type=float, default=0.75)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-outer", type=int, default=10_000)
    sp.add_argument("--n-cond", type=int, default=10_000)
    sp.add_argument("--delta-grid", default="0,0.25,0.5,1,2,4")
    sp.add_argument("--tests", default="AR,LM,CLR,CQLR1,CQLR2")
    sp.add_argument("--output", default=None)
    sp.add_argument("--json", default=None)
    sp.set_defaults(fn=cmd_power)

    sp = sub.add_parser("tvbound", help="TV-distance bounds")
    sp.add_argument("--d", type=float, default=None,
                    help="separation floor for the hull bound")
    sp.add_argument("--delta", type=float, default=None,
                    help="Mahalanobis distance for the pairwise TV")
    sp.add_argument("--k", type=int, default=None,
                    help="with --d: also print the power lower bound")
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--output", default=None)
    sp.set_defaults(fn=cmd_tvbound)

    sp = sub.add_parser("drift", help="LM drift/variance table over delta")
    sp.add_argument("--input", required=True)
    sp.add_argument("--delta-grid", default="0,0.5,1,2,5,10")
    sp.add_argument("--output", default=None)
    sp.add_argument("--json", default=None)
    sp.set_defaults(fn=cmd_drift)

    sp = sub.add_parser("diagnose", help="impossibility-design diagnostics")
    sp.add_argument("--input", required=True)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--output", default=None)
    sp.set_defaults(fn=cmd_diagnose)

    sp = sub.add_parser("design", help="emit an anti-diagonal design model")
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--lambda", dest="lam", type=float, default=100.0)
    sp.add_argument("--offdiag", type=float, default=0.75)
    sp.add_argument("--output", default=None)
    sp.set_defaults(fn=cmd_design)
    return p


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    threads = args.threads
    if threads is None and os.environ.get("WEAKIV_THREADS"):
        try:
            threads = int(os.environ["WEAKIV_THREADS"])
        except ValueError:
            print(json.dumps({"error": "ValidationError",
                              "message": "WEAKIV_THREADS must be an integer"}),
                  file=sys.stderr)
            return 2
    try:
        with _thread_cap(threads):
            return args.fn(args)
    except ValidationError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    except (NumericalError, WeakIvError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc)}),
              file=sys.stderr)
        return 2


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
