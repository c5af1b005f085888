"""Command-line front end.

    thermolength metric    --model damped-oscillator --beta 1 --gamma0 0.1 --at 1.0,0.0
    thermolength geodesic  --model damped-oscillator --beta 20 --from 0.5,0.5 --to 2,2 --metric xi --out run/
    thermolength evaluate  --model damped-oscillator --beta 20 --path run/geodesic_xi.csv
    thermolength reproduce fig2a --out figs/

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import json
import sys
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .catalog import MODEL_IDS, WeakCouplingWarning, get_model
from .errors import ConfigError, NotConverged, ThermoLengthError
from .gaussian import load_model_config
from .geometry import (
    geodesic_solve,
    ode_residual,
    path_action,
    path_length,
    quadrature_geodesic_diag,
    read_path_csv,
    write_path_csv,
)
from .metrics import fdr_gap, metric_csv_header, metric_field, metric_values
from .reproduce import TARGETS, reproduce
from .work import Protocol, evaluate_protocol, report_to_json

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
METRIC_KINDS = {"xi": ("xi", "lambda"), "lambda": ("lambda", "xi"), "classical": ("classical_xi", "classical_lambda")}


@dataclass
class RunConfig:
    model: object
    model_id: str
    beta: float
    kind: str = "xi"
    tau: float = 100.0
    lam_a: np.ndarray = None
    lam_b: np.ndarray = None
    M: int = 201
    tol: float = 1e-10
    out: Path = None


def _vector(text, field, d):
    try:
        v = np.array([float(s) for s in text.split(",")])
    except ValueError:
        raise ConfigError(f"field '{field}' must be comma-separated numbers, got {text!r}") from None
    if len(v) != d:
        raise ConfigError(f"field '{field}' needs {d} components, got {len(v)}")
    return v


def _inside(model, v, field):
    if not model.contains(v):
        raise ConfigError(f"field '{field}' = {v.tolist()} lies outside the model box "
                          f"[{model.lower.tolist()}, {model.upper.tolist()}]")
    return v


def build_config(args):
    """Validate arguments into a :class:`RunConfig`; raises ConfigError naming the field."""
    if (args.model is None) == (args.config is None):
        raise ConfigError("exactly one of fields 'model' or 'config' is required")
    if args.config is not None:
        model = load_model_config(args.config)
        if args.beta is not None:
            model = replace(model, beta=float(args.beta))
        model_id = model.name
    else:
        if args.model not in MODEL_IDS:
            raise ConfigError(f"field 'model' must be one of {MODEL_IDS}, got {args.model!r}")
        if args.beta is None:
            raise ConfigError("missing required field 'beta'")
        if args.gamma0 is not None and args.model != "damped-oscillator":
            raise ConfigError("field 'gamma0' only applies to the damped-oscillator model")
        extra = {}
        if getattr(args, "frozen_y", None) is not None:
            if args.model != "damped-oscillator":
                raise ConfigError("field 'frozen-y' only applies to the damped-oscillator model")
            extra["frozen_y"] = args.frozen_y
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", WeakCouplingWarning)
                model = get_model(args.model, beta=args.beta, gamma0=args.gamma0, **extra)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        model_id = args.model
    if not model.beta > 0:
        raise ConfigError("field 'beta' must be positive")
    cfg = RunConfig(model=model, model_id=model_id, beta=model.beta)
    cfg.kind = getattr(args, "metric", "xi") or "xi"
    if getattr(args, "tau", None) is not None:
        if not args.tau > 0:
            raise ConfigError("field 'tau' must be positive")
        cfg.tau = args.tau
    if getattr(args, "grid", None) is not None and args.command == "geodesic":
        if args.grid < 8:
            raise ConfigError("field 'grid' must be at least 8")
        cfg.M = args.grid
    if getattr(args, "tol", None) is not None:
        if not args.tol > 0:
            raise ConfigError("field 'tol' must be positive")
        cfg.tol = args.tol
    d = model.n_params
    if getattr(args, "from_", None) is not None:
        cfg.lam_a = _inside(model, _vector(args.from_, "from", d), "from")
    if getattr(args, "to", None) is not None:
        cfg.lam_b = _inside(model, _vector(args.to, "to", d), "to")
    cfg.out = Path(args.out) if getattr(args, "out", None) else None
    return cfg


def _points(args, model):
    d = model.n_params
    if args.at:
        return np.array([_inside(model, _vector(a, "at", d), "at") for a in args.at])
    n = args.grid or 5
    if n < 2:
        raise ConfigError("field 'grid' must be at least 2")
    if not (np.all(np.isfinite(model.lower)) and np.all(np.isfinite(model.upper))):
        raise ConfigError("field 'at' is required for models with an unbounded box")
    axes = [np.linspace(lo, hi, n) for lo, hi in zip(model.lower, model.upper)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)


def cmd_metric(args, out):
    cfg = build_config(args)
    model = cfg.model
    pts = _points(args, model)
    kind = METRIC_KINDS[cfg.kind][0]
    g = metric_values(model, pts, kind)
    gap = fdr_gap(model, pts)
    d = model.n_params
    lines = [",".join(metric_csv_header(d) + ["fdr_gap"])]
    for lam, gi, fg in zip(pts, g, np.atleast_1d(gap)):
        cells = [f"{v:.17g}" for v in lam] + [f"{v:.17g}" for v in gi.ravel()] + [kind, f"{cfg.beta:.17g}", f"{fg:.17g}"]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if cfg.out:
        cfg.out.parent.mkdir(parents=True, exist_ok=True)
        cfg.out.write_text(text)
    out.write(text)
    return 0


def cmd_geodesic(args, out):
    cfg = build_config(args)
    if cfg.lam_a is None or cfg.lam_b is None:
        raise ConfigError("fields 'from' and 'to' are required")
    kind = METRIC_KINDS[cfg.kind][0]
    field = metric_field(cfg.model, kind)
    if args.method == "quadrature":
        if cfg.model.n_params != 1:
            raise ConfigError("field 'method' = quadrature needs a one-parameter model")
        path = quadrature_geodesic_diag(field, cfg.lam_a[0], cfg.lam_b[0], cfg.tau, cfg.M)
        summary = {"action": path_action(field, path), "length": path_length(field, path),
                   "ode_residual": ode_residual(field, path), "iterations": 0, "converged": True}
    else:
        sol = geodesic_solve(field, cfg.lam_a, cfg.lam_b, cfg.tau, M=cfg.M, tol=cfg.tol)
        path = sol.path
        summary = {"action": sol.action, "length": sol.length, "ode_residual": sol.ode_residual,
                   "iterations": sol.iterations, "converged": sol.converged}
    summary.update(model=cfg.model_id, metric=kind, beta=cfg.beta, tau=cfg.tau, M=cfg.M,
                   lambda_A=cfg.lam_a.tolist(), lambda_B=cfg.lam_b.tolist())
    doc = json.dumps(summary, indent=2)
    if cfg.out:
        cfg.out.mkdir(parents=True, exist_ok=True)
        with open(cfg.out / f"geodesic_{cfg.kind}.csv", "w", newline="") as fh:
            write_path_csv(fh, path)
        (cfg.out / f"geodesic_{cfg.kind}.json").write_text(doc + "\n")
        out.write(doc + "\n")
    else:
        write_path_csv(out, path)
    return 0


def cmd_evaluate(args, out):
    cfg = build_config(args)
    try:
        with open(args.path, newline="") as fh:
            path = read_path_csv(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"field 'path': {exc}") from None
    d = cfg.model.n_params
    if path.dim != d:
        raise ConfigError(f"field 'path' has {path.dim} parameters, model needs {d}")
    for name, want, got in (("from", cfg.lam_a, path.points[0]), ("to", cfg.lam_b, path.points[-1])):
        if want is not None and not np.allclose(want, got, rtol=0, atol=1e-12):
            raise ConfigError(f"field '{name}' = {want.tolist()} does not match the path endpoint {got.tolist()}")
    for i, p in enumerate(path.points):
        if not cfg.model.contains(p):
            raise ConfigError(f"field 'path' row {i + 2} lies outside the model box")
    kinds = ("classical_xi", "classical_lambda") if cfg.kind == "classical" else ("xi", "lambda")
    report = evaluate_protocol(Protocol(cfg.model, path, kinds))
    doc = report_to_json(report, model=cfg.model_id, beta=cfg.beta, tau=path.tau, M=len(path.t),
                         lambda_A=path.points[0], lambda_B=path.points[-1], metrics=list(kinds))
    if cfg.out:
        cfg.out.parent.mkdir(parents=True, exist_ok=True)
        cfg.out.write_text(doc + "\n")
    out.write(doc + "\n")
    return 0


def cmd_reproduce(args, out):
    if args.target not in TARGETS:
        raise ConfigError(f"field 'target' must be one of {TARGETS}")
    if args.workers < 1:
        raise ConfigError("field 'workers' must be at least 1")
    files = reproduce(args.target, args.out or ".", workers=args.workers)
    for f in files:
        out.write(f"{f}\n")
    return 0


def _common(p, paths=False):
    p.add_argument("--model", help=f"catalog model id ({', '.join(MODEL_IDS)})")
    p.add_argument("--config", help="JSON file describing a linear Gaussian model")
    p.add_argument("--beta", type=float, help="inverse temperature")
    p.add_argument("--gamma0", type=float, help="bath coupling (damped oscillator)")
    p.add_argument("--metric", choices=sorted(METRIC_KINDS), default="xi")
    p.add_argument("--frozen-y", dest="frozen_y", type=float, help="fix y to get the one-parameter oscillator")
    p.add_argument("--out", help="output file or directory")
    if paths:
        p.add_argument("--from", dest="from_", help="start point, comma separated")
        p.add_argument("--to", help="end point, comma separated")
        p.add_argument("--tau", type=float, help="protocol duration (default 100)")


def make_parser():
    parser = argparse.ArgumentParser(prog="thermolength", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metric", help="metric tensors at points or on a grid")
    _common(p)
    p.add_argument("--at", action="append", help="control point, comma separated (repeatable)")
    p.add_argument("--grid", type=int, help="points per axis over the model box")
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("geodesic", help="optimal protocol between two points")
    _common(p, paths=True)
    p.add_argument("--grid", type=int, help="number of time points (default 201)")
    p.add_argument("--tol", type=float, help="relative action tolerance (default 1e-10)")
    p.add_argument("--method", choices=("newton", "quadrature"), default="newton")
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("evaluate", help="work statistics of a protocol CSV")
    _common(p, paths=True)
    p.add_argument("--path", required=True, help="protocol CSV with header t,lambda_1,...")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("reproduce", help="figure data bundles")
    p.add_argument("target", help=f"one of {', '.join(TARGETS)}")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotConverged as exc:
        print(f"numerical failure: NotConverged: {exc} (iterations={exc.iterations}, residual={exc.residual})",
              file=sys.stderr)
        return EXIT_NUMERIC
    except (ThermoLengthError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
