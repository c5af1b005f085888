"""Figure-data generation for the damped oscillator driven in (w, y).

Reference scales ``w0 = y0 = 1``; boundary points ``(0.5, 0.5) -> (2, 2)``,
``gamma0 = 0.1`` and ``tau = 100``.
"""

import csv
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import DampedOscillatorParams, WeakCouplingWarning, damped_oscillator_model
from .geometry import geodesic_solve, linear_path, write_path_csv
from .metrics import metric_field
from .work import evaluate_protocol, savings

TARGETS = ("fig1", "fig2a", "fig2b")


@dataclass(frozen=True)
class FigureSetup:
    gamma0: float = 0.1
    tau: float = 100.0
    lam_a: tuple = (0.5, 0.5)
    lam_b: tuple = (2.0, 2.0)
    M: int = 201
    tol: float = 1e-10


@dataclass(frozen=True)
class SweepSpec:
    start: float = 0.5
    stop: float = 25.0
    num: int = 40

    def __post_init__(self):
        if not (0 < self.start < self.stop) or self.num < 2:
            raise ValueError("sweep range must be positive and increasing with at least two points")

    def grid(self):
        return np.linspace(self.start, self.stop, self.num)


def _model(beta, setup):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WeakCouplingWarning)
        return damped_oscillator_model(DampedOscillatorParams(gamma0=setup.gamma0, beta=beta))


def solve_geodesics(beta, setup=FigureSetup()):
    """``{kind: GeodesicSolution}`` for ``kind`` in xi, lambda at one temperature."""
    model = _model(beta, setup)
    return {
        kind: geodesic_solve(metric_field(model, kind), setup.lam_a, setup.lam_b, setup.tau, M=setup.M, tol=setup.tol)
        for kind in ("xi", "lambda")
    }


def sweep_point(beta, setup=FigureSetup()):
    """Savings and Fano factors of the three protocols at one temperature."""
    model = _model(beta, setup)
    sols = solve_geodesics(beta, setup)
    lin = evaluate_protocol(model, linear_path(setup.lam_a, setup.lam_b, setup.tau, setup.M))
    rx = evaluate_protocol(model, sols["xi"].path)
    rl = evaluate_protocol(model, sols["lambda"].path)
    a_save, v_save = savings((rx, rl), lin)
    return {
        "beta": float(beta),
        "A_save": a_save,
        "V_save": v_save,
        "fano_xi_geodesic": rx.fano,
        "fano_lambda_geodesic": rl.fano,
        "fano_linear": lin.fano,
        "converged_xi": int(sols["xi"].converged),
        "converged_lambda": int(sols["lambda"].converged),
    }


def sweep(spec=SweepSpec(), setup=FigureSetup(), workers=1):
    betas = spec.grid()
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(sweep_point, betas, [setup] * len(betas)))
    else:
        rows = [sweep_point(b, setup) for b in betas]
    return rows


def _write_rows(path, rows, cols):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([f"{r[c]:.17g}" if isinstance(r[c], float) else r[c] for c in cols])


def _guarded(outdir, jobs):
    """Write all ``(name, writer)`` jobs; on failure remove what was written."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        for name, fn in jobs:
            path = outdir / name
            written.append(path)
            fn(path)
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return written


def fig1(outdir, betas=(10.0, 20.0), setup=FigureSetup()):
    """Geodesic paths (and the straight line) at each temperature."""
    results = {b: solve_geodesics(b, setup) for b in betas}
    jobs = []
    for b, sols in results.items():
        for kind, sol in sols.items():
            def job(path, sol=sol):
                with open(path, "w", newline="") as fh:
                    write_path_csv(fh, sol.path)
            jobs.append((f"fig1_beta{b:g}_{kind}.csv", job))
    lin = linear_path(setup.lam_a, setup.lam_b, setup.tau, setup.M)

    def job_lin(path):
        with open(path, "w", newline="") as fh:
            write_path_csv(fh, lin)
    jobs.append(("fig1_linear.csv", job_lin))
    return _guarded(outdir, jobs)


def fig2a(outdir, spec=SweepSpec(), setup=FigureSetup(), workers=1, rows=None):
    rows = rows if rows is not None else sweep(spec, setup, workers)
    cols = ["beta", "A_save", "V_save", "converged_xi", "converged_lambda"]
    return _guarded(outdir, [("fig2a_savings.csv", lambda p: _write_rows(p, rows, cols))])


def fig2b(outdir, spec=SweepSpec(), setup=FigureSetup(), workers=1, rows=None):
    rows = rows if rows is not None else sweep(spec, setup, workers)
    cols = ["beta", "fano_xi_geodesic", "fano_lambda_geodesic", "fano_linear"]
    return _guarded(outdir, [("fig2b_fano.csv", lambda p: _write_rows(p, rows, cols))])


def reproduce(target, outdir, workers=1):
    if target == "fig1":
        return fig1(outdir)
    if target == "fig2a":
        return fig2a(outdir, workers=workers)
    if target == "fig2b":
        return fig2b(outdir, workers=workers)
    raise ValueError(f"unknown target {target!r}; expected one of {TARGETS}")
