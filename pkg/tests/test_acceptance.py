"""Acceptance criteria 1-8.

Each test prints one ``criterion N: PASS|FAIL - detail`` line to the
terminal and then asserts. Run as a script for the summary lines alone:

    python3 tests/test_acceptance.py
"""

import os
import sys
import time

import numpy as np
import pytest
from scipy.integrate import solve_ivp

sys.path.insert(0, os.path.dirname(__file__))

from conftest import BETA_GRID, GAMMA0, OMEGA_GRID, oscillator  # noqa: E402
from thermolength.catalog import (  # noqa: E402
    ClassicalRelaxationParams,
    analytic_lambda_damped,
    analytic_xi_damped,
    classical_relaxation_fields,
    classical_relaxation_model,
    damped_lambda_geodesic_rhs,
    displacement_model,
    vech,
)
from thermolength.gaussian import cayley_residual, thermal_covariance  # noqa: E402
from thermolength.geometry import (  # noqa: E402
    geodesic_solve,
    linear_path,
    path_action,
    quadrature_geodesic_diag,
    siegel_geodesic,
)
from thermolength.matfun import lyapunov_solve  # noqa: E402
from thermolength.metrics import lambda_values, metric_field, metric_values, xi_values  # noqa: E402
from thermolength.reproduce import FigureSetup, SweepSpec, sweep  # noqa: E402
from thermolength.work import evaluate_protocol, savings  # noqa: E402

A, B, TAU = np.array([0.5, 0.5]), np.array([2.0, 2.0]), 100.0


def _rel(a, b):
    return abs(a - b) / abs(b)


def criterion_1():
    t0 = time.perf_counter()
    err_xi, err_lam, worst_lam = 0.0, 0.0, 0.0
    lam_ok = True
    for beta in BETA_GRID:
        model = oscillator(beta)
        pts = np.array([[w, 0.0] for w in OMEGA_GRID])
        xi, lam = xi_values(model, pts), lambda_values(model, pts)
        for w, x, l in zip(OMEGA_GRID, xi, lam):
            ref_x = analytic_xi_damped(w, GAMMA0, beta)
            ref_l = analytic_lambda_damped(w, GAMMA0, beta)
            err_xi = max(err_xi, _rel(x[0, 0], ref_x[0]), _rel(x[1, 1], ref_x[1]))
            e = max(_rel(l[0, 0], ref_l[0]), _rel(l[1, 1], ref_l[1]))
            err_lam = max(err_lam, e)
            worst_lam = max(worst_lam, e / (3 * (GAMMA0 / w) ** 2))
            lam_ok &= e <= 3 * (GAMMA0 / w) ** 2
    dt = time.perf_counter() - t0
    ok = err_xi <= 1e-6 and lam_ok and dt < 5
    return ok, (f"max rel err xi {err_xi:.3g} (tol 1e-6), Lambda {err_lam:.3g} "
                f"(worst at {worst_lam:.3g}x its tol 3(g0/w)^2), {dt:.2f}s")


def criterion_2():
    worst = np.inf
    checks = []
    for beta in (0.01, *BETA_GRID):
        model = oscillator(beta)
        w, y = np.meshgrid(np.linspace(0.3, 2.5, 7), np.linspace(0.0, 2.5, 4))
        checks.append((beta, np.stack([w.ravel(), y.ravel()], -1), model, ("xi", "lambda")))
        disp = displacement_model()
        from dataclasses import replace
        checks.append((beta, np.array([[0.0, 0.0], [1.0, -2.0], [-4.0, 3.0]]), replace(disp, beta=beta),
                       ("xi", "lambda")))
    rng = np.random.default_rng(7)
    for beta in (0.1, 1.0, 10.0):
        model = classical_relaxation_model(ClassicalRelaxationParams(beta=beta))
        pts = []
        for _ in range(10):
            X = rng.normal(size=(2, 2))
            pts.append(vech(X @ X.T + 0.5 * np.eye(2)))
        checks.append((beta, np.array(pts), model, ("classical_xi", "classical_lambda")))
    n = 0
    for beta, pts, model, kinds in checks:
        xi = metric_values(model, pts, kinds[0])
        lam = metric_values(model, pts, kinds[1])
        gap = np.linalg.eigvalsh(lam - 2.0 / beta * xi)[:, 0]
        scaled = gap / np.linalg.norm(lam, axis=(-2, -1))
        worst = min(worst, scaled.min())
        n += len(pts)
    return worst >= -1e-9, f"min eig(Lambda - 2/beta xi)/|Lambda| = {worst:.3g} over {n} points, 3 models"


def criterion_3():
    beta = 0.01
    model = oscillator(beta)
    pts = np.array([[1.0, y] for y in (0.0, 1.0, 2.0)])
    xi, lam = xi_values(model, pts), lambda_values(model, pts)
    dev = np.max(np.linalg.norm(lam - 2 / beta * xi, axis=(-2, -1)) / np.linalg.norm(lam, axis=(-2, -1)))
    S = evaluate_protocol(model, linear_path(A, B, TAU)).fano
    ok = dev <= 1e-3 and abs(S - 2.0) <= 0.01
    return ok, f"|Lambda - 2/beta xi|/|Lambda| = {dev:.3g} (tol 1e-3), linear S_W = {S:.6f} (2 +- 0.01)"


def criterion_4():
    model = oscillator(20.0)
    lin = linear_path(A, B, TAU)
    parts, ok = [], True
    for kind in ("xi", "lambda"):
        field = metric_field(model, kind)
        sol = geodesic_solve(field, A, B, TAU)
        s_lin = path_action(field, lin)
        sat = abs(sol.action - sol.length**2 / TAU) / sol.action
        ok &= sol.action <= s_lin and sat <= 1e-5
        parts.append(f"{kind}: action {sol.action:.6g} <= linear {s_lin:.6g}, saturation {sat:.2g}")
        if kind == "xi":
            y = sol.path.points[:, 1]
            ydev = np.max(np.abs(y - (A[1] + (B[1] - A[1]) * sol.path.t / TAU)))
            ok &= ydev <= 1e-6
            parts.append(f"xi-geodesic y sup-deviation from linear {ydev:.3g} (tol 1e-6)")
    return ok, "; ".join(parts)


def criterion_5():
    parts, ok = [], True
    xi_f, _ = classical_relaxation_fields(ClassicalRelaxationParams(tau_eq=1.0, beta=1.0))
    GA = np.eye(2)
    err = 0.0
    for GB in (np.e**2 * np.eye(2), np.array([[3.0, 1.2], [1.2, 0.8]])):
        sol = geodesic_solve(xi_f, vech(GA), vech(GB), 10.0)
        ref = vech(siegel_geodesic(GA, GB, sol.path.t / 10.0))
        err = max(err, np.max(np.abs(ref - sol.path.points)))
    ok &= err <= 1e-4
    parts.append(f"Siegel {err:.2g}")

    field = metric_field(oscillator(20.0, frozen_y=1.0), "xi")
    q = quadrature_geodesic_diag(field, 0.5, 2.0, TAU)
    s = geodesic_solve(field, [0.5], [2.0], TAU)
    err = np.max(np.abs(q.points - s.path.points))
    ok &= err <= 1e-4
    parts.append(f"quadrature {err:.2g}")

    for beta in (10.0, 20.0):
        s = geodesic_solve(metric_field(oscillator(beta), "lambda"), A, B, TAU)
        P, dt = s.path.points, s.path.dt
        v0 = (-3 * P[0] + 4 * P[1] - P[2]) / (2 * dt)
        ode = solve_ivp(lambda t, z: damped_lambda_geodesic_rhs(z, GAMMA0, beta), (0, TAU), [*P[0], *v0],
                        rtol=1e-11, atol=1e-12)
        err = np.max(np.abs(ode.y[:2, -1] - B))
        ok &= err <= 1e-3
        parts.append(f"Lambda-ODE terminal (beta={beta:g}) {err:.2g}")
    return ok, ", ".join(parts) + " (tol 1e-4, 1e-4, 1e-3)"


def criterion_6():
    model = displacement_model()
    a, b = np.array([-1.0, 2.0]), np.array([2.0, -1.5])
    lin = linear_path(a, b, 10.0)
    gx = geodesic_solve(metric_field(model, "xi"), a, b, 10.0)
    gl = geodesic_solve(metric_field(model, "lambda"), a, b, 10.0)
    dev = max(np.max(np.abs(g.path.points - lin.points)) for g in (gx, gl))
    a_save, v_save = savings((evaluate_protocol(model, gx.path), evaluate_protocol(model, gl.path)),
                             evaluate_protocol(model, lin))
    ok = dev <= 1e-8 and abs(a_save - 1) <= 1e-8 and abs(v_save - 1) <= 1e-8
    return ok, f"path deviation {dev:.2g}, A_save - 1 = {a_save - 1:.2g}, V_save - 1 = {v_save - 1:.2g}"


def _interior_extrema(v):
    d = np.sign(np.diff(v))
    d = d[d != 0]
    return int(np.sum(d[1:] != d[:-1]))


def criterion_7():
    rows = sweep(SweepSpec(), FigureSetup(), workers=min(4, os.cpu_count() or 1))
    beta = np.array([r["beta"] for r in rows])
    a = np.array([r["A_save"] for r in rows])
    v = np.array([r["V_save"] for r in rows])
    sx = np.array([r["fano_xi_geodesic"] for r in rows])
    sl = np.array([r["fano_lambda_geodesic"] for r in rows])
    gap = sx - sl
    checks = {
        "A,V <= 1": bool(np.all(a <= 1) and np.all(v <= 1)),
        "non-monotonic": _interior_extrema(a) >= 1 and _interior_extrema(v) >= 1,
        "minima in [0.1,0.45]": bool(0.1 <= a.min() <= 0.45 and 0.1 <= v.min() <= 0.45),
        "S_W ordering": bool(np.all(sx >= sl) and np.all(sl >= 2 - 0.02)),
        "gap widens": bool(gap[-1] > gap[0] and np.polyfit(beta, gap, 1)[0] > 0),
    }
    detail = ", ".join(f"{k} {'ok' if v_ else 'no'}" for k, v_ in checks.items())
    detail += (f"; min A_save {a.min():.3f} at beta {beta[a.argmin()]:.2f}, "
               f"min V_save {v.min():.3f} at beta {beta[v.argmin()]:.2f}, "
               f"S_W gap {gap[0]:.3g} -> {gap[-1]:.3g}")
    return all(checks.values()), detail


def criterion_8():
    rng = np.random.default_rng(8)
    lyap = 0.0
    for n in (2, 4, 6):
        for _ in range(5):
            Q = rng.normal(size=(n, n))
            Acand = Q - (np.max(np.linalg.eigvals(Q).real) + 0.5) * np.eye(n)
            X = rng.normal(size=(n, n))
            X = X @ X.T
            Mx = lyapunov_solve(Acand, X)
            R = Acand.T @ Mx + Mx @ Acand + X
            lyap = max(lyap, np.linalg.norm(R) / (2 * np.linalg.norm(Acand) * np.linalg.norm(Mx) + np.linalg.norm(X)))
    stat, cay = 0.0, 0.0
    for beta in (0.01, *BETA_GRID, 50.0):
        model = oscillator(beta)
        for w in OMEGA_GRID:
            for y in (0.0, 1.5):
                lam = np.array([w, y])
                Amat, D = model.drift(lam), model.diffusion(lam)
                G = model.hamiltonian(lam)
                sig = thermal_covariance(G, beta)
                R = Amat @ sig + sig @ Amat.T + D
                stat = max(stat, np.linalg.norm(R) / (2 * np.linalg.norm(Amat) * np.linalg.norm(sig) + np.linalg.norm(D)))
                cay = max(cay, cayley_residual(G, sig, beta))
        disp = displacement_model()
        G = disp.hamiltonian(np.zeros(2))
        cay = max(cay, cayley_residual(G, thermal_covariance(G, beta), beta))
    field = metric_field(oscillator(20.0), "xi")
    Ms = (51, 101, 201, 401)
    S = [geodesic_solve(field, A, B, TAU, M=M).action for M in Ms]
    ref = geodesic_solve(field, A, B, TAU, M=1601).action
    errs = [abs(s - ref) for s in S]
    factors = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    ok = lyap <= 1e-10 and stat <= 1e-9 and cay <= 1e-9 and min(factors) >= 3
    return ok, (f"Lyapunov {lyap:.2g}, stationarity {stat:.2g}, Cayley {cay:.2g}, "
                f"refinement factors {', '.join(f'{f:.2f}' for f in factors)}")


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 9)}


def _line(n, ok, detail):
    return f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, capsys):
    ok, detail = CRITERIA[n]()
    with capsys.disabled():
        print("\n" + _line(n, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for n, fn in CRITERIA.items():
        ok, detail = fn()
        failed += not ok
        print(_line(n, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
