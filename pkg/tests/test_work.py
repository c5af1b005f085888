import json

import numpy as np
import pytest

from thermolength.catalog import ClassicalRelaxationParams, classical_relaxation_model, displacement_flat_metrics
from thermolength.geometry import PathGrid, geodesic_solve, linear_path
from thermolength.metrics import metric_field, metric_values
from thermolength.work import (
    Protocol,
    WorkReport,
    evaluate_protocol,
    excess_work,
    fano,
    linear_protocol,
    quantum_correction,
    report_to_json,
    savings,
    work_variance,
)

from conftest import oscillator

A, B = np.array([0.5, 0.5]), np.array([2.0, 2.0])


def test_linear_protocol():
    p = linear_protocol([0, 1], [2, 3], 4.0, 9)
    assert np.array_equal(p.points[0], [0, 1]) and np.array_equal(p.points[-1], [2, 3])
    assert np.allclose(p.points[4], [1, 2])
    assert p.tau == 4.0
    c = linear_protocol([1, 1], [1, 1], 2.0, 9)
    assert np.all(c.points == 1.0)


def test_flat_metric_work(displacement):
    xi, lam = displacement_flat_metrics()
    a, b, tau = np.array([-1.0, 0.5]), np.array([1.0, -0.5]), 7.0
    r = evaluate_protocol(displacement, linear_protocol(a, b, tau))
    d = b - a
    assert r.excess_work == pytest.approx(d @ xi @ d / tau, rel=1e-12)
    assert r.variance == pytest.approx(d @ lam @ d / tau, rel=1e-12)
    assert savings(r, r) == (pytest.approx(1.0, abs=1e-12), pytest.approx(1.0, abs=1e-12))
    assert r.free_energy_change == 0.0


def test_zero_velocity(displacement):
    p = linear_protocol([0.3, 0.3], [0.3, 0.3], 5.0)
    assert excess_work(displacement, p) == 0.0
    assert work_variance(displacement, p) == 0.0
    r = evaluate_protocol(displacement, p)
    with pytest.raises(ZeroDivisionError):
        savings(r, r)
    with pytest.raises(ZeroDivisionError):
        fano(1.0, 0.0, 0.0)


def test_classical_relaxation_saturates_fdr():
    model = classical_relaxation_model(ClassicalRelaxationParams(tau_eq=0.5, beta=2.0))
    t = np.linspace(0, 3.0, 101)
    pts = np.stack([1 + t, 0.3 * np.sin(t), 2 - 0.3 * t], axis=1)
    proto = Protocol(model, PathGrid(t, pts), kinds=("classical_xi", "classical_lambda"))
    r = evaluate_protocol(proto)
    assert r.fano == pytest.approx(2.0, abs=1e-9)
    assert abs(r.quantum_correction) <= 1e-9 * r.excess_work


def test_oscillator_low_temperature_statistics(osc20):
    lin = evaluate_protocol(osc20, linear_protocol(A, B, 100.0))
    gx = geodesic_solve(metric_field(osc20, "xi"), A, B, 100.0)
    gl = geodesic_solve(metric_field(osc20, "lambda"), A, B, 100.0)
    rx, rl = evaluate_protocol(osc20, gx.path), evaluate_protocol(osc20, gl.path)
    assert lin.excess_work > rx.excess_work
    assert lin.quantum_correction > 0
    assert rx.fano > rl.fano > 2.0
    # each geodesic is best at its own objective
    assert rx.excess_work <= rl.excess_work * (1 + 1e-6)
    assert rl.variance <= rx.variance * (1 + 1e-6)
    # bound tightness on geodesics
    assert rx.excess_work == pytest.approx(rx.excess_work_bound, rel=1e-5)
    assert rl.variance == pytest.approx(rl.variance_bound, rel=1e-5)
    a_save, v_save = savings((rx, rl), lin)
    assert 0 < a_save < 1 and 0 < v_save < 1


def test_high_temperature_fano():
    model = oscillator(0.1)
    r = evaluate_protocol(model, linear_protocol(A, [1.0, 2.0], 100.0))
    assert r.fano == pytest.approx(2.0, abs=1e-2)
    assert 0 <= r.quantum_correction <= 1e-2 * r.excess_work


def test_quantum_correction_vanishes_classically():
    vals = []
    for beta in (0.5, 0.05, 0.005):
        r = evaluate_protocol(oscillator(beta), linear_protocol(A, B, 100.0))
        vals.append(r.quantum_correction / r.excess_work)
    assert vals[0] > vals[1] > vals[2] >= 0
    assert vals[2] < 1e-4


def test_tau_scaling(osc20):
    p1 = linear_protocol(A, B, 100.0)
    p2 = PathGrid(2 * p1.t, p1.points)
    r1, r2 = evaluate_protocol(osc20, p1), evaluate_protocol(osc20, p2)
    assert r2.excess_work == pytest.approx(0.5 * r1.excess_work, rel=1e-12)
    assert r2.variance == pytest.approx(0.5 * r1.variance, rel=1e-12)


def test_pointwise_fdr_inequality(osc20):
    p = linear_protocol(A, B, 100.0)
    xi = metric_values(osc20, p.points, "xi")
    lam = metric_values(osc20, p.points, "lambda")
    v = (B - A) / 100.0
    diff = 0.5 * osc20.beta * np.einsum("nij,i,j->n", lam, v, v) - np.einsum("nij,i,j->n", xi, v, v)
    assert np.all(diff >= -1e-9)


def test_scaled_metric_leaves_savings_unchanged():
    base = oscillator(5.0)
    sol = geodesic_solve(metric_field(base, "xi"), A, B, 100.0, M=101)
    lin = linear_path(A, B, 100.0, 101)
    r_opt, r_lin = evaluate_protocol(base, sol.path), evaluate_protocol(base, lin)

    def scaled(r, c):
        return WorkReport(c * r.excess_work, c * r.variance, r.fano, c * r.quantum_correction,
                          np.sqrt(c) * r.xi_length, np.sqrt(c) * r.lambda_length,
                          c * r.excess_work_bound, c * r.variance_bound)

    assert savings(scaled(r_opt, 7.0), scaled(r_lin, 7.0)) == pytest.approx(savings(r_opt, r_lin), rel=1e-12)


def test_displacement_free_energy_constant(displacement):
    r = evaluate_protocol(displacement, linear_protocol([-2, 1], [1, -3], 3.0))
    assert abs(r.free_energy_change) <= 1e-10
    assert r.total_work == pytest.approx(r.excess_work)


def test_report_json(osc20):
    r = evaluate_protocol(osc20, linear_protocol(A, B, 100.0))
    doc = json.loads(report_to_json(r, model="damped-oscillator", beta=20.0, tau=100.0, M=201,
                                    lambda_A=A, lambda_B=B))
    for key in ("excess_work", "variance", "fano", "quantum_correction", "xi_length", "lambda_length",
                "excess_work_bound", "variance_bound", "model", "beta", "tau", "M", "lambda_A", "lambda_B"):
        assert key in doc
    assert doc["excess_work"] == r.excess_work
    assert quantum_correction(20.0, r.excess_work, r.variance) == r.quantum_correction
