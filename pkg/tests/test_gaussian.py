import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad_vec
from scipy.linalg import expm

from thermolength.catalog import damped_drift
from thermolength.errors import ConfigError, NotHurwitz
from thermolength.gaussian import (
    cayley_residual,
    diffusion_matrix,
    drift_matrix,
    free_energy,
    linear_model_from_config,
    load_model_config,
    relaxation_integral,
    stationarity_residual,
    symplectic_eigenvalues,
    symplectic_form,
    thermal_covariance,
)

from conftest import oscillator, random_spd

seeds = st.integers(0, 2**32 - 1)
betas = st.floats(0.05, 60.0)


def test_symplectic_form_squares_to_identity():
    for N in (1, 2, 3):
        Om = symplectic_form(N)
        assert np.allclose(Om @ Om, np.eye(2 * N))
        assert np.allclose(Om.T, -Om)


def test_oscillator_covariance_low_temperature():
    sigma = thermal_covariance(np.diag([4.0, 1.0]), 50.0)
    assert np.allclose(sigma, np.diag([0.25, 1.0]), atol=1e-12)


def test_oscillator_covariance_unit_frequency():
    sigma = thermal_covariance(np.eye(2), 2.0)
    c = 0.5 / np.tanh(1.0)
    assert np.allclose(sigma, np.diag([c, c]), atol=1e-12)


@given(st.floats(0.2, 5.0), betas)
def test_oscillator_covariance_closed_form(omega, beta):
    sigma = thermal_covariance(np.diag([omega**2, 1.0]), beta)
    c = 0.5 / np.tanh(0.5 * beta * omega)
    assert np.allclose(sigma, c * np.diag([1.0 / omega, omega]), rtol=1e-10, atol=1e-13)


@given(seeds, st.integers(1, 3), betas)
def test_uncertainty_principle(seed, N, beta):
    G = random_spd(np.random.default_rng(seed), 2 * N, 0.3)
    nu = symplectic_eigenvalues(thermal_covariance(G, beta))
    assert np.all(nu >= 0.5 - 1e-10)


@given(seeds, st.integers(1, 3), st.floats(0.05, 30.0))
def test_cayley_identity(seed, N, beta):
    G = random_spd(np.random.default_rng(seed), 2 * N, 0.3)
    sigma = thermal_covariance(G, beta)
    assert cayley_residual(G, sigma, beta) <= 1e-9


@given(st.floats(0.2, 5.0), st.floats(0.01, 1.0))
def test_drift_matches_closed_form(omega, gamma0):
    model = oscillator(beta=3.0, gamma0=gamma0, omega_range=(2.0 * gamma0, 10.0))
    A = model.drift(np.array([omega, 0.0]))
    assert np.allclose(A, damped_drift(omega, gamma0), rtol=0, atol=1e-12)


def test_drift_ten_random_pairs(rng):
    for omega, gamma0 in zip(rng.uniform(0.3, 3.0, 10), rng.uniform(0.01, 0.15, 10)):
        A = oscillator(beta=1.0, gamma0=gamma0).drift(np.array([omega, 1.0]))
        assert np.max(np.abs(A - damped_drift(omega, gamma0))) <= 1e-12


@pytest.mark.parametrize("beta", [0.01, 1.0, 20.0, 80.0])
def test_stationarity_of_thermal_state(beta):
    model = oscillator(beta=beta)
    for omega in np.linspace(0.3, 2.5, 9):
        lam = np.array([omega, 1.0])
        A, D = model.drift(lam), model.diffusion(lam)
        sigma = thermal_covariance(model.hamiltonian(lam), beta)
        assert stationarity_residual(A, D, sigma) <= 1e-9 * np.max(np.sum(np.abs(D), axis=1))
        assert np.all(np.linalg.eigvalsh(D) >= -1e-14)


def test_stationarity_displacement_model(displacement):
    lam = np.array([0.3, -1.0])
    A, D = displacement.drift(lam), displacement.diffusion(lam)
    sigma = thermal_covariance(displacement.hamiltonian(lam), displacement.beta)
    assert stationarity_residual(A, D, sigma) <= 1e-9 * np.max(np.abs(D))


def test_diffusion_is_real_symmetric_psd(rng):
    C = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    D = diffusion_matrix(C)
    assert np.allclose(D, D.T)
    assert np.all(np.linalg.eigvalsh(D) >= -1e-12)


def test_relaxation_integral_is_time_integral():
    A = damped_drift(1.3, 0.4)
    ref, _ = quad_vec(lambda v: expm(A * v), 0.0, 200.0, epsabs=1e-12)
    assert np.allclose(relaxation_integral(A), ref, atol=1e-8)
    with pytest.raises(NotHurwitz):
        relaxation_integral(np.eye(2))


@given(st.floats(0.2, 5.0), st.floats(0.05, 200.0))
def test_free_energy_single_mode(omega, beta):
    F = free_energy(np.diag([omega**2, 1.0]), beta)
    ref = (0.5 * beta * omega + np.log1p(-np.exp(-beta * omega))) / beta
    assert F == pytest.approx(ref, rel=1e-12)


def test_free_energy_additive_over_modes():
    G = np.diag([1.0, 4.0, 1.0, 1.0])  # q1, q2, p1, p2: frequencies 1 and 2
    beta = 0.7
    F1 = free_energy(np.diag([1.0, 1.0]), beta)
    F2 = free_energy(np.diag([4.0, 1.0]), beta)
    assert free_energy(G, beta) == pytest.approx(F1 + F2, rel=1e-12)


def test_free_energy_no_overflow():
    assert np.isfinite(free_energy(np.diag([100.0, 1.0]), 1e4))


def test_fd_derivatives_match_analytic():
    from dataclasses import replace

    model = oscillator(beta=5.0)
    fd_model = replace(model, dhamiltonian=None, ddisplacement=None)
    lam = np.array([[0.7, 1.3], [1.9, 0.2]])
    X, Xfd = model.generator_derivatives(lam), fd_model.generator_derivatives(lam)
    x, xfd = model.displacement_derivatives(lam), fd_model.displacement_derivatives(lam)
    assert np.allclose(Xfd, X, rtol=1e-5, atol=1e-8)
    assert np.allclose(xfd, x, rtol=1e-5, atol=1e-8)


def _config():
    return {
        "N": 1, "d": 2, "beta": 2.0,
        "G0": [[1.0, 0.0], [0.0, 1.0]], "mu0": [0.0, 0.0],
        "C_re": [[0.2, 0.0], [0.1, 0.0]], "C_im": [[0.0, 0.2], [0.0, -0.1]],
        "G_terms": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
        "m_terms": [[0.0, 0.0], [1.0, 0.0]],
        "lower": [-0.5, -2.0], "upper": [2.0, 2.0],
    }


def test_config_model_roundtrip(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(_config()))
    model = load_model_config(path)
    lam = np.array([0.5, 1.0])
    assert np.allclose(model.hamiltonian(lam), np.diag([1.5, 1.0]))
    assert np.allclose(model.displacement(lam), [1.0, 0.0])
    assert np.allclose(model.generator_derivatives(lam)[0], np.diag([1.0, 0.0]))
    assert np.max(np.linalg.eigvals(model.drift(lam)).real) < 0


@pytest.mark.parametrize("field", ["beta", "G0", "mu0", "C_re"])
def test_config_missing_field_is_named(field):
    cfg = _config()
    del cfg[field]
    with pytest.raises(ConfigError, match=field):
        linear_model_from_config(cfg)


def test_config_bad_shape_and_json(tmp_path):
    cfg = _config()
    cfg["G0"] = [[1.0, 0.0]]
    with pytest.raises(ConfigError, match="G0"):
        linear_model_from_config(cfg)
    bad = tmp_path / "bad.json"
    bad.write_text('{\n "N": 1,\n "d": \n}')
    with pytest.raises(ConfigError, match="line 4"):
        load_model_config(bad)
