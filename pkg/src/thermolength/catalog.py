"""Built-in example systems and their closed-form metric oracles.

* ``damped-oscillator``: one mode with frequency ``w`` and centre ``y`` under
  control, coupled to an Ohmic bath ``J(w) = gamma0 w``.
* ``displacement``: fixed Gaussian dynamics, only the mean ``mu = lam`` driven.
* ``classical-relaxation``: single-timescale relaxation towards the Gibbs
  state, control over the entries of ``G`` (and optionally the mean).
"""

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainExceeded, NotPositiveDefinite
from .gaussian import GaussianModel, drift_matrix, relaxation_integral, thermal_covariance

MODEL_IDS = ("damped-oscillator", "displacement", "classical-relaxation")


class WeakCouplingWarning(UserWarning):
    pass


def occupation(omega, beta):
    """Bose occupation ``1/(e^{beta w} - 1)``."""
    x = beta * np.asarray(omega, float)
    return np.exp(-x) / -np.expm1(-x)


def bath_rates(omega, gamma0, beta):
    """Emission and absorption rates ``(gamma(w), gamma(-w))`` of the Ohmic bath.

    The negative-frequency branch is continued analytically to
    ``2 gamma0 w N(w)`` so it stays non-negative.
    """
    omega = np.asarray(omega, float)
    N = occupation(omega, beta)
    return 2.0 * gamma0 * omega * (N + 1.0), 2.0 * gamma0 * omega * N


# ---------------------------------------------------------------- damped oscillator


@dataclass(frozen=True)
class DampedOscillatorParams:
    gamma0: float = 0.1
    beta: float = 20.0
    omega_range: tuple = (0.3, 2.5)
    y_range: tuple = (0.0, 2.5)
    frozen_y: Optional[float] = None  # fix y to get the 1-parameter (w only) model

    def __post_init__(self):
        if not self.gamma0 > 0:
            raise ValueError("gamma0 must be positive")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        wmin = self.omega_range[0]
        if not wmin > 0:
            raise ValueError("omega range must be strictly positive")
        ratio = self.gamma0 / wmin
        if ratio > 0.5:
            raise ValueError(f"gamma0/omega_min = {ratio:.3g} exceeds the weak-coupling limit 0.5")
        if ratio > 0.2:
            warnings.warn(f"gamma0/omega_min = {ratio:.3g} > 0.2: weak-coupling forms are rough here",
                          WeakCouplingWarning, stacklevel=3)


def _damped_jumps(omega, gamma0, beta):
    g_up, g_down = bath_rates(omega, gamma0, beta)
    a, b = 0.5 * np.sqrt(g_up), 0.5 * np.sqrt(g_down)
    C = np.empty(omega.shape + (2, 2), complex)
    C[..., 0, 0] = a
    C[..., 0, 1] = 1j * a / omega
    C[..., 1, 0] = b
    C[..., 1, 1] = -1j * b / omega
    return C


def damped_oscillator_model(params=None):
    p = params or DampedOscillatorParams()
    gamma0, beta = p.gamma0, p.beta
    frozen = p.frozen_y is not None

    def split(lam):
        lam = np.asarray(lam, float)
        omega = lam[..., 0]
        if np.any(omega <= 0):
            raise DomainExceeded(f"oscillator frequency must be positive, got {np.min(omega):.3g}")
        y = np.full(omega.shape, p.frozen_y) if frozen else lam[..., 1]
        return omega, y

    def hamiltonian(lam):
        omega, _ = split(lam)
        G = np.zeros(omega.shape + (2, 2))
        G[..., 0, 0] = omega**2
        G[..., 1, 1] = 1.0
        return G

    def displacement(lam):
        _, y = split(lam)
        mu = np.zeros(y.shape + (2,))
        mu[..., 0] = y
        return mu

    def jumps(lam):
        omega, _ = split(lam)
        return _damped_jumps(omega, gamma0, beta)

    d = 1 if frozen else 2

    def dhamiltonian(lam):
        omega, _ = split(lam)
        out = np.zeros(omega.shape + (d, 2, 2))
        out[..., 0, 0, 0] = 2.0 * omega
        return out

    def ddisplacement(lam):
        omega, _ = split(lam)
        out = np.zeros(omega.shape + (d, 2))
        if not frozen:
            out[..., 1, 0] = 1.0
        return out

    lower = [p.omega_range[0]] if frozen else [p.omega_range[0], p.y_range[0]]
    upper = [p.omega_range[1]] if frozen else [p.omega_range[1], p.y_range[1]]
    return GaussianModel(
        n_modes=1,
        n_params=d,
        beta=beta,
        hamiltonian=hamiltonian,
        displacement=displacement,
        jumps=jumps,
        dhamiltonian=dhamiltonian,
        ddisplacement=ddisplacement,
        lower=np.array(lower),
        upper=np.array(upper),
        name="damped-oscillator",
        param_names=("omega",) if frozen else ("omega", "y"),
    )


def damped_drift(omega, gamma0):
    """Closed-form drift of the damped oscillator, ``[[-g/2, 1], [-w^2, -g/2]]``."""
    return np.array([[-0.5 * gamma0, 1.0], [-omega**2, -0.5 * gamma0]])


def _hyper(omega, beta):
    x = 0.5 * beta * np.asarray(omega, float)
    coth = 1.0 / np.tanh(x)
    csch2 = 1.0 / np.sinh(x) ** 2
    return coth, csch2


def analytic_xi_damped(omega, gamma0, beta):
    """Reference closed forms ``(xi_11, xi_22)`` for the damped oscillator.

    These differ from what the Gaussian pipeline produces (see
    :func:`exact_xi_damped`); they are kept for comparison.
    """
    coth, csch2 = _hyper(omega, beta)
    D = gamma0**2 + 4.0 * omega**2
    xi11 = (omega * csch2 + 2.0 * gamma0**2 * coth / D) / (16.0 * gamma0 * omega**3)
    xi22 = gamma0 * omega**2 / (2.0 * gamma0**2 + 8.0 * omega**2)
    return xi11, xi22


def analytic_lambda_damped(omega, gamma0, beta):
    """Reference weak-coupling forms ``(Lambda_11, Lambda_22)``."""
    coth, csch2 = _hyper(omega, beta)
    lam11 = csch2 / (4.0 * omega**2) * (1.0 / gamma0 + gamma0 * np.cosh(beta * omega) / (4.0 * omega**2))
    lam22 = 0.25 * gamma0 * omega * coth
    return lam11, lam22


def exact_xi_damped(omega, gamma0, beta):
    """Exact ``(xi_11, xi_22)`` of the damped oscillator in ``(w, y)`` coordinates.

    Derived symbolically from the Lyapunov/imaginary-time construction with
    the Ohmic rates above; valid for any ``gamma0 > 0``.
    """
    coth, csch2 = _hyper(omega, beta)
    D = gamma0**2 + 4.0 * omega**2
    xi11 = beta * csch2 / (4.0 * gamma0) + gamma0 * coth / (2.0 * omega * D)
    xi22 = 2.0 * gamma0 * omega**2 / D
    return xi11, xi22


def exact_lambda_damped(omega, gamma0, beta):
    """Exact ``(Lambda_11, Lambda_22)`` of the damped oscillator."""
    coth, csch2 = _hyper(omega, beta)
    D = gamma0**2 + 4.0 * omega**2
    lam11 = (gamma0**2 * coth**2 + 2.0 * omega**2 * csch2) / (gamma0 * D)
    lam22 = 2.0 * gamma0 * omega**3 * coth / D
    return lam11, lam22


def weak_xi_damped(omega, gamma0, beta):
    """Leading weak-coupling (``gamma0 << w``) form of :func:`exact_xi_damped`."""
    coth, csch2 = _hyper(omega, beta)
    return beta * csch2 / (4.0 * gamma0) + gamma0 * coth / (8.0 * omega**3), 0.5 * gamma0 + 0.0 * omega


def weak_lambda_damped(omega, gamma0, beta):
    """Leading weak-coupling form of :func:`exact_lambda_damped`."""
    coth, csch2 = _hyper(omega, beta)
    lam11 = 0.5 * csch2 * (1.0 / gamma0 + gamma0 * np.cosh(beta * omega) / (4.0 * omega**2))
    return lam11, 0.5 * gamma0 * omega * coth


def lambda_oracle_tolerance(omega, gamma0):
    """Relative tolerance ``3 (gamma0/w)^2`` attached to the weak-coupling forms."""
    return 3.0 * (gamma0 / omega) ** 2


def _lambda_and_slope(omega, gamma0, beta, forms):
    """``(L11, L22, dL11/dw, dL22/dw)`` for the chosen closed forms."""
    coth, csch2 = _hyper(omega, beta)
    dcoth = -0.5 * beta * csch2
    dcsch2 = -beta * csch2 * coth
    if forms == "exact":
        D = gamma0**2 + 4.0 * omega**2
        num = gamma0**2 * coth**2 + 2.0 * omega**2 * csch2
        dnum = 2.0 * gamma0**2 * coth * dcoth + 4.0 * omega * csch2 + 2.0 * omega**2 * dcsch2
        l11 = num / (gamma0 * D)
        d11 = dnum / (gamma0 * D) - num * 8.0 * omega / (gamma0 * D**2)
        l22 = 2.0 * gamma0 * omega**3 * coth / D
        d22 = l22 * (3.0 / omega + dcoth / coth - 8.0 * omega / D)
    elif forms == "reference":
        ch = np.cosh(beta * omega)
        a = csch2 / (4.0 * omega**2)
        da = dcsch2 / (4.0 * omega**2) - csch2 / (2.0 * omega**3)
        b = 1.0 / gamma0 + gamma0 * ch / (4.0 * omega**2)
        db = gamma0 * (beta * np.sinh(beta * omega) / (4.0 * omega**2) - ch / (2.0 * omega**3))
        l11, d11 = a * b, da * b + a * db
        l22 = 0.25 * gamma0 * omega * coth
        d22 = 0.25 * gamma0 * (coth + omega * dcoth)
    else:
        raise ValueError(f"forms must be 'exact' or 'reference', got {forms!r}")
    return l11, l22, d11, d22


def damped_lambda_geodesic_rhs(state, gamma0, beta, forms="exact", metric=None):
    """Time derivative of ``(w, y, w', y')`` along a geodesic of the diagonal Lambda metric.

    ``metric`` may replace the closed forms by any callable
    ``w -> (L11, L22, dL11/dw, dL22/dw)``.
    """
    omega, _, wdot, ydot = state
    if omega <= 0:
        raise DomainExceeded(f"oscillator frequency must be positive, got {omega:.3g}")
    if metric is None:
        l11, l22, d11, d22 = _lambda_and_slope(omega, gamma0, beta, forms)
    else:
        l11, l22, d11, d22 = metric(omega)
    wacc = -0.5 * wdot**2 * d11 / l11 + 0.5 * ydot**2 * d22 / l11
    yacc = -wdot * ydot * d22 / l22
    return np.array([wdot, ydot, wacc, yacc])


# ---------------------------------------------------------------- displacement


def _default_displacement_jumps():
    return _damped_jumps(np.asarray(1.0), 0.1, 1.0)


@dataclass(frozen=True)
class DisplacementModelParams:
    G: np.ndarray = field(default_factory=lambda: np.eye(2))
    C: np.ndarray = field(default_factory=_default_displacement_jumps)
    basis: np.ndarray = field(default_factory=lambda: np.eye(2))  # rows are m_j
    beta: float = 1.0
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def displacement_model(params=None):
    p = params or DisplacementModelParams()
    G = np.asarray(p.G, float)
    C = np.asarray(p.C, complex)
    M = np.atleast_2d(np.asarray(p.basis, float))
    d, n = M.shape
    if G.shape != (n, n):
        raise ValueError(f"G must be {n}x{n} to match the displacement basis")
    np.linalg.cholesky(G)
    relaxation_integral(drift_matrix(G, C))  # Hurwitz check

    def hamiltonian(lam):
        lam = np.asarray(lam, float)
        return np.broadcast_to(G, lam.shape[:-1] + G.shape)

    def displacement(lam):
        return np.asarray(lam, float) @ M

    def jumps(lam):
        lam = np.asarray(lam, float)
        return np.broadcast_to(C, lam.shape[:-1] + C.shape)

    def dhamiltonian(lam):
        lam = np.asarray(lam, float)
        return np.zeros(lam.shape[:-1] + (d, n, n))

    def ddisplacement(lam):
        lam = np.asarray(lam, float)
        return np.broadcast_to(M, lam.shape[:-1] + M.shape)

    return GaussianModel(
        n_modes=n // 2,
        n_params=d,
        beta=p.beta,
        hamiltonian=hamiltonian,
        displacement=displacement,
        jumps=jumps,
        dhamiltonian=dhamiltonian,
        ddisplacement=ddisplacement,
        lower=np.full(d, -5.0) if p.lower is None else p.lower,
        upper=np.full(d, 5.0) if p.upper is None else p.upper,
        name="displacement",
        param_names=tuple(f"mu_{j + 1}" for j in range(d)),
    )


def displacement_flat_metrics(params=None):
    """Constant ``(xi, Lambda)`` of the displacement model in the basis coordinates."""
    p = params or DisplacementModelParams()
    G = np.asarray(p.G, float)
    M = np.atleast_2d(np.asarray(p.basis, float))
    Y = relaxation_integral(drift_matrix(G, p.C))
    sigma = thermal_covariance(G, p.beta)
    xi = M @ (0.5 * (G @ Y + Y.T @ G)) @ M.T
    lam = M @ (G @ (Y @ sigma + sigma @ Y.T) @ G) @ M.T
    return xi, lam


# ---------------------------------------------------------------- classical relaxation


@dataclass(frozen=True)
class ClassicalRelaxationParams:
    tau_eq: float = 1.0
    beta: float = 1.0
    n_modes: int = 1
    control_mean: bool = False
    diag_range: tuple = (0.05, 50.0)
    offdiag_range: tuple = (-25.0, 25.0)
    mean_range: tuple = (-5.0, 5.0)

    def __post_init__(self):
        if not self.tau_eq > 0:
            raise ValueError("tau_eq must be positive")
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def sym_basis(n):
    """Symmetric unit matrices ``E_ab + E_ba`` (a < b) and ``E_aa``, upper-triangle order."""
    rows, cols = np.triu_indices(n)
    E = np.zeros((len(rows), n, n))
    E[np.arange(len(rows)), rows, cols] = 1.0
    E[np.arange(len(rows)), cols, rows] = 1.0
    return E


def vech(G):
    """Upper-triangle entries of symmetric ``G`` (inverse of the :func:`sym_basis` expansion)."""
    G = np.asarray(G, float)
    rows, cols = np.triu_indices(G.shape[-1])
    return G[..., rows, cols]


def classical_relaxation_model(params=None):
    p = params or ClassicalRelaxationParams()
    n = 2 * p.n_modes
    E = sym_basis(n)
    k = len(E)
    m = n if p.control_mean else 0
    d = k + m
    rows, cols = np.triu_indices(n)

    def hamiltonian(lam):
        return np.einsum("...j,jab->...ab", np.asarray(lam, float)[..., :k], E)

    def displacement(lam):
        lam = np.asarray(lam, float)
        if p.control_mean:
            return lam[..., k:]
        return np.zeros(lam.shape[:-1] + (n,))

    def dhamiltonian(lam):
        lam = np.asarray(lam, float)
        out = np.zeros(lam.shape[:-1] + (d, n, n))
        out[..., :k, :, :] = E
        return out

    def ddisplacement(lam):
        lam = np.asarray(lam, float)
        out = np.zeros(lam.shape[:-1] + (d, n))
        if p.control_mean:
            out[..., k:, :] = np.eye(n)
        return out

    lo = np.where(rows == cols, p.diag_range[0], p.offdiag_range[0])
    hi = np.where(rows == cols, p.diag_range[1], p.offdiag_range[1])
    if p.control_mean:
        lo = np.concatenate([lo, np.full(n, p.mean_range[0])])
        hi = np.concatenate([hi, np.full(n, p.mean_range[1])])
    names = tuple(f"g_{a + 1}{b + 1}" for a, b in zip(rows, cols))
    if p.control_mean:
        names += tuple(f"mu_{a + 1}" for a in range(n))
    return GaussianModel(
        n_modes=p.n_modes,
        n_params=d,
        beta=p.beta,
        hamiltonian=hamiltonian,
        displacement=displacement,
        dhamiltonian=dhamiltonian,
        ddisplacement=ddisplacement,
        relaxation_time=p.tau_eq,
        lower=lo,
        upper=hi,
        name="classical-relaxation",
        param_names=names,
    )


def classical_relaxation_fields(params=None):
    """``(xi, Lambda)`` metric fields of the relaxation model; ``Lambda = (2/beta) xi`` exactly."""
    from .metrics import classical_lambda_values, classical_xi_values
    from .geometry import MetricField

    model = classical_relaxation_model(params)

    def checked(fn):
        def evaluate(lam):
            G = model.hamiltonian(lam)
            if np.any(np.linalg.eigvalsh(G)[..., 0] <= 0):
                raise NotPositiveDefinite("G(lambda) is not positive definite")
            return fn(model, lam)
        return evaluate

    xi = MetricField(checked(classical_xi_values), model.lower, model.upper, name="classical-relaxation:xi")
    lam = MetricField(checked(classical_lambda_values), model.lower, model.upper, name="classical-relaxation:lambda")
    return xi, lam


def get_model(model_id, beta=None, gamma0=None, **kwargs):
    """Catalog lookup by id string; ``beta``/``gamma0`` override the defaults."""
    over = {} if beta is None else {"beta": float(beta)}
    if model_id == "damped-oscillator":
        if gamma0 is not None:
            over["gamma0"] = float(gamma0)
        return damped_oscillator_model(DampedOscillatorParams(**over, **kwargs))
    if model_id == "displacement":
        return displacement_model(DisplacementModelParams(**over, **kwargs))
    if model_id == "classical-relaxation":
        return classical_relaxation_model(ClassicalRelaxationParams(**over, **kwargs))
    raise KeyError(f"unknown model id {model_id!r}; expected one of {MODEL_IDS}")
