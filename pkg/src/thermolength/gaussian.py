"""Parametrised Gaussian open systems and their equilibrium/dynamical building blocks.

Conventions: hbar = k_B = 1, quadratures ordered ``R = (q_1..q_N, p_1..p_N)``,
Hamiltonian ``H = 1/2 (R - mu)^T G (R - mu)`` and linear jump operators
``L_n = c_n^T (R - mu)``. The symplectic form carries a factor ``i`` so that
``Omega @ Omega = I``.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, NotPositiveDefinite, ThermoLengthError
from .matfun import apply_matrix_function, _check_hurwitz

IMAG_TOL = 1e-10
FD_STEP = 1e-6


def symplectic_form(n_modes):
    """``Omega = i [[0, I], [-I, 0]]`` for ``n_modes`` bosonic modes."""
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return 1j * np.block([[zero, eye], [-eye, zero]])


def _n_modes(M):
    return M.shape[-1] // 2


def _real(M, what, tol=IMAG_TOL):
    M = np.asarray(M)
    if np.iscomplexobj(M):
        scale = max(np.max(np.abs(M)), 1.0)
        if np.max(np.abs(M.imag)) > tol * scale:
            raise ThermoLengthError(f"{what} has an imaginary residue {np.max(np.abs(M.imag)):.3g}")
        M = M.real
    return M


def _sym(M):
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def thermal_covariance(G, beta):
    """Covariance matrix of the Gibbs state of ``H = 1/2 R^T G R``.

    ``sigma = 1/2 coth(beta Omega G / 2) Omega``; for a single oscillator
    ``G = diag(w^2, 1)`` this is ``coth(beta w / 2)/2 * diag(1/w, w)``.
    """
    G = np.asarray(G, dtype=float)
    Om = symplectic_form(_n_modes(G))
    coth = apply_matrix_function(0.5 * beta * Om @ G, lambda z: 1.0 / np.tanh(z))
    return _sym(_real(0.5 * coth @ Om, "thermal covariance"))


def symplectic_eigenvalues(M):
    """Positive symplectic eigenvalues of a real symmetric ``2N x 2N`` matrix, ascending."""
    M = np.asarray(M, dtype=float)
    N = _n_modes(M)
    theta = np.linalg.eigvals(symplectic_form(N) @ M)
    return np.sort(theta.real, axis=-1)[..., N:]


def cayley_residual(G, sigma, beta):
    """Mismatch in ``exp(-beta Omega G) = (2 sigma Omega - I)(2 sigma Omega + I)^-1``.

    Evaluated in the multiplied-out form ``E (K + I) - (K - I)`` with
    ``K = 2 sigma Omega``, relative to ``max(1, |E| |K + I|)``: at low
    temperature ``K + I`` is nearly singular and ``E`` has entries of size
    ``exp(beta w)``, so inverting first would only measure roundoff.
    """
    G = np.asarray(G, dtype=float)
    n = G.shape[-1]
    Om = symplectic_form(n // 2)
    E = apply_matrix_function(-beta * Om @ G, np.exp)
    eye = np.eye(n)
    K = 2.0 * sigma @ Om
    R = E @ (K + eye) - (K - eye)
    norm = lambda M: np.max(np.sum(np.abs(M), axis=-1), axis=-1)
    return np.max(norm(R) / np.maximum(1.0, norm(E) * norm(K + eye)))


def jump_gram(C):
    """``sum_n c_n c_n^dagger`` for a jump matrix whose rows are ``c_n^T``.

    With this assembly the damped oscillator drift comes out Hurwitz
    (diagonal ``-gamma0/2``); the transposed assembly flips the sign of the
    imaginary part and gives an unstable drift.
    """
    C = np.asarray(C, dtype=complex)
    return np.swapaxes(C, -1, -2) @ C.conj()


def drift_matrix(G, C):
    """``A = -i Omega (G - Im(C^dag C))``, returned as a real matrix."""
    G = np.asarray(G, dtype=float)
    Om = symplectic_form(_n_modes(G))
    A = -1j * Om @ (G - jump_gram(C).imag)
    return _real(A, "drift matrix", tol=1e-12)


def diffusion_matrix(C, n_modes=None):
    """``D = Omega Re(C^dag C) Omega``, real symmetric positive semi-definite."""
    C = np.asarray(C, dtype=complex)
    Om = symplectic_form(n_modes or C.shape[-1] // 2)
    return _sym(_real(Om @ jump_gram(C).real @ Om, "diffusion matrix", tol=1e-12))


def stationarity_residual(A, D, sigma):
    R = A @ sigma + sigma @ np.swapaxes(A, -1, -2) + D
    return np.max(np.sum(np.abs(R), axis=-1))


def relaxation_integral(A):
    """``Y = int_0^inf exp(A v) dv = -A^-1`` for Hurwitz ``A``."""
    A = np.asarray(A, dtype=float)
    _check_hurwitz(A)
    return -np.linalg.inv(A)


def free_energy(G, beta):
    """Equilibrium free energy ``sum_k log(2 sinh(beta w_k / 2)) / beta``.

    Independent of the displacement. Raises if the symplectic spectrum is
    not strictly positive.
    """
    G = np.asarray(G, dtype=float)
    N = _n_modes(G)
    theta = np.linalg.eigvals(symplectic_form(N) @ G)
    if np.max(np.abs(theta.imag)) > 1e-9 * max(1.0, np.max(np.abs(theta))):
        raise NotPositiveDefinite("generator has complex symplectic spectrum")
    nu = np.sort(theta.real, axis=-1)[..., N:]
    if np.any(nu <= 0):
        raise NotPositiveDefinite("generator has a non-positive symplectic eigenvalue")
    x = 0.5 * beta * nu
    return np.sum(x + np.log1p(-np.exp(-2.0 * x)), axis=-1) / beta


@dataclass(frozen=True)
class ThermalGaussianState:
    sigma: np.ndarray
    mu: np.ndarray
    beta: float


@dataclass(frozen=True)
class GaussianModel:
    """Map from control vector ``lam`` to ``(G, mu, C)``.

    All evaluators are vectorised: they take ``lam`` of shape ``(..., d)``
    and return arrays with the same leading shape. When ``relaxation_time``
    is set the dissipator is the single-timescale relaxation
    ``(pi - rho) / tau_eq`` and ``jumps`` is ignored.
    """

    n_modes: int
    n_params: int
    beta: float
    hamiltonian: Callable
    displacement: Callable
    jumps: Optional[Callable] = None
    dhamiltonian: Optional[Callable] = None
    ddisplacement: Optional[Callable] = None
    relaxation_time: Optional[float] = None
    lower: np.ndarray = field(default=None)
    upper: np.ndarray = field(default=None)
    name: str = "custom"
    param_names: tuple = ()

    def __post_init__(self):
        d = self.n_params
        lo = np.full(d, -np.inf) if self.lower is None else np.asarray(self.lower, float)
        hi = np.full(d, np.inf) if self.upper is None else np.asarray(self.upper, float)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if self.jumps is None and self.relaxation_time is None:
            raise ValueError("model needs either jump operators or a relaxation time")
        if not self.param_names:
            object.__setattr__(self, "param_names", tuple(f"lambda_{j + 1}" for j in range(d)))

    def contains(self, lam):
        lam = np.asarray(lam, float)
        return bool(np.all(lam >= self.lower) and np.all(lam <= self.upper))

    def _fd(self, f, lam):
        lam = np.asarray(lam, float)
        out = []
        for j in range(self.n_params):
            h = FD_STEP * np.maximum(np.abs(lam[..., j]), 1.0)
            e = np.zeros(self.n_params)
            e[j] = 1.0
            step = h[..., None] * e
            diff = (np.asarray(f(lam + step)) - np.asarray(f(lam - step)))
            out.append(diff / (2.0 * h.reshape(h.shape + (1,) * (diff.ndim - h.ndim))))
        return np.stack(out, axis=lam.ndim - 1)

    def generator_derivatives(self, lam):
        """Stack of ``dG/dlam_j``, shape ``(..., d, 2N, 2N)``."""
        if self.dhamiltonian is not None:
            return np.asarray(self.dhamiltonian(lam), float)
        return _sym(self._fd(self.hamiltonian, lam))

    def displacement_derivatives(self, lam):
        """Stack of ``dmu/dlam_j``, shape ``(..., d, 2N)``."""
        if self.ddisplacement is not None:
            return np.asarray(self.ddisplacement(lam), float)
        return self._fd(self.displacement, lam)

    def drift(self, lam):
        if self.relaxation_time is not None:
            raise ThermoLengthError("single-timescale relaxation has no Gaussian drift matrix")
        return drift_matrix(self.hamiltonian(lam), self.jumps(lam))

    def diffusion(self, lam):
        if self.relaxation_time is not None:
            raise ThermoLengthError("single-timescale relaxation has no Gaussian diffusion matrix")
        return diffusion_matrix(self.jumps(lam), self.n_modes)

    def thermal_state(self, lam):
        G = self.hamiltonian(lam)
        return ThermalGaussianState(thermal_covariance(G, self.beta), np.asarray(self.displacement(lam), float), self.beta)

    def free_energy(self, lam):
        return free_energy(self.hamiltonian(lam), self.beta)


def _matrix(cfg, key, shape, dtype=float):
    try:
        M = np.asarray(cfg[key], dtype=dtype)
    except KeyError:
        raise ConfigError(f"missing field '{key}'") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field '{key}' is not a numeric array: {exc}") from None
    if M.shape != shape:
        raise ConfigError(f"field '{key}' has shape {M.shape}, expected {shape}")
    return M


def linear_model_from_config(cfg):
    """Build a model with ``G(lam) = G0 + sum_j lam_j G_j`` and ``mu(lam) = mu0 + sum_j lam_j m_j``.

    ``cfg`` keys: ``N``, ``d``, ``beta``, ``G0``, ``mu0``, ``C_re``, ``C_im``
    (or ``relaxation_time``), ``G_terms``, ``m_terms``, optional ``lower``,
    ``upper`` and ``name``. ``C`` is constant in ``lam``.
    """
    for key in ("N", "d", "beta"):
        if key not in cfg:
            raise ConfigError(f"missing field '{key}'")
    N, d, beta = int(cfg["N"]), int(cfg["d"]), float(cfg["beta"])
    if N < 1 or d < 1:
        raise ConfigError("fields 'N' and 'd' must be positive integers")
    if not beta > 0:
        raise ConfigError("field 'beta' must be positive")
    n = 2 * N
    G0 = _matrix(cfg, "G0", (n, n))
    if not np.allclose(G0, G0.T):
        raise ConfigError("field 'G0' must be symmetric")
    mu0 = _matrix(cfg, "mu0", (n,))
    Gt = _matrix(cfg, "G_terms", (d, n, n)) if "G_terms" in cfg else np.zeros((d, n, n))
    mt = _matrix(cfg, "m_terms", (d, n)) if "m_terms" in cfg else np.zeros((d, n))
    if not np.allclose(Gt, np.swapaxes(Gt, -1, -2)):
        raise ConfigError("field 'G_terms' must hold symmetric matrices")
    tau_eq = cfg.get("relaxation_time")
    jumps = None
    if tau_eq is None:
        if "C_re" not in cfg:
            raise ConfigError("missing field 'C_re' (or 'relaxation_time')")
        re = np.asarray(cfg["C_re"], float)
        if re.ndim != 2 or re.shape[1] != n:
            raise ConfigError(f"field 'C_re' must have shape (D, {n})")
        im = _matrix(cfg, "C_im", re.shape) if "C_im" in cfg else np.zeros_like(re)
        C = re + 1j * im

        def jumps(lam):
            lam = np.asarray(lam, float)
            return np.broadcast_to(C, lam.shape[:-1] + C.shape)
    elif not float(tau_eq) > 0:
        raise ConfigError("field 'relaxation_time' must be positive")

    def hamiltonian(lam):
        return G0 + np.einsum("...j,jab->...ab", np.asarray(lam, float), Gt)

    def displacement(lam):
        return mu0 + np.einsum("...j,ja->...a", np.asarray(lam, float), mt)

    def dhamiltonian(lam):
        lam = np.asarray(lam, float)
        return np.broadcast_to(Gt, lam.shape[:-1] + Gt.shape)

    def ddisplacement(lam):
        lam = np.asarray(lam, float)
        return np.broadcast_to(mt, lam.shape[:-1] + mt.shape)

    lower = _matrix(cfg, "lower", (d,)) if "lower" in cfg else None
    upper = _matrix(cfg, "upper", (d,)) if "upper" in cfg else None
    return GaussianModel(
        n_modes=N,
        n_params=d,
        beta=beta,
        hamiltonian=hamiltonian,
        displacement=displacement,
        jumps=jumps,
        dhamiltonian=dhamiltonian,
        ddisplacement=ddisplacement,
        relaxation_time=None if tau_eq is None else float(tau_eq),
        lower=lower,
        upper=upper,
        name=str(cfg.get("name", "config")),
    )


def load_model_config(path):
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return linear_model_from_config(cfg)
