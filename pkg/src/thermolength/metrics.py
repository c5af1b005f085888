"""Excess-work and work-fluctuation metric tensors for slowly driven Gaussian systems.

For control ``lam`` with forces ``X_j = 1/2 tr[dG_j (Sigma - sigma)] - x_j^T G (R - mu)``:

    xi~_jk  = 1/2 tr{ J[dG_k] (sigma - Om/2) F[dG_j] (sigma + Om/2) } + x_j^T G Y x_k
    Lam~_jk = Re tr{ dG_k (sigma - Om/2) F[dG_j] (sigma + Om/2) } + 2 x_j^T G Y sigma G x_k

with ``J`` the imaginary-time Gram map over ``[0, beta]``, ``F`` the dissipative
Gram map (a Lyapunov solve) and ``Y = -A^-1``. Both tensors are symmetrised.

All ``*_values`` functions are vectorised over a batch of control points.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrix, ThermoLengthError
from .gaussian import _sym, symplectic_form, thermal_covariance
from .matfun import _eig, lyapunov_solve, occupation_divided_difference

KINDS = ("xi", "lambda", "classical_xi", "classical_lambda", "siegel")
IMAG_REL_TOL = 1e-9


@dataclass(frozen=True)
class MetricTensor:
    g: np.ndarray
    kind: str
    lam: np.ndarray
    beta: float


def _batch(lam, d):
    lam = np.asarray(lam, dtype=float)
    single = lam.ndim == 1
    lam = np.atleast_2d(lam)
    if lam.shape[-1] != d:
        raise ValueError(f"control points must have {d} components, got {lam.shape[-1]}")
    return lam, single


def _blocks(model, lam):
    G = np.asarray(model.hamiltonian(lam), float)
    X = model.generator_derivatives(lam)
    x = model.displacement_derivatives(lam)
    n = G.shape[-1]
    if model.relaxation_time is not None:
        tau = model.relaxation_time
        Y = np.broadcast_to(tau * np.eye(n), G.shape)
        FX = tau * X
    else:
        A = model.drift(lam)
        Y = -np.linalg.inv(A)
        FX = lyapunov_solve(A[:, None], X)
    return G, X, x, Y, FX


def _quadratic_xi(G, X, FX, beta):
    """Imaginary-time trace term, evaluated without forming ``exp(beta Omega G)``.

    Writing ``sigma -+ Om/2`` as functions of ``W = Omega G`` times ``Omega``,
    the ``s``-integral collapses onto the eigenbasis of ``W`` with weights
    ``(n(t_q) - n(t_p)) / (t_p - t_q)``, which stay bounded at low temperature.
    """
    Om = symplectic_form(G.shape[-1] // 2)
    W = Om @ G
    theta, V = _eig(W)
    Vinv = np.linalg.inv(V)
    K = occupation_divided_difference(theta, beta)
    P = Vinv[:, None] @ Om @ FX @ V[:, None]
    Q = Vinv[:, None] @ Om @ X @ V[:, None]
    return 0.5 * np.einsum("bkqp,bpq,bjpq->bjk", Q, K, P)


def _check_real(T, what):
    scale = np.max(np.abs(T), axis=(-1, -2), keepdims=True)
    bad = np.abs(T.imag) > IMAG_REL_TOL * np.maximum(np.abs(T), scale) + 1e-300
    if np.any(bad):
        raise ThermoLengthError(f"{what} has a non-negligible imaginary part ({np.max(np.abs(T.imag)):.3g})")
    return T.real


def xi_values(model, lam):
    lam, single = _batch(lam, model.n_params)
    G, X, x, Y, FX = _blocks(model, lam)
    quad = _quadratic_xi(G, X, FX, model.beta)
    lin = np.einsum("zja,zab,zkb->zjk", x, G @ Y, x)
    g = _sym(_check_real(quad, "xi") + lin)
    return g[0] if single else g


def lambda_values(model, lam):
    lam, single = _batch(lam, model.n_params)
    G, X, x, Y, FX = _blocks(model, lam)
    Om = symplectic_form(model.n_modes)
    sigma = thermal_covariance(G, model.beta)[:, None]
    quad = np.einsum("zkab,zjba->zjk", X, (sigma - 0.5 * Om) @ FX @ (sigma + 0.5 * Om)).real
    lin = 2.0 * np.einsum("zja,zab,zkb->zjk", x, G @ Y @ sigma[:, 0] @ G, x)
    g = _sym(quad + lin)
    return g[0] if single else g


def _classical_parts(model, lam):
    G, X, x, Y, FX = _blocks(model, lam)
    if np.any(np.linalg.cond(G) > 1e12):
        raise SingularMatrix("generator G(lambda) is singular")
    Ginv = np.linalg.inv(G)[:, None]
    tr = np.einsum("zkab,zjba->zjk", X @ Ginv, FX @ Ginv)
    lin = np.einsum("zja,zab,zkb->zjk", x, G @ Y, x)
    return tr, lin


def classical_xi_values(model, lam):
    lam, single = _batch(lam, model.n_params)
    tr, lin = _classical_parts(model, lam)
    g = _sym(0.5 / model.beta * tr + lin)
    return g[0] if single else g


def classical_lambda_values(model, lam):
    lam, single = _batch(lam, model.n_params)
    tr, lin = _classical_parts(model, lam)
    T = 1.0 / model.beta
    g = _sym(T * T * tr + 2.0 * T * lin)
    return g[0] if single else g


def siegel_values(model, lam):
    """``1/2 tr{dG_j G^-1 dG_k G^-1}``: the Siegel line element in the control coordinates."""
    lam, single = _batch(lam, model.n_params)
    G = np.asarray(model.hamiltonian(lam), float)
    X = model.generator_derivatives(lam)
    Ginv = np.linalg.inv(G)[:, None]
    g = _sym(0.5 * np.einsum("zkab,zjba->zjk", X @ Ginv, X @ Ginv))
    return g[0] if single else g


_VALUES = {
    "xi": xi_values,
    "lambda": lambda_values,
    "classical_xi": classical_xi_values,
    "classical_lambda": classical_lambda_values,
    "siegel": siegel_values,
}


def metric_values(model, lam, kind):
    try:
        fn = _VALUES[kind]
    except KeyError:
        raise ValueError(f"unknown metric kind {kind!r}; expected one of {KINDS}") from None
    return fn(model, lam)


def _tensor(model, lam, kind):
    lam = np.asarray(lam, float)
    return MetricTensor(metric_values(model, lam, kind), kind, lam, model.beta)


def xi_tensor(model, lam):
    """Excess-work (friction) tensor at a single control point."""
    return _tensor(model, lam, "xi")


def lambda_tensor(model, lam):
    """Work-fluctuation tensor at a single control point."""
    return _tensor(model, lam, "lambda")


def classical_xi(model, lam):
    return _tensor(model, lam, "classical_xi")


def classical_lambda(model, lam):
    return _tensor(model, lam, "classical_lambda")


def fdr_gap(model, lam):
    """Smallest eigenvalue of ``Lambda - (2/beta) xi``; non-negative under detailed balance."""
    diff = lambda_values(model, lam) - 2.0 / model.beta * xi_values(model, lam)
    return np.linalg.eigvalsh(_sym(diff))[..., 0]


def metric_field(model, kind):
    """Wrap a model metric as a :class:`~thermolength.geometry.MetricField`."""
    from .geometry import MetricField

    return MetricField(
        evaluate=lambda lam: metric_values(model, lam, kind),
        lower=model.lower,
        upper=model.upper,
        name=f"{model.name}:{kind}",
    )


def metric_csv_header(d):
    cols = [f"lambda_{j + 1}" for j in range(d)]
    cols += [f"g_{j + 1}{k + 1}" for j in range(d) for k in range(d)]
    return cols + ["kind", "beta"]


def write_metric_csv(fh, lams, tensors, kind, beta):
    """Write one row per control point with the full (row-major) tensor."""
    lams = np.atleast_2d(np.asarray(lams, float))
    d = lams.shape[1]
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(metric_csv_header(d))
    for lam, g in zip(lams, np.reshape(tensors, (-1, d, d))):
        w.writerow([f"{v:.17g}" for v in lam] + [f"{v:.17g}" for v in g.ravel()] + [kind, f"{beta:.17g}"])
