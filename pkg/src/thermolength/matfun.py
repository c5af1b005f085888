"""Dense matrix functions and matrix equations for small (2N x 2N) matrices.

Every routine accepts a single matrix or a stack of matrices with shape
``(..., n, n)``; the leading axes are treated as a batch.
"""

import numpy as np

from .errors import NonDiagonalizable, NotHurwitz, NotPositiveDefinite, SingularEigenvalue

COND_CAP = 1e8
HURWITZ_MARGIN = 1e-12
PHI_SERIES_CUTOFF = 1e-6


def _eig(M, cond_cap=COND_CAP):
    theta, V = np.linalg.eig(M)
    cond = np.linalg.cond(V)
    if not np.all(np.isfinite(cond)) or np.any(cond > cond_cap):
        raise NonDiagonalizable(
            f"eigenvector condition number {np.max(cond):.3g} exceeds cap {cond_cap:.1g}"
        )
    return theta, V


def _diag_sandwich(V, d, Vinv):
    return (V * d[..., None, :]) @ Vinv


def apply_matrix_function(M, f, cond_cap=COND_CAP):
    """Return ``V f(diag(theta)) V^-1`` for ``M = V diag(theta) V^-1``.

    ``f`` is applied elementwise to the (complex) eigenvalues and must be a
    numpy-vectorised scalar function. The result is always complex; callers
    that know it is real take the real part themselves.
    """
    M = np.asarray(M)
    theta, V = _eig(M, cond_cap)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ftheta = np.asarray(f(theta.astype(complex)))
    if not np.all(np.isfinite(ftheta)):
        raise SingularEigenvalue("function is undefined at an eigenvalue of the input")
    return _diag_sandwich(V, ftheta, np.linalg.inv(V))


def spectral_abscissa(A):
    """Largest real part among the eigenvalues of ``A``."""
    return np.max(np.linalg.eigvals(np.asarray(A)).real, axis=-1)


def _check_hurwitz(A):
    alpha = spectral_abscissa(A)
    if np.any(alpha >= -HURWITZ_MARGIN):
        raise NotHurwitz(f"spectral abscissa {np.max(alpha):.3g} is not negative")


def lyapunov_solve(A, X):
    """Solve ``A^T M + M A = -X`` for ``M``.

    For Hurwitz ``A`` this is ``M = int_0^inf exp(A^T v) X exp(A v) dv``.
    Solved as a Kronecker-product linear system, which is cheap for the
    sizes used here (n <= 16).
    """
    A = np.asarray(A)
    X = np.asarray(X)
    _check_hurwitz(A)
    n = A.shape[-1]
    eye = np.eye(n)
    At = np.swapaxes(A, -1, -2)
    # row-major vec: vec(P M Q) = (P kron Q^T) vec(M)
    K = _kron(At, eye) + _kron(eye, At)
    batch = np.broadcast_shapes(K.shape[:-2], X.shape[:-2])
    K = np.broadcast_to(K, batch + K.shape[-2:])
    rhs = -np.broadcast_to(X, batch + X.shape[-2:]).reshape(batch + (n * n, 1))
    M = np.linalg.solve(K, rhs).reshape(batch + (n, n))
    if np.allclose(X, np.swapaxes(X, -1, -2), rtol=0, atol=0):
        M = 0.5 * (M + np.swapaxes(M, -1, -2))
    return M


def _kron(P, Q):
    P = np.asarray(P)
    Q = np.asarray(Q)
    out = P[..., :, None, :, None] * Q[..., None, :, None, :]
    shape = out.shape[:-4] + (P.shape[-2] * Q.shape[-2], P.shape[-1] * Q.shape[-1])
    return out.reshape(shape)


def phi(z, beta):
    """``(exp(beta z) - 1) / z`` with the removable singularity at ``z = 0`` filled."""
    z = np.asarray(z, dtype=complex)
    bz = beta * z
    small = np.abs(bz) < PHI_SERIES_CUTOFF
    safe = np.where(small, 1.0, bz)
    with np.errstate(over="ignore", invalid="ignore"):
        exact = beta * np.expm1(safe) / safe
    series = beta * (1.0 + bz / 2.0 + bz * bz / 6.0)
    return np.where(small, series, exact)


def bounded_exp_gram(W, X, beta, cond_cap=COND_CAP):
    """Return ``int_0^beta (e^{sW})^T X e^{sW} ds``.

    Note the plain transpose: for complex ``W`` this is not a Hermitian
    Gram matrix.
    """
    W = np.asarray(W)
    theta, V = _eig(W, cond_cap)
    Vinv = np.linalg.inv(V)
    Xp = np.swapaxes(V, -1, -2) @ X @ V
    weights = phi(theta[..., :, None] + theta[..., None, :], beta)
    return np.swapaxes(Vinv, -1, -2) @ (Xp * weights) @ Vinv


def _occupation(x):
    """``1/(e^x - 1)`` for complex ``x`` without overflow at large ``Re x``."""
    pos = x.real > 0
    xs = np.where(pos, -x, x)
    em1 = np.expm1(xs)
    # Re x > 0: e^-x / (1 - e^-x) ; otherwise 1 / (e^x - 1)
    return np.where(pos, -(em1 + 1.0) / em1, 1.0 / em1)


def occupation_divided_difference(theta, beta):
    """Pairwise ``(n(t_q) - n(t_p)) / (t_p - t_q)`` with ``n(t) = 1/(e^{beta t} - 1)``.

    On the diagonal (and for nearly equal pairs) the limit
    ``-n'(t) = beta n(t) (n(t) + 1)`` is used. These are the weights of the
    imaginary-time integral once it is combined with the thermal occupation
    factors, and stay finite for large ``beta * t`` where the bare
    exponentials overflow.
    """
    theta = np.asarray(theta, dtype=complex)
    tp = theta[..., :, None]
    tq = theta[..., None, :]
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        n = _occupation(beta * theta)
        npp = n[..., :, None]
        nq = n[..., None, :]
        diff = tp - tq
        close = np.abs(beta * diff) < 1e-5
        safe = np.where(close, 1.0, diff)
        dd = (nq - npp) / safe
        nm = _occupation(0.5 * beta * (tp + tq))
        limit = beta * nm * (nm + 1.0)
    out = np.where(close, limit, dd)
    if not np.all(np.isfinite(out)):
        raise SingularEigenvalue("occupation factor diverges (zero frequency mode)")
    return out


def _check_spd(M):
    M = np.asarray(M, dtype=float)
    if not np.allclose(M, np.swapaxes(M, -1, -2), rtol=1e-10, atol=1e-12 * np.max(np.abs(M))):
        raise NotPositiveDefinite("matrix is not symmetric")
    M = 0.5 * (M + np.swapaxes(M, -1, -2))
    w, U = np.linalg.eigh(M)
    if np.any(w[..., 0] <= 1e-12 * w[..., -1]) or np.any(w[..., -1] <= 0):
        raise NotPositiveDefinite("matrix is not positive definite")
    return w, U


def _spd_apply(M, f):
    w, U = _check_spd(M)
    return (U * f(w)[..., None, :]) @ np.swapaxes(U, -1, -2)


def spd_sqrt(M):
    return _spd_apply(M, np.sqrt)


def spd_inv_sqrt(M):
    return _spd_apply(M, lambda w: 1.0 / np.sqrt(w))


def spd_log(M):
    return _spd_apply(M, np.log)


def sym_exp(S):
    """Matrix exponential of a real symmetric matrix."""
    S = np.asarray(S, dtype=float)
    S = 0.5 * (S + np.swapaxes(S, -1, -2))
    w, U = np.linalg.eigh(S)
    return (U * np.exp(w)[..., None, :]) @ np.swapaxes(U, -1, -2)
