"""Riemannian tools on the control manifold.

Paths are sampled on a uniform time grid. The action and length use a
segment rule: on each segment ``[t_i, t_{i+1}]`` the velocity is the
difference quotient and the metric is the average of its end values,

    S = sum_i d_i^T (g_i + g_{i+1})/2 d_i / dt,     L = sum_i sqrt(d_i^T (g_i + g_{i+1})/2 d_i)

so that ``L^2 / tau <= S`` holds exactly (Cauchy-Schwarz over segments) and
both converge at second order in ``dt``. Geodesics minimise ``S`` over the
interior nodes with a damped Newton method.
"""

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import LinAlgError, solveh_banded

from .errors import (
    DomainExceeded,
    NonPositiveMetric,
    NotConverged,
    SingularMetric,
    ThermoLengthError,
)
from .matfun import spd_inv_sqrt, spd_log, spd_sqrt, sym_exp, _check_spd

CHRISTOFFEL_STEP = 1e-5
HESSIAN_STEP = 1e-4
COND_LIMIT = 1e10
MAX_ITER = 10000
MIN_POINTS = 8
POLISH_STEPS = 4


@dataclass
class MetricField:
    """A metric tensor field ``lam -> g(lam)`` on a box.

    ``evaluate`` takes an array ``(B, d)`` of points and returns ``(B, d, d)``.
    ``derivative`` optionally returns ``dg`` with ``dg[b, k, i, j] = d_k g_ij``.
    """

    evaluate: Callable
    lower: np.ndarray
    upper: np.ndarray
    step: float = CHRISTOFFEL_STEP
    derivative: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        self.lower = np.atleast_1d(np.asarray(self.lower, float))
        self.upper = np.atleast_1d(np.asarray(self.upper, float))

    @property
    def dim(self):
        return len(self.lower)

    def inside(self, pts):
        pts = np.atleast_2d(pts)
        return bool(np.all(pts >= self.lower) and np.all(pts <= self.upper))

    def check_domain(self, pts):
        pts = np.atleast_2d(pts)
        if not self.inside(pts):
            bad = np.argmax(np.any((pts < self.lower) | (pts > self.upper), axis=1))
            raise DomainExceeded(f"point {pts[bad]} lies outside the box [{self.lower}, {self.upper}]")

    def __call__(self, lam):
        lam = np.asarray(lam, float)
        if lam.ndim == 1:
            return np.asarray(self.evaluate(lam[None]))[0]
        return np.asarray(self.evaluate(lam))

    def gradient(self, pts, h=None):
        """``dg[b, k, i, j] = d g_ij / d lam_k`` at each point (central differences by default)."""
        pts = np.atleast_2d(np.asarray(pts, float))
        if self.derivative is not None:
            return np.asarray(self.derivative(pts))
        B, d = pts.shape
        hk = (h or self.step) * np.maximum(np.abs(pts), 1.0)
        E = np.eye(d)
        stencil = np.concatenate([pts[:, None, :] + hk[:, :, None] * E, pts[:, None, :] - hk[:, :, None] * E], axis=1)
        g = self.evaluate(stencil.reshape(-1, d)).reshape(B, 2 * d, d, d)
        return (g[:, :d] - g[:, d:]) / (2.0 * hk[:, :, None, None])


def constant_field(g, lower=None, upper=None):
    g = np.asarray(g, float)
    d = g.shape[0]
    lo = np.full(d, -np.inf) if lower is None else lower
    hi = np.full(d, np.inf) if upper is None else upper
    return MetricField(
        evaluate=lambda pts: np.broadcast_to(g, (len(pts), d, d)),
        lower=lo,
        upper=hi,
        derivative=lambda pts: np.zeros((len(pts), d, d, d)),
        name="constant",
    )


@dataclass
class PathGrid:
    t: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, float)
        self.points = np.asarray(self.points, float)
        if self.points.ndim == 1:
            self.points = self.points[:, None]
        if len(self.t) != len(self.points):
            raise ValueError("time grid and points differ in length")
        if len(self.t) < MIN_POINTS:
            raise ValueError(f"a path needs at least {MIN_POINTS} points")

    @property
    def tau(self):
        return float(self.t[-1] - self.t[0])

    @property
    def dt(self):
        return self.tau / (len(self.t) - 1)

    @property
    def dim(self):
        return self.points.shape[1]


@dataclass
class GeodesicSolution:
    path: PathGrid
    action: float
    length: float
    ode_residual: float
    iterations: int
    converged: bool
    info: dict = field(default_factory=dict)


def _inverse(g):
    cond = np.linalg.cond(g)
    if np.any(~np.isfinite(cond)) or np.any(cond > COND_LIMIT):
        raise SingularMetric(f"metric condition number {np.max(cond):.3g} exceeds {COND_LIMIT:.0e}")
    return np.linalg.inv(g)


def _christoffel(g, dg):
    ginv = _inverse(g)
    # dg[b, k, i, j] = d_k g_ij ; first kind Gamma_{l, jk}
    first = 0.5 * (np.einsum("bjkl->bljk", dg) + np.einsum("bkjl->bljk", dg) - dg)
    G = np.einsum("bil,bljk->bijk", ginv, first)
    return 0.5 * (G + np.swapaxes(G, -1, -2))


def christoffel(field, lam):
    """Christoffel symbols ``Gamma[i, j, k]`` (upper index first) at ``lam``."""
    lam = np.asarray(lam, float)
    single = lam.ndim == 1
    pts = np.atleast_2d(lam)
    field.check_domain(pts)
    G = _christoffel(field.evaluate(pts), field.gradient(pts))
    return G[0] if single else G


def _segment_terms(field, path):
    P = path.points
    field.check_domain(P)
    g = field.evaluate(P)
    seg = 0.5 * (g[:-1] + g[1:])
    delta = np.diff(P, axis=0)
    return np.einsum("sij,si,sj->s", seg, delta, delta)


def path_action(field, path):
    """Discrete ``int g(lam)[lam', lam'] dt``."""
    q = _segment_terms(field, path)
    return float(np.sum(q) / path.dt)


def path_length(field, path):
    """Discrete ``int sqrt(g(lam)[lam', lam']) dt``."""
    q = _segment_terms(field, path)
    if np.any(q < -1e-12 * max(np.max(np.abs(q)), 1e-300)):
        raise NonPositiveMetric("metric is not positive semi-definite along the path")
    return float(np.sum(np.sqrt(np.clip(q, 0.0, None))))


def speed_profile(field, path):
    """``g(lam)[lam', lam']`` on each segment."""
    return _segment_terms(field, path) / path.dt**2


def linear_path(lam_a, lam_b, tau, M=201):
    lam_a = np.atleast_1d(np.asarray(lam_a, float))
    lam_b = np.atleast_1d(np.asarray(lam_b, float))
    t = np.linspace(0.0, tau, M)
    s = t / tau
    pts = lam_a + s[:, None] * (lam_b - lam_a)
    pts[0], pts[-1] = lam_a, lam_b
    return PathGrid(t, pts)


# ---------------------------------------------------------------- geodesic solver


def _second_derivatives(field, pts, h):
    """``d2g[b, k, l, i, j] = d_k d_l g_ij`` by central-difference stencils."""
    B, d = pts.shape
    hk = h * np.maximum(np.abs(pts), 1.0)
    E = np.eye(d)
    shifts = []
    for k in range(d):
        for l in range(k, d):
            for sk, sl in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                shifts.append((k, l, sk, sl))
    offs = np.zeros((B, len(shifts), d))
    for n, (k, l, sk, sl) in enumerate(shifts):
        offs[:, n] += sk * hk[:, k, None] * E[k] + sl * hk[:, l, None] * E[l]
    g = field.evaluate((pts[:, None, :] + offs).reshape(-1, d)).reshape(B, len(shifts), d, d)
    out = np.zeros((B, d, d, d, d))
    n = 0
    for k in range(d):
        for l in range(k, d):
            pp, pm, mp, mm = g[:, n], g[:, n + 1], g[:, n + 2], g[:, n + 3]
            val = (pp - pm - mp + mm) / (4.0 * hk[:, k, None, None] * hk[:, l, None, None])
            out[:, k, l] = val
            out[:, l, k] = val
            n += 4
    return out


class _ActionProblem:
    """Discrete action on the interior nodes with cached metric data."""

    def __init__(self, field, lam_a, lam_b, M, dt, hess_step):
        self.field = field
        self.a = lam_a
        self.b = lam_b
        self.M = M
        self.d = len(lam_a)
        self.dt = dt
        self.hess_step = hess_step

    def full(self, x):
        return np.vstack([self.a, x.reshape(-1, self.d), self.b])

    def value(self, x):
        P = self.full(x)
        if not self.field.inside(P):
            raise DomainExceeded("trial point left the domain")
        g = self.field.evaluate(P)
        return self._value(P, g), g

    def _value(self, P, g):
        delta = np.diff(P, axis=0)
        seg = 0.5 * (g[:-1] + g[1:])
        return float(np.einsum("sij,si,sj->", seg, delta, delta) / self.dt)

    def grad_hess(self, x, g):
        P = self.full(x)
        d, dt = self.d, self.dt
        inner = P[1:-1]
        D = self.field.gradient(inner)  # (n, k, i, j)
        H2 = _second_derivatives(self.field, inner, self.hess_step)
        delta = np.diff(P, axis=0)  # segments 0..M-2
        seg = 0.5 * (g[:-1] + g[1:])
        sd = np.einsum("sij,sj->si", seg, delta)
        dl, dr = delta[:-1], delta[1:]  # segment left/right of each interior node
        sl, sr = seg[:-1], seg[1:]
        quad_l = np.einsum("nkij,ni,nj->nk", D, dl, dl)
        quad_r = np.einsum("nkij,ni,nj->nk", D, dr, dr)
        grad = (2.0 * sd[:-1] - 2.0 * sd[1:] + 0.5 * quad_l + 0.5 * quad_r) / dt

        El = np.einsum("nlkm,nm->nlk", D, dl)  # El[n, l, k] = (D_n[l] dl)_k
        Er = np.einsum("nlkm,nm->nlk", D, dr)
        Hl = np.einsum("nklij,ni,nj->nkl", H2, dl, dl)
        Hr = np.einsum("nklij,ni,nj->nkl", H2, dr, dr)
        diag = (2.0 * sl + np.swapaxes(El, 1, 2) + El + 0.5 * Hl
                + 2.0 * sr - np.swapaxes(Er, 1, 2) - Er + 0.5 * Hr) / dt
        # coupling of node n (index k) with node n+1 (index l) through segment n+1
        Dn, Dn1 = D[:-1], D[1:]
        dseg = dr[:-1]
        off = (-2.0 * sr[:-1]
               - np.swapaxes(np.einsum("nlkm,nm->nlk", Dn1, dseg), 1, 2)
               + np.einsum("nkam,nm->nka", Dn, dseg)) / dt
        return grad.ravel(), 0.5 * (diag + np.swapaxes(diag, 1, 2)), off


def _banded(diag, off, shift):
    """Upper banded storage of the block-tridiagonal Hessian plus ``shift * I``."""
    n, d, _ = diag.shape
    N = n * d
    u = 2 * d - 1
    ab = np.zeros((u + 1, N))
    for k in range(d):
        for l in range(k, d):
            i = np.arange(n) * d + k
            j = np.arange(n) * d + l
            ab[u + i - j, j] = diag[:, k, l]
    for k in range(d):
        for l in range(d):
            i = np.arange(n - 1) * d + k
            j = (np.arange(n - 1) + 1) * d + l
            ab[u + i - j, j] = off[:, k, l]
    ab[u] += shift
    return ab


def geodesic_solve(field, lam_a, lam_b, tau, M=201, tol=1e-10, max_iter=MAX_ITER,
                   init=None, hess_step=HESSIAN_STEP):
    """Minimise the discrete action between fixed endpoints.

    Starts from the straight line (or ``init``, an ``(M, d)`` array) and takes
    Newton steps on the interior nodes, with a Levenberg shift whenever the
    Hessian is not positive definite and backtracking when a trial point
    leaves the box or the metric cannot be evaluated. Stops when the
    predicted relative decrease falls below ``tol``.
    """
    lam_a = np.atleast_1d(np.asarray(lam_a, float))
    lam_b = np.atleast_1d(np.asarray(lam_b, float))
    field.check_domain(np.vstack([lam_a, lam_b]))
    if M < MIN_POINTS:
        raise ValueError(f"grid needs at least {MIN_POINTS} points")
    start = linear_path(lam_a, lam_b, tau, M)
    if init is not None:
        init = np.asarray(init, float).reshape(M, -1)
        start = PathGrid(start.t, np.vstack([lam_a, init[1:-1], lam_b]))
    prob = _ActionProblem(field, lam_a, lam_b, M, start.dt, hess_step)
    x = start.points[1:-1].ravel().copy()
    S, g = prob.value(x)
    if np.allclose(lam_a, lam_b) and init is None:
        return _finish(field, prob, x, S, 0, True, tol)

    shift = 0.0
    converged = False
    last = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        grad, diag, off = prob.grad_hess(x, g)
        scale = np.max(np.abs(diag))
        while True:
            try:
                p = solveh_banded(_banded(diag, off, shift), -grad, lower=False)
                break
            except LinAlgError:
                shift = max(4.0 * shift, 1e-10 * scale)
                if shift > 1e12 * scale:
                    raise NotConverged("Hessian could not be regularised", it, float(np.max(np.abs(grad))))
        slope = float(grad @ p)
        if slope >= 0:
            p, slope = -grad / scale, -float(grad @ grad) / scale
        decrement = -0.5 * slope
        if converged:
            # polishing: Newton is quadratic here, stop once it stalls at roundoff
            if decrement >= 0.25 * last or polish >= POLISH_STEPS:
                break
            polish += 1
        elif decrement <= tol * max(S, 1e-300):
            converged, polish = True, 0
        last = decrement
        step = 1.0
        while True:
            try:
                S_new, g_new = prob.value(x + step * p)
                if S_new <= S + 1e-4 * step * slope:
                    break
            except ThermoLengthError:
                pass
            step *= 0.5
            if step < 1e-12:
                if converged:
                    break
                raise NotConverged("line search failed", it, float(np.max(np.abs(grad))))
        if step < 1e-12:
            break
        x = x + step * p
        S, g = S_new, g_new
        shift = 0.0 if step == 1.0 else max(shift, 1e-10 * scale)
    else:
        raise NotConverged(f"no convergence in {max_iter} iterations", it, float(np.max(np.abs(grad))))
    return _finish(field, prob, x, S, it, converged, tol)


def _finish(field, prob, x, S, it, converged, tol):
    P = prob.full(x)
    t = np.linspace(0.0, prob.dt * (prob.M - 1), prob.M)
    path = PathGrid(t, P)
    L = path_length(field, path)
    res = ode_residual(field, path)
    vscale = float(np.max(np.abs(np.diff(P, axis=0)))) / path.dt
    ok = converged and (res <= 1e-4 * vscale**2 if vscale > 0 else True)
    return GeodesicSolution(path, S, L, res, it, bool(ok), {"velocity_scale": vscale, "tol": tol})


def ode_residual(field, path):
    """``max_i |lam'' + Gamma(lam', lam')|_inf`` over interior nodes, by central differences."""
    P, dt = path.points, path.dt
    v = (P[2:] - P[:-2]) / (2.0 * dt)
    a = (P[2:] - 2.0 * P[1:-1] + P[:-2]) / dt**2
    G = christoffel(field, P[1:-1])
    r = a + np.einsum("nijk,nj,nk->ni", G, v, v)
    return float(np.max(np.abs(r))) if len(r) else 0.0


# ---------------------------------------------------------------- closed forms


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _scalar_metric(field):
    def g(w):
        w = np.asarray(w, float)
        vals = field.evaluate(w.reshape(-1, 1)) if isinstance(field, MetricField) else field(w.reshape(-1))
        return np.asarray(vals, float).reshape(w.shape)
    return g


def _gl(f, a, b):
    """Gauss-Legendre integral of ``f`` over each ``[a_i, b_i]``."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b)[..., None] + half[..., None] * _GL_X
    return half * np.sum(_GL_W * f(nodes), axis=-1)


def quadrature_geodesic_diag(field, omega_a, omega_b, tau, M=201, panels=256, tol=1e-13):
    """Constant-speed path of a one-parameter metric ``g(w)``.

    Arc length ``s(w) = int sqrt(g)`` is integrated panel-wise with 16-point
    Gauss-Legendre rules, the panel count doubling until the total settles
    to ``tol``; the uniform arc-length targets are then inverted by Newton's
    method inside each panel.
    """
    g = _scalar_metric(field)
    if isinstance(field, MetricField):
        field.check_domain(np.array([[omega_a], [omega_b]]))

    def speed(w):
        val = g(w)
        if np.any(~np.isfinite(val)) or np.any(val <= 0):
            raise NonPositiveMetric("metric is not positive on the interval")
        return np.sqrt(val)

    total = None
    while True:
        edges = np.linspace(omega_a, omega_b, panels + 1)
        pieces = _gl(speed, edges[:-1], edges[1:])
        new = float(np.sum(pieces))
        if total is not None and abs(new - total) <= tol * abs(new):
            break
        total = new
        panels *= 2
        if panels > 1 << 16:
            raise NotConverged("arc-length quadrature did not settle", panels, abs(new - total))
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    t = np.linspace(0.0, tau, M)
    target = cum[-1] * t / tau
    idx = np.clip(np.searchsorted(cum, target, side="right") - 1, 0, panels - 1)
    lo, hi = edges[idx], edges[idx + 1]
    frac = (target - cum[idx]) / np.where(pieces[idx] > 0, pieces[idx], 1.0)
    w = lo + frac * (hi - lo)
    for _ in range(50):
        resid = cum[idx] + _gl(speed, lo, w) - target
        dw = resid / speed(w)
        w = w - dw
        if np.max(np.abs(dw)) <= 1e-15 * max(1.0, np.max(np.abs(w))):
            break
    w[0], w[-1] = omega_a, omega_b
    return PathGrid(t, w[:, None])


def siegel_geodesic(G_a, G_b, s):
    """Point at fraction ``s`` along the SPD geodesic from ``G_a`` to ``G_b``."""
    R = spd_sqrt(G_a)
    Ri = spd_inv_sqrt(G_a)
    Lg = spd_log(Ri @ G_b @ Ri)
    s = np.asarray(s, float)
    out = R @ sym_exp(s[..., None, None] * Lg) @ R
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def siegel_length(G_a, G_b):
    """``sqrt(1/2 sum log^2 r_i)`` with ``r_i`` the eigenvalues of ``G_a^-1 G_b``."""
    _check_spd(G_a)
    _check_spd(G_b)
    Ri = spd_inv_sqrt(G_a)
    r = np.linalg.eigvalsh(Ri @ G_b @ Ri)
    return float(np.sqrt(0.5 * np.sum(np.log(r) ** 2)))


# ---------------------------------------------------------------- path CSV


def write_path_csv(fh, path):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t"] + [f"lambda_{j + 1}" for j in range(path.dim)])
    for t, p in zip(path.t, path.points):
        w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in p])


def read_path_csv(fh):
    rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t" or not all(c.startswith("lambda_") for c in rows[0][1:]):
        raise ValueError("path CSV must start with header t,lambda_1,...")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], float)
    return PathGrid(data[:, 0], data[:, 1:])
