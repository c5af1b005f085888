"""Slow-driving work statistics along protocols.

Excess work and work variance are the actions of the ``xi`` and ``Lambda``
fields along the path, using the same segment rule as the geometry module
so that ``action == length^2 / tau`` is exact on a constant-speed path.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainExceeded
from .geometry import linear_path
from .metrics import metric_values


@dataclass(frozen=True)
class Protocol:
    model: object
    path: object
    kinds: tuple = ("xi", "lambda")  # metric kinds used for (excess work, variance)

    @property
    def beta(self):
        return self.model.beta


@dataclass
class WorkReport:
    excess_work: float
    variance: float
    fano: float
    quantum_correction: float
    xi_length: float
    lambda_length: float
    excess_work_bound: float
    variance_bound: float
    free_energy_change: float = 0.0
    total_work: float = 0.0


def linear_protocol(lam_a, lam_b, tau, M=201):
    """Straight-line protocol at constant rate."""
    return linear_path(lam_a, lam_b, tau, M)


def _segments(model, path, kind):
    P = path.points
    if not (np.all(P >= model.lower) and np.all(P <= model.upper)):
        raise DomainExceeded("protocol leaves the model's control box")
    g = metric_values(model, P, kind)
    seg = 0.5 * (g[:-1] + g[1:])
    delta = np.diff(P, axis=0)
    return np.einsum("sij,si,sj->s", seg, delta, delta)


def _protocol(protocol_or_model, path=None):
    if isinstance(protocol_or_model, Protocol):
        return protocol_or_model
    return Protocol(protocol_or_model, path)


def excess_work(protocol, path=None):
    """``int xi(lam)[lam', lam'] dt`` along the protocol."""
    p = _protocol(protocol, path)
    return float(np.sum(_segments(p.model, p.path, p.kinds[0])) / p.path.dt)


def work_variance(protocol, path=None):
    """``int Lambda(lam)[lam', lam'] dt`` along the protocol."""
    p = _protocol(protocol, path)
    return float(np.sum(_segments(p.model, p.path, p.kinds[1])) / p.path.dt)


def quantum_correction(beta, excess, variance):
    """Non-classical part ``beta/2 <dW^2> - <W_ex>``."""
    return 0.5 * beta * variance - excess


def fano(report_or_beta, excess=None, variance=None):
    """``beta <dW^2> / <W_ex>``; takes a :class:`WorkReport` or ``(beta, excess, variance)``."""
    if isinstance(report_or_beta, WorkReport):
        return report_or_beta.fano
    if excess == 0:
        raise ZeroDivisionError("Fano factor undefined for zero excess work")
    return report_or_beta * variance / excess


def evaluate_protocol(protocol, path=None):
    """Full :class:`WorkReport` for a protocol.

    Lengths are those of the given curve, so the two bounds are the smallest
    work and variance reachable by re-timing that curve over the same
    duration; they are the global optima when the curve is the respective
    geodesic.
    """
    p = _protocol(protocol, path)
    tau, dt = p.path.tau, p.path.dt
    qx = _segments(p.model, p.path, p.kinds[0])
    ql = _segments(p.model, p.path, p.kinds[1])
    W = float(np.sum(qx) / dt)
    V = float(np.sum(ql) / dt)
    Lx = float(np.sum(np.sqrt(np.clip(qx, 0, None))))
    Ll = float(np.sum(np.sqrt(np.clip(ql, 0, None))))
    beta = p.model.beta
    S = beta * V / W if W > 0 else float("nan")
    P = p.path.points
    dF = float(p.model.free_energy(P[-1]) - p.model.free_energy(P[0]))
    return WorkReport(
        excess_work=W,
        variance=V,
        fano=S,
        quantum_correction=quantum_correction(beta, W, V),
        xi_length=Lx,
        lambda_length=Ll,
        excess_work_bound=Lx**2 / tau,
        variance_bound=Ll**2 / tau,
        free_energy_change=dF,
        total_work=W + dF,
    )


def savings(optimal, naive):
    """``(A_save, V_save)``: bound of the optimal protocol over the naive protocol's value.

    ``optimal`` is either one report (used for both ratios) or a pair
    ``(xi_geodesic_report, lambda_geodesic_report)``.
    """
    if isinstance(optimal, WorkReport):
        opt_x = opt_l = optimal
    else:
        opt_x, opt_l = optimal
    if naive.excess_work == 0 or naive.variance == 0:
        raise ZeroDivisionError("naive protocol has zero excess work or variance")
    return opt_x.excess_work_bound / naive.excess_work, opt_l.variance_bound / naive.variance


def report_to_json(report, **metadata):
    """Flat key-value JSON document: report fields followed by protocol metadata."""
    doc = asdict(report)
    for k, v in metadata.items():
        doc[k] = v.tolist() if isinstance(v, np.ndarray) else v
    return json.dumps(doc, indent=2, allow_nan=True)
