"""Compare pipeline metrics of the damped oscillator with the closed forms over (w, beta)."""

import argparse
import warnings

import numpy as np

from thermolength.catalog import (
    DampedOscillatorParams,
    WeakCouplingWarning,
    analytic_lambda_damped,
    analytic_xi_damped,
    damped_oscillator_model,
    exact_lambda_damped,
    exact_xi_damped,
)
from thermolength.metrics import lambda_values, xi_values

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--gamma0", type=float, default=0.1)
parser.add_argument("--omegas", type=float, nargs="+", default=[0.5, 0.875, 1.25, 1.625, 2.0])
parser.add_argument("--betas", type=float, nargs="+", default=[1.0, 5.0, 10.0, 15.0, 20.0])
args = parser.parse_args()

warnings.simplefilter("ignore", WeakCouplingWarning)
print(f"{'w':>6} {'beta':>6} {'xi11':>12} {'exact/pipe':>10} {'ref/pipe':>12} "
      f"{'xi22':>10} {'L11':>12} {'ref/pipe':>12} {'L22':>10} {'ref/pipe':>12}")
for beta in args.betas:
    model = damped_oscillator_model(DampedOscillatorParams(gamma0=args.gamma0, beta=beta,
                                                           omega_range=(2 * args.gamma0, 10.0)))
    for w in args.omegas:
        x = xi_values(model, [w, 0.0])
        lam = lambda_values(model, [w, 0.0])
        ex = exact_xi_damped(w, args.gamma0, beta)
        el = exact_lambda_damped(w, args.gamma0, beta)
        px = analytic_xi_damped(w, args.gamma0, beta)
        pl = analytic_lambda_damped(w, args.gamma0, beta)
        assert np.isclose(ex[0], x[0, 0], rtol=1e-6) and np.isclose(el[1], lam[1, 1], rtol=1e-6)
        print(f"{w:6.3f} {beta:6.1f} {x[0, 0]:12.6g} {ex[0] / x[0, 0]:10.6f} {px[0] / x[0, 0]:12.6f} "
              f"{x[1, 1]:10.4g} {lam[0, 0]:12.6g} {pl[0] / lam[0, 0]:12.6f} {lam[1, 1]:10.4g} {pl[1] / lam[1, 1]:12.6f}")
