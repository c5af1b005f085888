"""Temperature sweep of savings and Fano factors for the damped oscillator."""

import argparse

from thermolength.reproduce import FigureSetup, SweepSpec, fig2a, fig2b, sweep

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--out", default="out/fig2")
parser.add_argument("--start", type=float, default=0.5)
parser.add_argument("--stop", type=float, default=25.0)
parser.add_argument("--num", type=int, default=40)
parser.add_argument("--grid", type=int, default=201, help="time points per protocol")
parser.add_argument("--workers", type=int, default=1)
args = parser.parse_args()

spec = SweepSpec(args.start, args.stop, args.num)
setup = FigureSetup(M=args.grid)
rows = sweep(spec, setup, args.workers)
fig2a(args.out, rows=rows)
fig2b(args.out, rows=rows)

print(f"{'beta':>8} {'A_save':>8} {'V_save':>8} {'S_W xi':>8} {'S_W lam':>8} {'S_W lin':>8}")
for r in rows:
    print(f"{r['beta']:8.3f} {r['A_save']:8.4f} {r['V_save']:8.4f} {r['fano_xi_geodesic']:8.3f} "
          f"{r['fano_lambda_geodesic']:8.3f} {r['fano_linear']:8.3f}")
