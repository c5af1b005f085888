"""Geodesic paths of the damped oscillator at beta = 10 and 20, plus the straight line."""

import argparse

from thermolength.reproduce import fig1

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--out", default="out/fig1")
parser.add_argument("--betas", type=float, nargs="+", default=[10.0, 20.0])
args = parser.parse_args()

for path in fig1(args.out, betas=tuple(args.betas)):
    print(path)
