"""Charges V(0)..V(3) of a Kottler-like perturbation of hyperbolic space, and their change under boosts."""

import argparse
import math

import numpy as np

from asympcharge import backgrounds as B
from asympcharge import verify as Vf
from asympcharge.catalog import kottler_like
from asympcharge.charge import total_charge


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mass", type=float, default=1.0)
    ap.add_argument("--dipole", type=float, nargs=3, default=[0.3, 0.2, 0.1])
    ap.add_argument("--rapidities", type=float, nargs="+", default=[0.1, 0.3, 0.6])
    args = ap.parse_args()
    bg = B.hyperbolic(3)
    e = kottler_like(args.mass, args.dipole)
    radii = [4.0, 5.0, 6.0, 7.0, 8.0]
    vals = np.array([total_charge("scal", bg, V, e, radii).extrapolated for V in B.kernel_basis(bg)])
    oracle = 16 * math.pi * args.mass * np.array([1.0, *(d / 3 for d in args.dipole)])
    print("charges / 16 pi :", np.round(vals / (16 * math.pi), 8).tolist())
    print("closed form     :", np.round(oracle / (16 * math.pi), 8).tolist())
    for rap in args.rapidities:
        rep = Vf.check_equivariance(bg, "scal", e, B.boost(3, rap), radii=radii)
        print(f"boost {rap:g}: residuals {[f'{x:.1e}' for x in rep.residuals]} pass={rep.passed}")
        print("  boosted charges / 16 pi:", np.round(np.array(rep.details["right"]) / (16 * math.pi), 6).tolist())


if __name__ == "__main__":
    main()
