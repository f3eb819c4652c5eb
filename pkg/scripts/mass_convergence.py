"""Surface integrals of the mass integrand for isotropic Schwarzschild, with running extrapolation."""

import argparse

from asympcharge import backgrounds as B
from asympcharge.catalog import schwarzschild
from asympcharge.charge import total_charge


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mass", type=float, default=1.0)
    ap.add_argument("--radii", type=float, nargs="+", default=[25, 50, 100, 200, 400, 800])
    args = ap.parse_args()
    bg = B.flat(3)
    rep = total_charge("scal", bg, B.kernel_basis(bg)[0], schwarzschild(args.mass), args.radii, normalization="adm")
    print(f"{'radius':>8} {'integral/c_n':>14} {'exact':>14} {'running limit':>14}")
    for r, val, _, run in rep.rows():
        exact = args.mass * (1 + args.mass / (2 * r)) ** 3
        print(f"{r:8.1f} {val:14.10f} {exact:14.10f} {run:14.10f}")
    print(f"extrapolated mass {rep.value:.8f} (fit exponent {rep.fit_exponent:.3f}, converged={rep.converged})")


if __name__ == "__main__":
    main()
