"""Mass before and after a diffeomorphism zeta = O(r^(1-tau)) for several tau.

For tau < 1 the flux of U(1, L_zeta delta) does not decay sphere by sphere
(sup |U| times area grows), yet the mass is unchanged because that flux
vanishes identically for a static potential.
"""

import argparse

from asympcharge import backgrounds as B
from asympcharge import verify as Vf
from asympcharge.catalog import decaying_zeta, schwarzschild


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--taus", type=float, nargs="+", default=[0.6, 0.8, 1.0, 1.5])
    ap.add_argument("--radii", type=float, nargs="+", default=[50, 100, 200, 400])
    args = ap.parse_args()
    bg = B.flat(3)
    V = B.kernel_basis(bg)[0]
    for tau in args.taus:
        rep = Vf.check_invariance(bg, "scal", schwarzschild(), decaying_zeta(tau), V, args.radii)
        d = rep.details
        growth = " ".join(f"{x:.2e}" for x in d["area_sup_U_lie"])
        r2 = " ".join(f"{x:.2e}" for x in d["area_sup_R2"])
        print(f"tau={tau:g}: m1={d['m1_adm']:.6f} m2={d['m2_adm']:.6f} pass={rep.passed}")
        print(f"  sup|U(1, L_zeta delta)| Area: {growth}")
        print(f"  sup|R2| Area:                 {r2}")


if __name__ == "__main__":
    main()
