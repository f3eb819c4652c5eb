"""Measured constants of the pullback remainder bounds over repeated random batches."""

import argparse

import numpy as np

from asympcharge import backgrounds as B
from asympcharge.diffeo import measure_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--draws", type=int, default=100)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    for bg in (B.flat(3), B.hyperbolic(3)):
        for ell in (0, 1):
            cs = [measure_bound(bg, ell, np.random.default_rng(seed), args.draws).constant for seed in range(args.repeats)]
            print(f"{bg.kind:10s} ell={ell}: C in [{min(cs):.3f}, {max(cs):.3f}], spread {max(cs) / min(cs):.2f}")


if __name__ == "__main__":
    main()
