"""Run every bundled configuration through the command line driver into one directory."""

import argparse
from pathlib import Path

from asympcharge import cli

COMMANDS = {
    "schwarzschild": "compute",
    "center_of_mass": "compute",
    "kottler": "compute",
    "kid": "kid",
    "kid_fail": "kid",
    "kid_constraints": "kid",
    "cancel": "cancel",
    "invariance": "invariance",
    "invariance_com": "invariance",
    "equivariance": "equivariance",
    "bounds": "bounds",
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, command in COMMANDS.items():
        print(f"== {command} {name}")
        code, _ = cli.run(command, name, out=out)
        print(f"   exit {code}")


if __name__ == "__main__":
    main()
