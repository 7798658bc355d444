"""Tabulate T(alpha) and R(alpha) past the bump support and report where R is monotone.

Usage: python3 scripts/rotation_profile.py [--out results/rotation_profile.csv]
"""
import argparse
import math
from pathlib import Path

import numpy as np

from revflow.experiments import packaged_surface_path
from revflow.period import period_T, rotation_R
from revflow.surface import load_surface


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--surface", default=packaged_surface_path("bump"))
    ap.add_argument("--lo", type=float, default=0.5)
    ap.add_argument("--hi", type=float, default=1.5)
    ap.add_argument("--n", type=int, default=401)
    ap.add_argument("--out", default="results/rotation_profile.csv")
    args = ap.parse_args()

    surface = load_surface(args.surface)
    alphas = np.linspace(args.lo, args.hi, args.n + 1)[1:]
    T = np.array([period_T(surface, a) for a in alphas])
    R = np.array([rotation_R(surface, a) for a in alphas])

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        fh.write("alpha,T_star,R\n")
        for row in zip(alphas, T, R):
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")

    dR = np.diff(R)
    k = int(np.argmax(R))
    print(f"R peaks at alpha = {alphas[k]:.4f} with R = {R[k]:.6g}")
    print(f"R increasing on [{alphas[0]:.4f}, {alphas[k]:.4f}]: {bool(np.all(dR[:k] > 0))}")
    print(f"R decreasing on [{alphas[k]:.4f}, {alphas[-1]:.4f}]: {bool(np.all(dR[k:] < 0))}")
    print(f"sign changes of dR/dalpha on the grid: {int(np.sum(np.diff(np.sign(dR)) != 0))}")
    print(f"max T - 2 pi = {np.max(T) - 2 * math.pi:.6g}")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
