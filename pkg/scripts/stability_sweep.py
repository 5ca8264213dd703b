"""Cauchy differences and distance to the limit for the bandwidth sequence Sine(1 + 1/n)."""
import argparse
import math

import numpy as np

from divkernels.grid import build_grid
from divkernels.integrable import stable_extract_sequence, x_norm
from divkernels.kernels import Sine


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--terms", type=int, nargs="+", default=[10, 100, 1000])
    args = ap.parse_args()
    grid = build_grid((-20, 20), 200)
    limit = np.sin(grid.nodes) / math.pi
    for m in args.terms:
        out, rep = stable_extract_sequence([Sine(1 + 1 / n) for n in range(1, m + 1)], grid, 0.0)
        A = out[-1][0].values
        dec = all(b < a for a, b in zip(rep.x_cauchy, rep.x_cauchy[1:]))
        print(f"n<={m:5d} y*={rep.y_star:.3f} strictly_decreasing={dec} "
              f"sup_gap={np.max(np.abs(A - limit)):.2e} X_gap={x_norm(grid, A - limit):.2e}")


if __name__ == "__main__":
    main()
