"""Count statistics of the sine process on [-L, L] against trace and Hilbert-Schmidt predictions."""
import argparse
import math
import time

from divkernels.dpp import local_trace_report, sample_replicas
from divkernels.grid import build_grid
from divkernels.kernels import Sine


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--half-widths", type=float, nargs="+", default=[math.pi, 2 * math.pi, 4 * math.pi])
    ap.add_argument("--replicas", type=int, default=2000)
    ap.add_argument("--nodes-per-unit", type=float, default=10.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for L in args.half_widths:
        t0 = time.perf_counter()
        window = (-L, L)
        grid = build_grid(window, int(2 * L * args.nodes_per_unit))
        _, st = sample_replicas(Sine(1), window, grid, args.seed, args.replicas)
        rep = local_trace_report(Sine(1), window, grid)
        var = rep.trace - rep.hs_norm_sq
        print(f"L={L:6.3f} mean={st.mean:.3f}+-{st.mean_se:.3f} (pred {rep.trace:.3f}) "
              f"var={st.variance:.3f}+-{st.variance_se:.3f} (pred {var:.3f}) {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
