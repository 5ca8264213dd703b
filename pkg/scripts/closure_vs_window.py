"""Division closure residuals of truncated models as the window [-T, T] grows."""
import argparse

from divkernels.division import model_subspace, strong_division_operator, weak_division_operator
from divkernels.kernels import PerturbedSine, Sine


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--windows", type=float, nargs="+", default=[10.0, 20.0, 40.0, 80.0])
    args = ap.parse_args()
    for name, spec in (("sine", Sine(1)), ("perturbed", PerturbedSine(1, (-1j,)))):
        for T in args.windows:
            n = int(max(200, 10 * T))
            S = model_subspace(spec, (-T, T), n)
            rs = strong_division_operator(S, 0.0, tolerance=float("inf")).residual
            rw = weak_division_operator(S, 0.0, tolerance=float("inf")).residual
            print(f"{name:9s} T={T:5.1f} n={n:4d} dim={S.dim:4d} strong={rs:.1e} weak={rw:.1e}")


if __name__ == "__main__":
    main()
