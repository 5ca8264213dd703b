"""Error of the resolvent identity on finite sine models as a function of the shift 1/lambda and model size."""
import argparse

from divkernels.division import model_subspace, resolvent_identity_error
from divkernels.kernels import Sine


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--windows", type=float, nargs="+", default=[40.0, 80.0, 150.0])
    ap.add_argument("--shifts", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0, 5.0, 10.0])
    args = ap.parse_args()
    for T in args.windows:
        n = int(max(300, 6.7 * T))
        S = model_subspace(Sine(1), (-T, T), n)
        errs = [resolvent_identity_error(S, 0.0, 1.0 / s) for s in args.shifts]
        print(f"T={T:6.1f} n={n:5d} dim={S.dim:4d} " + " ".join(f"{s:g}:{e:.1e}" for s, e in zip(args.shifts, errs)))


if __name__ == "__main__":
    main()
