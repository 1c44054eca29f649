"""Fit the {TF, vW, Laplacian} basis to each reference KED on each single-orbital profile."""
import argparse

from kedlab.densities import profile_from_id
from kedlab.quadrature import default_grid
from kedlab.reference import ReferenceError, fit_expansion, reference_ked
from kedlab.terms import make_term

PROFILES = ["hydrogenic", "ho1d", "exp:b=1.5,D=2", "gauss:a=0.7,D=3"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--profiles", nargs="+", default=PROFILES)
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--weighting", choices=["measure", "uniform"], default="measure")
    args = ap.parse_args()

    print("profile,reference,a_tf,a_vw,a_lap,residual_rms,T_fit,T_ref")
    for pid in args.profiles:
        profile = profile_from_id(pid)
        d = profile.dim
        basis = [make_term(d), make_term(d, (2,)), make_term(d, (0, 1))]
        grid = default_grid(profile, args.points)
        for kind in ("positive", "laplacian", "vw", "tf"):
            try:
                res = fit_expansion(reference_ked(kind, profile), basis, profile, grid, args.weighting)
            except ReferenceError as exc:
                print(f'"{pid}",{kind},,,,,,error: {exc}')
                continue
            a = ",".join(f"{x:.10g}" for x in res.coefficients)
            print(f'"{pid}",{kind},{a},{res.residual_rms:.3e},{res.T_fit:.12g},{res.T_ref:.12g}')


if __name__ == "__main__":
    main()
