"""Measured vs predicted log-slope for every term up to a total order, on one profile.

Optionally slides the window outward to show how prefactor corrections die off,
e.g. ``python scripts/slope_survey.py --profile "polyexp:beta=1,b=1" --windows 10 20 40``.
"""
import argparse

from kedlab.densities import profile_from_id
from kedlab.probe import ProbeError, ProbeWindow, probe_term
from kedlab.terms import enumerate_terms, term_token


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--profile", default="hydrogenic")
    ap.add_argument("--max-order", type=int, default=None, help="default D+3")
    ap.add_argument("--windows", type=float, nargs="*", default=[],
                    help="window starts in units of 1/b; each window spans [R/b, 3R/b]")
    args = ap.parse_args()

    profile = profile_from_id(args.profile)
    b = getattr(profile.decay, "b", None)
    terms = enumerate_terms(profile.dim, max_total_order=args.max_order or profile.dim + 3)
    starts = args.windows or [None]
    if b is None and args.windows:
        ap.error("--windows only applies to exponential-family profiles")

    print("term,total_order,window,measured,predicted,rel_err,verdict")
    for term in terms:
        for R in starts:
            window = None if R is None else ProbeWindow(R / b, 3 * R / b)
            try:
                rep = probe_term(term, profile, window)
            except ProbeError as exc:
                print(f'"{term_token(term)}",{term.total_order},,,,,error: {exc}')
                continue
            pred = rep.predicted_slope
            rel = abs(rep.measured_slope - pred) / abs(pred) if pred else abs(rep.measured_slope)
            print(f'"{rep.term}",{term.total_order},{rep.r_lo:.4g}:{rep.r_hi:.4g},'
                  f"{rep.measured_slope:.8g},{pred:.8g},{rel:.3e},{rep.verdict.value}")


if __name__ == "__main__":
    main()
