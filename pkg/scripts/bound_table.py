"""Sweep D = 1..3 (or a chosen range) and print measured vs predicted highest derivative order."""
import argparse
import time

from kedlab.probe import validate_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--tol", type=float, default=0.02)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    print("dim,m_measured,m_predicted,n_terms,n_failures,seconds")
    for dim in args.dims:
        start = time.perf_counter()
        s = validate_bound(dim, tol=args.tol, threads=args.threads)
        print(f"{dim},{s.m_measured},{s.m_predicted},{s.n_terms},{s.n_failures},"
              f"{time.perf_counter() - start:.3f}")


if __name__ == "__main__":
    main()
