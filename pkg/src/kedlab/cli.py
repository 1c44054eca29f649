"""Command-line entry point: ``kedlab {enumerate,check,probe,fit,validate}``.

Exit status: 0 when every theory-agreement check passes, 2 when one fails,
1 on usage or domain errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Sequence

from .densities import CosineProfile, DomainError, profile_from_id, PROFILE_GRAMMAR
from .probe import (
    DEFAULT_SAMPLES,
    DEFAULT_TOL,
    REPORT_COLUMNS,
    ProbeError,
    ProbeWindow,
    default_window,
    probe_periodic,
    probe_term,
    thread_count,
    validate_bound,
)
from .quadrature import DEFAULT_POINTS, default_grid
from .reference import RankDeficientFit, ReferenceError, fit_expansion, reference_ked
from .terms import (
    CSV_COLUMNS,
    Boundary,
    KedTerm,
    TermError,
    classify,
    enumerate_terms,
    parse_exponents,
    parse_token,
    term_csv_row,
    term_token,
)

EXIT_OK, EXIT_USAGE, EXIT_DISAGREE = 0, 1, 2

TERM_GRAMMAR = 'n1,n2,...,nm (non-negative integers, nm >= 1; "" or "tf" for the pure density term)'


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kedlab", description="Admissibility lab for kinetic energy density monomials.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--output", default="-", help="output path ('-' for stdout)")

    p = sub.add_parser("enumerate", help="list admissible terms")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--periodic", action="store_true")
    p.add_argument("--max-order", type=int, default=None)
    common(p)

    p = sub.add_parser("check", help="classify a single term")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--term", required=True, help=TERM_GRAMMAR)
    common(p)

    p = sub.add_parser("probe", help="measure a term's far-field log-slope")
    p.add_argument("--term", required=True, help=TERM_GRAMMAR)
    p.add_argument("--profile", required=True, help=PROFILE_GRAMMAR)
    p.add_argument("--rlo", type=float, default=None)
    p.add_argument("--rhi", type=float, default=None)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--cells", type=int, default=4, help="periods scanned for periodic profiles")
    common(p)

    p = sub.add_parser("fit", help="least-squares fit of a KED expansion")
    p.add_argument("--profile", required=True, help=PROFILE_GRAMMAR)
    p.add_argument("--reference", choices=("tf", "vw", "positive", "laplacian"), default="positive")
    p.add_argument("--basis", nargs="+", default=["auto"],
                   help=f"'auto' (TF, vW, Laplacian shapes) or term tokens: {TERM_GRAMMAR}")
    p.add_argument("--weighting", choices=("measure", "uniform"), default="measure")
    p.add_argument("--prefactors", choices=("conventional", "unit"), default="conventional")
    p.add_argument("--points", type=int, default=DEFAULT_POINTS)
    common(p)

    p = sub.add_parser("validate", help="sweep all terms and recover the derivative bound")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--profiles", nargs="+", default=None, help=PROFILE_GRAMMAR)
    p.add_argument("--max-order", type=int, default=None)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    common(p)
    return parser


def parse_term(text: str, dim: int) -> KedTerm:
    text = text.strip()
    if text.startswith("D="):
        term = parse_token(text)
        if term.dim != dim:
            raise TermError(f"token {text!r} is for D={term.dim}, expected D={dim}")
        return term
    if text.lower() in ("tf", "rho"):
        text = ""
    try:
        return KedTerm(dim, parse_exponents(text))
    except TermError as exc:
        raise TermError(f"{exc}; term grammar: {TERM_GRAMMAR}") from None


def _header(config: dict) -> str:
    return f"# kedlab {config['command']}\n# config: {json.dumps(config, sort_keys=True)}\n"


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _json(config: dict, body: dict) -> str:
    return json.dumps({"config": config, **body}, indent=2, sort_keys=True) + "\n"


def _cmd_enumerate(args, config):
    boundary = Boundary.PERIODIC if args.periodic else Boundary.LOCALIZED
    terms = enumerate_terms(args.dim, boundary, args.max_order)
    rows = []
    for t in terms:
        row = term_csv_row(t)
        row["finite"] = str(classify(t, boundary)[1]).lower()
        rows.append(row)
    if args.format == "json":
        for row, t in zip(rows, terms):
            row["token"] = term_token(t)
        return _json(config, {"terms": rows, "count": len(rows)}), EXIT_OK
    return _header(config) + _csv(rows, CSV_COLUMNS + ("finite",)), EXIT_OK


def _cmd_check(args, config):
    term = parse_term(args.term, args.dim)
    cls, finite_loc = classify(term, Boundary.LOCALIZED)
    _, finite_per = classify(term, Boundary.PERIODIC)
    q = term.decay_index
    row = {
        "token": term_token(term),
        "ell": term.ell,
        "q_decay": f"{q.numerator}/{q.denominator}",
        "total_order": term.total_order,
        "class": cls.value,
        "finite_localized": str(finite_loc).lower(),
        "finite_periodic": str(finite_per).lower(),
    }
    if args.format == "json":
        return _json(config, {"check": row}), EXIT_OK
    return _header(config) + _csv([row], tuple(row)), EXIT_OK


def _cmd_probe(args, config):
    profile = profile_from_id(args.profile)
    term = parse_term(args.term, profile.dim)
    if isinstance(profile, CosineProfile):
        rep = probe_periodic(term, profile, cells=args.cells)
        expected = classify(term, Boundary.PERIODIC)[1]
        row = {"term": rep.term, "profile": rep.profile, "bounded": str(rep.bounded).lower(),
               "max_over_cells": repr(rep.max_over_cells), "expected_bounded": str(expected).lower()}
        code = EXIT_OK if rep.bounded == expected else EXIT_DISAGREE
        if args.format == "json":
            return _json(config, {"periodic": row}), code
        return _header(config) + _csv([row], tuple(row)), code

    window = default_window(profile)
    if args.rlo is not None or args.rhi is not None or args.samples != window.samples:
        window = ProbeWindow(args.rlo if args.rlo is not None else window.r_lo,
                             args.rhi if args.rhi is not None else window.r_hi,
                             args.samples, window.abscissa)
    rep = probe_term(term, profile, window, tol=args.tol)
    code = EXIT_OK if (rep.agrees_with_theory or not rep.asserted) else EXIT_DISAGREE
    if args.format == "json":
        body = rep.row()
        body.update(fit_r2=rep.fit_r2, expected=rep.expected.value)
        return _json(config, {"report": body}), code
    return _header(config) + _csv([rep.row()], REPORT_COLUMNS), code


def _cmd_fit(args, config):
    profile = profile_from_id(args.profile)
    if args.basis == ["auto"]:
        basis = [KedTerm(profile.dim), KedTerm(profile.dim, (2,)), KedTerm(profile.dim, (0, 1))]
    else:
        basis = [parse_term(tok, profile.dim) for tok in args.basis]
    grid = default_grid(profile, args.points)
    ref = reference_ked(args.reference, profile)
    try:
        result = fit_expansion(ref, basis, profile, grid, args.weighting, args.prefactors)
    except RankDeficientFit as exc:
        body = {"basis": [term_token(t) for t in basis], "rank_deficient": True, "null_dim": exc.null_dim}
        if args.format == "json":
            return _json(config, {"fit": body}), EXIT_DISAGREE
        return _header(config) + f"# rank deficient: null-space dimension {exc.null_dim}\n", EXIT_DISAGREE
    if args.format == "json":
        return _json(config, {"fit": result.to_json()}), EXIT_OK
    rows = [{"term": term_token(t), "prefactor": repr(s), "a": repr(a)}
            for t, s, a in zip(result.basis, result.prefactors, result.coefficients)]
    tail = (f"# residual_rms={result.residual_rms!r} T_fit={result.T_fit!r} "
            f"T_ref={result.T_ref!r} cond={result.cond!r}\n")
    return _header(config) + _csv(rows, ("term", "prefactor", "a")) + tail, EXIT_OK


def _cmd_validate(args, config):
    summary = validate_bound(args.dim, args.profiles, args.max_order, args.tol, config["threads"])
    config["profiles"] = summary.profiles
    config["max_order"] = summary.max_total_order
    code = EXIT_OK if summary.passed else EXIT_DISAGREE
    if args.format == "json":
        reports = [rep.row() for rep in summary.reports]
        return _json(config, {"summary": summary.to_json(), "reports": reports}), code
    text = _header(config) + summary.rows_csv()
    text += f"# summary: {json.dumps(summary.to_json(), sort_keys=True)}\n"
    return text, code


COMMANDS = {
    "enumerate": _cmd_enumerate,
    "check": _cmd_check,
    "probe": _cmd_probe,
    "fit": _cmd_fit,
    "validate": _cmd_validate,
}


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        config = {k: v for k, v in vars(args).items()}
        config["threads"] = thread_count()
        text, code = COMMANDS[args.command](args, config)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (UsageError, TermError, DomainError, ProbeError, ReferenceError, ValueError) as exc:
        print(f"kedlab: error: {exc}", file=stderr)
        return EXIT_USAGE
    if args.output == "-":
        stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
