"""Exact algebra of kinetic-energy-density monomials.

A term is ``rho**(ell/D) * prod_k (grad^k rho)**n_k`` for a D-dimensional
density.  Requiring the term to carry the dimension of a kinetic energy
density (length**(-D-2)) fixes ``ell``; requiring it to vanish far from a
localized density fixes which exponent vectors are allowed.  Everything here
is kept in exact rational arithmetic so that admissibility, a strict
inequality, never depends on rounding.
"""
from __future__ import annotations

import csv
import enum
import io
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

__all__ = [
    "Boundary",
    "AdmissibilityClass",
    "KedTerm",
    "LogSlope",
    "TermError",
    "make_term",
    "canonical_exponents",
    "classify",
    "enumerate_terms",
    "max_derivative_order",
    "predicted_log_slope",
    "parse_exponents",
    "term_token",
    "parse_token",
    "CSV_COLUMNS",
    "term_csv_row",
    "term_from_csv_row",
    "MAX_ENUMERATION_ORDER",
    "terms_to_csv",
    "terms_from_csv",
]

MAX_ENUMERATION_ORDER = 64


class TermError(ValueError):
    """Invalid term construction or token."""


class Boundary(str, enum.Enum):
    LOCALIZED = "localized"
    PERIODIC = "periodic"


class AdmissibilityClass(str, enum.Enum):
    LOCALIZED_ADMISSIBLE = "LocalizedAdmissible"
    PERIODIC_MARGINAL = "PeriodicMarginal"
    INADMISSIBLE = "Inadmissible"


def canonical_exponents(exponents: Iterable[int]) -> tuple[int, ...]:
    """Strip trailing zeros: the one representation of a given monomial."""
    entries = list(exponents)
    while entries and entries[-1] == 0:
        entries.pop()
    return tuple(entries)


def _check_exponents(exponents: Sequence[int]) -> tuple[int, ...]:
    entries = tuple(exponents)
    for n in entries:
        if isinstance(n, bool) or not isinstance(n, int):
            raise TermError(f"exponent {n!r} is not an integer")
        if n < 0:
            raise TermError(f"exponent {n} is negative")
    if entries and entries[-1] == 0:
        hint = ",".join(map(str, canonical_exponents(entries)))
        raise TermError(
            f"exponent vector {entries} has trailing zeros; "
            f"use the canonical form ({hint})"
        )
    return entries


@dataclass(frozen=True)
class KedTerm:
    """One monomial ``rho**(ell/D) * prod_k (grad^k rho)**n_k``.

    ``exponents[k-1]`` is the power ``n_k`` of the k-th iterated derivative.
    ``ell``, ``density_power`` and ``decay_index`` are derived and cannot be
    set.  ``coefficient`` is the expansion weight and stays 1 unless a fit
    populates it.
    """

    dim: int
    exponents: tuple[int, ...] = ()
    coefficient: float = field(default=1.0, compare=False)

    def __post_init__(self):
        if isinstance(self.dim, bool) or not isinstance(self.dim, int) or self.dim < 1:
            raise TermError(f"dimension must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "exponents", _check_exponents(self.exponents))

    @property
    def max_order(self) -> int:
        """Largest k with n_k > 0 (0 for the pure density term)."""
        return len(self.exponents)

    @property
    def total_order(self) -> int:
        return sum(k * n for k, n in enumerate(self.exponents, start=1))

    @property
    def degree(self) -> int:
        """Total number of derivative factors, sum of n_k."""
        return sum(self.exponents)

    @property
    def ell(self) -> int:
        d = self.dim
        return d + 2 - sum((d + k) * n for k, n in enumerate(self.exponents, start=1))

    @property
    def density_power(self) -> Fraction:
        return Fraction(self.ell, self.dim)

    @property
    def decay_index(self) -> Fraction:
        return Fraction(self.dim + 2 - self.total_order, self.dim)

    def with_coefficient(self, value: float) -> "KedTerm":
        return KedTerm(self.dim, self.exponents, float(value))

    def __str__(self):
        return term_token(self)


def make_term(dim: int, exponents: Sequence[int] = ()) -> KedTerm:
    """Build a term; ``ell`` and the decay index follow from ``dim``."""
    return KedTerm(dim, tuple(exponents))


def classify(term: KedTerm, boundary: Boundary | str = Boundary.LOCALIZED
             ) -> tuple[AdmissibilityClass, bool]:
    """Admissibility class and whether the term stays finite for ``boundary``.

    Localized densities need a strictly positive decay index; periodic ones
    only need it non-negative.
    """
    boundary = Boundary(boundary)
    s, limit = term.total_order, term.dim + 2
    if s < limit:
        cls = AdmissibilityClass.LOCALIZED_ADMISSIBLE
    elif s == limit:
        cls = AdmissibilityClass.PERIODIC_MARGINAL
    else:
        cls = AdmissibilityClass.INADMISSIBLE
    if boundary is Boundary.LOCALIZED:
        finite = s < limit
    else:
        finite = s <= limit
    return cls, finite


def max_derivative_order(dim: int, boundary: Boundary | str = Boundary.LOCALIZED) -> int:
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise TermError(f"dimension must be a positive integer, got {dim!r}")
    return dim + 1 if Boundary(boundary) is Boundary.LOCALIZED else dim + 2


def _partitions(total: int, largest: int) -> Iterator[list[int]]:
    """Partitions of ``total`` into parts <= ``largest``, parts descending."""
    if total == 0:
        yield []
        return
    for part in range(min(total, largest), 0, -1):
        for rest in _partitions(total - part, part):
            yield [part] + rest


def _exponents_of_total(total: int) -> Iterator[tuple[int, ...]]:
    for parts in _partitions(total, total):
        vec = [0] * (parts[0] if parts else 0)
        for p in parts:
            vec[p - 1] += 1
        yield tuple(vec)


def enumerate_terms(dim: int, boundary: Boundary | str = Boundary.LOCALIZED,
                    max_total_order: int | None = None) -> list[KedTerm]:
    """Every canonical term whose total order sum(k*n_k) is within bound.

    The bound defaults to the largest finite total order for ``boundary``
    (D+1 localized, D+2 periodic).  Terms are sorted by
    ``(total_order, exponents)``; the pure density term comes first.
    """
    bound = max_derivative_order(dim, boundary)
    if max_total_order is not None:
        if max_total_order > MAX_ENUMERATION_ORDER:
            raise TermError(
                f"max_total_order={max_total_order} exceeds the enumeration "
                f"limit of {MAX_ENUMERATION_ORDER}"
            )
        if max_total_order < 0:
            raise TermError("max_total_order must be non-negative")
        bound = max_total_order
    vectors = [vec for s in range(bound + 1) for vec in _exponents_of_total(s)]
    terms = [KedTerm(dim, vec) for vec in vectors]
    terms.sort(key=lambda t: (t.total_order, t.exponents))
    return terms


@dataclass(frozen=True)
class LogSlope:
    """Asymptotic slope of ``ln t`` against ``r`` (or ``r**2``).

    The slope is ``factor * rate`` with ``factor = -decay_index`` kept exact.
    """

    factor: Fraction
    rate: float
    abscissa: str

    @property
    def value(self) -> float:
        return float(self.factor) * self.rate


def predicted_log_slope(term: KedTerm, decay) -> LogSlope:
    """Large-r slope of ``ln t`` for a density with the given decay metadata.

    ``decay`` needs ``abscissa`` ("r" or "r2") and ``rate``; periodic
    densities do not decay and are rejected.
    """
    abscissa = getattr(decay, "abscissa", None)
    if abscissa not in ("r", "r2"):
        raise TermError(f"no asymptotic log-slope for decay class {decay!r}")
    return LogSlope(-term.decay_index, float(decay.rate), abscissa)


def parse_exponents(text: str) -> tuple[int, ...]:
    """Parse the short token ``n1,n2,...,nm`` (empty string: pure density)."""
    text = text.strip()
    if not text:
        return ()
    try:
        entries = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise TermError(
            f"bad term token {text!r}: expected comma-separated non-negative "
            "integers n1,n2,...,nm with nm >= 1"
        ) from None
    return _check_exponents(entries)


def term_token(term: KedTerm) -> str:
    q = term.decay_index
    n = ",".join(map(str, term.exponents))
    return f"D={term.dim};n={n};l={term.ell};q={q.numerator}/{q.denominator}"


_TOKEN_RE = re.compile(
    r"^D=(?P<dim>\d+);n=(?P<n>[0-9,]*);l=(?P<ell>-?\d+);q=(?P<p>-?\d+)/(?P<q>\d+)$"
)


def parse_token(token: str) -> KedTerm:
    """Inverse of :func:`term_token`; derived fields are cross-checked."""
    match = _TOKEN_RE.match(token.strip())
    if not match:
        raise TermError(f"bad term token {token!r}: expected D=<d>;n=<n1,...>;l=<ell>;q=<p>/<q>")
    term = KedTerm(int(match["dim"]), parse_exponents(match["n"]))
    if term.ell != int(match["ell"]) or term.decay_index != Fraction(int(match["p"]), int(match["q"])):
        raise TermError(f"token {token!r} is inconsistent: expected {term_token(term)}")
    return term


CSV_COLUMNS = ("dim", "exponents", "total_order", "ell", "q_num", "q_den", "class")


def term_csv_row(term: KedTerm) -> dict:
    q = term.decay_index
    cls, _ = classify(term)
    return {
        "dim": term.dim,
        "exponents": ",".join(map(str, term.exponents)),
        "total_order": term.total_order,
        "ell": term.ell,
        "q_num": q.numerator,
        "q_den": q.denominator,
        "class": cls.value,
    }


def term_from_csv_row(row: dict) -> KedTerm:
    term = KedTerm(int(row["dim"]), parse_exponents(str(row["exponents"])))
    expected = {k: str(v) for k, v in term_csv_row(term).items()}
    got = {k: str(row[k]) for k in CSV_COLUMNS}
    if expected != got:
        raise TermError(f"CSV row {got} is inconsistent with {expected}")
    return term


def terms_to_csv(terms: Iterable[KedTerm]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for term in terms:
        writer.writerow(term_csv_row(term))
    return buf.getvalue()


def terms_from_csv(text: str) -> list[KedTerm]:
    rows = csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#"))
    return [term_from_csv_row(row) for row in rows]
