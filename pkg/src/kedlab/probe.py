"""Numerical check of each term's far-field behaviour against its decay index.

A probe fits a straight line to ``ln |t_j|`` against ``r`` (exponential
families) or ``r**2`` (Gaussians) over a window far from the nucleus and
compares the slope with ``-decay_index * rate``.  ``validate_bound`` sweeps
every term up to a chosen total order and reports the largest derivative
order among terms that actually decay.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .densities import (
    DEFAULT_LOG_FLOOR,
    CosineProfile,
    DomainError,
    Exponential,
    Gaussian,
    NodeError,
    PolyExponential,
    RadialProfile,
    UnderflowGuard,
    derivative_nodes,
    log_term_eval,
    profile_from_id,
    term_values,
)
from .terms import KedTerm, enumerate_terms, max_derivative_order, predicted_log_slope, term_token

__all__ = [
    "Verdict",
    "ProbeWindow",
    "ProbeReport",
    "PeriodicReport",
    "BoundSummary",
    "ProbeError",
    "WindowError",
    "DimensionMismatch",
    "DEFAULT_TOL",
    "MIN_SAMPLES",
    "default_window",
    "default_profiles",
    "probe_term",
    "probe_periodic",
    "validate_bound",
    "thread_count",
]

DEFAULT_TOL = 0.02
MIN_SAMPLES = 16
DEFAULT_SAMPLES = 64


class ProbeError(RuntimeError):
    pass


class WindowError(ProbeError):
    pass


class DimensionMismatch(ProbeError, DomainError):
    pass


class Verdict(str, enum.Enum):
    DECAYING = "Decaying"
    NON_DECAYING = "NonDecaying"
    GROWING = "Growing"


@dataclass(frozen=True)
class ProbeWindow:
    r_lo: float
    r_hi: float
    samples: int = DEFAULT_SAMPLES
    abscissa: str = "r"

    def __post_init__(self):
        if not 0 < self.r_lo < self.r_hi:
            raise WindowError(f"window needs 0 < r_lo < r_hi, got [{self.r_lo}, {self.r_hi}]")
        if self.samples < MIN_SAMPLES:
            raise WindowError(f"window needs at least {MIN_SAMPLES} samples, got {self.samples}")
        if self.abscissa not in ("r", "r2"):
            raise WindowError(f"abscissa must be 'r' or 'r2', got {self.abscissa!r}")

    def points(self) -> np.ndarray:
        return np.geomspace(self.r_lo, self.r_hi, self.samples)


def default_window(profile: RadialProfile) -> ProbeWindow:
    """[20/b, 60/b] for exponential decay; alpha r^2 in [300, 900] for Gaussians.

    Both keep the polynomial prefactors of g_k well under the 2% slope band.
    """
    decay = profile.decay
    if isinstance(decay, (Exponential, PolyExponential)):
        return ProbeWindow(20.0 / decay.b, 60.0 / decay.b, DEFAULT_SAMPLES, "r")
    if isinstance(decay, Gaussian):
        return ProbeWindow(math.sqrt(300.0 / decay.alpha), math.sqrt(900.0 / decay.alpha),
                           DEFAULT_SAMPLES, "r2")
    raise ProbeError(f"profile {profile.profile_id} has no asymptotic decay to probe")


@dataclass(frozen=True)
class ProbeReport:
    term: str
    profile: str
    r_lo: float
    r_hi: float
    measured_slope: float
    predicted_slope: float
    fit_r2: float
    verdict: Verdict | None
    expected: Verdict
    agrees_with_theory: bool
    asserted: bool = True
    error: str = ""

    def row(self) -> dict:
        return {
            "term": self.term,
            "profile": self.profile,
            "window": f"{self.r_lo!r}:{self.r_hi!r}",
            "measured_slope": repr(self.measured_slope),
            "predicted_slope": repr(self.predicted_slope),
            "verdict": self.verdict.value if self.verdict else "error",
            "agrees": str(self.agrees_with_theory).lower() if self.asserted else "unasserted",
        }


REPORT_COLUMNS = ("term", "profile", "window", "measured_slope", "predicted_slope", "verdict", "agrees")


def expected_verdict(term: KedTerm) -> Verdict:
    q = term.decay_index
    if q > 0:
        return Verdict.DECAYING
    if q == 0:
        return Verdict.NON_DECAYING
    return Verdict.GROWING


def _shrink_past_nodes(term: KedTerm, profile: RadialProfile, window: ProbeWindow) -> ProbeWindow:
    r_lo = window.r_lo
    for k, n in enumerate(term.exponents, start=1):
        if n:
            brackets = derivative_nodes(profile, k, r_lo, window.r_hi)
            if brackets:
                r_lo = max(r_lo, brackets[-1][1] * 1.01)
    if r_lo == window.r_lo:
        return window
    if r_lo * 1.5 > window.r_hi:
        raise WindowError(f"derivative nodes leave no usable window in [{window.r_lo}, {window.r_hi}]")
    return ProbeWindow(r_lo, window.r_hi, window.samples, window.abscissa)


def probe_term(term: KedTerm, profile: RadialProfile, window: ProbeWindow | None = None,
               tol: float = DEFAULT_TOL, floor: float = DEFAULT_LOG_FLOOR) -> ProbeReport:
    """Fit the far-field log-slope of ``term`` on ``profile`` and judge it."""
    if term.dim != profile.dim:
        raise DimensionMismatch(f"term dimension {term.dim} != profile dimension {profile.dim}")
    decay = profile.decay
    if not isinstance(decay, (Exponential, Gaussian, PolyExponential)):
        raise ProbeError(f"cannot probe decay class {type(decay).__name__}")
    if window is None:
        window = default_window(profile)
    window = _shrink_past_nodes(term, profile, window)

    xs, ys = [], []
    for r in window.points():
        try:
            ys.append(log_term_eval(term, profile, float(r), floor=floor))
        except (NodeError, UnderflowGuard):
            continue
        xs.append(r * r if window.abscissa == "r2" else r)
    if len(xs) < MIN_SAMPLES:
        raise WindowError(f"only {len(xs)} valid samples in [{window.r_lo}, {window.r_hi}]")
    x, y = np.asarray(xs), np.asarray(ys)
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    predicted = predicted_log_slope(term, decay).value
    eps = tol * decay.rate
    if slope < -eps:
        verdict = Verdict.DECAYING
    elif slope > eps:
        verdict = Verdict.GROWING
    else:
        verdict = Verdict.NON_DECAYING
    expected = expected_verdict(term)
    agrees = bool(abs(slope - predicted) <= tol * max(1.0, abs(predicted))) and verdict is expected
    # Marginal terms on faster-than-exponential densities: no theory to assert.
    asserted = not (isinstance(decay, Gaussian) and expected is Verdict.NON_DECAYING)
    return ProbeReport(term_token(term), profile.profile_id, window.r_lo, window.r_hi,
                       float(slope), float(predicted), float(r2), verdict, expected, agrees, asserted)


@dataclass(frozen=True)
class PeriodicReport:
    term: str
    profile: str
    bounded: bool
    max_over_cells: float
    cell_max: tuple[float, ...]


def probe_periodic(term: KedTerm, profile: CosineProfile, cells: int = 4,
                   points_per_cell: int = 512) -> PeriodicReport:
    """Evaluate ``|t_j|`` over ``cells`` periods; bounded if finite and identical per cell."""
    if not isinstance(profile, CosineProfile):
        raise ProbeError(f"{profile.profile_id} is not periodic")
    if term.dim != profile.dim:
        raise DimensionMismatch(f"term dimension {term.dim} != profile dimension {profile.dim}")
    if cells < 1:
        raise ProbeError("need at least one cell")
    offsets = np.arange(points_per_cell) * (profile.L / points_per_cell)
    cell_max = []
    for c in range(cells):
        t = np.abs(np.asarray(term_values(term, profile, c * profile.L + offsets)))
        cell_max.append(float(np.max(t)))
    finite = all(math.isfinite(m) for m in cell_max)
    top = max(cell_max)
    same = finite and all(abs(m - cell_max[0]) <= 1e-10 * max(abs(cell_max[0]), 1e-300) for m in cell_max)
    return PeriodicReport(term_token(term), profile.profile_id, bool(finite and same), top, tuple(cell_max))


def default_profiles(dim: int) -> list[str]:
    ids = [f"exp:b=1,D={dim}", f"gauss:a=1,D={dim}"]
    if dim == 3:
        ids.insert(0, "hydrogenic")
    return ids


def thread_count(default: int = 1) -> int:
    raw = os.environ.get("KEDLAB_THREADS")
    if raw is None or raw == "":
        return default
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ValueError(f"KEDLAB_THREADS must be a positive integer, got {raw!r}")
    return n


@dataclass
class BoundSummary:
    dim: int
    m_measured: int
    m_predicted: int
    n_terms: int
    n_failures: int
    profiles: list[str]
    max_total_order: int
    reports: list[ProbeReport] = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return self.n_failures == 0 and self.m_measured == self.m_predicted

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "m_measured": self.m_measured,
            "m_predicted": self.m_predicted,
            "n_terms": self.n_terms,
            "n_failures": self.n_failures,
        }

    def rows_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for rep in self.reports:
            writer.writerow(rep.row())
        return buf.getvalue()


def _probe_cell(args) -> ProbeReport:
    term, profile, tol = args
    try:
        return probe_term(term, profile, tol=tol)
    except ProbeError as exc:
        return ProbeReport(term_token(term), profile.profile_id, math.nan, math.nan, math.nan,
                           predicted_log_slope(term, profile.decay).value, math.nan, None,
                           expected_verdict(term), False, True, str(exc))


def validate_bound(dim: int, profiles: Sequence[str | RadialProfile] | None = None,
                   max_total_order: int | None = None, tol: float = DEFAULT_TOL,
                   threads: int | None = None) -> BoundSummary:
    """Probe every term up to ``max_total_order`` (default D+3) on every profile.

    ``m_measured`` is the largest derivative order among terms that decay on
    all profiles.
    """
    if max_total_order is None:
        max_total_order = dim + 3
    if max_total_order < dim + 3:
        raise ProbeError(f"max_total_order must be >= D+3 = {dim + 3} to include inadmissible witnesses")
    if profiles is None:
        profiles = default_profiles(dim)
    resolved = [profile_from_id(p) if isinstance(p, str) else p for p in profiles]
    for p in resolved:
        if p.dim != dim:
            raise DimensionMismatch(f"profile {p.profile_id} is {p.dim}-dimensional, expected {dim}")
    terms = enumerate_terms(dim, max_total_order=max_total_order)
    cells = [(t, p, tol) for t in terms for p in resolved]
    n_threads = threads if threads is not None else thread_count()
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            reports = list(pool.map(_probe_cell, cells))
    else:
        reports = [_probe_cell(c) for c in cells]

    failures = sum(1 for rep in reports if rep.asserted and not rep.agrees_with_theory)
    m_measured = 0
    for i, term in enumerate(terms):
        row = reports[i * len(resolved):(i + 1) * len(resolved)]
        if all(rep.verdict is Verdict.DECAYING for rep in row):
            m_measured = max(m_measured, term.max_order)
    return BoundSummary(dim, m_measured, max_derivative_order(dim), len(terms), failures,
                        [p.profile_id for p in resolved], max_total_order, reports)
