"""Analytic radial model densities and their iterated derivatives.

The k-th iterated derivative alternates gradient and divergence: on a radial
function the gradient step is ``d/dr`` and the divergence step is
``d/dr + (D-1)/r``.  For the exponential families

    rho(r) = C * r**beta * exp(-b*r - alpha*r**2)

every ``g_k`` factors as ``h_k(r) * rho(r)`` with ``h_k`` a Laurent polynomial
in ``r``.  The ``h_k`` are built exactly once at construction, so all
derivative evaluations are closed forms and the log of a term never forms
``rho`` in linear space.
"""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .terms import KedTerm

__all__ = [
    "MAX_DERIVATIVE",
    "DEFAULT_LOG_FLOOR",
    "NORMALIZATION_CONSTANTS",
    "DomainError",
    "NodeError",
    "PoleError",
    "UnderflowGuard",
    "Exponential",
    "Gaussian",
    "PolyExponential",
    "PeriodicCosine",
    "Laurent",
    "RadialProfile",
    "ExpFamilyProfile",
    "CosineProfile",
    "sphere_area",
    "make_exponential",
    "make_hydrogenic",
    "make_gaussian",
    "make_ho1d_ground",
    "make_poly_exponential",
    "make_periodic_cosine",
    "profile_from_id",
    "iterated_derivative",
    "normalized_derivative",
    "log_term_eval",
    "term_values",
    "derivative_nodes",
    "grid_dump_csv",
]

MAX_DERIVATIVE = 6
DEFAULT_LOG_FLOOR = -1000.0

# Multiplicative conventions c_k inside u_k (GGA: c_1, meta-GGA: c_2).
NORMALIZATION_CONSTANTS = {k: 1.0 for k in range(1, MAX_DERIVATIVE + 1)}


class DomainError(ValueError):
    pass


class NodeError(ArithmeticError):
    """A required factor of a term vanishes at the evaluation point."""

    def __init__(self, message, r=None, order=None):
        super().__init__(message)
        self.r = r
        self.order = order


class PoleError(ArithmeticError):
    def __init__(self, message, r=None):
        super().__init__(message)
        self.r = r


class UnderflowGuard(ArithmeticError):
    def __init__(self, message, r=None, log_rho=None):
        super().__init__(message)
        self.r = r
        self.log_rho = log_rho


@dataclass(frozen=True)
class Exponential:
    b: float
    abscissa = "r"

    @property
    def rate(self):
        return self.b


@dataclass(frozen=True)
class Gaussian:
    alpha: float
    abscissa = "r2"

    @property
    def rate(self):
        return self.alpha


@dataclass(frozen=True)
class PolyExponential:
    beta: float
    b: float
    abscissa = "r"

    @property
    def rate(self):
        return self.b


@dataclass(frozen=True)
class PeriodicCosine:
    rho0: float
    A: float
    L: float
    abscissa = None


class Laurent:
    """Finite sum ``sum_p c_p r**p`` over integer powers ``p``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: dict[int, float] | None = None):
        self.coeffs = {p: c for p, c in (coeffs or {}).items() if c != 0.0}

    def derivative(self) -> "Laurent":
        return Laurent({p - 1: p * c for p, c in self.coeffs.items() if p != 0})

    def __add__(self, other: "Laurent") -> "Laurent":
        out = dict(self.coeffs)
        for p, c in other.coeffs.items():
            out[p] = out.get(p, 0.0) + c
        return Laurent(out)

    def __mul__(self, other: "Laurent") -> "Laurent":
        out: dict[int, float] = {}
        for p, c in self.coeffs.items():
            for q, d in other.coeffs.items():
                out[p + q] = out.get(p + q, 0.0) + c * d
        return Laurent(out)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        total = np.zeros_like(r)
        for p in sorted(self.coeffs):
            total = total + self.coeffs[p] * r ** p
        return total

    def magnitude(self, r):
        """``sum_p |c_p| r**p``: the scale against which cancellation is judged."""
        r = np.asarray(r, dtype=float)
        total = np.zeros_like(r)
        for p in sorted(self.coeffs):
            total = total + abs(self.coeffs[p]) * r ** p
        return total

    def __eq__(self, other):
        return isinstance(other, Laurent) and self.coeffs == other.coeffs

    def __repr__(self):
        terms = " + ".join(f"{c!r}*r^{p}" for p, c in sorted(self.coeffs.items()))
        return f"Laurent({terms or '0'})"


def sphere_area(dim: int) -> float:
    """S_D, the area of the unit sphere: 2, 2*pi, 4*pi for D = 1, 2, 3."""
    return 2.0 * math.pi ** (dim / 2) / math.gamma(dim / 2)


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


class RadialProfile:
    """Common surface of the catalog densities.

    Subclasses provide ``log_value`` and ``ratio`` (``g_k / rho``); every other
    quantity is derived from those two.
    """

    dim: int
    decay: object
    norm: float
    profile_id: str
    single_orbital: bool
    localized: bool = True

    def _domain(self, r):
        r = np.asarray(r, dtype=float)
        if self.localized and np.any(r <= 0):
            raise DomainError(f"radial coordinate must be positive, got {r.min() if r.ndim else r}")
        return r

    def log_value(self, r):
        raise NotImplementedError

    def ratio(self, k: int, r):
        raise NotImplementedError

    def value(self, r):
        return _scalar_or_array(np.exp(self.log_value(r)))

    def deriv_chain(self, r) -> list:
        """``[g_0(r), ..., g_6(r)]``."""
        return [iterated_derivative(self, k, r) for k in range(MAX_DERIVATIVE + 1)]


def _check_order(k: int) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 0:
        raise DomainError(f"derivative order must be a non-negative integer, got {k!r}")
    if k > MAX_DERIVATIVE:
        raise DomainError(f"derivative order {k} unsupported (max {MAX_DERIVATIVE})")
    return int(k)


@dataclass(frozen=True, eq=False)
class ExpFamilyProfile(RadialProfile):
    """``rho = C r**beta exp(-b r - alpha r**2)`` in ``dim`` dimensions."""

    dim: int
    log_prefactor: float
    beta: float
    b: float
    alpha: float
    decay: object
    norm: float
    profile_id: str
    single_orbital: bool = False
    ratios: tuple = field(init=False, repr=False)

    def __post_init__(self):
        # d/dr ln rho
        log_slope = Laurent({-1: self.beta, 0: -self.b, 1: -2.0 * self.alpha})
        curvature = Laurent({-1: float(self.dim - 1)})
        chain = [Laurent({0: 1.0})]
        for k in range(1, MAX_DERIVATIVE + 1):
            prev = chain[-1]
            nxt = prev.derivative() + log_slope * prev
            if k % 2 == 0:
                nxt = nxt + curvature * prev
            chain.append(nxt)
        object.__setattr__(self, "ratios", tuple(chain))

    def log_value(self, r):
        r = self._domain(r)
        out = self.log_prefactor - self.b * r - self.alpha * r * r
        if self.beta:
            out = out + self.beta * np.log(r)
        return _scalar_or_array(out)

    def ratio(self, k, r):
        k = _check_order(k)
        return _scalar_or_array(self.ratios[k](self._domain(r)))

    def ratio_magnitude(self, k, r):
        return _scalar_or_array(self.ratios[_check_order(k)].magnitude(self._domain(r)))

    def scaled(self, factor: float) -> "ExpFamilyProfile":
        """The same shape with ``rho -> factor * rho``."""
        if factor <= 0:
            raise DomainError("scale factor must be positive")
        return ExpFamilyProfile(
            self.dim, self.log_prefactor + math.log(factor), self.beta, self.b,
            self.alpha, self.decay, self.norm * factor,
            f"{self.profile_id}*{factor!r}", self.single_orbital,
        )

    def sqrt(self) -> "ExpFamilyProfile":
        """``phi = sqrt(rho)`` as a profile of the same family (norm is not meaningful)."""
        return ExpFamilyProfile(
            self.dim, 0.5 * self.log_prefactor, 0.5 * self.beta, 0.5 * self.b,
            0.5 * self.alpha, self.decay, float("nan"), f"sqrt({self.profile_id})",
        )


@dataclass(frozen=True, eq=False)
class CosineProfile(RadialProfile):
    """``rho = rho0 (1 + A cos(2 pi x / L))`` on the line, one electron count per cell."""

    rho0: float
    A: float
    L: float
    profile_id: str = ""
    dim: int = 1
    single_orbital: bool = False
    localized = False

    @property
    def decay(self):
        return PeriodicCosine(self.rho0, self.A, self.L)

    @property
    def norm(self):
        return self.rho0 * self.L

    @property
    def wavenumber(self):
        return 2.0 * math.pi / self.L

    def log_value(self, x):
        x = np.asarray(x, dtype=float)
        return _scalar_or_array(math.log(self.rho0) + np.log1p(self.A * np.cos(self.wavenumber * x)))

    def _derivative(self, k, x):
        w = self.wavenumber
        phase = w * x
        shifted = (np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), np.sin)[k % 4]
        return self.rho0 * self.A * w ** k * shifted(phase)

    def ratio(self, k, x):
        k = _check_order(k)
        x = np.asarray(x, dtype=float)
        if k == 0:
            return _scalar_or_array(np.ones_like(x))
        rho = self.rho0 * (1.0 + self.A * np.cos(self.wavenumber * x))
        return _scalar_or_array(self._derivative(k, x) / rho)


def _positive(name, value):
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")
    return value


def _dimension(dim):
    if isinstance(dim, bool) or not isinstance(dim, (int, np.integer)) or dim < 1:
        raise DomainError(f"dimension must be a positive integer, got {dim!r}")
    return int(dim)


def _fmt(x: float) -> str:
    return repr(float(x)).removesuffix(".0") if float(x).is_integer() else repr(float(x))


def make_exponential(b: float, dim: int = 3) -> ExpFamilyProfile:
    """Normalized ``rho = C exp(-b r)`` (one electron)."""
    b, dim = _positive("b", b), _dimension(dim)
    log_c = dim * math.log(b) - math.log(sphere_area(dim)) - math.lgamma(dim)
    return ExpFamilyProfile(dim, log_c, 0.0, b, 0.0, Exponential(b), 1.0,
                            f"exp:b={_fmt(b)},D={dim}", single_orbital=True)


def make_hydrogenic() -> ExpFamilyProfile:
    """Hydrogen 1s density ``exp(-2r)/pi``."""
    return ExpFamilyProfile(3, -math.log(math.pi), 0.0, 2.0, 0.0, Exponential(2.0), 1.0,
                            "hydrogenic", single_orbital=True)


def make_gaussian(alpha: float, dim: int = 1) -> ExpFamilyProfile:
    """Normalized ``rho = C exp(-alpha r**2)`` (one electron)."""
    alpha, dim = _positive("alpha", alpha), _dimension(dim)
    log_c = (math.log(2.0) + 0.5 * dim * math.log(alpha)
             - math.log(sphere_area(dim)) - math.lgamma(dim / 2))
    return ExpFamilyProfile(dim, log_c, 0.0, 0.0, alpha, Gaussian(alpha), 1.0,
                            f"gauss:a={_fmt(alpha)},D={dim}", single_orbital=True)


def make_ho1d_ground() -> ExpFamilyProfile:
    """Ground state density ``exp(-x**2)/sqrt(pi)`` of the unit harmonic oscillator."""
    return ExpFamilyProfile(1, -0.5 * math.log(math.pi), 0.0, 0.0, 1.0, Gaussian(1.0), 1.0,
                            "ho1d", single_orbital=True)


def make_poly_exponential(beta: float, b: float, dim: int = 3) -> ExpFamilyProfile:
    """Normalized ``rho = C r**beta exp(-b r)``, the molecular far-field shape."""
    b, dim = _positive("b", b), _dimension(dim)
    beta = float(beta)
    if not math.isfinite(beta) or dim + beta <= 0:
        raise DomainError(f"beta={beta!r} makes the density non-integrable in D={dim}")
    log_c = ((dim + beta) * math.log(b) - math.log(sphere_area(dim))
             - math.lgamma(dim + beta))
    pid = f"polyexp:beta={_fmt(beta)},b={_fmt(b)}"
    if dim != 3:
        pid += f",D={dim}"
    return ExpFamilyProfile(dim, log_c, beta, b, 0.0, PolyExponential(beta, b), 1.0, pid)


def make_periodic_cosine(rho0: float = 1.0, A: float = 0.5, L: float = 1.0) -> CosineProfile:
    rho0, L = _positive("rho0", rho0), _positive("L", L)
    A = float(A)
    if not (0.0 <= A < 1.0):
        raise DomainError(f"amplitude A must lie in [0, 1), got {A!r}")
    return CosineProfile(rho0, A, L, f"cos:rho0={_fmt(rho0)},A={_fmt(A)},L={_fmt(L)}")


PROFILE_GRAMMAR = (
    'hydrogenic | ho1d | exp:b=<v>,D=<d> | gauss:a=<v>,D=<d> | '
    'polyexp:beta=<v>,b=<v>[,D=<d>] | cos:rho0=<v>,A=<v>,L=<v>'
)

_ID_RE = re.compile(r"^(?P<kind>[a-z0-9]+)(?::(?P<args>.*))?$")


def profile_from_id(pid: str) -> RadialProfile:
    """Build a catalog profile from its string id."""
    match = _ID_RE.match(pid.strip())
    if not match:
        raise DomainError(f"unknown profile id {pid!r}; grammar: {PROFILE_GRAMMAR}")
    kind, args = match["kind"], match["args"]
    params: dict[str, str] = {}
    if args:
        for item in args.split(","):
            key, sep, val = item.partition("=")
            if not sep:
                raise DomainError(f"bad parameter {item!r} in {pid!r}; grammar: {PROFILE_GRAMMAR}")
            params[key.strip()] = val.strip()

    def take(name, cast=float, default=None):
        if name in params:
            try:
                return cast(params.pop(name))
            except ValueError:
                raise DomainError(f"bad value for {name} in {pid!r}") from None
        if default is None:
            raise DomainError(f"profile {pid!r} is missing {name}; grammar: {PROFILE_GRAMMAR}")
        return default

    if kind == "hydrogenic":
        profile = make_hydrogenic()
    elif kind == "ho1d":
        profile = make_ho1d_ground()
    elif kind == "exp":
        profile = make_exponential(take("b"), take("D", int))
    elif kind == "gauss":
        profile = make_gaussian(take("a"), take("D", int))
    elif kind == "polyexp":
        profile = make_poly_exponential(take("beta"), take("b"), take("D", int, 3))
    elif kind == "cos":
        profile = make_periodic_cosine(take("rho0"), take("A"), take("L"))
    else:
        raise DomainError(f"unknown profile kind {kind!r}; grammar: {PROFILE_GRAMMAR}")
    if params:
        raise DomainError(f"unexpected parameters {sorted(params)} in {pid!r}")
    return profile


def iterated_derivative(profile: RadialProfile, k: int, r):
    """g_k(r): k alternating gradient/divergence steps applied to rho.

    For odd k this is the radial component of a vector field; ``|grad^k rho|``
    is its absolute value.
    """
    k = _check_order(k)
    log_rho = np.asarray(profile.log_value(r))
    return _scalar_or_array(profile.ratio(k, r) * np.exp(log_rho))


def normalized_derivative(profile: RadialProfile, k: int, r, constants=None):
    """u_k = c_k |g_k| / rho**((D+k)/D), evaluated as ``c_k |h_k| rho**(-k/D)``."""
    k = _check_order(k)
    if k == 0:
        raise DomainError("normalized derivatives start at k = 1")
    c = (constants or NORMALIZATION_CONSTANTS).get(k, 1.0)
    log_rho = np.asarray(profile.log_value(r), dtype=float)
    if np.any(np.isneginf(log_rho)):
        raise PoleError("density vanishes: u_k has a pole", r=r)
    h = np.abs(np.asarray(profile.ratio(k, r)))
    return _scalar_or_array(c * h * np.exp(-k / profile.dim * log_rho))


def _check_dims(term: KedTerm, profile: RadialProfile):
    if term.dim != profile.dim:
        raise DomainError(f"term is {term.dim}-dimensional but profile {profile.profile_id} is {profile.dim}-dimensional")


def log_term_eval(term: KedTerm, profile: RadialProfile, r: float,
                  floor: float = DEFAULT_LOG_FLOOR) -> float:
    """ln |t_j(r)| without ever forming rho in linear space.

    With ``g_k = h_k rho`` the monomial collapses to
    ``rho**decay_index * prod_k h_k**n_k``.
    """
    _check_dims(term, profile)
    log_rho = float(profile.log_value(r))
    if log_rho == -math.inf:
        raise NodeError(f"density vanishes at r={r}", r=r, order=0)
    if log_rho < floor:
        raise UnderflowGuard(f"ln rho={log_rho:.6g} below floor {floor} at r={r}", r=r, log_rho=log_rho)
    q = term.decay_index
    out = float(q) * log_rho
    for k, n in enumerate(term.exponents, start=1):
        if n == 0:
            continue
        h = float(profile.ratio(k, r))
        if h == 0.0:
            raise NodeError(f"g_{k} vanishes at r={r}", r=r, order=k)
        out += n * math.log(abs(h))
    return out


def term_values(term: KedTerm, profile: RadialProfile, r):
    """Signed t_j(r) (odd-order factors use the radial component); vectorized."""
    _check_dims(term, profile)
    log_rho = np.asarray(profile.log_value(r), dtype=float)
    out = np.exp(float(term.decay_index) * log_rho)
    for k, n in enumerate(term.exponents, start=1):
        if n:
            out = out * np.asarray(profile.ratio(k, r)) ** n
    return _scalar_or_array(out)


def derivative_nodes(profile: RadialProfile, k: int, r_lo: float, r_hi: float,
                     samples: int = 2048) -> list[tuple[float, float]]:
    """Brackets ``(a, b)`` inside ``[r_lo, r_hi]`` where g_k changes sign."""
    k = _check_order(k)
    if k == 0:
        return []
    rs = np.geomspace(r_lo, r_hi, samples) if profile.localized else np.linspace(r_lo, r_hi, samples)
    h = np.asarray(profile.ratio(k, rs))
    brackets = []
    for i in range(samples - 1):
        if h[i] == 0.0:
            brackets.append((float(rs[max(i - 1, 0)]), float(rs[i + 1])))
        elif h[i] * h[i + 1] < 0:
            brackets.append((float(rs[i]), float(rs[i + 1])))
    if h[-1] == 0.0:
        brackets.append((float(rs[-2]), float(rs[-1])))
    return brackets


def grid_dump_csv(profile: RadialProfile, rs: Sequence[float]) -> str:
    """CSV with columns r, rho, g1..g6."""
    rs = np.asarray(rs, dtype=float)
    cols = [profile.value(rs)] + [iterated_derivative(profile, k, rs) for k in range(1, MAX_DERIVATIVE + 1)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["r", "rho"] + [f"g{k}" for k in range(1, MAX_DERIVATIVE + 1)])
    for i, r in enumerate(rs):
        writer.writerow([repr(float(r))] + [repr(float(np.atleast_1d(c)[i])) for c in cols])
    return buf.getvalue()
