"""Reference kinetic energy densities and least-squares fits of KED expansions."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .densities import ExpFamilyProfile, RadialProfile, term_values
from .quadrature import RadialGrid, integrate
from .terms import KedTerm, classify, term_token

__all__ = [
    "ReferenceKind",
    "ReferenceKed",
    "FitResult",
    "RankDeficientFit",
    "ReferenceError",
    "tf_constant",
    "reference_ked",
    "conventional_prefactor",
    "fit_expansion",
    "RANK_RTOL",
]

RANK_RTOL = 1e-12


class ReferenceError(ValueError):
    pass


class RankDeficientFit(ArithmeticError):
    def __init__(self, null_dim: int, singular_values):
        super().__init__(f"design matrix is rank deficient: null-space dimension {null_dim}")
        self.null_dim = null_dim
        self.singular_values = tuple(float(s) for s in singular_values)


def tf_constant(dim: int) -> float:
    """Thomas-Fermi constant for a spin-paired uniform gas in D dimensions.

    ``c = D/(2(D+2)) * ((2 pi)**D / (2 V_D))**(2/D)`` with ``V_D`` the
    unit-ball volume; 3/10 (3 pi^2)^(2/3), pi/2 and pi^2/24 for D = 3, 2, 1.
    """
    if dim not in (1, 2, 3):
        raise ReferenceError(f"Thomas-Fermi constant only tabulated for D = 1, 2, 3, got {dim!r}")
    ball = math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)
    return dim / (2.0 * (dim + 2)) * ((2.0 * math.pi) ** dim / (2.0 * ball)) ** (2.0 / dim)


class ReferenceKind(str, enum.Enum):
    THOMAS_FERMI = "tf"
    VON_WEIZSACKER = "vw"
    SINGLE_ORBITAL_POSITIVE = "positive"
    SINGLE_ORBITAL_LAPLACIAN = "laplacian"


@dataclass(frozen=True)
class ReferenceKed:
    kind: ReferenceKind
    profile_id: str
    evaluator: Callable

    def __call__(self, r):
        return self.evaluator(r)


def reference_ked(kind: ReferenceKind | str, profile: RadialProfile) -> ReferenceKed:
    """Evaluator for a reference KED on ``profile``.

    The single-orbital kinds use ``phi = sqrt(rho)`` directly:
    ``|grad phi|^2 / 2`` and ``-phi lap(phi) / 2``.
    """
    kind = ReferenceKind(kind)
    dim = profile.dim

    if kind is ReferenceKind.THOMAS_FERMI:
        c = tf_constant(dim)
        power = (dim + 2) / dim

        def evaluator(r):
            return c * np.exp(power * np.asarray(profile.log_value(r)))

    elif kind is ReferenceKind.VON_WEIZSACKER:
        def evaluator(r):
            h1 = np.asarray(profile.ratio(1, r))
            return h1 * h1 * np.exp(profile.log_value(r)) / 8.0

    else:
        if not (profile.single_orbital and isinstance(profile, ExpFamilyProfile)):
            raise ReferenceError(f"{kind.value} reference needs a single-orbital profile, got {profile.profile_id}")
        phi = profile.sqrt()
        if kind is ReferenceKind.SINGLE_ORBITAL_POSITIVE:
            def evaluator(r):
                h1 = np.asarray(phi.ratio(1, r))
                return 0.5 * h1 * h1 * np.exp(profile.log_value(r))
        else:
            def evaluator(r):
                return -0.5 * np.asarray(phi.ratio(2, r)) * np.exp(profile.log_value(r))

    return ReferenceKed(kind, profile.profile_id, evaluator)


def conventional_prefactor(term: KedTerm) -> float:
    """Fixed scale of a basis function: c_TF for rho^((D+2)/D), 1/8 for the vW shape, else 1."""
    if term.exponents == () and term.dim <= 3:
        return tf_constant(term.dim)
    if term.exponents == (2,):
        return 0.125
    return 1.0


@dataclass(frozen=True)
class FitResult:
    basis: tuple[KedTerm, ...]
    coefficients: tuple[float, ...]
    prefactors: tuple[float, ...]
    residual_rms: float
    T_fit: float
    T_ref: float
    cond: float
    weighting: str

    def to_json(self) -> dict:
        return {
            "basis": [term_token(t) for t in self.basis],
            "a": list(self.coefficients),
            "prefactors": list(self.prefactors),
            "residual_rms": self.residual_rms,
            "T_fit": self.T_fit,
            "T_ref": self.T_ref,
            "cond": self.cond,
            "weighting": self.weighting,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def fit_expansion(reference, basis: Sequence[KedTerm], profile: RadialProfile,
                  grid: RadialGrid, weighting: str = "measure",
                  prefactors: str | Sequence[float] = "conventional") -> FitResult:
    """Weighted least squares ``min_a sum_i W_i (t_ref - sum_j a_j s_j t_j)^2``.

    ``s_j`` are fixed basis scales (``prefactors``): "conventional" puts c_TF
    on the Thomas-Fermi shape and 1/8 on the von Weizsacker shape so the
    coefficients read as multiples of the named functionals; "unit" uses the
    bare monomials.  Solved by SVD of the column-equilibrated, row-weighted
    design matrix; singular values below ``RANK_RTOL`` times the largest
    raise :class:`RankDeficientFit`.
    """
    basis = tuple(basis)
    for term in basis:
        if term.dim != profile.dim:
            raise ReferenceError(f"basis term {term_token(term)} does not match D={profile.dim}")
        if profile.localized and not classify(term)[1]:
            raise ReferenceError(f"basis term {term_token(term)} is not admissible for a localized density")
    if prefactors == "conventional":
        scales = tuple(conventional_prefactor(t) for t in basis)
    elif prefactors == "unit":
        scales = (1.0,) * len(basis)
    else:
        scales = tuple(float(s) for s in prefactors)
        if len(scales) != len(basis):
            raise ReferenceError("one prefactor per basis term required")

    if weighting == "measure":
        # the inner cap of a log grid may carry one negative correction weight
        W = np.clip(grid.weights, 0.0, None)
    elif weighting == "uniform":
        W = np.ones(len(grid))
    else:
        raise ReferenceError(f"unknown weighting {weighting!r}")

    r = grid.nodes
    y = np.asarray(reference(r), dtype=float)
    T_ref = integrate(reference, grid)
    total_w = math.fsum(W.tolist())

    if not basis:
        rms = math.sqrt(math.fsum((W * y * y).tolist()) / total_w)
        return FitResult((), (), (), rms, 0.0, T_ref, 1.0, weighting)

    A = np.column_stack([s * np.asarray(term_values(t, profile, r)) for s, t in zip(scales, basis)])
    sw = np.sqrt(W)
    Aw = A * sw[:, None]
    yw = y * sw
    col = np.linalg.norm(Aw, axis=0)
    if np.any(col == 0):
        raise RankDeficientFit(int(np.sum(col == 0)), col)
    U, s, Vt = np.linalg.svd(Aw / col, full_matrices=False)
    rank = int(np.sum(s > RANK_RTOL * s[0]))
    if rank < len(basis):
        raise RankDeficientFit(len(basis) - rank, s)
    a = (Vt.T @ ((U.T @ yw) / s)) / col

    resid = y - A @ a
    rms = math.sqrt(math.fsum((W * resid * resid).tolist()) / total_w)
    T_terms = [integrate(lambda x, t=t, sc=sc: sc * np.asarray(term_values(t, profile, x)), grid)
               for t, sc in zip(basis, scales)]
    T_fit = math.fsum(aj * Tj for aj, Tj in zip(a, T_terms))
    fitted = tuple(t.with_coefficient(aj) for t, aj in zip(basis, a))
    return FitResult(fitted, tuple(float(x) for x in a), scales, rms, T_fit, T_ref,
                     float(s[0] / s[-1]), weighting)
