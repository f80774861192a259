"""Uniform rotations (equilibria) of the torque-free gyrostat.

Families are kept symbolic (tag plus free parameter) and materialized on
demand with :func:`family_point`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .core import (
    RESIDUAL_TOL,
    Alignment,
    BodyState,
    GyrostatParams,
    StateLike,
    as_vec,
    gradients,
    hessians,
    momentum_scale,
    residual_scale,
    rhs,
)

POLE_TOL = 1e-12
COINCIDENCE_TOL = 1e-12


class FamilyError(ValueError):
    """Family not valid for the parameters, or parameter not admissible."""


class FamilyTag(Enum):
    M1 = "M1"
    M2 = "M2"
    M3 = "M3"
    M4 = "M4"
    M5 = "M5"
    M12 = "M12axis"


# Index of the free coordinate for the off-axis families M3, M4, M5.
_FREE_AXIS = {FamilyTag.M3: 0, FamilyTag.M4: 1, FamilyTag.M5: 2}


@dataclass(frozen=True)
class EquilibriumFamily:
    tag: FamilyTag
    axis: int | None = None  # 1-based, M12 only

    def __post_init__(self):
        if (self.tag is FamilyTag.M12) != (self.axis is not None):
            raise FamilyError("axis is required for M12axis and only for it")
        if self.axis is not None and self.axis not in (1, 2, 3):
            raise FamilyError(f"axis must be 1, 2 or 3, got {self.axis}")

    @property
    def label(self) -> str:
        return f"M12axis{self.axis}" if self.tag is FamilyTag.M12 else self.tag.value

    @property
    def parameter_name(self) -> str | None:
        return {
            FamilyTag.M1: None,
            FamilyTag.M2: "lambda",
            FamilyTag.M12: "q",
        }.get(self.tag, "beta")

    def is_valid(self, params: GyrostatParams) -> bool:
        if self.tag in (FamilyTag.M1, FamilyTag.M2):
            return True
        if self.tag is FamilyTag.M12:
            return params.alignment.axis == self.axis
        return params.effective_mu[_FREE_AXIS[self.tag]] == 0.0

    @classmethod
    def parse(cls, label: str) -> "EquilibriumFamily":
        if label.startswith("M12axis"):
            return cls(FamilyTag.M12, int(label[len("M12axis"):]))
        try:
            return cls(FamilyTag(label))
        except ValueError:
            raise FamilyError(f"unknown family {label!r}") from None


@dataclass(frozen=True)
class Equilibrium:
    family: EquilibriumFamily
    parameter: float | None
    point: BodyState

    @property
    def vec(self) -> np.ndarray:
        return self.point.vec


class SingleIntegralVerdict(Enum):
    STABLE_F1 = "StableWrtF1"
    STABLE_F2 = "StableWrtF2"
    NEITHER = "Neither"


def enumerate_families(params: GyrostatParams) -> list[EquilibriumFamily]:
    families = [EquilibriumFamily(FamilyTag.M1), EquilibriumFamily(FamilyTag.M2)]
    families += [
        EquilibriumFamily(tag) for tag in _FREE_AXIS if EquilibriumFamily(tag).is_valid(params)
    ]
    axis = params.alignment.axis
    if axis is not None:
        families.append(EquilibriumFamily(FamilyTag.M12, axis))
    return families


def family_point(
    params: GyrostatParams, family: EquilibriumFamily, parameter: float | None = None
) -> Equilibrium:
    """Materialize the member of ``family`` with free parameter ``parameter``.

    Raises:
        FamilyError: if the family is invalid for ``params``, the parameter is
            missing, or lambda sits on a pole 1/I_k of the M2 family.
    """
    if not family.is_valid(params):
        raise FamilyError(f"family {family.label} is not valid for mu={params.mu}")
    I = params.I
    mu = params.effective_mu
    if family.tag is FamilyTag.M1:
        return Equilibrium(family, None, BodyState(tuple(-mu)))
    if parameter is None:
        raise FamilyError(f"family {family.label} needs a {family.parameter_name} value")
    p = float(parameter)
    if family.tag is FamilyTag.M2:
        denom = 1.0 - p * I
        if np.any(np.abs(denom) <= POLE_TOL):
            raise FamilyError(f"lambda={p} is a pole 1/I_k of the M2 family")
        point = p * I * mu / denom
    elif family.tag is FamilyTag.M12:
        point = np.zeros(3)
        point[family.axis - 1] = p
    else:
        a = _FREE_AXIS[family.tag]
        point = np.empty(3)
        for i in range(3):
            point[i] = p if i == a else I[i] * mu[i] / (I[a] - I[i])
    return Equilibrium(family, p, BodyState(tuple(point)))


def is_equilibrium(params: GyrostatParams, state: StateLike, tol: float = RESIDUAL_TOL) -> bool:
    if tol <= 0:
        raise ValueError("tol must be positive")
    r = float(np.linalg.norm(rhs(params, state)))
    return r <= tol * residual_scale(params, state)


def integral_jacobian_rank_defect(params: GyrostatParams, state: StateLike) -> float:
    """Smallest singular value of the 2x3 Jacobian of (F1, F2).

    Uses sigma_min * sigma_max = |g1 x g2| so the result stays accurate when
    the gradients are nearly parallel.
    """
    g1, g2 = gradients(params, state)
    fro2 = float(g1 @ g1 + g2 @ g2)
    if fro2 == 0.0:
        return 0.0
    area = float(np.linalg.norm(np.cross(g1, g2)))
    disc = max(fro2 * fro2 - 4.0 * area * area, 0.0)
    smax = np.sqrt(0.5 * (fro2 + np.sqrt(disc)))
    return area / smax


def gradient_scale(params: GyrostatParams, state: StateLike) -> float:
    """Frobenius norm of the (F1, F2) Jacobian, floored by |mu|."""
    g1, g2 = gradients(params, state)
    s = float(np.sqrt(g1 @ g1 + g2 @ g2))
    return max(s, params.mu_norm, np.finfo(float).tiny)


def scaled_rank_defect(params: GyrostatParams, state: StateLike) -> float:
    return integral_jacobian_rank_defect(params, state) / gradient_scale(params, state)


def _positive_definite(h: np.ndarray, rel_tol: float = 1e-12) -> bool:
    tol = rel_tol * float(np.trace(h))
    return all(np.linalg.det(h[:k, :k]) > tol**k for k in (1, 2, 3))


def single_integral_verdict(
    params: GyrostatParams, equilibrium: Equilibrium | StateLike
) -> SingleIntegralVerdict:
    """Strict-local-extremum test of F1, then F2, at the equilibrium."""
    m = equilibrium.vec if isinstance(equilibrium, Equilibrium) else as_vec(equilibrium)
    scale = momentum_scale(params, m)
    g1, g2 = gradients(params, m)
    h1, h2 = hessians(params)
    if np.linalg.norm(g1) <= COINCIDENCE_TOL * scale / params.inertia.i3 and _positive_definite(h1):
        return SingleIntegralVerdict.STABLE_F1
    if np.linalg.norm(g2) <= COINCIDENCE_TOL * scale and _positive_definite(h2):
        return SingleIntegralVerdict.STABLE_F2
    return SingleIntegralVerdict.NEITHER


def _recover_parameter(params: GyrostatParams, family: EquilibriumFamily, m: np.ndarray):
    if family.tag is FamilyTag.M1:
        return None
    if family.tag is FamilyTag.M12:
        return float(m[family.axis - 1])
    if family.tag is FamilyTag.M2:
        # M_k = lam I_k mu_k / (1 - lam I_k)  =>  lam = M_k / (I_k (mu_k + M_k))
        mu = params.effective_mu
        nz = np.flatnonzero(mu)
        if nz.size == 0:
            return 0.0
        k = nz[np.argmax(np.abs(m[nz] + mu[nz]))]
        return float(m[k] / (params.I[k] * (mu[k] + m[k])))
    return float(m[_FREE_AXIS[family.tag]])


def families_containing(
    params: GyrostatParams, state: StateLike, tol: float = COINCIDENCE_TOL
) -> list[Equilibrium]:
    """Family members coinciding with ``state`` within ``tol`` relative."""
    m = as_vec(state)
    scale = momentum_scale(params, m)
    found = []
    for family in enumerate_families(params):
        try:
            eq = family_point(params, family, _recover_parameter(params, family, m))
        except (FamilyError, ZeroDivisionError, FloatingPointError):
            continue
        if np.linalg.norm(eq.vec - m) <= tol * scale:
            found.append(eq)
    return found


def sweep(
    params: GyrostatParams, family: EquilibriumFamily, values: Iterable[float]
) -> list[Equilibrium]:
    """Materialize ``family`` at each admissible value, skipping poles."""
    out = []
    for v in values:
        try:
            out.append(family_point(params, family, v))
        except FamilyError:
            if not family.is_valid(params):
                raise
    return out


def as_equilibrium(params: GyrostatParams, state: StateLike) -> Equilibrium:
    """Wrap a bare point, preferring the merged axis family when it applies."""
    m = as_vec(state)
    members = families_containing(params, m)
    if not members:
        if not is_equilibrium(params, m):
            raise FamilyError(f"{tuple(m)} is not a uniform rotation")
        raise FamilyError(f"{tuple(m)} is an equilibrium outside every enumerated family")
    members.sort(key=lambda e: e.family.tag is not FamilyTag.M12)
    return members[0]


ALIGNED_OFF_AXIS = {
    Alignment.AXIS1: (FamilyTag.M4, FamilyTag.M5),
    Alignment.AXIS2: (FamilyTag.M3, FamilyTag.M5),
    Alignment.AXIS3: (FamilyTag.M3, FamilyTag.M4),
}
