"""Torque-free gyrostat dynamics and its two first integrals.

The state is the body-frame angular momentum ``M``; the flow is

    dM/dt = (M + mu) x I^-1 M

with the integrals ``F1 = 1/2 M.I^-1 M`` and ``F2 = 1/2 |M + mu|^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np

# Per-component threshold (times max(1, |mu|)) below which mu is treated as zero.
ALIGNMENT_TOL = 1e-14
RESIDUAL_TOL = 1e-10


class ParameterError(ValueError):
    """Raised for physically invalid gyrostat parameters."""


class Alignment(Enum):
    AXIS1 = "axis1"
    AXIS2 = "axis2"
    AXIS3 = "axis3"
    NONE = "none"
    ZERO = "zero"

    @property
    def axis(self) -> int | None:
        """1-based principal axis carrying mu, or None."""
        return {"axis1": 1, "axis2": 2, "axis3": 3}.get(self.value)


@dataclass(frozen=True)
class InertiaSpectrum:
    i1: float
    i2: float
    i3: float

    def __post_init__(self):
        vals = (self.i1, self.i2, self.i3)
        if not all(math.isfinite(v) for v in vals):
            raise ParameterError("inertia must be finite")
        if self.i3 <= 0:
            raise ParameterError("inertia must be positive")
        if not (self.i1 > self.i2 > self.i3):
            raise ParameterError("inertia must be strictly decreasing")

    @property
    def diag(self) -> np.ndarray:
        return np.array([self.i1, self.i2, self.i3])

    @property
    def inv_diag(self) -> np.ndarray:
        return 1.0 / self.diag


@dataclass(frozen=True)
class GyrostatParams:
    inertia: InertiaSpectrum
    mu: tuple[float, float, float]

    def __post_init__(self):
        mu = tuple(float(c) for c in self.mu)
        if len(mu) != 3:
            raise ParameterError("mu must have three components")
        if not all(math.isfinite(c) for c in mu):
            raise ParameterError("mu must be finite")
        object.__setattr__(self, "mu", mu)

    @classmethod
    def from_values(cls, inertia: Sequence[float], mu: Sequence[float]) -> "GyrostatParams":
        return cls(InertiaSpectrum(*map(float, inertia)), tuple(mu))

    @property
    def I(self) -> np.ndarray:
        return self.inertia.diag

    @property
    def mu_vec(self) -> np.ndarray:
        return np.array(self.mu)

    @property
    def mu_norm(self) -> float:
        return float(np.linalg.norm(self.mu))

    @property
    def effective_mu(self) -> np.ndarray:
        """mu with components under the alignment threshold set to exactly zero."""
        mu = self.mu_vec
        thresh = ALIGNMENT_TOL * max(1.0, self.mu_norm)
        mu[np.abs(mu) <= thresh] = 0.0
        return mu

    @property
    def alignment(self) -> Alignment:
        nonzero = np.flatnonzero(self.effective_mu)
        if nonzero.size == 0:
            return Alignment.ZERO
        if nonzero.size > 1:
            return Alignment.NONE
        return (Alignment.AXIS1, Alignment.AXIS2, Alignment.AXIS3)[nonzero[0]]

    @property
    def axis_aligned(self) -> Alignment:
        return self.alignment


@dataclass(frozen=True)
class BodyState:
    m: tuple[float, float, float]

    def __post_init__(self):
        m = tuple(float(c) for c in self.m)
        if len(m) != 3 or not all(math.isfinite(c) for c in m):
            raise ValueError(f"state must be a finite 3-vector, got {self.m!r}")
        object.__setattr__(self, "m", m)

    @property
    def vec(self) -> np.ndarray:
        return np.array(self.m)


@dataclass(frozen=True)
class ConservedPair:
    f1: float
    f2: float


StateLike = Union[BodyState, Sequence[float], np.ndarray]


def as_vec(state: StateLike) -> np.ndarray:
    if isinstance(state, BodyState):
        return state.vec
    return np.asarray(state, dtype=float).reshape(3)


def rhs(params: GyrostatParams, state: StateLike) -> np.ndarray:
    """dM/dt = (M + mu) x I^-1 M."""
    m = as_vec(state)
    return np.cross(m + params.mu_vec, m / params.I)


def f1(params: GyrostatParams, state: StateLike) -> float:
    m = as_vec(state)
    return 0.5 * float(np.dot(m, m / params.I))


def f2(params: GyrostatParams, state: StateLike) -> float:
    n = as_vec(state) + params.mu_vec
    return 0.5 * float(np.dot(n, n))


def conserved(params: GyrostatParams, state: StateLike) -> ConservedPair:
    return ConservedPair(f1(params, state), f2(params, state))


def omega_from_momentum(params: GyrostatParams, state: StateLike) -> np.ndarray:
    return as_vec(state) / params.I


def momentum_from_omega(params: GyrostatParams, omega: Sequence[float]) -> BodyState:
    return BodyState(tuple(params.I * np.asarray(omega, dtype=float)))


def rhs_omega(params: GyrostatParams, omega: Sequence[float]) -> np.ndarray:
    """d(omega)/dt from I domega/dt = (I omega + mu) x omega."""
    w = np.asarray(omega, dtype=float)
    return np.cross(params.I * w + params.mu_vec, w) / params.I


def to_auxiliary_form(params: GyrostatParams) -> np.ndarray:
    """Vector ``a = -I^-1 mu`` of the shifted equation dN/dt = N x I^-1 N + N x a."""
    return -params.mu_vec / params.I


def shift_state(params: GyrostatParams, state: StateLike) -> np.ndarray:
    """N = M + mu."""
    return as_vec(state) + params.mu_vec


def unshift_state(params: GyrostatParams, n: Sequence[float]) -> BodyState:
    return BodyState(tuple(np.asarray(n, dtype=float) - params.mu_vec))


def rhs_auxiliary(params: GyrostatParams, n: Sequence[float]) -> np.ndarray:
    """dN/dt in the shifted variable; equals :func:`rhs` at M = N - mu."""
    n = np.asarray(n, dtype=float)
    return np.cross(n, n / params.I) + np.cross(n, to_auxiliary_form(params))


def gradients(params: GyrostatParams, state: StateLike) -> tuple[np.ndarray, np.ndarray]:
    m = as_vec(state)
    return m / params.I, m + params.mu_vec


def hessians(params: GyrostatParams) -> tuple[np.ndarray, np.ndarray]:
    """Constant Hessians of F1 and F2 (both integrals are quadratic)."""
    return np.diag(params.inertia.inv_diag), np.eye(3)


def momentum_scale(params: GyrostatParams, state: StateLike | None = None) -> float:
    """Natural momentum magnitude max(|M|, |mu|), never zero."""
    s = params.mu_norm
    if state is not None:
        s = max(s, float(np.linalg.norm(as_vec(state))))
    return s if s > 0 else 1.0


def residual_scale(params: GyrostatParams, state: StateLike) -> float:
    """Magnitude of the rhs terms at ``state``: (|M| + |mu|)^2 / I3."""
    m = float(np.linalg.norm(as_vec(state)))
    return (m + params.mu_norm) ** 2 / params.inertia.i3
