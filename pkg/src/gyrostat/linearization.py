"""Linearization of the gyrostat flow and spectral stability verdicts."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import GyrostatParams, StateLike, as_vec
from .equilibria import Equilibrium

SPECTRAL_TOL = 1e-8


class Spectral(Enum):
    UNSTABLE = "SpectrallyUnstable"
    INCONCLUSIVE = "SpectrallyStableInconclusive"


@dataclass(frozen=True)
class SpectralVerdict:
    eigenvalues: tuple[complex, complex, complex]
    verdict: Spectral
    scale: float

    @property
    def max_real(self) -> float:
        return max(z.real for z in self.eigenvalues)


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def jacobian_rhs(params: GyrostatParams, state: StateLike) -> np.ndarray:
    """Matrix of h -> h x I^-1 M + (M + mu) x I^-1 h."""
    m = as_vec(state)
    w = m / params.I
    return -_skew(w) + _skew(m + params.mu_vec) @ np.diag(params.inertia.inv_diag)


def _cubic_real_roots(b: float, c: float, d: float) -> list[float]:
    """Real roots of x^3 + b x^2 + c x + d from the depressed form."""
    shift = b / 3.0
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if p == 0.0 and q == 0.0:
        return [-shift]
    if disc > 0.0 or p >= 0.0 or p * math.sqrt(-p) == 0.0:
        # Single real root; pick the cube-root branch free of cancellation.
        u = np.cbrt(-q / 2.0 - math.copysign(math.sqrt(disc), q))
        t = u - p / (3.0 * u) if u != 0.0 else 0.0
        return [t - shift]
    r = 2.0 * math.sqrt(-p / 3.0)
    arg = max(-1.0, min(1.0, 3.0 * q / (p * r)))
    phi = math.acos(arg) / 3.0
    return [r * math.cos(phi - 2.0 * math.pi * k / 3.0) - shift for k in range(3)]


def _polish(x: float, b: float, c: float, d: float, iters: int = 4) -> float:
    for _ in range(iters):
        f = ((x + b) * x + c) * x + d
        df = (3.0 * x + 2.0 * b) * x + c
        if df == 0.0:
            break
        step = f / df
        if not math.isfinite(step):
            break
        x_new = x - step
        f_new = ((x_new + b) * x_new + c) * x_new + d
        if abs(f_new) >= abs(f):
            break
        x = x_new
    return x


def _quadratic_roots(p: float, s: float) -> tuple[complex, complex]:
    """Roots of z^2 + p z + s without cancellation."""
    disc = p * p - 4.0 * s
    if disc >= 0.0:
        sq = math.sqrt(disc)
        t = -0.5 * (p + math.copysign(sq, p))
        if t == 0.0:
            return 0j, 0j
        return complex(t), complex(s / t)
    sq = cmath.sqrt(disc)
    return (-p + sq) / 2.0, (-p - sq) / 2.0


def eigenvalues3(matrix: np.ndarray) -> tuple[complex, complex, complex]:
    """Eigenvalues of a real 3x3 matrix via its characteristic cubic.

    One real root is extracted in closed form, refined by Newton steps, and
    deflated; the remaining pair comes from a stable quadratic formula.
    Conjugate pairs come out exactly conjugate.
    """
    a = np.asarray(matrix, dtype=float)
    if a.shape != (3, 3) or not np.all(np.isfinite(a)):
        raise ValueError("expected a finite 3x3 matrix")
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return 0j, 0j, 0j
    a = a / scale
    tr = float(np.trace(a))
    minors = (
        a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        + a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
        + a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
    )
    det = float(a[0] @ np.cross(a[1], a[2]))
    b, c, d = -tr, float(minors), -det
    roots = [_polish(r, b, c, d) for r in _cubic_real_roots(b, c, d)]
    # Deflate by the largest real root; keeps the synthetic division stable.
    r0 = max(roots, key=abs)
    p = b + r0
    s = c + r0 * p
    if r0 != 0.0 and abs(d) > abs(s * r0) * 1e-3:
        s = -d / r0
    z1, z2 = _quadratic_roots(p, s)
    eig = [complex(r0), z1, z2]
    eig.sort(key=lambda z: (-z.real, -z.imag))
    return tuple(z * scale for z in eig)


def spectral_scale(matrix: np.ndarray) -> float:
    return max(float(np.linalg.norm(matrix)), np.finfo(float).tiny)


def spectral_verdict_at(
    params: GyrostatParams, state: StateLike, tol: float = SPECTRAL_TOL
) -> SpectralVerdict:
    jac = jacobian_rhs(params, state)
    eig = eigenvalues3(jac)
    scale = spectral_scale(jac)
    unstable = max(z.real for z in eig) > tol * scale
    return SpectralVerdict(eig, Spectral.UNSTABLE if unstable else Spectral.INCONCLUSIVE, scale)


def spectral_verdict(
    params: GyrostatParams, equilibrium: Equilibrium, tol: float = SPECTRAL_TOL
) -> SpectralVerdict:
    """Spectral verdict at a uniform rotation; stability is never conclusive."""
    return spectral_verdict_at(params, equilibrium.vec, tol)
