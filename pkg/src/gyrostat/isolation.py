"""Isolation of a uniform rotation on the joint level set of F1 and F2.

An equilibrium that is an isolated root of ``F1 = F1(Me), F2 = F2(Me)`` is
stable with respect to {F1, F2}, hence Lyapunov stable.  For mu along a
principal axis the level system is linear in the squared off-axis momenta and
is solved exactly; for any mu a sampling oracle minimizes the level residual
over small spheres around the equilibrium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .core import GyrostatParams, f1, f2, momentum_scale
from .equilibria import Equilibrium

COEFF_TOL = 1e-12
MAX_HALVINGS = 40
DEFAULT_RADII = (1e-1, 1e-2, 1e-3)


class ReductionError(ValueError):
    """The exact reduction needs mu along exactly one principal axis."""


class Isolation(Enum):
    ISOLATED = "Isolated"
    NOT_ISOLATED = "NotIsolated"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Quadratic:
    """a x^2 + b x + c, with per-coefficient magnitudes for zero tests."""

    a: float
    b: float
    c: float
    mag: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __call__(self, x):
        return (self.a * x + self.b) * x + self.c

    @property
    def coeffs(self) -> tuple[float, float, float]:
        return self.a, self.b, self.c

    def _is_zero(self, k: int, tol: float) -> bool:
        return abs(self.coeffs[k]) <= tol * self.mag[k]

    def sign_near_zero(self, side: int, tol: float = COEFF_TOL) -> int:
        """Sign of the polynomial for x -> 0 on ``side`` (+1 or -1)."""
        if not self._is_zero(2, tol):
            return int(np.sign(self.c))
        if not self._is_zero(1, tol):
            return int(np.sign(self.b)) * side
        if not self._is_zero(0, tol):
            return int(np.sign(self.a))
        return 0

    def vanishes_at_zero(self, tol: float = COEFF_TOL) -> bool:
        return self._is_zero(2, tol)

    def linear_vanishes(self, tol: float = COEFF_TOL) -> bool:
        return self._is_zero(1, tol)


@dataclass(frozen=True)
class ReducedSystem:
    """Squared off-axis momenta along the joint level set, as functions of x.

    ``x`` is the on-axis momentum minus its equilibrium value; ``u`` and ``v``
    give the squares of the two off-axis components (ascending axis order).
    """

    axis: int
    base: Equilibrium
    u: Quadratic
    v: Quadratic

    @property
    def off_axes(self) -> tuple[int, int]:
        i, j = (a for a in (1, 2, 3) if a != self.axis)
        return i, j

    @property
    def u_coeffs(self) -> tuple[float, float, float]:
        return self.u.coeffs

    @property
    def v_coeffs(self) -> tuple[float, float, float]:
        return self.v.coeffs

    def reconstruct(self, x: float, signs: tuple[float, float] | None = None) -> np.ndarray:
        """State on both level sets at offset ``x``.

        Branch signs default to those of the base point (``+`` where it is 0).
        """
        ux, vx = self.u(x), self.v(x)
        if ux < 0 or vx < 0:
            raise ValueError(f"x={x} is not admissible (u={ux}, v={vx})")
        base = self.base.vec
        k = self.axis - 1
        i, j = (a - 1 for a in self.off_axes)
        if signs is None:
            signs = tuple(1.0 if base[n] >= 0 else -1.0 for n in (i, j))
        m = base.copy()
        m[k] += x
        m[i] = signs[0] * math.sqrt(ux)
        m[j] = signs[1] * math.sqrt(vx)
        return m


@dataclass(frozen=True)
class IsolationVerdict:
    verdict: Isolation
    case_tag: str
    witness: tuple[float, np.ndarray] | None = None
    side: int | None = None  # admissible side of x when not isolated


def reduce_level_system(params: GyrostatParams, equilibrium: Equilibrium) -> ReducedSystem:
    """Solve the two level equations for the squared off-axis components.

    With ``x = M_k - M_ke`` and mu along axis ``k``, the level conditions read

        dA / I_i + dB / I_j = -(x^2 + 2 x M_ke) / I_k
        dA + dB            = -(x^2 + 2 x M_ke) - 2 mu_k x

    for ``dA = M_i^2 - M_ie^2`` and ``dB = M_j^2 - M_je^2``.
    """
    axis = params.alignment.axis
    if axis is None:
        raise ReductionError(
            f"mu={params.mu} is not along a single principal axis; use sample_level_set"
        )
    k = axis - 1
    i, j = (n for n in range(3) if n != k)
    I = params.I
    ii, ij, ik = I[i], I[j], I[k]
    me = equilibrium.vec
    mk = me[k]
    muk = params.effective_mu[k]

    # P(x) = p2 x^2 + p1 x, Q(x) = q2 x^2 + q1 x
    p2, p1 = -1.0 / ik, -2.0 * mk / ik
    q2, q1 = -1.0, -2.0 * mk - 2.0 * muk
    p1_mag, q1_mag = 2.0 * abs(mk) / ik, 2.0 * (abs(mk) + abs(muk))

    # Cramer: dA = I_i (I_j P - Q) / (I_j - I_i), dB = Q - dA
    f = ii / (ij - ii)
    da2, da1 = f * (ij * p2 - q2), f * (ij * p1 - q1)
    db2, db1 = q2 - da2, q1 - da1
    da1_mag = abs(f) * (ij * p1_mag + q1_mag)
    db1_mag = q1_mag + da1_mag

    ci, cj = me[i] ** 2, me[j] ** 2
    c_mag = max(momentum_scale(params, me) ** 2, np.finfo(float).tiny)
    u = Quadratic(da2, da1, ci, (abs(da2), max(da1_mag, np.finfo(float).tiny), c_mag))
    v = Quadratic(db2, db1, cj, (abs(db2), max(db1_mag, np.finfo(float).tiny), c_mag))
    return ReducedSystem(axis, equilibrium, u, v)


def level_residual(params: GyrostatParams, base: np.ndarray, m: np.ndarray) -> float:
    """Largest scaled deviation of (F1, F2) at ``m`` from their values at ``base``."""
    s2 = momentum_scale(params, base) ** 2
    d1 = abs(f1(params, m) - f1(params, base)) / (s2 / params.inertia.i3)
    d2 = abs(f2(params, m) - f2(params, base)) / s2
    return max(d1, d2)


def witness_start(params: GyrostatParams, base: np.ndarray) -> float:
    gap = params.inertia.i1 - params.inertia.i2
    return 1e-4 * max(1.0, float(np.linalg.norm(base)), params.mu_norm / gap)


def admissible_sides(reduced: ReducedSystem, tol: float = COEFF_TOL) -> list[int]:
    return [
        s
        for s in (1, -1)
        if reduced.u.sign_near_zero(s, tol) >= 0 and reduced.v.sign_near_zero(s, tol) >= 0
    ]


def _case_tag(reduced: ReducedSystem, isolated: bool, tol: float) -> str:
    if not (reduced.u.vanishes_at_zero(tol) and reduced.v.vanishes_at_zero(tol)):
        return "III" if isolated else "II"
    if reduced.u.linear_vanishes(tol) or reduced.v.linear_vanishes(tol):
        return "I.1" if isolated else "I.2"
    return "I.3-positive" if reduced.u.b * reduced.v.b < 0 else "I.3-negative"


def sign_analysis(
    reduced: ReducedSystem, params: GyrostatParams | None = None, tol: float = COEFF_TOL
) -> IsolationVerdict:
    """Decide isolation from the signs of u and v for small |x| on each side.

    A NotIsolated verdict carries a witness ``(x, state)``: a concrete point on
    both level sets, found by halving x from a small start on the admissible side.
    """
    sides = admissible_sides(reduced, tol)
    if not sides:
        return IsolationVerdict(Isolation.ISOLATED, _case_tag(reduced, True, tol))
    tag = _case_tag(reduced, False, tol)
    side = sides[0]
    base = reduced.base.vec
    if params is not None:
        x = side * witness_start(params, base)
    else:
        x = side * 1e-4 * max(1.0, float(np.linalg.norm(base)))
    for _ in range(MAX_HALVINGS + 1):
        if reduced.u(x) >= 0 and reduced.v(x) >= 0:
            return IsolationVerdict(
                Isolation.NOT_ISOLATED, tag, (x, reduced.reconstruct(x)), side
            )
        x *= 0.5
    return IsolationVerdict(Isolation.INCONCLUSIVE, tag, None, side)


def isolation_verdict(
    params: GyrostatParams, equilibrium: Equilibrium, tol: float = COEFF_TOL
) -> IsolationVerdict:
    """Exact verdict for axis-aligned mu, sampling oracle otherwise."""
    if params.alignment.axis is not None:
        return sign_analysis(reduce_level_system(params, equilibrium), params, tol)
    return sample_level_set(params, equilibrium).as_verdict()


# --- sampling oracle -------------------------------------------------------


def fibonacci_sphere(n: int = 32) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    r = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


@dataclass
class SamplingReport:
    radii: tuple[float, ...]
    min_residual: list[float]  # min g per radius
    argmin: list[np.ndarray]
    verdict: Isolation
    level_scale: float
    notes: list[str] = field(default_factory=list)

    def as_verdict(self) -> IsolationVerdict:
        witness = None
        if self.verdict is Isolation.NOT_ISOLATED:
            witness = (self.radii[-1], self.argmin[-1])
        return IsolationVerdict(self.verdict, "Numeric", witness)


def level_scale(params: GyrostatParams, base: np.ndarray) -> float:
    """Magnitude of F1 and F2 near ``base``; radii are compared to sqrt of it."""
    s = momentum_scale(params, base)
    return s * s * max(1.0, 1.0 / params.inertia.i3)


def _minimize_on_sphere(
    params: GyrostatParams, base: np.ndarray, radius: float, starts: np.ndarray, budget: int
) -> tuple[float, np.ndarray]:
    """Batched projected Gauss-Newton (Levenberg damped) on |M - base| = radius."""
    inv_i = params.inertia.inv_diag
    mu = params.mu_vec
    f1e, f2e = f1(params, base), f2(params, base)

    def residuals(m):
        r1 = 0.5 * np.einsum("nk,nk->n", m, m * inv_i) - f1e
        n = m + mu
        r2 = 0.5 * np.einsum("nk,nk->n", n, n) - f2e
        return r1, r2

    d = starts / np.linalg.norm(starts, axis=1, keepdims=True)
    m = base + radius * d
    r1, r2 = residuals(m)
    g = r1 * r1 + r2 * r2
    damp = np.full(len(d), 1e-3 * level_scale(params, base))
    with np.errstate(all="ignore"):
        g, m = _gauss_newton_loop(residuals, inv_i, mu, base, radius, d, m, r1, r2, g, damp, budget)
    best = int(np.argmin(g))
    return float(g[best]), m[best]


def _gauss_newton_loop(residuals, inv_i, mu, base, radius, d, m, r1, r2, g, damp, budget):
    for _ in range(budget):
        g1 = m * inv_i
        g2 = m + mu
        # Project gradients onto the tangent plane of the sphere.
        g1 = g1 - np.einsum("nk,nk->n", g1, d)[:, None] * d
        g2 = g2 - np.einsum("nk,nk->n", g2, d)[:, None] * d
        a11 = np.einsum("nk,nk->n", g1, g1) + damp
        a22 = np.einsum("nk,nk->n", g2, g2) + damp
        a12 = np.einsum("nk,nk->n", g1, g2)
        det = a11 * a22 - a12 * a12
        det = np.where(det == 0.0, np.finfo(float).tiny, det)
        y1 = (a22 * r1 - a12 * r2) / det
        y2 = (a11 * r2 - a12 * r1) / det
        step = -(y1[:, None] * g1 + y2[:, None] * g2)
        trial = m + step - base
        d_new = trial / np.linalg.norm(trial, axis=1, keepdims=True)
        m_new = base + radius * d_new
        n1, n2 = residuals(m_new)
        g_new = n1 * n1 + n2 * n2
        better = np.isfinite(g_new) & (g_new < g)
        m = np.where(better[:, None], m_new, m)
        d = np.where(better[:, None], d_new, d)
        r1 = np.where(better, n1, r1)
        r2 = np.where(better, n2, r2)
        g = np.where(better, g_new, g)
        damp = np.where(better, damp * 0.3, damp * 10.0)
        if np.min(g) == 0.0:
            break
    return g, m


def sample_level_set(
    params: GyrostatParams,
    equilibrium: Equilibrium,
    radii: Sequence[float] = DEFAULT_RADII,
    budget: int = 60,
    n_starts: int = 32,
) -> SamplingReport:
    """Empirical isolation test on spheres of decreasing radius.

    NotIsolated when the level residual ``g`` reaches numerical zero on every
    sphere; Isolated when ``g >= (1e-4 L)^2 (r^2 / L)^2`` holds on every sphere
    below the largest, i.e. ``sqrt(g)`` stays above a fixed fraction of the
    quadratic growth of the integrals.  Anything else is Inconclusive.
    """
    radii = tuple(float(r) for r in radii)
    if not radii or any(r <= 0 for r in radii) or any(
        b >= a for a, b in zip(radii, radii[1:])
    ):
        raise ValueError("radii must be positive and strictly decreasing")
    base = equilibrium.vec
    L = level_scale(params, base)
    starts = fibonacci_sphere(n_starts)
    mins, args = [], []
    for r in radii:
        g, m = _minimize_on_sphere(params, base, r, starts, budget)
        mins.append(g)
        args.append(m)
    zero = (1e-9 * L) ** 2
    if all(g <= zero for g in mins):
        verdict = Isolation.NOT_ISOLATED
    elif len(radii) > 1 and all(
        g >= (1e-4 * L) ** 2 * (r * r / L) ** 2 for g, r in zip(mins[1:], radii[1:])
    ):
        verdict = Isolation.ISOLATED
    else:
        verdict = Isolation.INCONCLUSIVE
    return SamplingReport(radii, mins, args, verdict, L)
