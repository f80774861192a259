"""Stability classification of uniform rotations for mu along a principal axis.

Three routes are combined into one :class:`StabilityReport`: the closed-form
intervals for the merged axis family, isolation on the level set of (F1, F2),
and the spectrum of the linearization.  The two singular rotations, which none
of these decide, are settled by the escape experiment.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import Alignment, GyrostatParams, momentum_scale
from .equilibria import (
    COINCIDENCE_TOL,
    Equilibrium,
    EquilibriumFamily,
    FamilyTag,
    family_point,
)
from .isolation import COEFF_TOL, Isolation, IsolationVerdict, isolation_verdict
from .linearization import SPECTRAL_TOL, Spectral, SpectralVerdict, spectral_verdict
from .simulator import EscapeResult, escape_experiment

BOUNDARY_TOL = 1e-12


class ClosedForm(Enum):
    STABLE = "StableWrtF1F2"
    NOT_STABLE = "NotStableWrtF1F2"
    BOUNDARY = "BoundaryWithinTolerance"
    UNSUPPORTED = "Unsupported"


class Lyapunov(Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    UNDECIDED = "Undecided"


class ReportInconsistency(AssertionError):
    """A synthesized report violates one of the cross-route invariants."""


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool
    hi_closed: bool

    def contains(self, q: float) -> bool:
        above = q >= self.lo if self.lo_closed else q > self.lo
        below = q <= self.hi if self.hi_closed else q < self.hi
        return above and below


_INF = float("inf")


def stable_intervals(params: GyrostatParams) -> list[Interval]:
    """q-intervals where (q e_k) is stable w.r.t. {F1, F2}, endpoints as printed."""
    axis = params.alignment.axis
    if axis is None:
        raise ValueError("closed-form intervals need mu along one principal axis")
    i1, i2, i3 = params.I
    mu = params.effective_mu[axis - 1]
    if axis == 1:
        a, b = -i1 * mu / (i1 - i2), -i1 * mu / (i1 - i3)
        if mu > 0:
            return [Interval(-_INF, a, False, False), Interval(b, _INF, True, False)]
        return [Interval(-_INF, b, False, False), Interval(a, _INF, True, False)]
    if axis == 2:
        a, b = -i2 * mu / (i2 - i3), i2 * mu / (i1 - i2)
        if mu > 0:
            return [Interval(a, b, True, True)]
        return [Interval(b, a, True, True)]
    a, b = i3 * mu / (i1 - i3), i3 * mu / (i2 - i3)
    if mu > 0:
        return [Interval(-_INF, a, False, True), Interval(b, _INF, False, False)]
    return [Interval(-_INF, b, False, False), Interval(a, _INF, True, False)]


def endpoints(params: GyrostatParams) -> list[float]:
    ends = {iv.lo for iv in stable_intervals(params)} | {iv.hi for iv in stable_intervals(params)}
    return sorted(e for e in ends if np.isfinite(e))


def singular_points(params: GyrostatParams) -> list[Equilibrium]:
    """Spectrally stable rotations that are not stable w.r.t. {F1, F2}."""
    axis = params.alignment.axis
    if axis is None or axis == 2:
        return []
    i1, i2, i3 = params.I
    mu = params.effective_mu
    q = -i1 * mu[0] / (i1 - i2) if axis == 1 else i3 * mu[2] / (i2 - i3)
    return [family_point(params, EquilibriumFamily(FamilyTag.M12, axis), q)]


def is_singular(params: GyrostatParams, equilibrium: Equilibrium) -> bool:
    m = equilibrium.vec
    tol = COINCIDENCE_TOL * momentum_scale(params, m)
    return any(np.linalg.norm(sp.vec - m) <= tol for sp in singular_points(params))


def _on_axis(params: GyrostatParams, m: np.ndarray, axis: int) -> bool:
    off = np.delete(m, axis - 1)
    return bool(np.all(np.abs(off) <= COINCIDENCE_TOL * momentum_scale(params, m)))


def printed_verdict(params: GyrostatParams, equilibrium: Equilibrium) -> ClosedForm:
    """Closed-form verdict with literal endpoint inclusion and no tolerance band."""
    axis = params.alignment.axis
    if axis is None:
        return ClosedForm.UNSUPPORTED
    m = equilibrium.vec
    if _on_axis(params, m, axis):
        q = float(m[axis - 1])
        stable = any(iv.contains(q) for iv in stable_intervals(params))
        return ClosedForm.STABLE if stable else ClosedForm.NOT_STABLE
    # Off-axis families: only the one with a free middle component is unstable.
    free = [n for n in range(3) if n != axis - 1 and abs(m[n]) > 0]
    if free == [1]:
        return ClosedForm.NOT_STABLE
    return ClosedForm.STABLE


def classify_closed_form(
    params: GyrostatParams, equilibrium: Equilibrium, tol: float = BOUNDARY_TOL
) -> ClosedForm:
    """Closed-form verdict w.r.t. {F1, F2} for axis-aligned mu.

    Points within ``tol`` (relative) of an interval endpoint are reported as
    BoundaryWithinTolerance, except the singular rotation, which is not an
    isolated root of the level system and so is never stable w.r.t. {F1, F2}.
    """
    axis = params.alignment.axis
    if axis is None:
        return ClosedForm.UNSUPPORTED
    if is_singular(params, equilibrium):
        return ClosedForm.NOT_STABLE
    m = equilibrium.vec
    if _on_axis(params, m, axis):
        q = float(m[axis - 1])
        if any(abs(q - e) <= tol * max(abs(e), np.finfo(float).tiny) for e in endpoints(params)):
            return ClosedForm.BOUNDARY
    return printed_verdict(params, equilibrium)


@dataclass
class StabilityReport:
    equilibrium: Equilibrium
    closed_form: ClosedForm
    printed: ClosedForm
    isolation: IsolationVerdict
    spectral: SpectralVerdict
    singular_case: bool
    lyapunov: Lyapunov
    basis: str
    escape: EscapeResult | None = None

    @property
    def boundary_flag(self) -> bool:
        return self.closed_form is ClosedForm.BOUNDARY

    def violations(self) -> list[str]:
        bad = []
        if self.closed_form is ClosedForm.STABLE and self.lyapunov is not Lyapunov.STABLE:
            bad.append("closed-form stable but Lyapunov verdict is not Stable")
        if self.spectral.verdict is Spectral.UNSTABLE and self.lyapunov is not Lyapunov.UNSTABLE:
            bad.append("spectrally unstable but Lyapunov verdict is not Unstable")
        if self.singular_case:
            if self.closed_form is not ClosedForm.NOT_STABLE:
                bad.append("singular case without NotStable closed form")
            if self.spectral.verdict is not Spectral.INCONCLUSIVE:
                bad.append("singular case is spectrally unstable")
            if self.lyapunov is not Lyapunov.UNSTABLE:
                bad.append("singular case not shown unstable by escape")
        if (
            self.closed_form is ClosedForm.STABLE
            and self.isolation.verdict is Isolation.NOT_ISOLATED
        ):
            bad.append("closed-form stable but not isolated")
        if (
            self.isolation.verdict is Isolation.ISOLATED
            and self.spectral.verdict is Spectral.UNSTABLE
        ):
            bad.append("isolated on its level set but spectrally unstable")
        return bad

    def validate(self) -> "StabilityReport":
        bad = self.violations()
        if bad:
            raise ReportInconsistency("; ".join(bad))
        return self


def _decide(closed, isolation, spectral, escape) -> tuple[Lyapunov, str]:
    if closed is ClosedForm.STABLE:
        return Lyapunov.STABLE, "closed-form"
    if spectral.verdict is Spectral.UNSTABLE:
        return Lyapunov.UNSTABLE, "spectral"
    numeric = isolation.case_tag == "Numeric"
    if isolation.verdict is Isolation.ISOLATED and not numeric:
        return Lyapunov.STABLE, "isolation"
    if escape is not None and escape.escaped:
        return Lyapunov.UNSTABLE, "singular-escape"
    if isolation.verdict is Isolation.ISOLATED:
        return Lyapunov.STABLE, "isolation-numeric"
    return Lyapunov.UNDECIDED, "none"


def synthesize(
    params: GyrostatParams,
    equilibrium: Equilibrium,
    *,
    boundary_tol: float = BOUNDARY_TOL,
    spectral_tol: float = SPECTRAL_TOL,
    coeff_tol: float = COEFF_TOL,
    escape_dt: float = 1e-3,
    escape_t_max: float = 1e3,
    validate: bool = True,
) -> StabilityReport:
    """Run every route at ``equilibrium`` and combine them into a Lyapunov verdict.

    Order of precedence: closed-form stability, spectral instability, exact
    isolation, the escape experiment (singular rotations only), then numerical
    isolation.  With ``validate`` the report invariants are enforced.

    Raises:
        ReportInconsistency: if the routes contradict each other.
    """
    closed = classify_closed_form(params, equilibrium, boundary_tol)
    printed = printed_verdict(params, equilibrium)
    isolation = isolation_verdict(params, equilibrium, coeff_tol)
    spectral = spectral_verdict(params, equilibrium, spectral_tol)
    # Within rounding of the singular point the spectrum may already be
    # unstable; the singular case is the spectrally stable one.
    singular = (
        params.alignment in (Alignment.AXIS1, Alignment.AXIS3)
        and spectral.verdict is Spectral.INCONCLUSIVE
        and is_singular(params, equilibrium)
    )
    escape = None
    if singular:
        escape = escape_experiment(params, equilibrium, dt=escape_dt, t_max=escape_t_max)
    lyap, basis = _decide(closed, isolation, spectral, escape)
    report = StabilityReport(
        equilibrium, closed, printed, isolation, spectral, singular, lyap, basis, escape
    )
    return report.validate() if validate else report
