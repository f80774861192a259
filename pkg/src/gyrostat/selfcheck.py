"""Cross-module invariant suite behind the ``selfcheck`` command."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .classifier import (
    ClosedForm,
    Lyapunov,
    ReportInconsistency,
    classify_closed_form,
    endpoints,
    singular_points,
    synthesize,
)
from .core import GyrostatParams, gradients, rhs, rhs_auxiliary, shift_state
from .equilibria import (
    ALIGNED_OFF_AXIS,
    EquilibriumFamily,
    FamilyError,
    FamilyTag,
    enumerate_families,
    family_point,
    is_equilibrium,
    scaled_rank_defect,
)
from .isolation import Isolation, isolation_verdict, level_residual, reduce_level_system
from .linearization import Spectral, eigenvalues3, jacobian_rhs, spectral_verdict

SWEEP_POINTS = 101


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _random_states(params: GyrostatParams, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    scale = max(1.0, params.mu_norm)
    return rng.uniform(-2.0 * scale, 2.0 * scale, size=(n, 3))


def sweep_range(params: GyrostatParams) -> tuple[float, float]:
    """Symmetric q-range covering every finite interval endpoint with margin."""
    ends = [abs(e) for e in endpoints(params)] or [max(1.0, params.mu_norm)]
    half = 5.0 / 3.0 * max(ends)
    return -half, half


def _family_samples(params: GyrostatParams):
    values = np.linspace(-2.0, 2.0, 17)
    for family in enumerate_families(params):
        if family.tag is FamilyTag.M1:
            yield family_point(params, family)
            continue
        for v in values:
            try:
                yield family_point(params, family, float(v))
            except FamilyError:
                pass


def check_conservation_vector_field(params: GyrostatParams) -> CheckResult:
    worst = 0.0
    for m in _random_states(params, 200, 1):
        x = rhs(params, m)
        g1, g2 = gradients(params, m)
        size = np.linalg.norm(x) * max(np.linalg.norm(g1), np.linalg.norm(g2)) + 1e-300
        worst = max(worst, abs(x @ g1) / size, abs(x @ g2) / size)
    return CheckResult("rhs orthogonal to dF1, dF2", worst <= 1e-12, f"max={worst:.3g}")


def check_auxiliary_form(params: GyrostatParams) -> CheckResult:
    worst = 0.0
    for m in _random_states(params, 200, 2):
        a = rhs(params, m)
        b = rhs_auxiliary(params, shift_state(params, m))
        worst = max(worst, float(np.linalg.norm(a - b) / (np.linalg.norm(a) + 1.0)))
    return CheckResult("shifted form reproduces the flow", worst <= 1e-12, f"max={worst:.3g}")


def check_family_points(params: GyrostatParams) -> CheckResult:
    bad, worst, n = 0, 0.0, 0
    for eq in _family_samples(params):
        n += 1
        defect = scaled_rank_defect(params, eq.vec)
        worst = max(worst, defect)
        if not is_equilibrium(params, eq.vec) or defect > 1e-10:
            bad += 1
    return CheckResult(
        "family points are equilibria with rank-deficient dF", bad == 0,
        f"{n} points, max defect={worst:.3g}",
    )


def check_jacobian(params: GyrostatParams) -> CheckResult:
    worst = 0.0
    for m in _random_states(params, 50, 3):
        jac = jacobian_rhs(params, m)
        h = 1e-6 * max(1.0, float(np.linalg.norm(m)))
        fd = np.column_stack(
            [(rhs(params, m + h * e) - rhs(params, m - h * e)) / (2 * h) for e in np.eye(3)]
        )
        worst = max(worst, float(np.linalg.norm(jac - fd) / (np.linalg.norm(jac) + 1.0)))
    return CheckResult("Jacobian matches central differences", worst <= 1e-7, f"max={worst:.3g}")


def check_eigenvalues(params: GyrostatParams) -> CheckResult:
    worst = 0.0
    for m in _random_states(params, 100, 4):
        jac = jacobian_rhs(params, m)
        eig = np.array(eigenvalues3(jac))
        norm = float(np.linalg.norm(jac)) + 1e-300
        worst = max(
            worst,
            abs(eig.sum().real - np.trace(jac)) / norm,
            abs(np.prod(eig).real - np.linalg.det(jac)) / norm**3,
        )
    return CheckResult("eigenvalues reproduce trace and determinant", worst <= 1e-10,
                       f"max={worst:.3g}")


def _axis_sweep(params: GyrostatParams):
    axis = params.alignment.axis
    lo, hi = sweep_range(params)
    family = EquilibriumFamily(FamilyTag.M12, axis)
    return [family_point(params, family, float(q)) for q in np.linspace(lo, hi, SWEEP_POINTS)]


def check_route_agreement(params: GyrostatParams) -> CheckResult:
    """Closed-form stable iff isolated; closed-form unstable iff spectrally unstable."""
    ends = endpoints(params)
    axis = params.alignment.axis
    bad = []
    for eq in _axis_sweep(params):
        q = eq.parameter
        if any(abs(q - e) <= 1e-9 * max(1.0, abs(e)) for e in ends):
            continue
        closed = classify_closed_form(params, eq)
        iso = isolation_verdict(params, eq).verdict
        spectrum = spectral_verdict(params, eq).verdict
        singular = any(np.allclose(sp.vec, eq.vec) for sp in singular_points(params))
        if (closed is ClosedForm.STABLE) != (iso is Isolation.ISOLATED):
            bad.append(q)
        elif not singular and (closed is ClosedForm.NOT_STABLE) != (spectrum is Spectral.UNSTABLE):
            bad.append(q)
    return CheckResult(f"route agreement along axis {axis}", not bad,
                       f"disagreements at {bad[:5]}" if bad else f"{SWEEP_POINTS} points")


def check_reconstruction(params: GyrostatParams) -> CheckResult:
    worst, n = 0.0, 0
    families = [EquilibriumFamily(FamilyTag.M12, params.alignment.axis)]
    families += [EquilibriumFamily(t) for t in ALIGNED_OFF_AXIS[params.alignment]]
    for family in families:
        for v in np.linspace(-2.0, 2.0, 9):
            eq = family_point(params, family, float(v))
            red = reduce_level_system(params, eq)
            for x in np.linspace(-1.0, 1.0, 21):
                try:
                    m = red.reconstruct(float(x))
                except ValueError:
                    continue
                n += 1
                worst = max(worst, level_residual(params, eq.vec, m))
    return CheckResult("reduced system reconstructs level-set points", worst <= 1e-10,
                       f"{n} points, max={worst:.3g}")


def check_reports(params: GyrostatParams) -> CheckResult:
    """Every sweep report satisfies the report invariants, singular cases escape."""
    failures = []
    eqs = _axis_sweep(params) + singular_points(params)
    for eq in eqs:
        try:
            report = synthesize(params, eq)
        except ReportInconsistency as exc:
            failures.append(f"{eq.vec.tolist()}: {exc}")
            continue
        if report.singular_case and report.lyapunov is not Lyapunov.UNSTABLE:
            failures.append(f"{eq.vec.tolist()}: singular case did not escape")
    return CheckResult("stability reports are consistent", not failures,
                       "; ".join(failures[:3]) if failures else f"{len(eqs)} reports")


GENERAL_CHECKS: tuple[Callable[[GyrostatParams], CheckResult], ...] = (
    check_conservation_vector_field,
    check_auxiliary_form,
    check_family_points,
    check_jacobian,
    check_eigenvalues,
)
ALIGNED_CHECKS: tuple[Callable[[GyrostatParams], CheckResult], ...] = (
    check_route_agreement,
    check_reconstruction,
    check_reports,
)


def run_selfcheck(params: GyrostatParams) -> list[CheckResult]:
    checks = list(GENERAL_CHECKS)
    if params.alignment.axis is not None:
        checks += ALIGNED_CHECKS
    results = []
    for check in checks:
        try:
            result = check(params)
            results.append(replace(result, passed=bool(result.passed)))
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            results.append(CheckResult(check.__name__, False, f"{type(exc).__name__}: {exc}"))
    return results


def summarize(results: list[CheckResult]) -> tuple[int, int]:
    passed = sum(r.passed for r in results)
    return passed, len(results) - passed
