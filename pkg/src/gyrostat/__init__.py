"""Stability of uniform rotations of a torque-free gyrostat."""

from .classifier import (
    ClosedForm,
    Lyapunov,
    ReportInconsistency,
    StabilityReport,
    classify_closed_form,
    singular_points,
    stable_intervals,
    synthesize,
)
from .core import (
    BodyState,
    ConservedPair,
    GyrostatParams,
    InertiaSpectrum,
    ParameterError,
    conserved,
    f1,
    f2,
    rhs,
)
from .equilibria import (
    Equilibrium,
    EquilibriumFamily,
    FamilyError,
    FamilyTag,
    SingleIntegralVerdict,
    enumerate_families,
    family_point,
    integral_jacobian_rank_defect,
    is_equilibrium,
    single_integral_verdict,
)
from .isolation import (
    Isolation,
    IsolationVerdict,
    ReducedSystem,
    isolation_verdict,
    reduce_level_system,
    sample_level_set,
    sign_analysis,
)
from .linearization import Spectral, SpectralVerdict, eigenvalues3, jacobian_rhs, spectral_verdict
from .simulator import (
    EscapeResult,
    Trajectory,
    escape_experiment,
    integrate,
    projected_x_rate_squared,
)

__all__ = [
    "BodyState",
    "ClosedForm",
    "ConservedPair",
    "Equilibrium",
    "EquilibriumFamily",
    "EscapeResult",
    "FamilyError",
    "FamilyTag",
    "GyrostatParams",
    "InertiaSpectrum",
    "Isolation",
    "IsolationVerdict",
    "Lyapunov",
    "ParameterError",
    "ReducedSystem",
    "ReportInconsistency",
    "SingleIntegralVerdict",
    "Spectral",
    "SpectralVerdict",
    "StabilityReport",
    "Trajectory",
    "classify_closed_form",
    "conserved",
    "eigenvalues3",
    "enumerate_families",
    "escape_experiment",
    "f1",
    "f2",
    "family_point",
    "integral_jacobian_rank_defect",
    "integrate",
    "is_equilibrium",
    "isolation_verdict",
    "jacobian_rhs",
    "projected_x_rate_squared",
    "reduce_level_system",
    "rhs",
    "sample_level_set",
    "sign_analysis",
    "single_integral_verdict",
    "singular_points",
    "spectral_verdict",
    "stable_intervals",
    "synthesize",
]
