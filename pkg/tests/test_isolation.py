import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from gyrostat.classifier import ClosedForm, classify_closed_form, endpoints
from gyrostat.core import f1, f2
from gyrostat.equilibria import ALIGNED_OFF_AXIS, EquilibriumFamily, FamilyTag, family_point
from gyrostat.isolation import (
    Isolation,
    Quadratic,
    ReductionError,
    fibonacci_sphere,
    isolation_verdict,
    level_residual,
    reduce_level_system,
    sample_level_set,
    sign_analysis,
)
from tests.strategies import aligned_params, ref


def axis_point(p, q, axis=None):
    axis = p.alignment.axis if axis is None else axis
    return family_point(p, EquilibriumFamily(FamilyTag.M12, axis), q)


def brute_force_squares(p, eq, x):
    """Solve the two level equations for the squared off-axis momenta directly."""
    k = p.alignment.axis - 1
    i, j = (n for n in range(3) if n != k)
    base = eq.vec
    m_k = base[k] + x
    I, mu = p.I, p.effective_mu
    # sum M_n^2 / I_n = 2 F1,  sum (M_n + mu_n)^2 = 2 F2 with mu_i = mu_j = 0
    rhs1 = 2 * f1(p, base) - m_k**2 / I[k]
    rhs2 = 2 * f2(p, base) - (m_k + mu[k]) ** 2
    a = np.array([[1 / I[i], 1 / I[j]], [1.0, 1.0]])
    return np.linalg.solve(a, [rhs1, rhs2])


class TestReduction:
    def test_origin_axis1(self, axis1):
        red = reduce_level_system(axis1, axis_point(axis1, 0.0))
        x = np.linspace(-4, 4, 17)
        np.testing.assert_allclose(red.u(x), -(4 * x / 3) * (x + 3), atol=1e-13)
        np.testing.assert_allclose(red.v(x), (2 * x / 3) * (x / 2 + 3), atol=1e-13)

    @pytest.mark.parametrize("beta", [-2.0, 0.5, 3.0])
    def test_m5_axis1(self, axis1, beta):
        i1, i2, i3 = axis1.I
        red = reduce_level_system(axis1, family_point(axis1, EquilibriumFamily(FamilyTag.M5), beta))
        x = np.linspace(-2, 2, 9)
        np.testing.assert_allclose(red.u(x), -x**2 * i2 * (i1 - i3) / (i1 * (i2 - i3)), atol=1e-13)

    @pytest.mark.parametrize("beta", [-2.0, 0.5, 3.0])
    def test_m4_axis1(self, axis1, beta):
        i1, i2, i3 = axis1.I
        red = reduce_level_system(axis1, family_point(axis1, EquilibriumFamily(FamilyTag.M4), beta))
        x = np.linspace(-2, 2, 9)
        np.testing.assert_allclose(red.v(x), x**2 * i3 * (i1 - i2) / (i1 * (i2 - i3)), atol=1e-13)

    def test_requires_alignment(self, generic):
        eq = family_point(generic, EquilibriumFamily(FamilyTag.M1))
        with pytest.raises(ReductionError):
            reduce_level_system(generic, eq)

    def test_inadmissible_reconstruction(self, axis1):
        red = reduce_level_system(axis1, axis_point(axis1, 0.0))
        with pytest.raises(ValueError, match="admissible"):
            red.reconstruct(1.0)

    @given(aligned_params(), st.floats(-5.0, 5.0), st.floats(-3.0, 3.0))
    def test_matches_brute_force(self, p, q, x):
        eq = axis_point(p, q)
        red = reduce_level_system(p, eq)
        du, dv = brute_force_squares(p, eq, x)
        scale = (abs(q) + abs(x) + p.mu_norm + 1) ** 2
        assert red.u(x) == pytest.approx(du, abs=1e-10 * scale)
        assert red.v(x) == pytest.approx(dv, abs=1e-10 * scale)

    @given(aligned_params(), st.sampled_from([0, 1, 2]), st.floats(-5, 5), st.floats(-3, 3))
    def test_reconstruction_on_level_set(self, p, which, q, x):
        families = [EquilibriumFamily(FamilyTag.M12, p.alignment.axis)]
        families += [EquilibriumFamily(t) for t in ALIGNED_OFF_AXIS[p.alignment]]
        eq = family_point(p, families[which], q)
        red = reduce_level_system(p, eq)
        assume(red.u(x) >= 0 and red.v(x) >= 0)
        m = red.reconstruct(x)
        scale = max(1.0, (abs(x) / max(np.linalg.norm(eq.vec), p.mu_norm)) ** 2)
        assert level_residual(p, eq.vec, m) <= 1e-10 * scale


class TestQuadratic:
    def test_sign_near_zero(self):
        assert Quadratic(1.0, -2.0, 0.0).sign_near_zero(1) == -1
        assert Quadratic(1.0, -2.0, 0.0).sign_near_zero(-1) == 1
        assert Quadratic(-1.0, 0.0, 0.0).sign_near_zero(1) == -1
        assert Quadratic(0.0, 0.0, 3.0).sign_near_zero(-1) == 1
        assert Quadratic(0.0, 0.0, 0.0).sign_near_zero(1) == 0

    def test_tolerance_uses_magnitude(self):
        q = Quadratic(1.0, 1e-15, 0.0, (1.0, 10.0, 1.0))
        assert q.linear_vanishes() and q.sign_near_zero(-1) == 1


class TestSignAnalysis:
    def test_origin_isolated(self, axis1):
        v = sign_analysis(reduce_level_system(axis1, axis_point(axis1, 0.0)), axis1)
        assert v.verdict is Isolation.ISOLATED and v.case_tag == "I.3-positive"
        assert v.witness is None

    def test_singular_not_isolated(self, axis1):
        v = sign_analysis(reduce_level_system(axis1, axis_point(axis1, -3.0)), axis1)
        assert v.verdict is Isolation.NOT_ISOLATED and v.case_tag == "I.2"
        x, state = v.witness
        assert x != 0 and v.side == np.sign(x)
        assert level_residual(axis1, np.array([-3.0, 0, 0]), state) <= 1e-12
        assert np.linalg.norm(state - [-3, 0, 0]) > 0

    def test_other_endpoint_isolated(self, axis1):
        v = sign_analysis(reduce_level_system(axis1, axis_point(axis1, -1.5)), axis1)
        assert v.verdict is Isolation.ISOLATED and v.case_tag == "I.1"

    def test_interior_unstable_range(self, axis1):
        v = sign_analysis(reduce_level_system(axis1, axis_point(axis1, -2.0)), axis1)
        assert v.verdict is Isolation.NOT_ISOLATED and v.case_tag == "I.3-negative"

    @pytest.mark.parametrize("beta", [-3.0, -0.2, 0.7, 5.0])
    def test_m4_not_isolated(self, axis1, beta):
        eq = family_point(axis1, EquilibriumFamily(FamilyTag.M4), beta)
        v = isolation_verdict(axis1, eq)
        assert v.verdict is Isolation.NOT_ISOLATED and v.case_tag == "II"

    @pytest.mark.parametrize("beta", [-3.0, -0.2, 0.7, 5.0])
    def test_m5_isolated(self, axis1, beta):
        eq = family_point(axis1, EquilibriumFamily(FamilyTag.M5), beta)
        v = isolation_verdict(axis1, eq)
        assert v.verdict is Isolation.ISOLATED and v.case_tag == "III"

    def test_witness_without_params(self, axis1):
        v = sign_analysis(reduce_level_system(axis1, axis_point(axis1, -2.0)))
        assert v.verdict is Isolation.NOT_ISOLATED and v.witness is not None

    @pytest.mark.parametrize("mu", [(1, 0, 0), (0, 1, 0), (0, 0, 1), (-1, 0, 0), (0, -2, 0), (0, 0, -0.5)])
    def test_matches_closed_form_on_sweep(self, mu):
        p = ref(mu)
        ends = endpoints(p)
        for q in np.linspace(-5, 5, 201):
            if any(abs(q - e) <= 1e-9 for e in ends):
                continue
            eq = axis_point(p, q)
            closed = classify_closed_form(p, eq)
            iso = isolation_verdict(p, eq).verdict
            assert (closed is ClosedForm.STABLE) == (iso is Isolation.ISOLATED), q

    def test_case_boundaries_axis1(self, axis1):
        # Coefficients vanish at q(I1-I3)+I1 mu1 = 0 and q(I1-I2)+I1 mu1 = 0.
        tags = {q: isolation_verdict(axis1, axis_point(axis1, q)).case_tag for q in (-1.5, -3.0)}
        assert tags == {-1.5: "I.1", -3.0: "I.2"}


class TestSampling:
    def test_fibonacci_sphere(self):
        pts = fibonacci_sphere(32)
        np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0)
        assert abs(pts.mean(axis=0)).max() < 0.05

    def test_origin_isolated(self, axis1):
        rep = sample_level_set(axis1, axis_point(axis1, 0.0))
        assert rep.verdict is Isolation.ISOLATED
        assert rep.as_verdict().case_tag == "Numeric"

    def test_radii_validation(self, axis1):
        eq = axis_point(axis1, 0.0)
        for radii in ([], [1e-2, 1e-1], [1e-1, -1e-2]):
            with pytest.raises(ValueError):
                sample_level_set(axis1, eq, radii)

    @pytest.mark.parametrize("mu", [(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    def test_agrees_with_sign_analysis(self, mu):
        p = ref(mu)
        ends = endpoints(p)
        for q in np.linspace(-5, 5, 41):
            if any(abs(q - e) <= 1e-9 for e in ends):
                continue
            eq = axis_point(p, q)
            exact = isolation_verdict(p, eq).verdict
            assert sample_level_set(p, eq).verdict is exact, q

    @pytest.mark.parametrize("tag, beta, expected", [
        (FamilyTag.M4, 1.0, Isolation.NOT_ISOLATED),
        (FamilyTag.M5, 1.0, Isolation.ISOLATED),
    ])
    def test_off_axis_agreement(self, axis1, tag, beta, expected):
        eq = family_point(axis1, EquilibriumFamily(tag), beta)
        assert sample_level_set(axis1, eq).verdict is expected

    def test_generic_mu_uses_sampling(self, generic):
        eq = family_point(generic, EquilibriumFamily(FamilyTag.M2), 0.0)
        v = isolation_verdict(generic, eq)
        assert v.case_tag == "Numeric" and v.verdict is Isolation.ISOLATED

    def test_not_isolated_witness_on_level_set(self, axis1):
        eq = axis_point(axis1, -3.0)
        rep = sample_level_set(axis1, eq)
        assert rep.verdict is Isolation.NOT_ISOLATED
        r, m = rep.as_verdict().witness
        assert np.linalg.norm(m - eq.vec) == pytest.approx(r, rel=1e-9)
