import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gyrostat.core import rhs
from gyrostat.equilibria import (
    Equilibrium,
    EquilibriumFamily,
    FamilyError,
    FamilyTag,
    SingleIntegralVerdict,
    as_equilibrium,
    enumerate_families,
    families_containing,
    family_point,
    integral_jacobian_rank_defect,
    is_equilibrium,
    scaled_rank_defect,
    single_integral_verdict,
    sweep,
)
from tests.strategies import aligned_params, params, ref

M12 = FamilyTag.M12


def labels(p):
    return {f.label for f in enumerate_families(p)}


class TestEnumeration:
    def test_axis1(self, axis1):
        assert labels(axis1) == {"M1", "M2", "M4", "M5", "M12axis1"}

    def test_axis2(self, axis2):
        assert labels(axis2) == {"M1", "M2", "M3", "M5", "M12axis2"}

    def test_axis3(self, axis3):
        assert labels(axis3) == {"M1", "M2", "M3", "M4", "M12axis3"}

    def test_generic(self, generic):
        assert labels(generic) == {"M1", "M2"}

    def test_one_zero_component(self):
        assert labels(ref((1, 1, 0))) == {"M1", "M2", "M5"}

    def test_parse_round_trip(self, axis1):
        for family in enumerate_families(axis1):
            assert EquilibriumFamily.parse(family.label) == family

    def test_parse_rejects(self):
        with pytest.raises(FamilyError):
            EquilibriumFamily.parse("M7")
        with pytest.raises(FamilyError):
            EquilibriumFamily.parse("M12axis4")
        with pytest.raises(FamilyError):
            EquilibriumFamily(FamilyTag.M2, axis=1)


class TestFamilyPoint:
    def test_lambda_zero_is_origin(self, generic):
        eq = family_point(generic, EquilibriumFamily(FamilyTag.M2), 0.0)
        np.testing.assert_array_equal(eq.vec, [0, 0, 0])

    def test_m1(self, generic):
        eq = family_point(generic, EquilibriumFamily(FamilyTag.M1))
        np.testing.assert_array_equal(eq.vec, -generic.mu_vec)
        assert eq.parameter is None

    def test_m4_example(self, axis1):
        eq = family_point(axis1, EquilibriumFamily(FamilyTag.M4), 2.0)
        np.testing.assert_allclose(eq.vec, [-3, 2, 0])

    def test_m12(self, axis1):
        eq = family_point(axis1, EquilibriumFamily(M12, 1), -3.0)
        np.testing.assert_array_equal(eq.vec, [-3, 0, 0])

    @pytest.mark.parametrize("lam", [1 / 3, 1 / 2, 1.0])
    def test_pole_rejected(self, generic, lam):
        with pytest.raises(FamilyError, match="pole"):
            family_point(generic, EquilibriumFamily(FamilyTag.M2), lam)

    def test_invalid_family(self, axis1):
        with pytest.raises(FamilyError):
            family_point(axis1, EquilibriumFamily(FamilyTag.M3), 1.0)
        with pytest.raises(FamilyError):
            family_point(axis1, EquilibriumFamily(M12, 2), 1.0)

    def test_missing_parameter(self, axis1):
        with pytest.raises(FamilyError, match="needs"):
            family_point(axis1, EquilibriumFamily(FamilyTag.M4))

    def test_sweep_skips_poles(self, generic):
        eqs = sweep(generic, EquilibriumFamily(FamilyTag.M2), [0.0, 0.5, 0.7])
        assert [e.parameter for e in eqs] == [0.0, 0.7]


class TestIsEquilibrium:
    def test_examples(self, axis1):
        assert is_equilibrium(axis1, (0, 0, 0))
        assert not is_equilibrium(axis1, (0, 1, 0))

    def test_tol_must_be_positive(self, axis1):
        with pytest.raises(ValueError):
            is_equilibrium(axis1, (0, 0, 0), 0.0)

    @given(params(), st.floats(-3.0, 3.0))
    def test_m2_points(self, p, lam):
        try:
            eq = family_point(p, EquilibriumFamily(FamilyTag.M2), lam)
        except FamilyError:
            return
        assert is_equilibrium(p, eq.vec)

    @given(aligned_params(), st.floats(-5.0, 5.0))
    def test_aligned_family_points(self, p, v):
        for family in enumerate_families(p):
            try:
                eq = family_point(p, family, None if family.tag is FamilyTag.M1 else v)
            except FamilyError:
                continue
            assert is_equilibrium(p, eq.vec), family.label


class TestRankDefect:
    def test_m1(self, generic):
        assert integral_jacobian_rank_defect(generic, -generic.mu_vec) <= 1e-12

    def test_origin(self, axis1):
        assert integral_jacobian_rank_defect(axis1, (0, 0, 0)) <= 1e-12

    def test_matches_svd(self, generic, rng):
        from gyrostat.core import gradients

        for m in rng.normal(size=(100, 3)):
            j = np.vstack(gradients(generic, m))
            s = np.linalg.svd(j, compute_uv=False)
            assert integral_jacobian_rank_defect(generic, m) == pytest.approx(s[-1], rel=1e-10)

    def test_zero_iff_equilibrium(self, generic, rng):
        for m in rng.normal(scale=2.0, size=(200, 3)):
            eq = is_equilibrium(generic, m)
            assert eq == (scaled_rank_defect(generic, m) <= 1e-10)

    @given(aligned_params(), st.floats(-5.0, 5.0))
    def test_small_on_families(self, p, v):
        for family in enumerate_families(p):
            try:
                eq = family_point(p, family, None if family.tag is FamilyTag.M1 else v)
            except FamilyError:
                continue
            assert scaled_rank_defect(p, eq.vec) <= 1e-10


class TestSingleIntegral:
    def test_origin(self, generic):
        assert single_integral_verdict(generic, (0, 0, 0)) is SingleIntegralVerdict.STABLE_F1

    def test_anti_mu(self, generic):
        assert single_integral_verdict(generic, -generic.mu_vec) is SingleIntegralVerdict.STABLE_F2

    def test_neither(self, axis1):
        assert single_integral_verdict(axis1, (-3, 2, 0)) is SingleIntegralVerdict.NEITHER

    def test_accepts_equilibrium(self, axis1):
        eq = family_point(axis1, EquilibriumFamily(M12, 1), 0.0)
        assert single_integral_verdict(axis1, eq) is SingleIntegralVerdict.STABLE_F1

    def test_zero_mu_origin_is_f1(self):
        # Both gradients vanish at M = 0 = -mu; F1 is tested first.
        p = ref((0, 0, 0))
        assert single_integral_verdict(p, (0, 0, 0)) is SingleIntegralVerdict.STABLE_F1


class TestMembership:
    def test_q0_is_in_both_families(self, axis1):
        members = {e.family.label for e in families_containing(axis1, (0, 0, 0))}
        assert {"M2", "M12axis1"} <= members

    def test_as_equilibrium_prefers_axis_family(self, axis1):
        eq = as_equilibrium(axis1, (0, 0, 0))
        assert isinstance(eq, Equilibrium) and eq.family.label == "M12axis1"

    def test_m2_parameter_recovered(self, generic):
        eq = family_point(generic, EquilibriumFamily(FamilyTag.M2), 0.7)
        found = [e for e in families_containing(generic, eq.vec) if e.family.tag is FamilyTag.M2]
        assert found and found[0].parameter == pytest.approx(0.7, rel=1e-12)

    def test_non_equilibrium_rejected(self, axis1):
        with pytest.raises(FamilyError, match="not a uniform rotation"):
            as_equilibrium(axis1, (0, 1, 0))

    def test_family_points_have_zero_rhs(self, axis1):
        for family in enumerate_families(axis1):
            v = None if family.tag is FamilyTag.M1 else 1.5
            eq = family_point(axis1, family, v)
            np.testing.assert_allclose(rhs(axis1, eq.vec), 0, atol=1e-12)
