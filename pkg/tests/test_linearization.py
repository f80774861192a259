import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gyrostat.core import rhs
from gyrostat.equilibria import EquilibriumFamily, FamilyError, FamilyTag, enumerate_families, family_point
from gyrostat.linearization import (
    Spectral,
    eigenvalues3,
    jacobian_rhs,
    spectral_scale,
    spectral_verdict,
    spectral_verdict_at,
)
from tests.strategies import aligned_params, params, vectors

entries = st.floats(-100.0, 100.0, allow_nan=False, allow_infinity=False, allow_subnormal=False)
matrices = st.lists(entries, min_size=9, max_size=9).map(lambda v: np.array(v).reshape(3, 3))


def axis_point(p, axis, q):
    return family_point(p, EquilibriumFamily(FamilyTag.M12, axis), q)


def matched(ours, oracle, tol):
    """Greedy one-to-one matching of two eigenvalue lists."""
    left = list(oracle)
    for z in ours:
        k = int(np.argmin([abs(z - w) for w in left]))
        if abs(z - left[k]) > tol:
            return False
        left.pop(k)
    return True


class TestJacobian:
    def test_origin_entries(self, axis1):
        jac = jacobian_rhs(axis1, (0, 0, 0))
        expected = np.zeros((3, 3))
        expected[1, 2], expected[2, 1] = -1.0, 0.5
        np.testing.assert_allclose(jac, expected, atol=1e-15)

    def test_finite_differences(self, generic, rng):
        for m in rng.normal(scale=2.0, size=(100, 3)):
            h = 1e-6
            fd = np.column_stack(
                [(rhs(generic, m + h * e) - rhs(generic, m - h * e)) / (2 * h) for e in np.eye(3)]
            )
            np.testing.assert_allclose(jacobian_rhs(generic, m), fd, atol=1e-8)

    def test_m1_spectrum(self, generic):
        eig = eigenvalues3(jacobian_rhs(generic, -generic.mu_vec))
        w = np.linalg.norm(generic.mu_vec / generic.I)
        assert sorted(abs(z.imag) for z in eig) == pytest.approx([0, w, w], abs=1e-12)
        assert max(abs(z.real) for z in eig) <= 1e-12


class TestEigenvalues:
    def test_zero_matrix(self):
        assert eigenvalues3(np.zeros((3, 3))) == (0j, 0j, 0j)

    @pytest.mark.parametrize("a, b", [(1 / 3, 1 / 6), (2.0, 8.0), (-1.0, 0.5), (0.0, 3.0)])
    def test_antidiagonal_block(self, a, b):
        m = np.zeros((3, 3))
        m[1, 2], m[2, 1] = a, b
        eig = eigenvalues3(m)
        root = complex(np.sqrt(complex(a * b)))
        assert matched(eig, [0, root, -root], 1e-12)

    def test_axis1_spot_value(self, axis1):
        eig = eigenvalues3(jacobian_rhs(axis1, (-2, 0, 0)))
        assert eig[0].real == pytest.approx(1 / math.sqrt(18), abs=1e-12)
        assert matched(eig, [1 / math.sqrt(18), 0, -1 / math.sqrt(18)], 1e-12)

    def test_conjugate_pairs_exact(self, axis1):
        eig = eigenvalues3(jacobian_rhs(axis1, (0, 0, 0)))
        complex_ones = [z for z in eig if z.imag != 0]
        assert len(complex_ones) == 2
        assert complex_ones[0] == complex_ones[1].conjugate()

    def test_sorted_by_real_part(self, rng):
        for m in rng.normal(size=(50, 3, 3)):
            re = [z.real for z in eigenvalues3(m)]
            assert re == sorted(re, reverse=True)

    @pytest.mark.parametrize(
        "m",
        [
            np.eye(3),
            np.diag([1.0, 1.0, 2.0]),
            np.array([[2.0, 1.0, 0.0], [0.0, 2.0, 1.0], [0.0, 0.0, 2.0]]),
            np.diag([1e-200, 2e-200, -3e-200]),
            np.diag([1e200, -2e200, 5e199]),
        ],
    )
    def test_degenerate_and_extreme(self, m):
        eig = np.array(eigenvalues3(m))
        oracle = np.linalg.eigvals(m)
        scale = np.abs(m).max()
        # a triple root is only determined to cube-root accuracy
        assert matched(eig, oracle, 1e-5 * scale)
        assert abs(eig.sum() - np.trace(m)) <= 1e-12 * scale

    @given(matrices)
    def test_against_numpy(self, m):
        eig = np.array(eigenvalues3(m))
        scale = max(np.abs(m).max(), 1e-300)
        char = [np.linalg.det(z * np.eye(3) - m) for z in eig]
        assert max(abs(c) for c in char) <= 1e-10 * scale**3 * 10
        assert abs(eig.sum().real - np.trace(m)) <= 1e-10 * 3 * scale
        assert abs(np.prod(eig).real - np.linalg.det(m)) <= 1e-10 * 6 * scale**3

    @given(params(), vectors)
    def test_jacobian_spectrum_matches_numpy(self, p, m):
        jac = jacobian_rhs(p, m)
        scale = float(np.linalg.norm(jac))
        if scale == 0:
            return
        ours = eigenvalues3(jac)
        oracle = np.linalg.eigvals(jac)
        # Defective spectra (double roots) lose half the digits in any solver.
        assert matched(ours, oracle, 1e-6 * scale)
        assert max(z.real for z in ours) == pytest.approx(max(oracle.real), abs=1e-6 * scale)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            eigenvalues3(np.eye(2))
        with pytest.raises(ValueError):
            eigenvalues3(np.full((3, 3), np.nan))


class TestSpectralVerdict:
    def test_axis1_unstable_interior(self, axis1):
        v = spectral_verdict(axis1, axis_point(axis1, 1, -2.0))
        assert v.verdict is Spectral.UNSTABLE
        assert v.max_real == pytest.approx(1 / math.sqrt(18), abs=1e-9)

    def test_axis1_origin_inconclusive(self, axis1):
        v = spectral_verdict(axis1, axis_point(axis1, 1, 0.0))
        assert v.verdict is Spectral.INCONCLUSIVE
        # lambda^2 = ab = -1/2
        assert sorted(abs(z.imag) for z in v.eigenvalues) == pytest.approx(
            [0, math.sqrt(0.5), math.sqrt(0.5)], abs=1e-12
        )

    @pytest.mark.parametrize("beta", [-2.0, -0.1, 0.3, 4.0])
    def test_m4_unstable(self, axis1, beta):
        eq = family_point(axis1, EquilibriumFamily(FamilyTag.M4), beta)
        assert spectral_verdict(axis1, eq).verdict is Spectral.UNSTABLE

    def test_agrees_at_state(self, axis1):
        eq = axis_point(axis1, 1, -2.0)
        assert spectral_verdict_at(axis1, eq.vec) == spectral_verdict(axis1, eq)

    def test_scale_is_frobenius(self, axis1):
        jac = jacobian_rhs(axis1, (0, 0, 0))
        assert spectral_scale(jac) == pytest.approx(math.sqrt(1.25))

    @given(aligned_params(), st.floats(-5.0, 5.0))
    def test_zero_eigenvalue_at_equilibria(self, p, v):
        for family in enumerate_families(p):
            try:
                eq = family_point(p, family, None if family.tag is FamilyTag.M1 else v)
            except FamilyError:
                continue
            sv = spectral_verdict(p, eq)
            assert min(abs(z) for z in sv.eigenvalues) <= 1e-8 * sv.scale
