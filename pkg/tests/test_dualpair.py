"""Dual-pair plumbing: vectors, extended reals, covariance operators."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from compound_deviations.dualpair import (
    NEG_INF,
    POS_INF,
    CovarianceOperator,
    ExtendedReal,
    as_vector,
    pair,
)
from compound_deviations.errors import (
    DimensionMismatchError,
    ExtendedRealArithmeticError,
    ValidationError,
)


class TestAsVector:
    def test_freezes_and_converts(self):
        v = as_vector([1, 2, 3])
        assert v.dtype == np.float64
        assert not v.flags.writeable

    def test_dim_enforced(self):
        with pytest.raises(DimensionMismatchError):
            as_vector([1.0, 2.0], dim=3)

    def test_rejects_nan_and_matrix(self):
        with pytest.raises(ValidationError):
            as_vector([1.0, math.nan])
        with pytest.raises(ValidationError):
            as_vector([[1.0, 2.0]])
        with pytest.raises(ValidationError):
            as_vector([])

    def test_pairing(self):
        assert pair([1.0, 2.0], [3.0, -1.0]) == 1.0
        with pytest.raises(DimensionMismatchError):
            pair([1.0], [1.0, 2.0])


class TestExtendedReal:
    def test_nan_rejected(self):
        with pytest.raises(ExtendedRealArithmeticError):
            ExtendedReal(math.nan)

    def test_finite_constructor_rejects_inf(self):
        with pytest.raises(ValidationError):
            ExtendedReal.finite(math.inf)

    def test_addition_and_conflict(self):
        assert ExtendedReal(1.0) + 2.0 == 3.0
        assert POS_INF + 5.0 == POS_INF
        with pytest.raises(ExtendedRealArithmeticError):
            POS_INF + NEG_INF
        with pytest.raises(ExtendedRealArithmeticError):
            POS_INF - POS_INF

    def test_multiplication_zero_inf(self):
        with pytest.raises(ExtendedRealArithmeticError):
            ExtendedReal(0.0) * POS_INF
        assert ExtendedReal(2.0) * POS_INF == POS_INF
        assert ExtendedReal(-3.0) * 2.0 == -6.0

    def test_multiplication_coerces_extended_real(self):
        # Both operands wrapped: the coercion path, not __rmul__ on a float.
        assert ExtendedReal(2.0) * ExtendedReal(4.0) == ExtendedReal(8.0)

    def test_comparisons_mix_floats(self):
        assert ExtendedReal(1.0) < 2
        assert POS_INF > 1e300
        assert NEG_INF <= ExtendedReal(0.0)
        assert ExtendedReal(3.0) == 3.0

    def test_float_round_trip(self):
        assert float(POS_INF) == math.inf
        assert float(ExtendedReal(1.5)) == 1.5


class TestCovarianceOperator:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValidationError):
            CovarianceOperator([[1.0, 0.5], [0.0, 1.0]])

    def test_rejects_indefinite(self):
        with pytest.raises(ValidationError):
            CovarianceOperator([[1.0, 2.0], [2.0, 1.0]])

    def test_apply_and_quadratic_form(self):
        op = CovarianceOperator([[2.0, 1.0], [1.0, 2.0]])
        assert_allclose(op.apply([1.0, 0.0]), [2.0, 1.0])
        assert_allclose(op.quadratic_form([1.0, 1.0]), 6.0)

    def test_solve_full_rank(self):
        op = CovarianceOperator([[2.0, 1.0], [1.0, 2.0]])
        u = op.solve([1.0, 0.0])
        assert_allclose(op.apply(u), [1.0, 0.0], atol=1e-12)

    def test_solve_singular_in_image(self):
        # Rank-one operator: image is the span of (1, 1).
        op = CovarianceOperator([[1.0, 1.0], [1.0, 1.0]])
        u = op.solve([2.0, 2.0])
        assert u is not None
        assert_allclose(op.apply(u), [2.0, 2.0], atol=1e-10)

    def test_solve_singular_off_image(self):
        op = CovarianceOperator([[1.0, 1.0], [1.0, 1.0]])
        assert op.solve([1.0, -1.0]) is None

    def test_quadratic_form_never_negative(self):
        # A zero operator plus roundoff must not yield a tiny negative form.
        op = CovarianceOperator(np.zeros((3, 3)))
        assert op.quadratic_form([1.0, -2.0, 0.5]) == 0.0
