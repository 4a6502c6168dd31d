"""Finite-dimensional dual pair with extended-real values.

The ambient space for summand laws is R^h paired with itself through the
Euclidean inner product. Function-valued summands tabulated on a grid of h
sites live in the same pair: the primal vector holds function values, the
dual vector holds signed point-mass weights, and the pairing is the plain
weighted sum with no grid-spacing factor.

Covariance operators are symmetric positive semidefinite h x h matrices.
They may be singular (finite-support laws on fewer atoms than dimensions
produce rank-deficient covariances), so solving against them goes through a
spectral pseudo-inverse with an explicit image-membership check: a right-hand
side outside the image is reported as such, which downstream rate functions
translate to +infinity.

Rate functions take values in (-inf, +inf], and limiting cumulants can be
-inf, so scalar results use ExtendedReal: a float wrapper that permits the
two infinities, forbids NaN, and fails loudly on PosInf + NegInf instead of
propagating NaN into a rate table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    ExtendedRealArithmeticError,
    ValidationError,
)

# Construction-time tolerance on |matrix - matrix.T|, elementwise.
SYMMETRY_TOL = 1e-12
# Eigenvalues of a covariance matrix may dip this far below zero before the
# matrix is rejected as not positive semidefinite.
PSD_EIGENVALUE_FLOOR = -1e-10
# Spectral cutoff for the pseudo-inverse, relative to the largest eigenvalue.
SOLVE_SPECTRAL_CUTOFF = 1e-10
# A candidate solution u of sigma @ u = x is accepted when the residual
# norm is below this, scaled by (1 + |x|).
SOLVE_RESIDUAL_TOL = 1e-8


def as_vector(values, dim=None, name="vector"):
    """Validate and freeze a 1-d array of finite reals.

    Returns a read-only float64 copy. ``dim``, when given, is enforced.
    """
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValidationError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must contain only finite entries")
    if dim is not None and arr.size != dim:
        raise DimensionMismatchError(
            f"{name} has length {arr.size}, expected {dim}"
        )
    arr.flags.writeable = False
    return arr


def pair(theta, x):
    """Duality pairing <theta, x>: the inner product of equal-length vectors."""
    t = np.asarray(theta, dtype=float)
    v = np.asarray(x, dtype=float)
    if t.ndim != 1 or v.ndim != 1:
        raise ValidationError("pair expects one-dimensional vectors")
    if t.size != v.size:
        raise DimensionMismatchError(
            f"pairing a length-{t.size} dual with a length-{v.size} primal"
        )
    return float(t @ v)


@dataclass(frozen=True)
class ExtendedReal:
    """A real number extended with +inf and -inf, never NaN.

    Ordinary floats already carry the infinities, but their arithmetic
    silently produces NaN on inf - inf. This wrapper keeps the convenient
    float representation while turning that case into a hard error.
    """

    value: float

    def __post_init__(self):
        v = float(self.value)
        if math.isnan(v):
            raise ExtendedRealArithmeticError("ExtendedReal cannot hold NaN")
        object.__setattr__(self, "value", v)

    @classmethod
    def finite(cls, value):
        v = float(value)
        if not math.isfinite(v):
            raise ValidationError(f"finite() requires a finite value, got {v}")
        return cls(v)

    @property
    def is_finite(self):
        return math.isfinite(self.value)

    @property
    def is_pos_inf(self):
        return self.value == math.inf

    @property
    def is_neg_inf(self):
        return self.value == -math.inf

    @staticmethod
    def _coerce(other):
        if isinstance(other, ExtendedReal):
            return other
        if isinstance(other, (int, float)):
            return ExtendedReal(float(other))
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if (self.is_pos_inf and o.is_neg_inf) or (self.is_neg_inf and o.is_pos_inf):
            raise ExtendedRealArithmeticError("PosInf + NegInf has no value")
        return ExtendedReal(self.value + o.value)

    __radd__ = __add__

    def __neg__(self):
        return ExtendedReal(-self.value)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if (self.value == 0.0 and not o.is_finite) or (o.value == 0.0 and not self.is_finite):
            raise ExtendedRealArithmeticError("0 * inf has no value")
        return ExtendedReal(self.value * o.value)

    __rmul__ = __mul__

    def _cmp_value(self, other):
        o = self._coerce(other)
        if o is None:
            return None
        return o.value

    def __lt__(self, other):
        v = self._cmp_value(other)
        return NotImplemented if v is None else self.value < v

    def __le__(self, other):
        v = self._cmp_value(other)
        return NotImplemented if v is None else self.value <= v

    def __gt__(self, other):
        v = self._cmp_value(other)
        return NotImplemented if v is None else self.value > v

    def __ge__(self, other):
        v = self._cmp_value(other)
        return NotImplemented if v is None else self.value >= v

    def __eq__(self, other):
        v = self._cmp_value(other)
        return NotImplemented if v is None else self.value == v

    def __hash__(self):
        return hash(self.value)

    def __float__(self):
        return self.value

    def __repr__(self):
        if self.is_pos_inf:
            return "ExtendedReal(+inf)"
        if self.is_neg_inf:
            return "ExtendedReal(-inf)"
        return f"ExtendedReal({self.value!r})"


POS_INF = ExtendedReal(math.inf)
NEG_INF = ExtendedReal(-math.inf)


class CovarianceOperator:
    """Symmetric positive semidefinite operator on the dual pair.

    Wraps an h x h matrix, validated at construction:

    * symmetric elementwise within ``SYMMETRY_TOL``;
    * eigenvalues no lower than ``PSD_EIGENVALUE_FLOOR``.

    The stored matrix is the symmetrized copy, frozen read-only, so every
    later apply() sees an exactly symmetric operator.
    """

    def __init__(self, matrix):
        arr = np.array(matrix, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValidationError(
                f"covariance matrix must be square, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError("covariance matrix must be finite")
        asym = float(np.max(np.abs(arr - arr.T))) if arr.size else 0.0
        if asym > SYMMETRY_TOL:
            raise ValidationError(
                f"covariance matrix is asymmetric by {asym:.3e} "
                f"(tolerance {SYMMETRY_TOL:.0e})"
            )
        sym = (arr + arr.T) / 2.0
        eigvals, eigvecs = np.linalg.eigh(sym)
        if eigvals.min() < PSD_EIGENVALUE_FLOOR:
            raise ValidationError(
                f"covariance matrix has eigenvalue {eigvals.min():.3e} below "
                f"the positive-semidefinite floor {PSD_EIGENVALUE_FLOOR:.0e}"
            )
        sym.flags.writeable = False
        self._matrix = sym
        self._eigvals = eigvals
        self._eigvecs = eigvecs

    @property
    def matrix(self):
        return self._matrix

    @property
    def dim(self):
        return self._matrix.shape[0]

    def apply(self, v):
        """Matrix-vector product sigma @ v."""
        vec = as_vector(v, dim=self.dim, name="dual vector")
        return self._matrix @ vec

    def solve(self, x):
        """Solve sigma @ u = x through the spectral pseudo-inverse.

        Eigenvalues below ``SOLVE_SPECTRAL_CUTOFF`` times the largest are
        treated as zero. Returns u when the reconstruction residual passes
        ``SOLVE_RESIDUAL_TOL`` scaled by (1 + |x|); returns None when x is
        not in the image of sigma.
        """
        vec = as_vector(x, dim=self.dim, name="right-hand side")
        top = float(self._eigvals.max(initial=0.0))
        cutoff = SOLVE_SPECTRAL_CUTOFF * max(top, 0.0)
        # Safe reciprocal: entries at or below the cutoff never reach 1/eig.
        with np.errstate(divide="ignore"):
            inv = np.where(self._eigvals > cutoff, 1.0 / self._eigvals, 0.0)
        u = self._eigvecs @ (inv * (self._eigvecs.T @ vec))
        residual = float(np.linalg.norm(self._matrix @ u - vec))
        if residual > SOLVE_RESIDUAL_TOL * (1.0 + float(np.linalg.norm(vec))):
            return None
        return u

    def quadratic_form(self, theta):
        """<theta, sigma theta>, clipped at zero against roundoff."""
        vec = as_vector(theta, dim=self.dim, name="dual vector")
        return max(float(vec @ self._matrix @ vec), 0.0)

    def __repr__(self):
        return f"CovarianceOperator(dim={self.dim})"
