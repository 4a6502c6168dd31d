"""Tests for conjugate optimization and the rate-function layer.

The reference values here come from two kinds of oracle: closed forms
worked out by hand (Poisson count rates, Gaussian quadratic conjugates,
relative-entropy vertex values) and a golden-section maximizer run on the
one-dimensional conjugate objective. Where the package exposes two routes
to the same number (explicit case split vs. joint maximization, closed
quadratic vs. its variational form) both routes are compared directly.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from compound_deviations.counting import (
    BernoulliSumCounting,
    ExponentialInterarrival,
    IidSumCounting,
    PoissonCounting,
    RenewalCounting,
)
from compound_deviations.dualpair import POS_INF, CovarianceOperator, ExtendedReal
from compound_deviations.errors import (
    InconclusiveOptimizationError,
    UnsupportedModelError,
    ValidationError,
)
from compound_deviations.summands import (
    FiniteSupportSummands,
    GaussianSummands,
    GridFunctionSummands,
)
from compound_deviations.variational import (
    DEFAULT_SETTINGS,
    LegendreResult,
    OptimizerSettings,
    analytic_limit_moments,
    count_rate,
    finite_n_moment_identities,
    joint_cgf,
    legendre_transform,
    md_quadratic_finite_support,
    probe_convexity,
    psi_sn,
    psi_sn_mean_shifted,
    rate_ld_explicit,
    rate_ld_variational,
    rate_md_centered_sum,
    rate_md_centered_sum_variational,
    rate_md_centered_summands,
    rate_md_centered_summands_variational,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(g, lo, hi, tol=1e-12):
    """Maximum of a unimodal g on [lo, hi] by golden-section search.

    Near the maximum the objective is flat to second order, so an interval
    of width tol localizes the value itself far more tightly than tol.
    """
    a, b = float(lo), float(hi)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    gc, gd = g(c), g(d)
    while b - a > tol:
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - GOLDEN * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + GOLDEN * (b - a)
            gd = g(d)
    mid = 0.5 * (a + b)
    return mid, g(mid)


def poisson_count_rate(y, lam=1.0):
    # sup_eta y*eta - lam*(e^eta - 1), attained at eta = log(y/lam).
    if y < 0:
        return math.inf
    if y == 0:
        return lam
    return y * math.log(y / lam) - y + lam


def pm_one_summand():
    return FiniteSupportSummands([[1.0], [-1.0]], [0.5, 0.5])


def unit_poisson():
    return PoissonCounting(1.0)


class TestLegendreTransform:
    def test_quadratic_at_origin(self):
        result = legendre_transform(
            lambda t: 0.5 * float(t @ t), lambda t: t, [0.0]
        )
        assert isinstance(result, LegendreResult)
        assert float(result.value) == 0.0
        assert_allclose(result.argmax, [0.0], atol=1e-12)
        assert not result.unbounded

    def test_quadratic_conjugate_is_quadratic(self):
        # sup <t,z> - |t|^2/2 = |z|^2/2 at t = z.
        for z in [-3.0, -0.4, 0.7, 2.5]:
            result = legendre_transform(
                lambda t: 0.5 * float(t @ t), lambda t: t, [z]
            )
            assert_allclose(float(result.value), 0.5 * z * z, atol=1e-10)
            assert_allclose(result.argmax, [z], atol=1e-8)

    def test_anisotropic_quadratic_with_hessian(self):
        a = np.array([[2.0, 0.3], [0.3, 1.0]])

        def f(t):
            return 0.5 * float(t @ a @ t)

        def grad(t):
            return a @ t

        z = np.array([1.2, -0.7])
        result = legendre_transform(f, grad, z, hess_f=lambda t: a)
        expected_point = np.linalg.solve(a, z)
        assert_allclose(float(result.value), 0.5 * float(z @ expected_point),
                        atol=1e-10)
        assert_allclose(result.argmax, expected_point, atol=1e-8)
        assert result.gradient_norm < DEFAULT_SETTINGS.gradient_tolerance

    def test_linear_function_at_its_slope(self):
        # f(t) = <c, t> has conjugate 0 at z = c; the origin already solves it.
        c = np.array([0.4, -1.1])
        result = legendre_transform(
            lambda t: float(c @ t), lambda t: c, c
        )
        assert float(result.value) == 0.0
        assert result.iterations == 0

    def test_unbounded_direction_detected(self):
        # y*eta - (e^eta - 1) grows without bound as eta -> -inf when y < 0.
        result = legendre_transform(
            lambda t: math.exp(float(t[0])) - 1.0,
            lambda t: np.array([math.exp(float(t[0]))]),
            [-0.5],
        )
        assert result.unbounded
        assert result.value == POS_INF
        assert result.argmax is None

    def test_concave_input_rejected(self):
        with pytest.raises(ValidationError):
            legendre_transform(
                lambda t: -float(t @ t), lambda t: -2.0 * t, [0.5]
            )

    def test_nonfinite_target_rejected(self):
        with pytest.raises(ValidationError):
            legendre_transform(
                lambda t: 0.5 * float(t @ t), lambda t: t, [math.inf]
            )

    def test_iteration_limit_raises_with_diagnostics(self):
        settings = OptimizerSettings(max_iterations=1, newton_polish=False)
        with pytest.raises(InconclusiveOptimizationError) as excinfo:
            legendre_transform(
                lambda t: math.exp(float(t[0])) - 1.0,
                lambda t: np.array([math.exp(float(t[0]))]),
                [4.0],
                settings=settings,
            )
        err = excinfo.value
        assert err.iterations == 1
        assert err.best_value is not None and math.isfinite(err.best_value)
        assert err.gradient_norm > 0.0

    def test_newton_polish_reaches_tight_tolerance(self):
        settings = OptimizerSettings(gradient_tolerance=1e-12)
        result = legendre_transform(
            lambda t: math.exp(float(t[0])) - 1.0,
            lambda t: np.array([math.exp(float(t[0]))]),
            [2.0],
            settings=settings,
        )
        assert result.gradient_norm < 1e-12
        assert_allclose(float(result.value), 2.0 * math.log(2.0) - 1.0,
                        rtol=1e-14)


class TestOptimizerSettings:
    def test_rejects_nonpositive_iterations(self):
        with pytest.raises(ValidationError):
            OptimizerSettings(max_iterations=0)

    def test_rejects_nonpositive_tolerances(self):
        with pytest.raises(ValidationError):
            OptimizerSettings(gradient_tolerance=0.0)
        with pytest.raises(ValidationError):
            OptimizerSettings(divergence_threshold=-1.0)
        with pytest.raises(ValidationError):
            OptimizerSettings(initial_step=0.0)


class TestProbeConvexity:
    def test_accepts_convex_functions(self):
        assert probe_convexity(lambda t: float(t @ t), 2)
        assert probe_convexity(lambda t: float(np.abs(t).sum()), 3)

    def test_rejects_concave_function(self):
        assert not probe_convexity(lambda t: -float(t @ t), 1)
        assert not probe_convexity(lambda t: -float(t @ t), 2)

    def test_partial_domain_passes_vacuously(self):
        def partial(t):
            if float(np.linalg.norm(t)) > 0.1:
                raise ValidationError("outside domain")
            return float(t @ t)

        assert probe_convexity(partial, 2)

    def test_violation_within_slack_tolerated(self):
        assert probe_convexity(lambda t: -1e-12 * float(t @ t), 1)


class TestCountRate:
    def test_matches_golden_section_oracle(self):
        mn = unit_poisson()
        for y in [0.25, 0.5, 1.0, 2.0, 4.0]:
            _, oracle = golden_section_max(
                lambda eta: y * eta - (math.exp(eta) - 1.0), -20.0, 20.0
            )
            result = count_rate(mn, y)
            assert_allclose(float(result.value), oracle, atol=1e-10)
            assert_allclose(float(result.value), poisson_count_rate(y),
                            atol=1e-10)

    def test_value_at_two(self):
        result = count_rate(unit_poisson(), 2.0)
        assert_allclose(float(result.value), 0.3862943611198906, atol=1e-12)
        assert_allclose(result.argmax, [math.log(2.0)], atol=1e-7)

    def test_zero_at_limiting_mean_rate(self):
        models = [
            unit_poisson(),
            PoissonCounting(3.5),
            IidSumCounting([0, 1, 3], [0.2, 0.5, 0.3]),
        ]
        for mn in models:
            d1 = mn.derivs_at_zero().mean_rate
            result = count_rate(mn, d1)
            assert_allclose(float(result.value), 0.0, atol=1e-12)

    def test_negative_target_is_infinite(self):
        result = count_rate(unit_poisson(), -0.5)
        assert result.unbounded
        assert result.value == POS_INF

    def test_zero_target_converges_to_left_tail_limit(self):
        # sup -Lambda(eta) over eta = -Lambda(-inf); the gradient decays to
        # zero along the descent so the optimizer converges rather than
        # declaring divergence.
        result = count_rate(unit_poisson(), 0.0)
        assert_allclose(float(result.value), 1.0, atol=1e-7)

        with_zero_step = IidSumCounting([0, 1], [0.5, 0.5])
        result = count_rate(with_zero_step, 0.0)
        assert_allclose(float(result.value), math.log(2.0), atol=1e-7)

    def test_nonnegative_on_grid(self):
        mn = PoissonCounting(2.0)
        for y in np.linspace(0.1, 6.0, 13):
            assert float(count_rate(mn, float(y)).value) >= -1e-12

    def test_rejects_nonfinite_y(self):
        with pytest.raises(ValidationError):
            count_rate(unit_poisson(), math.nan)


class TestJointCgf:
    def test_zero_at_origin(self):
        assert joint_cgf(pm_one_summand(), unit_poisson(), [0.0], 0.0) == 0.0

    def test_symmetric_two_point_composition(self):
        # Unit-rate count composed with a +/-1 summand: log cosh enters the
        # exponent, giving cosh(t) - 1 along the summand axis.
        mx, mn = pm_one_summand(), unit_poisson()
        for t in [-2.0, -0.5, 0.3, 1.7]:
            assert_allclose(
                joint_cgf(mx, mn, [t], 0.0), math.cosh(t) - 1.0, rtol=1e-12
            )

    def test_count_axis_reduces_to_count_cgf(self):
        mx = GaussianSummands([0.2], [[1.5]])
        mn = IidSumCounting([1, 2], [0.25, 0.75])
        for s in [-3.0, -0.1, 0.9, 2.0]:
            assert_allclose(
                joint_cgf(mx, mn, [0.0], s), mn.limit_cgf(s), rtol=1e-12
            )


class TestRateLdExplicit:
    def test_zero_at_limit_point(self):
        mx = GaussianSummands([0.5], [[1.0]])
        mn = unit_poisson()
        value = rate_ld_explicit(mx, mn, [0.5], 1.0)
        assert_allclose(float(value), 0.0, atol=1e-10)

    def test_count_event_rate_with_centered_summand(self):
        # x/y = 0 sits at the summand mean, so only the count part remains.
        value = rate_ld_explicit(pm_one_summand(), unit_poisson(), [0.0], 2.0)
        assert_allclose(float(value), 2.0 * math.log(2.0) - 1.0, atol=1e-10)

    def test_vertex_with_unit_count_mean(self):
        mx = FiniteSupportSummands([[1.0, 0.0], [0.0, 1.0]], [0.5, 0.5])
        value = rate_ld_explicit(mx, unit_poisson(), [1.0, 0.0], 1.0)
        assert_allclose(float(value), math.log(2.0), atol=1e-10)

    def test_origin_value_is_left_tail_limit(self):
        assert_allclose(
            float(rate_ld_explicit(pm_one_summand(), unit_poisson(),
                                   [0.0], 0.0)),
            1.0,
            rtol=1e-12,
        )
        with_zero_step = IidSumCounting([0, 2], [0.5, 0.5])
        assert_allclose(
            float(rate_ld_explicit(pm_one_summand(), with_zero_step,
                                   [0.0], 0.0)),
            math.log(2.0),
            rtol=1e-12,
        )

    def test_origin_ball_is_checked_before_positivity(self):
        value = rate_ld_explicit(
            pm_one_summand(), unit_poisson(), [5e-11], 5e-11
        )
        assert_allclose(float(value), 1.0, rtol=1e-12)

    def test_nonzero_x_with_zero_y_is_infinite(self):
        value = rate_ld_explicit(pm_one_summand(), unit_poisson(), [0.3], 0.0)
        assert value == POS_INF

    def test_negative_y_is_infinite(self):
        value = rate_ld_explicit(pm_one_summand(), unit_poisson(), [0.0], -1.0)
        assert value == POS_INF

    def test_rejects_nonfinite_y(self):
        with pytest.raises(ValidationError):
            rate_ld_explicit(pm_one_summand(), unit_poisson(), [0.0],
                             math.inf)


class TestRateLdVariational:
    def test_zero_at_limit_point(self):
        mx = GaussianSummands([0.5], [[1.0]])
        result = rate_ld_variational(mx, unit_poisson(), [0.5], 1.0)
        assert_allclose(float(result.value), 0.0, atol=1e-10)

    def test_count_event_value(self):
        result = rate_ld_variational(pm_one_summand(), unit_poisson(),
                                     [0.0], 2.0)
        assert_allclose(float(result.value), 2.0 * math.log(2.0) - 1.0,
                        atol=1e-8)

    def test_negative_y_unbounded(self):
        result = rate_ld_variational(pm_one_summand(), unit_poisson(),
                                     [0.0], -1.0)
        assert result.unbounded
        assert result.value == POS_INF

    def test_agrees_with_explicit_split_on_grid(self):
        mx = GaussianSummands([0.3], [[0.8]])
        mn = PoissonCounting(1.5)
        for x in [-0.4, 0.2, 0.9]:
            for y in [0.5, 1.5, 2.5]:
                explicit = rate_ld_explicit(mx, mn, [x], y)
                joint = rate_ld_variational(mx, mn, [x], y)
                assert_allclose(float(joint.value), float(explicit),
                                atol=1e-7)


class TestPsiQuadratics:
    def test_zero_at_origin(self):
        assert psi_sn(pm_one_summand(), unit_poisson(), [0.0], 0.0) == 0.0

    def test_unit_plugin_values(self):
        value = psi_sn(pm_one_summand(), unit_poisson(), [1.0], 1.0)
        assert_allclose(value, 1.0, rtol=1e-12)

    def test_count_axis_scales_with_variance_rate(self):
        value = psi_sn(pm_one_summand(), PoissonCounting(3.0), [0.0], 2.0)
        assert_allclose(value, 6.0, rtol=1e-12)

    def test_mean_shift_moves_the_count_slot(self):
        mx = GaussianSummands([0.7, -0.2], [[1.0, 0.3], [0.3, 2.0]])
        mn = PoissonCounting(1.8)
        rng = np.random.default_rng(20240917)
        mu = mx.mean()
        for _ in range(10):
            theta = rng.normal(size=2)
            eta = float(rng.normal())
            shifted = psi_sn_mean_shifted(mx, mn, theta, eta)
            direct = psi_sn(mx, mn, theta, eta + float(theta @ mu))
            assert_allclose(shifted, direct, rtol=1e-12)

    def test_limit_covariance_is_twice_the_shifted_quadratic(self):
        # Two independent code paths meet: the assembled limiting covariance
        # in direction (theta, theta) equals twice the mean-shifted quadratic
        # at (theta, 0).
        mx = FiniteSupportSummands([[0.0], [2.0]], [0.5, 0.5])
        mn = PoissonCounting(1.3)
        for t in [-1.5, -0.2, 0.4, 2.0]:
            moments = analytic_limit_moments(mx, mn, [t], [t])
            quad = psi_sn_mean_shifted(mx, mn, [t], 0.0)
            assert_allclose(moments.cov_SS, 2.0 * quad, rtol=1e-12)


class TestMdQuadratics:
    def test_zero_at_origin(self):
        value = rate_md_centered_summands(pm_one_summand(), unit_poisson(),
                                          [0.0], 0.0)
        assert float(value) == 0.0

    def test_unit_plugin_value(self):
        value = rate_md_centered_summands(pm_one_summand(), unit_poisson(),
                                          [1.0], 1.0)
        assert_allclose(float(value), 1.0, rtol=1e-12)

    def test_off_image_is_infinite(self):
        mx = GaussianSummands([0.0, 0.0], [[1.0, 0.0], [0.0, 0.0]])
        mn = unit_poisson()
        assert rate_md_centered_summands(mx, mn, [0.0, 1.0], 0.0) == POS_INF
        assert_allclose(
            float(rate_md_centered_summands(mx, mn, [1.0, 0.0], 0.0)),
            0.5,
            rtol=1e-12,
        )

    def test_solve_route_matches_hand_assembly(self):
        mx = GaussianSummands([0.0, 0.0], [[2.0, 0.5], [0.5, 1.0]])
        mn = PoissonCounting(1.7)
        d = mn.derivs_at_zero()
        sigma = np.array([[2.0, 0.5], [0.5, 1.0]])
        rng = np.random.default_rng(4821)
        for _ in range(20):
            x = rng.normal(size=2)
            y = float(rng.normal())
            expected = float(x @ np.linalg.solve(sigma, x)) / (
                2.0 * d.mean_rate
            ) + y * y / (2.0 * d.variance_rate)
            value = rate_md_centered_summands(mx, mn, x, y)
            assert_allclose(float(value), expected, rtol=1e-10)

    def test_contraction_identity_shares_the_code_path(self):
        mx = GaussianSummands([0.3], [[1.0]])
        mn = unit_poisson()
        rng = np.random.default_rng(77)
        for _ in range(10):
            x = float(rng.normal())
            y = float(rng.normal())
            shifted = rate_md_centered_sum(mx, mn, [x], y)
            direct = rate_md_centered_summands(mx, mn, [x - 0.3 * y], y)
            assert shifted == direct

    def test_shifted_mean_plugin_value(self):
        mx = GaussianSummands([0.3], [[1.0]])
        value = rate_md_centered_sum(mx, unit_poisson(), [1.0], 1.0)
        assert_allclose(float(value), 0.745, rtol=1e-12)

    def test_centered_forms_coincide_for_centered_summands(self):
        mx = GaussianSummands([0.0, 0.0], [[1.0, 0.2], [0.2, 0.7]])
        mn = PoissonCounting(2.0)
        rng = np.random.default_rng(901)
        for _ in range(10):
            x = rng.normal(size=2)
            y = float(rng.normal())
            assert rate_md_centered_sum(mx, mn, x, y) == (
                rate_md_centered_summands(mx, mn, x, y)
            )

    def test_count_slot_only_at_scaled_mean(self):
        # At x = y * mu the summand slot centers away and only y^2/(2 d2)
        # remains.
        mx = GaussianSummands([0.4, -0.1], [[1.0, 0.0], [0.0, 2.0]])
        mn = PoissonCounting(1.5)
        d = mn.derivs_at_zero()
        for y in [-2.0, -0.5, 1.0, 3.0]:
            value = rate_md_centered_sum(mx, mn, [0.4 * y, -0.1 * y], y)
            assert_allclose(float(value), y * y / (2.0 * d.variance_rate),
                            rtol=1e-12)

    def test_degenerate_count_variance_rejected(self):
        deterministic = IidSumCounting([2], [1.0])
        with pytest.raises(ValidationError):
            rate_md_centered_summands(pm_one_summand(), deterministic,
                                      [0.0], 0.0)

    def test_rejects_nonfinite_y(self):
        with pytest.raises(ValidationError):
            rate_md_centered_sum(pm_one_summand(), unit_poisson(), [0.0],
                                 math.nan)


class TestMdVariationalForms:
    def test_centered_summands_route_agreement(self):
        mx = GaussianSummands([0.0, 0.0], [[2.0, 0.5], [0.5, 1.0]])
        mn = PoissonCounting(1.7)
        rng = np.random.default_rng(315)
        for _ in range(8):
            x = rng.normal(size=2)
            y = float(rng.normal())
            closed = rate_md_centered_summands(mx, mn, x, y)
            varied = rate_md_centered_summands_variational(mx, mn, x, y)
            assert_allclose(float(varied.value), float(closed), atol=1e-6)

    def test_centered_sum_route_agreement(self):
        mx = GaussianSummands([0.6, -0.3], [[1.5, 0.2], [0.2, 0.9]])
        mn = PoissonCounting(1.2)
        rng = np.random.default_rng(316)
        for _ in range(8):
            x = rng.normal(size=2)
            y = float(rng.normal())
            closed = rate_md_centered_sum(mx, mn, x, y)
            varied = rate_md_centered_sum_variational(mx, mn, x, y)
            assert_allclose(float(varied.value), float(closed), atol=1e-6)

    def test_off_image_detected_as_unbounded(self):
        mx = GaussianSummands([0.0, 0.0], [[1.0, 0.0], [0.0, 0.0]])
        result = rate_md_centered_summands_variational(
            mx, unit_poisson(), [0.0, 1.0], 0.0
        )
        assert result.unbounded
        assert result.value == POS_INF


class TestMdQuadraticFiniteSupport:
    def plane_model(self):
        return FiniteSupportSummands([[1.0, 0.0], [0.0, 1.0]], [0.5, 0.5])

    def test_zero_at_origin(self):
        value = md_quadratic_finite_support(self.plane_model(),
                                            unit_poisson(), [0.0, 0.0])
        assert float(value) == 0.0

    def test_atom_difference_value(self):
        # c = (1, -1) against p = (1/2, 1/2) gives 1*(2 - (-2)) = 4, halved
        # by 2*d1 with d1 = 1.
        value = md_quadratic_finite_support(self.plane_model(),
                                            unit_poisson(), [1.0, -1.0])
        assert_allclose(float(value), 2.0, rtol=1e-12)

    def test_uncentered_coefficients_are_infinite(self):
        value = md_quadratic_finite_support(self.plane_model(),
                                            unit_poisson(), [0.5, 0.0])
        assert value == POS_INF

    def test_matches_pseudoinverse_route(self):
        mx = FiniteSupportSummands(
            [[1.0, 0.0], [0.2, 1.5]], [0.3, 0.7]
        )
        mn = PoissonCounting(1.9)
        atoms = np.array([[1.0, 0.0], [0.2, 1.5]])
        rng = np.random.default_rng(6012)
        for _ in range(20):
            c = rng.normal(size=2)
            c -= c.mean()
            x = c @ atoms
            closed = md_quadratic_finite_support(mx, mn, x)
            solved = rate_md_centered_summands(mx, mn, x, 0.0)
            assert_allclose(float(closed), float(solved), rtol=1e-9,
                            atol=1e-12)

    def test_matches_variational_route(self):
        mx = self.plane_model()
        mn = unit_poisson()
        for c1 in [-1.0, 0.4, 1.3]:
            x = [c1, -c1]
            closed = md_quadratic_finite_support(mx, mn, x)
            varied = rate_md_centered_summands_variational(mx, mn, x, 0.0)
            assert_allclose(float(varied.value), float(closed), atol=1e-6)

    def test_grid_wrapper_unwraps(self):
        grid = np.array([0.0, 1.0, 2.0])
        model = GridFunctionSummands.finite_support(
            grid,
            [lambda s: s, lambda s: s ** 2],
            [0.5, 0.5],
        )
        value = md_quadratic_finite_support(model, unit_poisson(),
                                            np.array([1.0, 0.0, -2.0])
                                            - np.array([0.0, 1.0, 4.0]))
        assert float(value) == float(
            md_quadratic_finite_support(model.base, unit_poisson(),
                                        [1.0, -1.0, -6.0])
        )

    def test_overdetermined_decomposition_rejected(self):
        with pytest.raises(UnsupportedModelError):
            md_quadratic_finite_support(pm_one_summand(), unit_poisson(),
                                        [0.5])

    def test_gaussian_model_rejected(self):
        with pytest.raises(UnsupportedModelError):
            md_quadratic_finite_support(
                GaussianSummands([0.0], [[1.0]]), unit_poisson(), [0.0]
            )


class TestMomentRecords:
    def unit_mean_unit_var_summand(self):
        return FiniteSupportSummands([[0.0], [2.0]], [0.5, 0.5])

    def test_poisson_limit_values(self):
        moments = analytic_limit_moments(
            self.unit_mean_unit_var_summand(), unit_poisson(), [1.0], [1.0]
        )
        assert_allclose(moments.mean_S_dir, 1.0, rtol=1e-12)
        assert_allclose(moments.mean_N, 1.0, rtol=1e-12)
        assert_allclose(moments.cov_SS, 2.0, rtol=1e-12)
        assert_allclose(moments.cov_NS, 1.0, rtol=1e-12)
        assert_allclose(moments.var_N, 1.0, rtol=1e-12)

    def test_centered_summand_kills_cross_terms(self):
        moments = analytic_limit_moments(
            pm_one_summand(), PoissonCounting(2.4), [1.0], [1.0]
        )
        assert moments.mean_S_dir == 0.0
        assert moments.cov_NS == 0.0

    def test_finite_n_matches_hand_assembly(self):
        mx = GaussianSummands([0.5, -1.0], [[2.0, 0.5], [0.5, 1.0]])
        mn = BernoulliSumCounting(p=0.3)
        n = 37
        u = np.array([1.0, -0.5])
        v = np.array([0.2, 0.8])
        record = finite_n_moment_identities(mx, mn, n, u, v)
        sigma = np.array([[2.0, 0.5], [0.5, 1.0]])
        mu = np.array([0.5, -1.0])
        mean_scaled = 0.3
        var_scaled = 0.3 * 0.7
        assert_allclose(record.mean_N, mean_scaled, rtol=1e-12)
        assert_allclose(record.mean_S_dir, mean_scaled * float(v @ mu),
                        rtol=1e-12)
        assert_allclose(
            record.cov_SS,
            mean_scaled * float(u @ sigma @ v)
            + var_scaled * float(u @ mu) * float(v @ mu),
            rtol=1e-12,
        )
        assert_allclose(record.cov_NS, var_scaled * float(v @ mu), rtol=1e-12)
        assert_allclose(record.var_N, var_scaled, rtol=1e-12)

    def test_poisson_finite_n_equals_limit(self):
        mx = self.unit_mean_unit_var_summand()
        mn = unit_poisson()
        limit = analytic_limit_moments(mx, mn, [1.0], [1.0])
        for n in [10, 250]:
            record = finite_n_moment_identities(mx, mn, n, [1.0], [1.0])
            assert_allclose(record.mean_S_dir, limit.mean_S_dir, rtol=1e-12)
            assert_allclose(record.cov_SS, limit.cov_SS, rtol=1e-12)
            assert_allclose(record.cov_NS, limit.cov_NS, rtol=1e-12)
            assert_allclose(record.var_N, limit.var_N, rtol=1e-12)

    def test_renewal_counts_have_no_exact_moments(self):
        mn = RenewalCounting(ExponentialInterarrival(1.0))
        with pytest.raises(UnsupportedModelError):
            finite_n_moment_identities(pm_one_summand(), mn, 100, [1.0],
                                       [1.0])
