import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import eval_gegenbauer

from sphdesign.kernel import (
    gegenbauer_normalized,
    harmonic_dim,
    kernel_derivative,
    kernel_model,
    kernel_value,
    kernel_value_and_derivative,
    polynomial_space_dim,
)


class TestHarmonicDim:
    def test_circle_harmonics_always_two(self):
        assert harmonic_dim(1, 7) == 2
        assert all(harmonic_dim(1, k) == 2 for k in range(1, 30))

    def test_s2_degree_two(self):
        assert harmonic_dim(2, 2) == 5

    def test_s3_degree_two(self):
        assert harmonic_dim(3, 2) == 9

    def test_s3_closed_form(self):
        # dimensions on S^3 are perfect squares
        for k in range(1, 20):
            assert harmonic_dim(3, k) == (k + 1) ** 2

    def test_degree_one_is_ambient_dimension(self):
        for d in range(1, 9):
            assert harmonic_dim(d, 1) == d + 1

    @given(st.integers(1, 8), st.integers(1, 60))
    def test_total_matches_polynomial_space_dimension(self, d, t):
        # 1 + sum_k Z(d,k) equals the dimension of the full degree<=t space
        k = t // 2
        if t % 2 == 0:
            full = math.comb(d + k, d) + math.comb(d + k - 1, d)
        else:
            full = 2 * math.comb(d + k, d)
        # the two-case formula at even t equals the full space dimension at t
        total = 1 + polynomial_space_dim(d, t)
        expected = math.comb(d + t, d) + math.comb(d + t - 1, d)
        assert total == expected
        assert full <= expected

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            harmonic_dim(0, 1)
        with pytest.raises(ValueError):
            harmonic_dim(2, 0)


class TestGegenbauer:
    def test_legendre_value_at_zero(self):
        model = kernel_model(2, 4)
        assert gegenbauer_normalized(model, 2, 0.0) == pytest.approx(-0.5, abs=1e-15)

    def test_normalization_at_one(self):
        for d in (1, 2, 3, 5, 8):
            model = kernel_model(d, 12)
            for k in range(0, 13):
                assert gegenbauer_normalized(model, k, 1.0) == pytest.approx(
                    1.0, abs=1e-12
                )

    def test_chebyshev_identity_on_circle(self):
        model = kernel_model(1, 8)
        s = math.cos(math.pi / 6.0)
        assert gegenbauer_normalized(model, 3, s) == pytest.approx(0.0, abs=1e-15)
        for k in range(0, 9):
            for theta in np.linspace(0.0, math.pi, 17):
                assert gegenbauer_normalized(model, k, math.cos(theta)) == pytest.approx(
                    math.cos(k * theta), abs=1e-12
                )

    def test_matches_scipy_gegenbauer(self, rng):
        s = rng.uniform(-1.0, 1.0, size=40)
        for d in (2, 3, 4, 7):
            lam = (d - 1) / 2.0
            model = kernel_model(d, 20)
            for k in (1, 2, 5, 13, 20):
                ref = eval_gegenbauer(k, lam, s) / eval_gegenbauer(k, lam, 1.0)
                mine = gegenbauer_normalized(model, k, s)
                assert np.max(np.abs(mine - ref)) < 1e-11

    @given(
        st.integers(1, 8),
        st.integers(0, 40),
        st.floats(-1.0, 1.0, allow_nan=False),
    )
    @settings(max_examples=200)
    def test_bounded_by_one(self, d, k, s):
        model = kernel_model(d, max(k, 1))
        assert abs(gegenbauer_normalized(model, k, s)) <= 1.0 + 1e-12

    def test_snap_tolerance(self):
        model = kernel_model(2, 3)
        assert gegenbauer_normalized(model, 1, 1.0 + 5e-13) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            gegenbauer_normalized(model, 1, 1.0 + 1e-9)
        with pytest.raises(ValueError):
            gegenbauer_normalized(model, 1, -1.001)

    def test_rejects_nan(self):
        model = kernel_model(2, 3)
        with pytest.raises(ValueError):
            kernel_value(model, float("nan"))
        with pytest.raises(ValueError):
            kernel_value(model, np.array([0.5, np.nan]))

    def test_rejects_degree_outside_model(self):
        model = kernel_model(2, 3)
        with pytest.raises(ValueError):
            gegenbauer_normalized(model, 4, 0.5)


class TestKernelValue:
    def test_degree_one_kernel_is_linear(self, rng):
        model = kernel_model(2, 1)
        s = rng.uniform(-1, 1, size=11)
        assert np.allclose(kernel_value(model, s), 3.0 * s, atol=1e-15)

    def test_value_at_one_counts_harmonics(self):
        for t in (1, 3, 7, 10):
            model = kernel_model(2, t)
            assert kernel_value(model, 1.0) == pytest.approx((t + 1) ** 2 - 1, abs=1e-9)

    def test_circle_kernel_at_minus_one(self):
        model = kernel_model(1, 2)
        # 2*(-1) + 2*(+1): alternating Chebyshev endpoint values
        assert kernel_value(model, -1.0) == pytest.approx(0.0, abs=1e-15)

    def test_endpoint_identity_is_integer(self):
        for d in (1, 2, 3, 5, 8):
            for t in (1, 4, 11):
                model = kernel_model(d, t)
                endpoint = kernel_value(model, 1.0)
                assert endpoint == pytest.approx(model.space_dim, abs=1e-9)

    def test_positive_semidefinite_gram(self, rng):
        from sphdesign.sphere_geometry import random_points

        for d, t in ((2, 6), (3, 4), (1, 9)):
            model = kernel_model(d, t)
            for n in (5, 20, 50):
                pts = random_points(d, n, rng)
                gram = kernel_value(model, pts @ pts.T)
                eigs = np.linalg.eigvalsh(gram)
                assert eigs.min() >= -1e-9 * n


class TestKernelDerivative:
    def test_degree_one_derivative(self, rng):
        model = kernel_model(2, 1)
        s = rng.uniform(-1, 1, size=7)
        assert np.allclose(kernel_derivative(model, s), 3.0, atol=1e-15)

    def test_degree_two_at_zero(self):
        model = kernel_model(2, 2)
        # d/ds [3s + 5(3s^2-1)/2] = 3 + 15s
        assert kernel_derivative(model, 0.0) == pytest.approx(3.0, abs=1e-15)
        assert kernel_derivative(model, 0.2) == pytest.approx(6.0, abs=1e-12)

    def test_circle_degree_one(self):
        model = kernel_model(1, 1)
        assert kernel_derivative(model, 0.0) == pytest.approx(2.0, abs=1e-15)

    def test_matches_finite_differences(self, rng):
        h = 1e-6
        for d, t in ((1, 7), (2, 10), (3, 6), (5, 4)):
            model = kernel_model(d, t)
            s = rng.uniform(-0.99, 0.99, size=50)
            fd = (kernel_value(model, s + h) - kernel_value(model, s - h)) / (2 * h)
            exact = kernel_derivative(model, s)
            rel = np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))
            assert rel.max() < 1e-6

    def test_combined_pass_agrees(self, rng):
        model = kernel_model(3, 8)
        s = rng.uniform(-1, 1, size=23)
        value, deriv = kernel_value_and_derivative(model, s)
        assert np.array_equal(value, kernel_value(model, s))
        assert np.array_equal(deriv, kernel_derivative(model, s))


class TestModelValidation:
    def test_supported_ranges(self):
        with pytest.raises(ValueError):
            kernel_model(0, 5)
        with pytest.raises(ValueError):
            kernel_model(9, 5)
        with pytest.raises(ValueError):
            kernel_model(2, 0)
        with pytest.raises(ValueError):
            kernel_model(2, 201)
        kernel_model(8, 200)  # boundary is allowed

    def test_space_dim(self):
        assert kernel_model(2, 5).space_dim == 35
        assert kernel_model(1, 4).space_dim == 8
