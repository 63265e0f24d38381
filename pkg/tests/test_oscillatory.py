import cmath
import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gamma

from fracwave.errors import QuadratureError, ValidationError
from fracwave.oscillatory import (
    ContourLayout,
    gamma_oscillatory,
    modified_bessel_K_imag,
    ode_residual_I,
    phase_integral,
    symbol_dtn,
    symbol_I,
    symbol_I_closed,
    truncated_integral,
    weighted_derivative,
)
from fracwave.quadrature import QuadratureSpec


def _direct(sigma, lam, t, eps, R, k):
    """Plain adaptive quadrature of the truncated integrand on the real axis."""
    a2 = 0.25 * t * t * lam

    def part(fn):
        value, _ = integrate.quad(fn, eps, R, limit=400, epsabs=1e-13, epsrel=1e-13)
        return value

    phase = lambda s: s + a2 / s  # noqa: E731
    re = part(lambda s: math.cos(phase(s)) * s ** (sigma - k))
    im = part(lambda s: -math.sin(phase(s)) * s ** (sigma - k))
    return complex(re, im)


class TestGammaOscillatory:
    """Test Γ(σ) from the rotated-ray integral."""

    @pytest.mark.parametrize("sigma", [0.05, 0.3, 0.5, 0.8, 0.95])
    def test_recovers_gamma(self, sigma):
        """The oscillatory integral reproduces Γ(σ)."""
        assert abs(gamma_oscillatory(sigma) - gamma(sigma)) < 1e-8


class TestSymbol:
    """Test I_σ(λ, t) by contour and in closed form."""

    @pytest.mark.parametrize("lam", [0.0, 0.25, 9.0, 100.0])
    @pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
    def test_half_order_is_the_wave_group(self, lam, t):
        """At σ = 1/2 the symbol is exp(-it√λ)."""
        expected = cmath.exp(-1j * t * math.sqrt(lam))
        assert abs(symbol_I(0.5, lam, t).value - expected) < 1e-8
        assert abs(symbol_I_closed(0.5, lam, t) - expected) < 1e-10

    @pytest.mark.parametrize("sigma", [0.2, 0.45, 0.7])
    @pytest.mark.parametrize("lam,t", [(0.5, 0.3), (4.0, 1.0), (50.0, 3.0)])
    def test_contour_matches_closed_form(self, sigma, lam, t):
        """Contour quadrature and the Bessel closed form agree."""
        closed = symbol_I_closed(sigma, lam, t)
        contour = symbol_I(sigma, lam, t).value
        assert abs(contour - closed) / abs(closed) < 1e-7

    def test_zero_lambda_is_one(self):
        """I_σ(0, t) = 1."""
        assert abs(symbol_I(0.35, 0.0, 2.0).value - 1.0) < 1e-8
        assert symbol_I_closed(0.35, 0.0, 2.0) == pytest.approx(1.0)

    def test_closed_form_accepts_arrays(self):
        """Array λ gives an array of the same shape."""
        values = symbol_I_closed(0.4, np.array([[0.0, 1.0], [4.0, 9.0]]), 1.0)
        assert values.shape == (2, 2)

    def test_error_estimate_is_reported(self):
        """Contour values carry a small error estimate and a path descriptor."""
        value = symbol_I(0.3, 4.0, 1.0)
        assert value.abs_error_estimate < 1e-9
        assert len(value.path_descriptor) == 5

    @pytest.mark.parametrize("sigma,lam,t", [(0.3, 4.0, 1.0), (0.7, 100.0, 0.5), (0.5, 2.0, 2.0)])
    def test_independent_of_ray_angle(self, sigma, lam, t):
        """Two rotation angles give the same value within their error estimates."""
        first = symbol_I(sigma, lam, t, QuadratureSpec(ray_angle=0.6 * math.pi))
        second = symbol_I(sigma, lam, t, QuadratureSpec(ray_angle=0.75 * math.pi))
        bound = max(10.0 * (first.abs_error_estimate + second.abs_error_estimate), 1e-12)
        assert abs(first.value - second.value) <= bound

    @pytest.mark.parametrize("sigma,lam,t", [(0.3, 4.0, 1.0), (0.8, 400.0, 1.0)])
    def test_wider_stationary_window(self, sigma, lam, t):
        """Doubling the window factor moves the value by less than the estimate."""
        narrow = symbol_I(sigma, lam, t, QuadratureSpec(window_factor=1.0))
        wide = symbol_I(sigma, lam, t, QuadratureSpec(window_factor=2.0))
        bound = max(narrow.abs_error_estimate + wide.abs_error_estimate, 1e-12)
        assert abs(narrow.value - wide.value) <= bound

    @pytest.mark.parametrize("sigma", [0.25, 0.6])
    def test_depends_only_on_amplitude(self, sigma):
        """(λ, t) pairs with the same t²λ give the same symbol."""
        values = [symbol_I(sigma, lam, t).value for lam, t in [(16.0, 0.5), (4.0, 1.0), (1.0, 2.0)]]
        for value in values[1:]:
            assert abs(value - values[0]) < 1e-10

    def test_strict_raises_without_convergence(self):
        """A strict spec turns an unconverged refinement into QuadratureError."""
        starved = QuadratureSpec(panels=1, nodes=2, tolerance=1e-30, max_refinements=1, strict=True)
        with pytest.raises(QuadratureError) as info:
            symbol_I(0.4, 4.0, 1.0, starved)
        assert info.value.error_estimate > 1e-30
        relaxed = symbol_I(0.4, 4.0, 1.0, starved, strict=False)
        assert not relaxed.converged

    def test_strict_accepts_default_settings(self):
        """Default settings converge, so strict evaluation returns normally."""
        value = symbol_I(0.4, 4.0, 1.0, QuadratureSpec(strict=True))
        assert value.converged
        assert abs(value.value - symbol_I_closed(0.4, 4.0, 1.0)) < 1e-8

    @pytest.mark.parametrize("lam,t", [(-1.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
    def test_rejects_bad_arguments(self, lam, t):
        """λ ≥ 0 and t > 0 are required."""
        with pytest.raises(ValidationError):
            symbol_I(0.3, lam, t)
        with pytest.raises(ValidationError):
            symbol_I_closed(0.3, lam, t)


class TestContourLayout:
    """Test the deformed-path geometry."""

    def test_pieces_join_up(self, quad):
        """Consecutive pieces share endpoints."""
        layout = ContourLayout.for_amplitude(2.0, quad)
        pieces = layout.pieces()
        for first, second in zip(pieces, pieces[1:]):
            end = first.point(np.array([first.stop]))[0]
            start = second.point(np.array([second.start]))[0]
            assert abs(end - start) < 1e-14

    def test_window_shrinks_with_amplitude(self, quad):
        """The real panel narrows like A^{-1/2}."""
        small = ContourLayout.for_amplitude(4.0, quad)
        large = ContourLayout.for_amplitude(400.0, quad)
        assert large.delta == pytest.approx(small.delta / 10.0)

    def test_layout_records_panels(self):
        """phase_integral returns the refined layout."""
        _, layout = phase_integral(0.4, 1.5, QuadratureSpec())
        assert layout.panels is not None
        assert len(layout.panels) == 5

    def test_rejects_zero_amplitude(self, quad):
        """The phase integral needs A > 0."""
        with pytest.raises(ValidationError):
            phase_integral(0.4, 0.0, quad)


class TestModifiedBessel:
    """Test K_σ on the imaginary axis."""

    @pytest.mark.parametrize("r", [0.5, 1.0, 4.0])
    def test_half_order(self, r):
        """K_{1/2}(ir) = √(π/(2r)) e^{-iπ/4} e^{-ir}."""
        exact = math.sqrt(math.pi / (2.0 * r)) * np.exp(-0.25j * math.pi - 1j * r)
        assert abs(modified_bessel_K_imag(0.5, r) - exact) / abs(exact) < 1e-9

    def test_rejects_zero(self):
        """r must be positive."""
        with pytest.raises(ValidationError):
            modified_bessel_K_imag(0.5, 0.0)


class TestSymbolOde:
    """Test the Bessel ODE satisfied by the symbol."""

    @pytest.mark.parametrize("sigma,lam", [(0.3, 1.0), (0.7, 4.0)])
    def test_residual_is_small(self, sigma, lam):
        """The finite-difference residual is below 1e-4 at h = 1e-3."""
        assert ode_residual_I(sigma, lam, 1.0, 1e-3) < 1e-4

    def test_residual_is_second_order(self):
        """Halving h divides the residual by about four."""
        coarse = ode_residual_I(0.3, 4.0, 1.0, 2e-2)
        fine = ode_residual_I(0.3, 4.0, 1.0, 1e-2)
        assert abs(math.log2(coarse / fine) - 2.0) < 0.3

    def test_step_must_be_below_t(self):
        """h must be smaller than t."""
        with pytest.raises(ValidationError):
            ode_residual_I(0.3, 1.0, 0.01, 0.02)


class TestSymbolDtn:
    """Test the weighted time derivative of the symbol."""

    def test_zero_lambda(self):
        """The derivative vanishes at λ = 0."""
        assert symbol_dtn(0.4, 0.0, 1.0) == 0j

    def test_half_order_is_time_derivative(self):
        """At σ = 1/2 it is -i√λ e^{-it√λ}."""
        lam, t = 9.0, 0.7
        expected = -3j * cmath.exp(-3j * t)
        assert abs(symbol_dtn(0.5, lam, t) - expected) < 1e-7
        assert abs(symbol_dtn(0.5, lam, t, method="closed") - expected) < 1e-10

    @pytest.mark.parametrize("sigma", [0.25, 0.75])
    def test_matches_finite_difference(self, sigma):
        """(1/2σ) t^{1-2σ} ∂_t I agrees with the closed-form derivative."""
        lam, t, h = 4.0, 0.8, 1e-5
        minus = symbol_I_closed(sigma, lam, t - h)
        plus = symbol_I_closed(sigma, lam, t + h)
        numeric = weighted_derivative(minus, plus, sigma, t, h)
        exact = symbol_dtn(sigma, lam, t, method="closed")
        assert abs(numeric - exact) / abs(exact) < 1e-6

    def test_unknown_method(self):
        """Only the contour and closed methods exist."""
        with pytest.raises(ValidationError):
            symbol_dtn(0.4, 1.0, 1.0, method="series")


class TestTruncatedIntegral:
    """Test ∫_ε^R on steepest-descent paths."""

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_matches_direct_quadrature(self, k):
        """A short window agrees with plain adaptive quadrature."""
        value = truncated_integral(0.4, 4.0, 1.0, 0.3, 6.0, k)
        assert abs(value - _direct(0.4, 4.0, 1.0, 0.3, 6.0, k)) < 1e-7

    def test_zero_lambda(self):
        """Without the A²/s term the phase is linear."""
        value = truncated_integral(0.6, 0.0, 1.0, 1.0, 8.0)
        assert abs(value - _direct(0.6, 0.0, 1.0, 1.0, 8.0, 1)) < 1e-8

    def test_window_entirely_left_of_stationary_point(self):
        """ε < R below the stationary point uses only the small-root path."""
        value = truncated_integral(0.7, 100.0, 1.0, 0.5, 2.0)
        assert abs(value - _direct(0.7, 100.0, 1.0, 0.5, 2.0, 1)) < 1e-8

    @pytest.mark.parametrize("eps,R,k", [(1.0, 1.0, 1), (2.0, 1.0, 1), (0.0, 1.0, 1), (0.1, 1.0, 4)])
    def test_rejects_bad_window(self, eps, R, k):
        """0 < ε < R and k ∈ {1, 2, 3} are required."""
        with pytest.raises(ValidationError):
            truncated_integral(0.4, 1.0, 1.0, eps, R, k)
