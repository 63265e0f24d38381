import math

import numpy as np
import pytest
from scipy.special import jv

from fracwave.bessel import (
    BesselOrder,
    bessel_J,
    build_multiplier_plan,
    dirichlet_profile,
    find_switch_radius,
    fixedtime_ratio,
    neumann_profile,
    solve_bessel,
)
from fracwave.errors import ValidationError
from fracwave.order import FractionalOrder
from fracwave.oscillatory import weighted_derivative
from fracwave.spectral import BumpSpec, Field, TorusGrid, make_test_data
from fracwave.subordination import difference_bias


def _weighted_difference(f, g, sigma, t):
    """Central difference of (1/(2σ)) t^{1-2σ} ∂_t u with step t/10."""
    h = 0.1 * t
    minus = solve_bessel(f, g, sigma, t - h).field
    plus = solve_bessel(f, g, sigma, t + h).field
    return Field(minus.grid, weighted_derivative(minus.values, plus.values, sigma, t, h))


class TestBesselJ:
    """Test J_ν against scipy across the series/asymptotic switch."""

    @pytest.mark.parametrize("nu", [-0.75, -0.3, 0.0, 0.3, 0.5, 0.9])
    def test_matches_scipy(self, nu):
        """Series and Hankel branches agree with scipy.special.jv."""
        r = np.concatenate([np.linspace(0.05, 11.9, 60), np.linspace(12.0, 60.0, 40)])
        assert np.allclose(bessel_J(nu, r), jv(nu, r), rtol=0, atol=1e-10)

    def test_scalar_in_scalar_out(self):
        """A float argument returns a float."""
        value = bessel_J(0.25, 3.0)
        assert isinstance(value, float)
        assert value == pytest.approx(jv(0.25, 3.0), abs=1e-12)

    def test_negative_order_singular_at_origin(self):
        """J_ν with ν < 0 is not defined at r = 0."""
        with pytest.raises(ValidationError, match="singular"):
            bessel_J(-0.5, np.array([0.0, 1.0]))

    @pytest.mark.parametrize("nu", [1.0, -1.0, 1.5])
    def test_order_range(self, nu):
        """Only |ν| < 1 is supported."""
        with pytest.raises(ValidationError):
            BesselOrder(nu)

    def test_switch_scan_finds_agreement(self):
        """Near the default radius the two expansions agree to ~1e-10."""
        radius, gap = find_switch_radius([-0.75, -0.25, 0.25, 0.75])
        assert 8.0 <= radius <= 20.0
        assert gap < 1e-9


class TestProfiles:
    """Test the normalized Dirichlet and Neumann profiles."""

    def test_half_order_is_the_wave_equation(self):
        """At σ = 1/2 the profiles are cos r and sin r / r."""
        sigma = FractionalOrder(0.5)
        r = np.linspace(0.01, 40.0, 200)
        assert np.allclose(dirichlet_profile(sigma, r), np.cos(r), atol=1e-10)
        assert np.allclose(neumann_profile(sigma, r), np.sin(r) / r, atol=1e-10)

    @pytest.mark.parametrize("sigma", [0.2, 0.6, 0.9])
    def test_profiles_equal_one_at_origin(self, sigma):
        """Both profiles are 1 at r = 0."""
        order = FractionalOrder(sigma)
        zero = np.zeros(1)
        assert dirichlet_profile(order, zero)[0] == pytest.approx(1.0, rel=1e-14)
        assert neumann_profile(order, zero)[0] == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("sigma", [0.3, 0.7])
    def test_profiles_against_scipy(self, sigma):
        """The profiles match their closed forms through scipy's J."""
        order = FractionalOrder(sigma)
        r = np.linspace(0.5, 30.0, 80)
        dirichlet = order.dirichlet_coefficient * r**sigma * jv(-sigma, r)
        neumann = order.neumann_coefficient * r ** (-sigma) * jv(sigma, r)
        assert np.allclose(dirichlet_profile(order, r), dirichlet, atol=1e-9)
        assert np.allclose(neumann_profile(order, r), neumann, atol=1e-9)


class TestMultiplierPlan:
    """Test multiplier construction on a grid."""

    def test_zero_mode_rules(self, grid1d):
        """The Neumann zero mode is 0 unless the rule is 'limit' or m > 0."""
        rejected = build_multiplier_plan(grid1d, 0.3, 2.0)
        limit = build_multiplier_plan(grid1d, 0.3, 2.0, zero_mode_rule="limit")
        massive = build_multiplier_plan(grid1d, 0.3, 2.0, mass=1.0)
        assert rejected.neumann[0] == 0.0
        assert limit.neumann[0] == pytest.approx(2.0**0.6)
        assert massive.zero_mode_defined
        assert not rejected.zero_mode_defined

    def test_multipliers_are_read_only(self, grid1d):
        """Plans are immutable."""
        plan = build_multiplier_plan(grid1d, 0.3, 1.0)
        with pytest.raises(ValueError):
            plan.dirichlet[0] = 2.0

    @pytest.mark.parametrize(
        "kwargs", [{"t": 0.0}, {"t": 1.0, "mass": -1.0}, {"t": 1.0, "zero_mode_rule": "ignore"}]
    )
    def test_rejects_bad_arguments(self, grid1d, kwargs):
        """t > 0, m ≥ 0 and a known zero-mode rule are required."""
        with pytest.raises(ValidationError):
            build_multiplier_plan(grid1d, 0.3, **kwargs)

    def test_radial_profile_is_sorted(self, grid2d):
        """Distinct radii come back in increasing order."""
        radii, dirichlet, neumann = build_multiplier_plan(grid2d, 0.4, 1.0).radial_profile()
        assert np.all(np.diff(radii) > 0)
        assert len(radii) == len(dirichlet) == len(neumann)


class TestSolveBessel:
    """Test the spectral solution map."""

    def test_wave_equation_on_a_mode(self, grid1d):
        """At σ = 1/2 a mode evolves as cos(t|ξ|) f + sin(t|ξ|)/|ξ| g."""
        f = grid1d.mode((2,))
        g = grid1d.mode((3,), amplitude=0.5)
        t = 0.8
        xi_f = 2.0 * math.pi * 2 / grid1d.box_length
        xi_g = 2.0 * math.pi * 3 / grid1d.box_length
        expected = f * math.cos(t * xi_f) + g * (math.sin(t * xi_g) / xi_g)
        u = solve_bessel(f, g, 0.5, t)
        assert u.field.relative_error(expected) < 1e-12
        assert u.backend == "bessel"

    def test_real_data_gives_real_solution(self, grid2d):
        """Real band-passed data evolves into a real field."""
        f, _ = make_test_data(grid2d, BumpSpec.random(2, seed=1), (0.5, 4.0))
        g, _ = make_test_data(grid2d, BumpSpec.random(2, seed=2), (0.5, 4.0))
        u = solve_bessel(f, g, 0.35, 1.5)
        assert u.field.is_real()

    def test_neumann_zero_mode_rejected(self, grid1d):
        """Neumann data with a mean is rejected for m = 0."""
        g = Field(grid1d, np.ones(grid1d.shape))
        with pytest.raises(ValidationError, match="band-passed"):
            solve_bessel(None, g, 0.4, 1.0)

    def test_neumann_zero_mode_limit(self, grid1d):
        """Under 'limit' a constant g evolves into t^{2σ} g."""
        g = Field(grid1d, np.ones(grid1d.shape))
        u = solve_bessel(None, g, 0.4, 1.5, zero_mode_rule="limit")
        assert np.allclose(u.field.values, 1.5**0.8)

    @pytest.mark.parametrize("sigma", [0.3, 0.6])
    def test_dirichlet_channel_has_no_neumann_trace(self, grid1d, sigma):
        """∂_t^σ of the f-part vanishes as t → 0."""
        f, _ = make_test_data(grid1d, BumpSpec.random(1, seed=5), (0.5, 3.0))
        sizes = [_weighted_difference(f, None, sigma, t).norm() for t in (1e-1, 1e-2, 1e-3)]
        assert sizes[0] > sizes[1] > sizes[2]
        assert sizes[2] < 1e-2 * f.norm()

    @pytest.mark.parametrize("sigma", [0.3, 0.6])
    def test_neumann_channel_recovers_g(self, grid1d, sigma):
        """∂_t^σ of the g-part tends to g."""
        _, g = make_test_data(grid1d, BumpSpec.random(1, seed=6), (0.5, 3.0))
        derivative = _weighted_difference(None, g, sigma, 1e-3) * (1.0 / difference_bias(FractionalOrder(sigma)))
        assert derivative.relative_error(g) < 1e-3

    def test_needs_some_data(self):
        """At least one of f and g is required."""
        with pytest.raises(ValidationError):
            solve_bessel(None, None, 0.4, 1.0)

    def test_grids_must_match(self, grid1d):
        """f and g on different grids are rejected."""
        other = TorusGrid(1, 32, grid1d.box_length)
        with pytest.raises(ValidationError):
            solve_bessel(grid1d.mode((1,)), other.mode((1,)), 0.4, 1.0)

    def test_reuses_plan(self, grid1d):
        """A prebuilt plan gives the same answer as building one."""
        f = grid1d.mode((1,))
        plan = build_multiplier_plan(grid1d, 0.6, 0.9)
        assert solve_bessel(f, None, 0.6, 0.9, plan=plan).field.relative_error(
            solve_bessel(f, None, 0.6, 0.9).field
        ) == 0.0


class TestFixedTimeRatio:
    """Test the fixed-time Sobolev ratio."""

    def test_no_data(self):
        """Without data the ratio is zero."""
        assert fixedtime_ratio(None, None, 0.4, 1.0, 0.0) == 0.0

    def test_bad_branch(self, grid1d):
        """Only the low and high branches exist."""
        with pytest.raises(ValidationError):
            fixedtime_ratio(grid1d.mode((1,)), None, 0.4, 1.0, 0.0, branch="middle")

    @pytest.mark.parametrize("sigma", [0.3, 0.7])
    def test_ratio_is_moderate(self, grid1d, sigma):
        """On band-passed data the ratio stays of order one."""
        f, _ = make_test_data(grid1d, BumpSpec.random(1, seed=8), (0.5, 4.0))
        g, _ = make_test_data(grid1d, BumpSpec.random(1, seed=9), (0.5, 4.0))
        for t in (0.5, 5.0, 50.0):
            ratio = fixedtime_ratio(f, g, sigma, t, 1.0)
            assert 0.0 < ratio < 10.0
