import cmath
import math

import pytest
from scipy.special import gamma

from fracwave.errors import ValidationError
from fracwave.order import FractionalOrder, i_power


class TestIPower:
    """Test the fixed branch of i**alpha."""

    @pytest.mark.parametrize("alpha,expected", [(0, 1), (1, 1j), (2, -1), (3, -1j), (-1, -1j), (4, 1)])
    def test_integer_exponents_exact(self, alpha, expected):
        """Integer exponents return exact quarter turns."""
        assert i_power(alpha) == expected

    def test_fractional_exponent_on_principal_branch(self):
        """i**α equals exp(iπα/2)."""
        assert i_power(0.3) == pytest.approx(cmath.exp(0.15j * math.pi), abs=1e-15)

    def test_branch_is_multiplicative(self):
        """i**a * i**b equals i**(a+b)."""
        assert i_power(0.4) * i_power(0.35) == pytest.approx(i_power(0.75), abs=1e-15)


class TestFractionalOrder:
    """Test validation and derived constants of σ."""

    @pytest.mark.parametrize("value", [0.0, 1.0, -0.2, 1.5, float("nan")])
    def test_rejects_outside_open_interval(self, value):
        """σ outside (0,1) raises a ValidationError naming the interval."""
        with pytest.raises(ValidationError, match=r"σ ∈ \(0,1\)"):
            FractionalOrder(value)

    def test_coerce_accepts_floats_and_instances(self):
        """coerce passes instances through and wraps floats."""
        order = FractionalOrder(0.3)
        assert FractionalOrder.coerce(order) is order
        assert FractionalOrder.coerce(0.3) == order

    def test_complement(self):
        """The complement of σ is 1 - σ."""
        assert FractionalOrder(0.25).complement.sigma == pytest.approx(0.75)

    def test_sin_is_exact_at_half(self):
        """sin(π/2) is exactly one."""
        assert FractionalOrder(0.5).sin_pi_sigma == 1.0

    def test_dtn_constant_at_half_is_minus_i(self):
        """The DtN constant reduces to -i at σ = 1/2."""
        assert FractionalOrder(0.5).dtn_constant == -1j

    @pytest.mark.parametrize("sigma", [0.1, 0.4, 0.75])
    def test_dtn_constant_formula(self, sigma):
        """-i^{2σ} Γ(1-σ) / (σ 4^σ Γ(σ))."""
        expected = -cmath.exp(1j * math.pi * sigma) * gamma(1 - sigma) / (sigma * 4**sigma * gamma(sigma))
        assert FractionalOrder(sigma).dtn_constant == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("sigma", [0.2, 0.5, 0.8])
    def test_neumann_combination(self, sigma):
        """The Neumann weight equals σ4^σΓ(σ)/(sin σπ Γ(1-σ))."""
        expected = sigma * 4**sigma * gamma(sigma) / (math.sin(math.pi * sigma) * gamma(1 - sigma))
        assert FractionalOrder(sigma).neumann_combination == pytest.approx(expected, rel=1e-14)

    def test_str(self):
        """Orders print as σ=value."""
        assert str(FractionalOrder(0.25)) == "σ=0.25"
