"""Fractional order σ and the constants derived from it.

Powers of ``i`` always use the branch ``i**α = exp(iπα/2)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Union

from scipy.special import gamma

from .errors import ValidationError

_QUARTER_TURNS = (1 + 0j, 1j, -1 + 0j, -1j)


def i_power(alpha: float) -> complex:
    """Return ``i**alpha`` on the branch ``exp(iπα/2)``.

    Integer exponents are returned exactly.
    """
    alpha = float(alpha)
    if alpha.is_integer():
        return _QUARTER_TURNS[int(alpha) % 4]
    return cmath.exp(0.5j * math.pi * alpha)


@dataclass(frozen=True)
class FractionalOrder:
    sigma: float

    def __post_init__(self) -> None:
        sigma = float(self.sigma)
        if not (0.0 < sigma < 1.0) or math.isnan(sigma):
            raise ValidationError(
                f"sigma must satisfy 0 < sigma < 1 (σ ∈ (0,1)), got {self.sigma}"
            )
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def coerce(cls, value: Union["FractionalOrder", float]) -> "FractionalOrder":
        if isinstance(value, FractionalOrder):
            return value
        return cls(value)

    @property
    def complement(self) -> "FractionalOrder":
        """The order 1 - σ."""
        return FractionalOrder(1.0 - self.sigma)

    @property
    def is_half(self) -> bool:
        return self.sigma == 0.5

    @property
    def i_sigma(self) -> complex:
        return i_power(self.sigma)

    @property
    def i_two_sigma(self) -> complex:
        return i_power(2.0 * self.sigma)

    @property
    def i_one_minus_two_sigma(self) -> complex:
        return i_power(1.0 - 2.0 * self.sigma)

    @property
    def sin_pi_sigma(self) -> float:
        if self.is_half:
            return 1.0
        return math.sin(math.pi * self.sigma)

    @property
    def dtn_constant(self) -> complex:
        """``-i^{2σ} Γ(1-σ) / (σ 4^σ Γ(σ))``; exactly ``-i`` at σ = 1/2."""
        s = self.sigma
        ratio = gamma(1.0 - s) / (s * 4.0**s * gamma(s))
        return -self.i_two_sigma * ratio

    @property
    def dirichlet_coefficient(self) -> float:
        """``Γ(1-σ) / 2^σ``."""
        return float(gamma(1.0 - self.sigma) / 2.0**self.sigma)

    @property
    def neumann_coefficient(self) -> float:
        """``σ 2^σ Γ(σ)``."""
        return float(self.sigma * 2.0**self.sigma * gamma(self.sigma))

    @property
    def neumann_combination(self) -> float:
        """Weight of ``Im U_t(L^{-σ} g)`` in the real Neumann solution."""
        s = self.sigma
        return float(s * 4.0**s * gamma(s) / (self.sin_pi_sigma * gamma(1.0 - s)))

    def __str__(self) -> str:
        return f"σ={self.sigma:g}"
