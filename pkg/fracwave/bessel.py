"""Bessel functions of real order in (-1, 1) and the spectral solution
multipliers built from them.

``J_ν`` is evaluated from the ascending series below ``DEFAULT_SWITCH`` and
from the Hankel asymptotic expansion above it.  The series is kept in the
reduced form ``J_ν(r) (r/2)^{-ν}``, which is entire in ``r`` and gives the
``r = 0`` limits of both multipliers without special cases.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple, Union

import numpy as np
from scipy.special import gamma

from .errors import ValidationError
from .order import FractionalOrder
from .snapshot import SolutionSnapshot
from .spectral import Field, SpectralField, TorusGrid, dft, idft, sobolev_norm

logger = logging.getLogger(__name__)

DEFAULT_SWITCH = 12.0
SERIES_TERMS = 80
ASYMPTOTIC_TERMS = 40
ZERO_MODE_RULES = ("reject", "zero", "limit")


@dataclass(frozen=True)
class BesselOrder:
    nu: float

    def __post_init__(self) -> None:
        if not (-1.0 < self.nu < 1.0):
            raise ValidationError(f"Bessel order must satisfy |nu| < 1, got {self.nu}")

    @classmethod
    def coerce(cls, value: Union["BesselOrder", float]) -> "BesselOrder":
        return value if isinstance(value, BesselOrder) else cls(float(value))


def reduced_series(nu: float, r: np.ndarray) -> np.ndarray:
    """``Σ_k (-r²/4)^k / (k! Γ(k+ν+1))``, i.e. ``J_ν(r) (r/2)^{-ν}``."""
    r = np.asarray(r, dtype=float)
    q = -0.25 * r * r
    term = np.full(r.shape, 1.0 / gamma(nu + 1.0))
    total = term.copy()
    peak = np.abs(term)
    for k in range(SERIES_TERMS):
        term = term * q / ((k + 1.0) * (k + 1.0 + nu))
        total = total + term
        peak = np.maximum(peak, np.abs(term))
        if np.all(np.abs(term) <= 1e-18 * peak):
            break
    return total


def hankel_asymptotic(nu: float, r: np.ndarray) -> np.ndarray:
    """Large-argument expansion of ``J_ν``, truncated at its smallest term."""
    r = np.asarray(r, dtype=float)
    mu = 4.0 * nu * nu
    omega = r - (0.5 * nu + 0.25) * math.pi
    p = np.ones_like(r)
    q = np.zeros_like(r)
    active = np.ones(r.shape, dtype=bool)
    previous = np.ones_like(r)
    coefficient = 1.0
    for k in range(1, ASYMPTOTIC_TERMS):
        coefficient *= (mu - (2 * k - 1) ** 2) / (8.0 * k)
        if coefficient == 0.0:
            break
        term = coefficient / r**k
        active &= np.abs(term) < previous
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p = p + np.where(active, sign * term, 0.0)
        else:
            q = q + np.where(active, sign * term, 0.0)
        previous = np.abs(term)
    return np.sqrt(2.0 / (math.pi * r)) * (p * np.cos(omega) - q * np.sin(omega))


def bessel_J(
    order: Union[BesselOrder, float],
    r: Union[float, np.ndarray],
    switch: float = DEFAULT_SWITCH,
) -> Union[float, np.ndarray]:
    """``J_ν(r)`` for ``|ν| < 1`` and ``r ≥ 0`` (``r > 0`` when ``ν < 0``)."""
    nu = BesselOrder.coerce(order).nu
    scalar = np.isscalar(r)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < 0):
        raise ValidationError("Bessel argument must be non-negative")
    if nu < 0 and np.any(r == 0):
        raise ValidationError(f"J_{nu} is singular at r=0")
    out = np.empty_like(r)
    small = r < switch
    if np.any(small):
        rs = r[small]
        out[small] = (0.5 * rs) ** nu * reduced_series(nu, rs)
    if np.any(~small):
        out[~small] = hankel_asymptotic(nu, r[~small])
    return float(out[0]) if scalar else out


def _split(fn_small, fn_large, r: np.ndarray, switch: float) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    small = r < switch
    if np.any(small):
        out[small] = fn_small(r[small])
    if np.any(~small):
        out[~small] = fn_large(r[~small])
    return out


def dirichlet_profile(
    sigma: FractionalOrder, r: np.ndarray, switch: float = DEFAULT_SWITCH
) -> np.ndarray:
    """``(Γ(1-σ)/2^σ) r^σ J_{-σ}(r)``, equal to 1 at ``r = 0``."""
    s = sigma.sigma
    return _split(
        lambda x: gamma(1.0 - s) * reduced_series(-s, x),
        lambda x: sigma.dirichlet_coefficient * x**s * hankel_asymptotic(-s, x),
        r,
        switch,
    )


def neumann_profile(
    sigma: FractionalOrder, r: np.ndarray, switch: float = DEFAULT_SWITCH
) -> np.ndarray:
    """``σ 2^σ Γ(σ) r^{-σ} J_σ(r)``, equal to 1 at ``r = 0``.

    The Neumann multiplier is ``t^{2σ}`` times this profile.
    """
    s = sigma.sigma
    return _split(
        lambda x: gamma(1.0 + s) * reduced_series(s, x),
        lambda x: sigma.neumann_coefficient * x ** (-s) * hankel_asymptotic(s, x),
        r,
        switch,
    )


def find_switch_radius(
    orders: Iterable[float],
    candidates: Optional[np.ndarray] = None,
) -> Tuple[float, float]:
    """Scan for the radius where series and asymptotic expansion agree best.

    Returns the radius and the largest discrepancy over ``orders`` there.
    Diagnostic only: the evaluators use the fixed ``DEFAULT_SWITCH``.
    """
    if candidates is None:
        candidates = np.arange(8.0, 20.5, 0.5)
    orders = list(orders)
    best = (DEFAULT_SWITCH, math.inf)
    for radius in candidates:
        r = np.array([radius])
        gap = max(
            abs(float((0.5 * radius) ** nu * reduced_series(nu, r)[0] - hankel_asymptotic(nu, r)[0]))
            for nu in orders
        )
        if gap < best[1]:
            best = (float(radius), gap)
    logger.debug("switch radius %.2f, discrepancy %.3g", *best)
    return best


@dataclass(frozen=True)
class MultiplierPlan:
    """Dirichlet and Neumann multipliers of one ``(σ, t, m)`` over a grid."""

    grid: TorusGrid
    sigma: FractionalOrder
    t: float
    mass: float
    dirichlet: np.ndarray
    neumann: np.ndarray
    zero_mode_rule: str = "reject"

    @property
    def zero_mode_defined(self) -> bool:
        return self.mass > 0 or self.zero_mode_rule == "limit"

    def radial_profile(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Distinct ``|ξ|`` values with their D and N values, sorted by ``|ξ|``."""
        xi = np.sqrt(self.grid.xi_squared()).ravel()
        keys, index = np.unique(xi, return_index=True)
        return keys, self.dirichlet.ravel()[index], self.neumann.ravel()[index]


def build_multiplier_plan(
    grid: TorusGrid,
    sigma: Union[FractionalOrder, float],
    t: float,
    mass: float = 0.0,
    zero_mode_rule: str = "reject",
    switch: float = DEFAULT_SWITCH,
) -> MultiplierPlan:
    sigma = FractionalOrder.coerce(sigma)
    if not t > 0:
        raise ValidationError(f"t must be positive, got {t}")
    if mass < 0:
        raise ValidationError(f"mass must be non-negative, got {mass}")
    if zero_mode_rule not in ZERO_MODE_RULES:
        raise ValidationError(f"zero_mode_rule must be one of {ZERO_MODE_RULES}")

    lam = grid.xi_squared() + mass**2
    r = t * np.sqrt(lam)
    dirichlet = dirichlet_profile(sigma, r, switch)
    neumann = t ** (2.0 * sigma.sigma) * neumann_profile(sigma, r, switch)
    if mass == 0 and zero_mode_rule != "limit":
        neumann[(0,) * grid.d] = 0.0
    dirichlet.setflags(write=False)
    neumann.setflags(write=False)
    return MultiplierPlan(grid, sigma, float(t), float(mass), dirichlet, neumann, zero_mode_rule)


def _check_neumann_data(g: Field, plan: MultiplierPlan) -> SpectralField:
    coeffs = dft(g)
    if not plan.zero_mode_defined and plan.zero_mode_rule == "reject" and coeffs.has_zero_mode():
        raise ValidationError(
            "Neumann data must be band-passed (zero mode 0) when m=0; "
            "use zero_mode_rule='limit' or 'zero' to override"
        )
    return coeffs


def solve_bessel(
    f: Optional[Field],
    g: Optional[Field],
    sigma: Union[FractionalOrder, float],
    t: float,
    mass: float = 0.0,
    zero_mode_rule: str = "reject",
    plan: Optional[MultiplierPlan] = None,
) -> SolutionSnapshot:
    """``û(ξ,t) = D(ξ) f̂(ξ) + N(ξ) ĝ(ξ)``."""
    if f is None and g is None:
        raise ValidationError("solve_bessel needs Dirichlet data f, Neumann data g, or both")
    grid = (f if f is not None else g).grid
    if f is not None and g is not None and f.grid != g.grid:
        raise ValidationError("f and g live on different grids")
    if plan is None:
        plan = build_multiplier_plan(grid, sigma, t, mass, zero_mode_rule)
    elif plan.grid != grid:
        raise ValidationError("multiplier plan was built for another grid")

    coeffs = np.zeros(grid.shape, dtype=complex)
    if f is not None:
        coeffs += plan.dirichlet * dft(f).coeffs
    if g is not None:
        coeffs += plan.neumann * _check_neumann_data(g, plan).coeffs
    u = idft(SpectralField(grid, coeffs))
    return SolutionSnapshot(plan.t, u, "bessel", plan.sigma, plan.mass)


def fixedtime_ratio(
    f: Optional[Field],
    g: Optional[Field],
    sigma: Union[FractionalOrder, float],
    t: float,
    s: float,
    branch: Optional[str] = None,
) -> float:
    """``‖u(·,t)‖_{2,s}`` divided by the fixed-time Sobolev bound.

    ``branch`` is ``"low"`` (σ ≤ 1/2 form) or ``"high"`` (σ ≥ 1/2 form);
    by default it follows σ.
    """
    sigma = FractionalOrder.coerce(sigma)
    if f is None and g is None:
        return 0.0
    if branch is None:
        branch = "low" if sigma.sigma <= 0.5 else "high"
    if branch not in ("low", "high"):
        raise ValidationError(f"branch must be 'low' or 'high', got {branch!r}")
    u = solve_bessel(f, g, sigma, t).field
    s2 = 2.0 * sigma.sigma
    rhs = 0.0
    if branch == "low":
        if f is not None:
            rhs += sobolev_norm(f, s)
        if g is not None:
            rhs += t**s2 * g.norm() + sobolev_norm(g, s - s2)
    else:
        shift = sigma.sigma - 0.5
        if f is not None:
            rhs += (1.0 + t) ** shift * sobolev_norm(f, s + shift)
        if g is not None:
            rhs += t**s2 * g.norm() + t**shift * sobolev_norm(g, s - sigma.sigma - 0.5)
    numerator = sobolev_norm(u, s)
    if rhs == 0:
        return 0.0 if numerator == 0 else math.inf
    return numerator / rhs
