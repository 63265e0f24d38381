"""The solution operator ``U_t^σ`` applied frequency by frequency.

``U_t^σ f`` has Fourier coefficients ``I_σ(|ξ|² + m², t) f̂(ξ)``.  Lattice
points share ``|ξ|²``, so symbols are evaluated once per distinct λ and
kept in a cache keyed on ``(σ, λ, t, m)`` and the quadrature settings.
"""

from __future__ import annotations

import logging
import threading
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ValidationError
from .oscillatory import symbol_I, symbol_I_closed, weighted_derivative
from .order import FractionalOrder
from .quadrature import QuadratureSpec
from .snapshot import SolutionSnapshot
from .spectral import Field, SpectralField, dft, fractional_power, idft

logger = logging.getLogger(__name__)

METHODS = ("closed", "contour")

# Step of the time differences as a fraction of t.
DIFFERENCE_RATIO = 0.1

CacheKey = Tuple[float, float, float, float, QuadratureSpec]


class SymbolCache:
    """Thread-safe store of contour-evaluated symbol values."""

    def __init__(self) -> None:
        self._values: Dict[CacheKey, complex] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._values)

    def clear(self) -> None:
        with self._lock:
            self._values.clear()
            self.hits = self.misses = 0

    def lookup(
        self,
        sigma: FractionalOrder,
        lams: Sequence[float],
        t: float,
        mass: float,
        quad: QuadratureSpec,
        evaluate: Callable[[float], complex],
    ) -> np.ndarray:
        """Symbol values for ``lams``, evaluating missing ones in the given order."""
        out = np.empty(len(lams), dtype=complex)
        for i, lam in enumerate(lams):
            key = (sigma.sigma, float(lam), float(t), float(mass), quad)
            with self._lock:
                cached = self._values.get(key)
            if cached is None:
                cached = evaluate(float(lam))
                with self._lock:
                    self._values[key] = cached
                    self.misses += 1
            else:
                with self._lock:
                    self.hits += 1
            out[i] = cached
        return out


def _check_method(method: str) -> None:
    if method not in METHODS:
        raise ValidationError(f"method must be one of {METHODS}, got {method!r}")


def symbol_values(
    sigma: FractionalOrder,
    lams: np.ndarray,
    t: float,
    mass: float = 0.0,
    method: str = "closed",
    quad: Optional[QuadratureSpec] = None,
    cache: Optional[SymbolCache] = None,
) -> np.ndarray:
    """``I_σ(λ, t)`` for an array of sorted distinct λ."""
    _check_method(method)
    if method == "closed":
        return np.asarray(symbol_I_closed(sigma, lams, t), dtype=complex).reshape(len(lams))
    cache = cache if cache is not None else SymbolCache()
    quad = quad or QuadratureSpec()
    return cache.lookup(
        sigma, lams, t, mass, quad, lambda lam: symbol_I(sigma, lam, t, quad).value
    )


def _multiplier(
    coeffs: SpectralField,
    sigma: FractionalOrder,
    t: float,
    mass: float,
    method: str,
    quad: Optional[QuadratureSpec],
    cache: Optional[SymbolCache],
    symbols: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """Per-frequency symbol over the modes where ``coeffs`` is nonzero."""
    lam = coeffs.grid.xi_squared() + mass**2
    active = coeffs.coeffs != 0
    multiplier = np.zeros(coeffs.grid.shape, dtype=complex)
    if not np.any(active):
        return multiplier
    distinct, inverse = np.unique(lam[active], return_inverse=True)
    if symbols is None:
        values = symbol_values(sigma, distinct, t, mass, method, quad, cache)
    else:
        values = symbols(distinct)
    logger.debug("%d distinct λ for %d active modes", len(distinct), int(active.sum()))
    multiplier[active] = values[inverse]
    return multiplier


def apply_U(
    f: Field,
    sigma: Union[FractionalOrder, float],
    t: float,
    mass: float = 0.0,
    method: str = "closed",
    quad: Optional[QuadratureSpec] = None,
    cache: Optional[SymbolCache] = None,
) -> SolutionSnapshot:
    """``û(ξ,t) = I_σ(|ξ|² + m², t) f̂(ξ)``.

    ``method="closed"`` uses the Bessel-K closed form of the symbol,
    ``method="contour"`` the contour quadrature.  Modes with a zero
    coefficient are skipped.
    """
    sigma = FractionalOrder.coerce(sigma)
    if not t > 0:
        raise ValidationError(f"t must be positive, got {t}")
    if mass < 0:
        raise ValidationError(f"mass must be non-negative, got {mass}")
    coeffs = dft(f)
    multiplier = _multiplier(coeffs, sigma, t, mass, method, quad, cache)
    u = idft(coeffs.multiply(multiplier))
    return SolutionSnapshot(float(t), u, "subordination", sigma, float(mass))


def _require_real(f: Field, label: str) -> None:
    if not f.is_real():
        raise ValidationError(
            f"{label} data must be real (max imaginary part {f.max_imag:.3g})"
        )


def solve_dirichlet_real(
    f: Field,
    sigma: Union[FractionalOrder, float],
    t: float,
    mass: float = 0.0,
    method: str = "closed",
    quad: Optional[QuadratureSpec] = None,
    cache: Optional[SymbolCache] = None,
) -> SolutionSnapshot:
    """``u = Re(i^{1-2σ} U_t^σ f) / sin(σπ)``."""
    sigma = FractionalOrder.coerce(sigma)
    _require_real(f, "Dirichlet")
    u = apply_U(f, sigma, t, mass, method, quad, cache)
    values = (sigma.i_one_minus_two_sigma * u.field.values).real / sigma.sin_pi_sigma
    return SolutionSnapshot(u.t, Field(f.grid, values), "subordination", sigma, u.mass)


def solve_neumann_real(
    g: Field,
    sigma: Union[FractionalOrder, float],
    t: float,
    mass: float = 0.0,
    method: str = "closed",
    quad: Optional[QuadratureSpec] = None,
    cache: Optional[SymbolCache] = None,
    zero_mode_rule: str = "reject",
) -> SolutionSnapshot:
    """``u = -(σ 4^σ Γ(σ) / (sin(σπ) Γ(1-σ))) Im(U_t^σ(L^{-σ} g))``.

    With ``m = 0`` the data must have no zero mode, unless
    ``zero_mode_rule`` is ``"zero"`` (drop it) or ``"limit"`` (propagate it
    with the limit value ``t^{2σ}`` of the Neumann multiplier).
    """
    sigma = FractionalOrder.coerce(sigma)
    _require_real(g, "Neumann")
    constant_part = 0.0
    if mass == 0 and zero_mode_rule == "limit":
        coeffs = np.array(dft(g).coeffs)
        origin = (0,) * g.grid.d
        constant_part = coeffs[origin].real * t ** (2.0 * sigma.sigma)
        coeffs[origin] = 0.0
        g = idft(SpectralField(g.grid, coeffs)).real
        zero_mode_rule = "zero"
    elif zero_mode_rule == "limit":
        zero_mode_rule = "reject"
    potential = fractional_power(g, -sigma.sigma, zero_mode_rule, mass)
    u = apply_U(potential, sigma, t, mass, method, quad, cache)
    values = -sigma.neumann_combination * u.field.values.imag + constant_part
    return SolutionSnapshot(u.t, Field(g.grid, values), "subordination", sigma, u.mass)


def apply_dtn(
    f: Field,
    sigma: Union[FractionalOrder, float],
    t: float,
    mass: float = 0.0,
    method: str = "closed",
    quad: Optional[QuadratureSpec] = None,
    cache: Optional[SymbolCache] = None,
) -> Field:
    """``∂_t^σ U_t^σ f`` with the exact symbol ``c_σ λ^σ I_{1-σ}(λ, t)``."""
    sigma = FractionalOrder.coerce(sigma)
    if not t > 0:
        raise ValidationError(f"t must be positive, got {t}")
    companion = sigma.complement

    def symbols(lams: np.ndarray) -> np.ndarray:
        inner = symbol_values(companion, lams, t, mass, method, quad, cache)
        return sigma.dtn_constant * lams**sigma.sigma * inner

    coeffs = dft(f)
    return idft(coeffs.multiply(_multiplier(coeffs, sigma, t, mass, method, quad, cache, symbols)))


def richardson_exponents(sigma: FractionalOrder, count: int) -> Tuple[float, ...]:
    """Leading powers of ``t`` in the small-``t`` expansion of ``∂_t^σ U_t^σ f``.

    ``I_σ(λ, t)`` is a power series in ``t²`` plus ``t^{2σ}`` times another
    one, so its weighted derivative carries ``t^{2j}`` and ``t^{2-2σ+2j}``.
    """
    candidates = set()
    for j in range(count + 1):
        candidates.add(2.0 * (j + 1))
        candidates.add(2.0 - 2.0 * sigma.sigma + 2.0 * j)
    return tuple(sorted(candidates)[:count])


def difference_bias(sigma: FractionalOrder, ratio: float = DIFFERENCE_RATIO) -> float:
    """Factor a central difference with ``h = ratio·t`` puts on the ``t^{2σ}`` term.

    The difference maps ``t^p`` to ``κ_p p t^{p-1}`` with
    ``κ_p = ((1+ρ)^p - (1-ρ)^p) / (2ρp)``.  Only ``p = 2σ`` reaches ``t = 0``,
    so the extrapolated limit is off by exactly ``κ_{2σ}``; it is 1 at σ = 1/2.
    """
    p = 2.0 * sigma.sigma
    return ((1.0 + ratio) ** p - (1.0 - ratio) ** p) / (2.0 * ratio * p)


def _difference_sample(
    f: Field,
    sigma: FractionalOrder,
    t: float,
    mass: float,
    method: str,
    quad: Optional[QuadratureSpec],
    cache: Optional[SymbolCache],
) -> np.ndarray:
    h = DIFFERENCE_RATIO * t
    minus = dft(apply_U(f, sigma, t - h, mass, method, quad, cache).field).coeffs
    plus = dft(apply_U(f, sigma, t + h, mass, method, quad, cache).field).coeffs
    return weighted_derivative(minus, plus, sigma, t, h) / difference_bias(sigma)


def dtn_extract(
    f: Field,
    sigma: Union[FractionalOrder, float],
    t_sequence: Sequence[float],
    mass: float = 0.0,
    method: str = "closed",
    quad: Optional[QuadratureSpec] = None,
    cache: Optional[SymbolCache] = None,
    exact: bool = False,
) -> Field:
    """Extrapolate ``∂_t^σ U_t^σ f`` to ``t = 0``.

    Each sample is the central difference ``(1/(2σ)) t^{1-2σ} ∂_t`` of
    :func:`apply_U` at ``t ± t/10``, rescaled by :func:`difference_bias`;
    ``exact=True`` uses :func:`apply_dtn` instead.  With ``k`` times the
    first ``k - 1`` exponents of :func:`richardson_exponents` are eliminated.
    The result divided by ``σ.dtn_constant`` is ``(-Δ + m²)^σ f``.

    Contour symbols carry quadrature noise that the difference amplifies by
    ``t^{-2σ}/ρ``; the closed method is the one to extrapolate.
    """
    sigma = FractionalOrder.coerce(sigma)
    times = [float(t) for t in t_sequence]
    if len(times) < 2:
        raise ValidationError("dtn_extract needs at least two t values")
    if any(t <= 0 for t in times) or any(b >= a for a, b in zip(times, times[1:])):
        raise ValidationError(f"t_sequence must be positive and decreasing, got {times}")

    exponents = richardson_exponents(sigma, len(times) - 1)
    logger.debug("Richardson exponents for %s: %s", sigma, exponents)
    if exact:
        samples = [dft(apply_dtn(f, sigma, t, mass, method, quad, cache)).coeffs for t in times]
    else:
        samples = [_difference_sample(f, sigma, t, mass, method, quad, cache) for t in times]
    system = np.array([[1.0] + [t**p for p in exponents] for t in times])
    limit = np.linalg.solve(system, np.stack([s.ravel() for s in samples]))[0]
    return idft(SpectralField(f.grid, limit.reshape(f.grid.shape)))


def l2_growth_ratio(
    f: Field,
    sigma: Union[FractionalOrder, float],
    t: float,
    mass: float = 0.0,
) -> float:
    """``‖U_t^σ f‖₂`` over ``‖f‖₂`` (σ ≤ 1/2) or ``‖f‖₂ + ‖L^{σ/2-1/4} f‖₂`` (σ > 1/2)."""
    sigma = FractionalOrder.coerce(sigma)
    u = apply_U(f, sigma, t, mass).field
    bound = f.norm()
    if sigma.sigma > 0.5:
        bound += fractional_power(f, 0.5 * sigma.sigma - 0.25, "zero", mass).norm()
    return u.norm() / bound if bound > 0 else 0.0

