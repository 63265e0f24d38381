"""Oscillatory integrals behind the subordination formula.

The symbol

    I_σ(λ, t) = (i^σ / Γ(σ)) ∫₀^∞ exp(-i(s + A²/s)) s^{σ-1} ds,   A = t√λ / 2,

is evaluated with ``s = A e^w``, which turns the phase into ``2A cosh w`` and
leaves an entire integrand.  The path runs along ``Im w = +θ₀`` from the left,
drops to the real axis at ``Re w = -δ``, crosses the stationary point
``w = 0`` on a real panel, and leaves along ``Im w = -θ₀``.  Along the two
rays the integrand decays like ``exp(-2A |sinh v| sin θ₀)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gamma, roots_jacobi

from .bessel import dirichlet_profile, neumann_profile
from .errors import QuadratureError, ValidationError
from .order import FractionalOrder
from .quadrature import PathPiece, PieceResult, QuadratureSpec, integrate_path, integrate_piece

logger = logging.getLogger(__name__)

Order = Union[FractionalOrder, float]

# Upper end of the steepest-descent parameter; exp(-50) is below double precision.
DESCENT_LENGTH = 50.0


@dataclass(frozen=True)
class OscillatoryValue:
    value: complex
    abs_error_estimate: float
    path_descriptor: Tuple[str, ...]
    converged: bool = True

    def __post_init__(self) -> None:
        if not (np.isfinite(self.value) and np.isfinite(self.abs_error_estimate)):
            raise QuadratureError(
                f"non-finite oscillatory value {self.value} "
                f"(error estimate {self.abs_error_estimate})"
            )

    def __complex__(self) -> complex:
        return self.value


@dataclass(frozen=True)
class ContourLayout:
    """Geometry of the deformed path for one amplitude ``A``."""

    delta: float
    v_tail: float
    theta0: float
    panels: Optional[Tuple[int, ...]] = None

    @classmethod
    def for_amplitude(cls, amplitude: float, quad: QuadratureSpec) -> "ContourLayout":
        theta0 = quad.theta0
        delta = min(quad.window_factor / math.sqrt(amplitude), 1.0)
        v_tail = math.asinh(quad.tail_radius / (amplitude * math.sin(theta0)))
        return cls(delta, max(v_tail, 2.0 * delta), theta0)

    def pieces(self) -> Tuple[PathPiece, ...]:
        delta, v_tail, theta0 = self.delta, self.v_tail, self.theta0
        return (
            PathPiece(
                "rotated-ray(+θ0)",
                -v_tail,
                -delta,
                lambda v: v + 1j * theta0,
                lambda v: np.ones_like(v, dtype=complex),
            ),
            PathPiece(
                "arc(-δ)",
                theta0,
                0.0,
                lambda b: -delta + 1j * b,
                lambda b: np.full_like(b, 1j, dtype=complex),
            ),
            PathPiece(
                "real-panel",
                -delta,
                delta,
                lambda v: v + 0j,
                lambda v: np.ones_like(v, dtype=complex),
            ),
            PathPiece(
                "arc(+δ)",
                0.0,
                theta0,
                lambda b: delta - 1j * b,
                lambda b: np.full_like(b, -1j, dtype=complex),
            ),
            PathPiece(
                "rotated-ray(-θ0)",
                delta,
                v_tail,
                lambda v: v - 1j * theta0,
                lambda v: np.ones_like(v, dtype=complex),
            ),
        )


def _cosh_integrand(sigma: float, amplitude: float) -> Callable[[np.ndarray], np.ndarray]:
    log_a = math.log(amplitude)
    return lambda w: np.exp(sigma * (w + log_a) - 2j * amplitude * np.cosh(w))


def _descriptor(results: Sequence[PieceResult]) -> Tuple[str, ...]:
    return tuple(f"{r.name}[{r.panels}]" for r in results)


def phase_integral(
    sigma: Order,
    amplitude: float,
    quad: Optional[QuadratureSpec] = None,
    layout: Optional[ContourLayout] = None,
) -> Tuple[OscillatoryValue, ContourLayout]:
    """``∫₀^∞ exp(-i(s + A²/s)) s^{σ-1} ds`` for ``A > 0`` on the deformed path.

    A layout that carries panel counts is reused as is; otherwise the panels
    are refined and the returned layout records them.
    """
    sigma = FractionalOrder.coerce(sigma)
    quad = quad or QuadratureSpec()
    if not amplitude > 0:
        raise ValidationError(f"phase amplitude must be positive, got {amplitude}")
    if layout is None:
        layout = ContourLayout.for_amplitude(amplitude, quad)
    results = integrate_path(
        _cosh_integrand(sigma.sigma, amplitude), layout.pieces(), quad, layout.panels
    )
    value = OscillatoryValue(
        sum(r.value for r in results),
        sum(r.error for r in results),
        _descriptor(results),
        all(r.converged for r in results),
    )
    return value, replace(layout, panels=tuple(r.panels for r in results))


def _gamma_ray(sigma: FractionalOrder, quad: QuadratureSpec) -> OscillatoryValue:
    """``i^σ ∫₀^∞ e^{-is} s^{σ-1} ds`` along ``s = ρ e^{-iθ₀}``.

    The head ``ρ ∈ [0, 1]`` uses Gauss–Jacobi nodes for ``ρ^{σ-1}``.
    """
    s = sigma.sigma
    theta0 = quad.theta0
    rotation = np.exp(-1j * theta0)

    def phase(rho: np.ndarray) -> np.ndarray:
        return np.exp(-1j * rho * rotation)

    def head(nodes: int) -> complex:
        x, w = roots_jacobi(nodes, 0.0, s - 1.0)
        return complex(np.sum(w * 2.0**-s * phase(0.5 * (1.0 + x))))

    head_value = head(2 * quad.nodes)
    head_error = abs(head_value - head(quad.nodes))

    rho_max = max(2.0 * quad.tail_radius / math.sin(theta0), 2.0)
    tail = integrate_piece(
        lambda rho: rho ** (s - 1.0) * phase(rho),
        PathPiece(
            "rotated-ray(-θ0)",
            1.0,
            rho_max,
            lambda p: p,
            lambda p: np.ones_like(p),
        ),
        quad,
    )
    factor = sigma.i_sigma * np.exp(-1j * s * theta0)
    return OscillatoryValue(
        complex(factor * (head_value + tail.value)),
        head_error + tail.error,
        ("jacobi-head", f"{tail.name}[{tail.panels}]"),
        tail.converged,
    )


def gamma_oscillatory(sigma: Order, quad: Optional[QuadratureSpec] = None) -> complex:
    """``Γ(σ)`` as the oscillatory integral ``i^σ ∫₀^∞ e^{-is} s^{σ-1} ds``.

    Raises :class:`QuadratureError` when the error estimate exceeds the
    quadrature tolerance.
    """
    sigma = FractionalOrder.coerce(sigma)
    quad = quad or QuadratureSpec()
    result = _gamma_ray(sigma, quad)
    if result.abs_error_estimate > quad.tolerance:
        raise QuadratureError(
            f"oscillatory Gamma integral for {sigma} did not converge",
            result.abs_error_estimate,
        )
    return result.value


def _check_symbol_args(lam: float, t: float) -> None:
    if not lam >= 0:
        raise ValidationError(f"lambda must be non-negative, got {lam}")
    if not t > 0:
        raise ValidationError(f"t must be positive, got {t}")


def symbol_I(
    sigma: Order,
    lam: float,
    t: float,
    quad: Optional[QuadratureSpec] = None,
    layout: Optional[ContourLayout] = None,
    strict: Optional[bool] = None,
) -> OscillatoryValue:
    """``I_σ(λ, t)`` by contour quadrature.

    When ``strict`` (default ``quad.strict``) a refinement that stops short
    with an error estimate above ``quad.tolerance`` raises
    :class:`QuadratureError`.
    """
    sigma = FractionalOrder.coerce(sigma)
    quad = quad or QuadratureSpec()
    _check_symbol_args(lam, t)
    norm = gamma(sigma.sigma)
    if lam == 0:
        ray = _gamma_ray(sigma, quad)
        result = OscillatoryValue(
            ray.value / norm, ray.abs_error_estimate / norm, ray.path_descriptor, ray.converged
        )
    else:
        amplitude = 0.5 * t * math.sqrt(lam)
        integral, _ = phase_integral(sigma, amplitude, quad, layout)
        scale = abs(sigma.i_sigma) / norm
        result = OscillatoryValue(
            sigma.i_sigma * integral.value / norm,
            scale * integral.abs_error_estimate,
            integral.path_descriptor,
            integral.converged,
        )
    strict = quad.strict if strict is None else strict
    if strict and not result.converged and result.abs_error_estimate > quad.tolerance:
        raise QuadratureError(
            f"symbol I for {sigma} at lambda={lam:g}, t={t:g} did not converge",
            result.abs_error_estimate,
        )
    return result


def symbol_I_closed(sigma: Order, lam, t) -> np.ndarray:
    """``I_σ(λ, t) = D(r) + c_σ r^{2σ} P_N(r)`` with ``r = t√λ``.

    ``D`` and ``P_N`` are the Dirichlet and normalised Neumann Bessel profiles
    and ``c_σ`` the Dirichlet-to-Neumann constant; this is the closed form
    ``(2^{1-σ}/Γ(σ)) (ir)^σ K_σ(ir)``.  Accepts arrays.
    """
    sigma = FractionalOrder.coerce(sigma)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValidationError("lambda must be non-negative")
    if not np.all(np.asarray(t) > 0):
        raise ValidationError("t must be positive")
    r = np.asarray(t * np.sqrt(lam), dtype=float)
    shape = r.shape
    r = np.atleast_1d(r)
    value = dirichlet_profile(sigma, r) + sigma.dtn_constant * r ** (
        2.0 * sigma.sigma
    ) * neumann_profile(sigma, r)
    return value.reshape(shape) if shape else complex(value[0])


def symbol_dtn(
    sigma: Order,
    lam: float,
    t: float,
    quad: Optional[QuadratureSpec] = None,
    method: str = "contour",
) -> complex:
    """``∂_t^σ I_σ(λ, t) = c_σ λ^σ I_{1-σ}(λ, t)``; zero at ``λ = 0``."""
    sigma = FractionalOrder.coerce(sigma)
    _check_symbol_args(lam, t)
    if lam == 0:
        return 0j
    if method == "contour":
        companion = symbol_I(sigma.complement, lam, t, quad).value
    elif method == "closed":
        companion = symbol_I_closed(sigma.complement, lam, t)
    else:
        raise ValidationError(f"unknown symbol method {method!r}")
    return sigma.dtn_constant * lam**sigma.sigma * companion


def weighted_derivative(
    minus: complex, plus: complex, sigma: Order, t: float, h: float
):
    """Central-difference ``∂_t^σ = (1/(2σ)) t^{1-2σ} ∂_t``."""
    s = FractionalOrder.coerce(sigma).sigma
    return t ** (1.0 - 2.0 * s) / (2.0 * s) * (plus - minus) / (2.0 * h)


def _descent_path(
    sigma: float, amplitude: float, a: float, k: int, branch: str, quad: QuadratureSpec
) -> Tuple[complex, float]:
    """``∫ f ds`` from ``a`` to the end of its steepest-descent path.

    ``f(s) = exp(-i(s + A²/s)) s^{σ-k}``.  The path solves
    ``s + A²/s = φ(a) - ip``; the small root runs into 0 from above, the
    large root to ``-i∞``.
    """
    phi = a + amplitude**2 / a
    a2 = amplitude**2

    def root(p: np.ndarray) -> np.ndarray:
        c = phi - 1j * p
        disc = np.sqrt(c * c - 4.0 * a2)
        return 2.0 * a2 / (c + disc) if branch == "small" else 0.5 * (c + disc)

    def integrand(p: np.ndarray) -> np.ndarray:
        h = root(p)
        dh = -1j / (1.0 - a2 / (h * h))
        return np.exp(-1j * phi - p) * h ** (sigma - k) * dh

    scale = float(abs(integrand(np.zeros(1))[0]))
    spec = replace(quad, tolerance=quad.tolerance * max(scale, 1.0))
    piece = PathPiece(
        f"descent({branch})",
        0.0,
        DESCENT_LENGTH,
        lambda p: p,
        lambda p: np.ones_like(p),
    )
    result = integrate_piece(integrand, piece, spec)
    return result.value, result.error


def truncated_integral(
    sigma: Order,
    lam: float,
    t: float,
    eps: float,
    R: float,
    k: int = 1,
    quad: Optional[QuadratureSpec] = None,
) -> complex:
    """``∫_ε^R exp(-is - i t²λ/(4s)) s^{σ-k} ds``.

    The window around the stationary point ``s = A`` is integrated on the
    real axis; the monotone-phase parts on either side are moved onto
    steepest-descent paths through their endpoints.
    """
    sigma = FractionalOrder.coerce(sigma)
    quad = quad or QuadratureSpec()
    _check_symbol_args(lam, t)
    if not (0 < eps < R):
        raise ValidationError(f"need 0 < eps < R, got eps={eps}, R={R}")
    if k not in (1, 2, 3):
        raise ValidationError(f"k must be 1, 2 or 3, got {k}")
    s = sigma.sigma
    amplitude = 0.5 * t * math.sqrt(lam)

    if amplitude == 0:
        left, _ = _descent_path(s, 0.0, eps, k, "large", quad)
        right, _ = _descent_path(s, 0.0, R, k, "large", quad)
        return left - right

    delta = ContourLayout.for_amplitude(amplitude, quad).delta
    lo, hi = amplitude * math.exp(-delta), amplitude * math.exp(delta)
    total = 0j
    if eps < lo:
        stop = min(R, lo)
        head, _ = _descent_path(s, amplitude, eps, k, "small", quad)
        tail, _ = _descent_path(s, amplitude, stop, k, "small", quad)
        total += head - tail
    v_lo = max(math.log(eps / amplitude), -delta)
    v_hi = min(math.log(R / amplitude), delta)
    if v_lo < v_hi:
        log_a = math.log(amplitude)
        power = s - k + 1.0
        spec = replace(quad, tolerance=quad.tolerance * max(amplitude ** power * math.exp(abs(power)), 1.0))
        middle = integrate_piece(
            lambda v: np.exp(power * (v + log_a) - 2j * amplitude * np.cosh(v)),
            PathPiece("real-panel", v_lo, v_hi, lambda v: v, lambda v: np.ones_like(v)),
            spec,
        )
        total += middle.value
    if R > hi:
        start = max(eps, hi)
        head, _ = _descent_path(s, amplitude, start, k, "large", quad)
        tail, _ = _descent_path(s, amplitude, R, k, "large", quad)
        total += head - tail
    return complex(total)


def ode_residual_I(
    sigma: Order,
    lam: float,
    t: float,
    h: float,
    quad: Optional[QuadratureSpec] = None,
) -> float:
    """``|FD₂ I + ((1-2σ)/t) FD₁ I + λ I|`` with central differences of step ``h``.

    The three evaluations share one contour layout, so the quadrature error
    varies smoothly with ``t``.
    """
    sigma = FractionalOrder.coerce(sigma)
    quad = quad or QuadratureSpec()
    if not (t > h > 0):
        raise ValidationError(f"need t > h > 0, got t={t}, h={h}")
    _check_symbol_args(lam, t)
    if lam == 0:
        values = [symbol_I(sigma, 0.0, tau, quad).value for tau in (t - h, t, t + h)]
    else:
        root = math.sqrt(lam)
        _, layout = phase_integral(sigma, 0.5 * t * root, quad)
        values = [
            symbol_I(sigma, lam, tau, quad, layout).value for tau in (t - h, t, t + h)
        ]
    minus, centre, plus = values
    second = (plus - 2.0 * centre + minus) / h**2
    first = (plus - minus) / (2.0 * h)
    residual = second + (1.0 - 2.0 * sigma.sigma) / t * first + lam * centre
    return float(abs(residual))


def modified_bessel_K_imag(
    sigma: Order, r: float, quad: Optional[QuadratureSpec] = None
) -> complex:
    """``K_σ(ir) = 2^{σ-1} r^{-σ} ∫₀^∞ exp(-i(s + r²/(4s))) s^{σ-1} ds``."""
    sigma = FractionalOrder.coerce(sigma)
    if not r > 0:
        raise ValidationError(f"r must be positive, got {r}")
    integral, _ = phase_integral(sigma, 0.5 * r, quad)
    return complex(2.0 ** (sigma.sigma - 1.0) * r ** (-sigma.sigma) * integral.value)
