"""Physical-space Neumann solutions as integrals over the ball ``B(x, t)``.

With ``γ = d/2 - σ``:

* ``0 < γ < 1``: ``u = c ∫_B g(y) (t² - |x-y|²)^{-γ} dy``;
* ``1 < γ < 2``: ``u = (c/t²) ∫_B (2(σ+1) g + (y-x)·∇g) (t² - |x-y|²)^{1-γ} dy``;
* ``γ = 1``: the surface mean ``(1/(c_d t)) ∫_{∂B} g dS``.

Integrals use polar coordinates ``y = x + tρω``.  Radial nodes come from a
Gauss–Jacobi rule that carries ``(1-ρ²)^{-β}``, so every sample lies strictly
inside the ball or on its boundary sphere.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import ValidationError
from .order import FractionalOrder
from .quadrature import gauss_legendre, radial_rule, sphere_rule, symmetric_jacobi

logger = logging.getLogger(__name__)

ScalarFunction = Callable[[np.ndarray], np.ndarray]
VectorFunction = Callable[[np.ndarray], np.ndarray]

RADIAL_NODES = 48
ANGULAR_NODES = 24

SPHERE_AREA = {2: 2.0 * math.pi, 3: 4.0 * math.pi, 4: 2.0 * math.pi**2}


@dataclass(frozen=True)
class KernelSpec:
    d: int
    sigma: FractionalOrder

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma", FractionalOrder.coerce(self.sigma))
        if self.d not in range(1, 6):
            raise ValidationError(f"kernel dimension must be 1..5, got d={self.d}")
        if self.d == 1 and self.sigma.sigma == 0.5:
            return
        if not (0.0 < self.gamma < 2.0):
            raise ValidationError(
                f"kernel exponent γ = d/2 - σ = {self.gamma:g} lies outside (0, 2)"
            )

    @property
    def gamma(self) -> float:
        return 0.5 * self.d - self.sigma.sigma

    @property
    def regime(self) -> str:
        if self.gamma == 1.0 or self.gamma == 0.0:
            return "limit"
        return "low" if self.gamma < 1.0 else "high"

    @property
    def constant(self) -> float:
        s = self.sigma.sigma
        g = self.gamma
        denominator = math.pi ** (0.5 * self.d) * self.sigma.sin_pi_sigma * gamma_fn(1.0 - s)
        if self.regime == "low":
            return float(s * math.sin(g * math.pi) * gamma_fn(g) / denominator)
        if self.regime == "high":
            return float(
                s * math.sin((g - 1.0) * math.pi) * gamma_fn(g - 1.0) / (2.0 * denominator)
            )
        if self.d == 1:
            return 0.5
        return 1.0 / SPHERE_AREA[self.d]

    @property
    def potential_constant(self) -> float:
        """Factor turning ``Im V_γ g`` into the solution."""
        s = self.sigma.sigma
        return float(
            -s
            * 4.0 ** (s - 0.5 * self.d)
            / (math.pi ** (0.5 * self.d) * self.sigma.sin_pi_sigma * gamma_fn(1.0 - s))
        )


@dataclass(frozen=True)
class PointQuery:
    x: np.ndarray
    t: float

    def __post_init__(self) -> None:
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if x.ndim != 1:
            raise ValidationError("query point must be a vector")
        if not self.t > 0:
            raise ValidationError(f"query time must be positive, got t={self.t}")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", float(self.t))

    @property
    def d(self) -> int:
        return len(self.x)

    def shifted(self, dt: float = 0.0, dx: Optional[Sequence[float]] = None) -> "PointQuery":
        x = self.x if dx is None else self.x + np.asarray(dx, dtype=float)
        return PointQuery(x, self.t + dt)


def _check_dimension(q: PointQuery, d: int) -> None:
    if q.d != d:
        raise ValidationError(f"query point has dimension {q.d}, expected {d}")


def ball_integral(
    h: Callable[[np.ndarray], np.ndarray],
    q: PointQuery,
    d: int,
    beta: float,
    radial_nodes: int = RADIAL_NODES,
    angular_nodes: int = ANGULAR_NODES,
) -> float:
    """``∫_{B(x,t)} h(y) (t² - |x-y|²)^{-β} dy``."""
    _check_dimension(q, d)
    rho, wr = radial_rule(d, beta, radial_nodes)
    omega, wa = sphere_rule(d, angular_nodes)
    points = q.x + q.t * rho[:, None, None] * omega[None, :, :]
    values = np.asarray(h(points.reshape(-1, d)), dtype=float).reshape(len(rho), len(omega))
    return float(q.t ** (d - 2.0 * beta) * (wr @ (values @ wa)))


def sphere_integral(
    g: ScalarFunction, q: PointQuery, d: int, angular_nodes: int = ANGULAR_NODES
) -> float:
    """``∫_{∂B(x,t)} g dS``."""
    _check_dimension(q, d)
    omega, wa = sphere_rule(d, angular_nodes)
    values = np.asarray(g(q.x + q.t * omega), dtype=float)
    return float(q.t ** (d - 1) * (values @ wa))


def _interval_mean_limit(g: ScalarFunction, q: PointQuery, nodes: int) -> float:
    z, w = gauss_legendre(nodes)
    values = np.asarray(g((q.x + q.t * z[:, None])), dtype=float)
    return float(0.5 * q.t * (values @ w))


def kernel_low_solve(
    g: ScalarFunction,
    q: PointQuery,
    spec: KernelSpec,
    radial_nodes: int = RADIAL_NODES,
    angular_nodes: int = ANGULAR_NODES,
) -> float:
    """Neumann solution for ``0 < γ < 1``.

    At ``d = 1, σ = 1/2`` both one-dimensional formulas tend to
    ``½ ∫_{x-t}^{x+t} g``; that value is returned as a limit evaluation.
    """
    if spec.d == 1 and spec.regime == "limit":
        logger.info("d=1, σ=1/2: returning the limit value ½∫g")
        _check_dimension(q, 1)
        return _interval_mean_limit(g, q, radial_nodes)
    if spec.regime != "low":
        raise ValidationError(
            f"kernel_low_solve needs 0 < γ < 1, got γ={spec.gamma:g} ({spec.regime} regime)"
        )
    return spec.constant * ball_integral(g, q, spec.d, spec.gamma, radial_nodes, angular_nodes)


def kernel_high_solve(
    g: ScalarFunction,
    grad_g: Optional[VectorFunction],
    q: PointQuery,
    spec: KernelSpec,
    radial_nodes: int = RADIAL_NODES,
    angular_nodes: int = ANGULAR_NODES,
) -> float:
    """Neumann solution for ``1 < γ < 2``."""
    if spec.regime != "high":
        raise ValidationError(
            f"kernel_high_solve needs 1 < γ < 2, got γ={spec.gamma:g} ({spec.regime} regime)"
        )
    if grad_g is None:
        raise ValidationError("kernel_high_solve needs the gradient of g")
    weight = 2.0 * (spec.sigma.sigma + 1.0)

    def integrand(y: np.ndarray) -> np.ndarray:
        radial = np.sum((y - q.x) * np.asarray(grad_g(y)), axis=-1)
        return weight * np.asarray(g(y)) + radial

    integral = ball_integral(
        integrand, q, spec.d, spec.gamma - 1.0, radial_nodes, angular_nodes
    )
    return spec.constant * integral / q.t**2


def ball_potential_im_V(
    g: ScalarFunction,
    q: PointQuery,
    d: int,
    beta: float,
    radial_nodes: int = RADIAL_NODES,
    angular_nodes: int = ANGULAR_NODES,
) -> float:
    """``Im V_β g(x,t) = -4^β Γ(β) sin(βπ) ∫_B g (t² - |x-y|²)^{-β} dy`` for ``0 < β < 1``."""
    if not (0.0 < beta < 1.0):
        raise ValidationError(f"ball potential needs 0 < β < 1, got {beta}")
    factor = -(4.0**beta) * gamma_fn(beta) * math.sin(beta * math.pi)
    return float(factor * ball_integral(g, q, d, beta, radial_nodes, angular_nodes))


def recursion_solve(
    g: ScalarFunction,
    q: PointQuery,
    spec: KernelSpec,
    step: float = 1e-3,
    radial_nodes: int = RADIAL_NODES,
    angular_nodes: int = ANGULAR_NODES,
) -> float:
    """High-regime solution from ``Im V_γ = (2/t) ∂_t Im V_{γ-1}``.

    The time derivative is a central difference with step ``step * t``.
    """
    if spec.regime != "high":
        raise ValidationError("recursion_solve needs the high regime")
    h = step * q.t
    beta = spec.gamma - 1.0
    plus = ball_potential_im_V(g, q.shifted(dt=h), spec.d, beta, radial_nodes, angular_nodes)
    minus = ball_potential_im_V(g, q.shifted(dt=-h), spec.d, beta, radial_nodes, angular_nodes)
    im_v = (2.0 / q.t) * (plus - minus) / (2.0 * h)
    return spec.potential_constant * im_v


def spherical_mean_solve(
    g: ScalarFunction, q: PointQuery, d: int, angular_nodes: int = ANGULAR_NODES
) -> float:
    """``(1/(c_d t)) ∫_{∂B(x,t)} g dS`` with ``c_d`` the area of the unit sphere."""
    if d not in SPHERE_AREA:
        raise ValidationError(f"spherical_mean_solve supports d in (2, 3, 4), got d={d}")
    return sphere_integral(g, q, d, angular_nodes) / (SPHERE_AREA[d] * q.t)


def descent1d_solve(
    g: ScalarFunction,
    q: PointQuery,
    sigma: Union[FractionalOrder, float],
    nodes: int = RADIAL_NODES,
) -> float:
    """``(σΓ(σ)/(√π Γ(σ+½))) ∫_{x-t}^{x+t} g(y) (t² - (x-y)²)^{σ-½} dy`` for σ > 1/2.

    The bounded weight ``(1 - z²)^{σ-½}`` is carried by Gauss–Jacobi nodes.
    """
    sigma = FractionalOrder.coerce(sigma)
    s = sigma.sigma
    if not s > 0.5:
        raise ValidationError(
            f"descent1d_solve needs σ > 1/2, got {s}; use kernel_low_solve instead"
        )
    _check_dimension(q, 1)
    z, w = symmetric_jacobi(nodes, s - 0.5)
    values = np.asarray(g(q.x + q.t * z[:, None]), dtype=float)
    constant = s * gamma_fn(s) / (math.sqrt(math.pi) * gamma_fn(s + 0.5))
    return float(constant * q.t ** (2.0 * s) * (values @ w))


def classical_d2_solve(
    g: ScalarFunction,
    q: PointQuery,
    radial_nodes: int = RADIAL_NODES,
    angular_nodes: int = ANGULAR_NODES,
) -> float:
    """Planar wave solution ``(t²/2) ⨏_{B(x,t)} g(y) (t² - |x-y|²)^{-1/2} dy``."""
    integral = ball_integral(g, q, 2, 0.5, radial_nodes, angular_nodes)
    return 0.5 * q.t**2 * integral / (math.pi * q.t**2)


def classical_d3_solve(
    g: ScalarFunction, q: PointQuery, angular_nodes: int = ANGULAR_NODES
) -> float:
    """Kirchhoff's formula ``t ⨏_{∂B(x,t)} g dS``."""
    return q.t * sphere_integral(g, q, 3, angular_nodes) / (4.0 * math.pi * q.t**2)


KERNEL_OPS = ("auto", "low", "high", "spherical", "descent", "classical2d", "classical3d")


def evaluate_kernel(
    op: str,
    g: ScalarFunction,
    grad_g: Optional[VectorFunction],
    q: PointQuery,
    sigma: Union[FractionalOrder, float],
    radial_nodes: int = RADIAL_NODES,
    angular_nodes: int = ANGULAR_NODES,
) -> float:
    """Dispatch one kernel operation by name; ``auto`` picks it from ``(d, σ)``."""
    sigma = FractionalOrder.coerce(sigma)
    d = q.d
    if op == "auto":
        if d == 1 and sigma.sigma > 0.5:
            op = "descent"
        else:
            regime = KernelSpec(d, sigma).regime
            op = {"low": "low", "high": "high", "limit": "low" if d == 1 else "spherical"}[regime]
    if op == "low":
        return kernel_low_solve(g, q, KernelSpec(d, sigma), radial_nodes, angular_nodes)
    if op == "high":
        return kernel_high_solve(g, grad_g, q, KernelSpec(d, sigma), radial_nodes, angular_nodes)
    if op == "spherical":
        return spherical_mean_solve(g, q, d, angular_nodes)
    if op == "descent":
        return descent1d_solve(g, q, sigma, radial_nodes)
    if op == "classical2d":
        return classical_d2_solve(g, q, radial_nodes, angular_nodes)
    if op == "classical3d":
        return classical_d3_solve(g, q, angular_nodes)
    raise ValidationError(f"unknown kernel operation {op!r}; choose from {KERNEL_OPS}")
