"""Quadrature rules: Gauss–Legendre panels along complex paths, Gauss–Jacobi
radial rules for ball integrals and product rules on spheres."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureSpec:
    """Contour quadrature settings.

    ``ray_angle`` is the angle θ_ray ∈ (π/2, π) of the rotated ray; the
    path leaves the real axis at ``θ₀ = π - θ_ray``.  ``tail_radius`` is the
    decay exponent reached where a ray is truncated and ``window_factor``
    scales the real panel across the stationary point.  A ``strict`` spec
    makes symbol evaluations raise when refinement stops short of the
    tolerance.
    """

    panels: int = 8
    nodes: int = 20
    ray_angle: float = 2.0 * math.pi / 3.0
    tail_radius: float = 40.0
    window_factor: float = 1.0
    tolerance: float = 1e-10
    max_refinements: int = 10
    strict: bool = False

    def __post_init__(self) -> None:
        if not (math.pi / 2 < self.ray_angle < math.pi):
            raise ValidationError(
                f"ray_angle must lie in (π/2, π), got {self.ray_angle}"
            )
        if not self.tail_radius > 0:
            raise ValidationError(f"tail_radius must be positive, got {self.tail_radius}")
        if not self.window_factor > 0:
            raise ValidationError(
                f"window_factor must be positive, got {self.window_factor}"
            )
        if self.panels < 1 or self.nodes < 2:
            raise ValidationError("need at least one panel and two nodes per panel")
        if not self.tolerance > 0:
            raise ValidationError(f"tolerance must be positive, got {self.tolerance}")

    @property
    def theta0(self) -> float:
        return math.pi - self.ray_angle

    def to_dict(self) -> dict:
        return {
            "panels": self.panels,
            "nodes": self.nodes,
            "ray_angle": self.ray_angle,
            "tail_radius": self.tail_radius,
            "window_factor": self.window_factor,
            "tolerance": self.tolerance,
        }


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(a: float, b: float, panels: int, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss–Legendre rule on ``[a, b]`` (``b < a`` flips the sign)."""
    x, w = gauss_legendre(nodes)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    points = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return points, weights


@dataclass(frozen=True)
class PathPiece:
    """A parametrized segment ``p ↦ z(p)`` of an integration path, ``p`` from ``start`` to ``stop``."""

    name: str
    start: float
    stop: float
    point: Callable[[np.ndarray], np.ndarray]
    tangent: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PieceResult:
    name: str
    value: complex
    error: float
    panels: int
    converged: bool = True


def integrate_piece(
    fn: Callable[[np.ndarray], np.ndarray],
    piece: PathPiece,
    spec: QuadratureSpec,
    panels: int | None = None,
) -> PieceResult:
    """Integrate ``fn(z) dz`` along one piece.

    With ``panels`` given the rule is fixed and the error is estimated from a
    halved rule; otherwise panels double until successive values agree.
    """

    def evaluate(count: int) -> complex:
        p, w = panel_rule(piece.start, piece.stop, count, spec.nodes)
        return complex(np.sum(w * fn(piece.point(p)) * piece.tangent(p)))

    if piece.start == piece.stop:
        return PieceResult(piece.name, 0j, 0.0, 0)
    if panels is not None:
        fine = evaluate(panels)
        coarse = evaluate(max(panels // 2, 1))
        return PieceResult(piece.name, fine, abs(fine - coarse), panels)

    count = spec.panels
    previous = evaluate(count)
    error = math.inf
    for _ in range(spec.max_refinements):
        count *= 2
        current = evaluate(count)
        error = abs(current - previous)
        previous = current
        if error <= spec.tolerance / 4:
            break
    else:
        logger.warning(
            "piece %s did not converge after %d panels (error %.3g)",
            piece.name,
            count,
            error,
        )
        return PieceResult(piece.name, previous, error, count, converged=False)
    logger.debug("piece %s: %d panels, error %.3g", piece.name, count, error)
    return PieceResult(piece.name, previous, error, count)


def integrate_path(
    fn: Callable[[np.ndarray], np.ndarray],
    pieces: Sequence[PathPiece],
    spec: QuadratureSpec,
    panels: Sequence[int] | None = None,
) -> List[PieceResult]:
    if panels is None:
        return [integrate_piece(fn, piece, spec) for piece in pieces]
    return [integrate_piece(fn, piece, spec, count) for piece, count in zip(pieces, panels)]


@lru_cache(maxsize=None)
def radial_rule(d: int, beta: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``∫₀¹ ρ^{d-1} (1-ρ²)^{-β} φ(ρ) dρ``.

    With ``w = ρ²`` this is ``½ ∫₀¹ w^{d/2-1} (1-w)^{-β} φ(√w) dw``, a
    Gauss–Jacobi integral; the endpoint singularity sits in the weight.
    """
    if not beta < 1:
        raise ValidationError(f"radial exponent must be below 1, got {beta}")
    x, w = roots_jacobi(n, -beta, 0.5 * d - 1.0)
    rho = np.sqrt(0.5 * (1.0 + x))
    weights = w * 2.0 ** (beta - 0.5 * d + 1.0) / 4.0
    rho.setflags(write=False)
    weights.setflags(write=False)
    return rho, weights


@lru_cache(maxsize=None)
def symmetric_jacobi(n: int, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss–Jacobi rule on ``[-1, 1]`` for the weight ``(1 - z²)^alpha``."""
    x, w = roots_jacobi(n, alpha, alpha)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def sphere_rule(d: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Product rule on the unit sphere ``S^{d-1}``.

    The circle uses ``2n`` trapezoid points.  Higher spheres split off one
    coordinate ``z`` with weight ``(1 - z²)^{(d-3)/2}`` (Gauss–Jacobi, plain
    Gauss–Legendre on ``S²``) and recurse on the remaining ``S^{d-2}``.
    ``S⁰`` is the pair ``{-1, +1}`` with unit weights.
    """
    if d < 1:
        raise ValidationError(f"sphere dimension must be at least 1, got {d}")
    if d == 1:
        points, weights = np.array([[1.0], [-1.0]]), np.ones(2)
    elif d == 2:
        phi = np.pi * np.arange(2 * n) / n
        points = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        weights = np.full(2 * n, np.pi / n)
    else:
        z, wz = symmetric_jacobi(n, 0.5 * (d - 3))
        sub_points, sub_weights = sphere_rule(d - 1, n)
        scale = np.sqrt(1.0 - z**2)
        points = np.concatenate(
            [
                np.repeat(z, len(sub_points))[:, None],
                (scale[:, None, None] * sub_points[None, :, :]).reshape(-1, d - 1),
            ],
            axis=1,
        )
        weights = np.outer(wz, sub_weights).ravel()
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights
