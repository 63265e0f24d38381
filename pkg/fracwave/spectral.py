"""Periodic grids, fields and Fourier multipliers.

The torus ``[-L/2, L/2)^d`` stands in for R^d.  Grid point ``j`` along an
axis sits at ``x_j = -L/2 + j h`` with ``h = L / n``.

DFT normalization: the forward transform carries ``1/n^d``,

    c_k = n^{-d} Σ_j F_j exp(-i ξ_k · (x_j - x_0)),

so a constant field 1 has the single coefficient ``c_0 = 1`` and the inverse
transform is a plain sum.  Parseval reads ``‖c‖₂ = n^{-d/2} ‖F‖₂``.
Coefficients are stored in numpy FFT order (``k = 0, 1, …, n/2-1, -n/2, …, -1``
along each axis).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import ValidationError

logger = logging.getLogger(__name__)

ZERO_MODES = ("zero", "reject")

# A coefficient smaller than this fraction of the largest one counts as zero
# when a zero-mode rule is enforced.
ZERO_MODE_TOLERANCE = 1e-13


def _frozen(values: np.ndarray) -> np.ndarray:
    array = np.array(values, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class TorusGrid:
    d: int
    n: int
    box_length: float

    def __post_init__(self) -> None:
        if self.d not in (1, 2, 3):
            raise ValidationError(f"grid dimension must be 1, 2 or 3, got d={self.d}")
        if self.n < 2 or self.n & (self.n - 1):
            raise ValidationError(
                f"points per axis must be a power of two, got n={self.n}"
            )
        if not self.box_length > 0:
            raise ValidationError(
                f"box_length must be positive, got {self.box_length}"
            )
        object.__setattr__(self, "box_length", float(self.box_length))

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def origin(self) -> float:
        return -0.5 * self.box_length

    @property
    def nyquist_radius(self) -> float:
        return np.pi / self.spacing

    def axis(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n)

    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers ``2π k / L`` along one axis, FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    def points(self) -> np.ndarray:
        """Grid coordinates, shape ``(*shape, d)``."""
        axes = np.meshgrid(*([self.axis()] * self.d), indexing="ij")
        return np.stack(axes, axis=-1)

    def frequencies(self) -> np.ndarray:
        """Lattice frequencies, shape ``(*shape, d)``."""
        axes = np.meshgrid(*([self.wavenumbers()] * self.d), indexing="ij")
        return np.stack(axes, axis=-1)

    def xi_squared(self) -> np.ndarray:
        """``|ξ|²`` over the lattice."""
        k2 = self.wavenumbers() ** 2
        total = np.zeros(self.shape)
        for axis in range(self.d):
            shape = [1] * self.d
            shape[axis] = self.n
            total = total + k2.reshape(shape)
        return total

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        """Evaluate ``fn`` on every grid point."""
        pts = self.points().reshape(-1, self.d)
        return Field(self, np.asarray(fn(pts)).reshape(self.shape))

    def mode(self, k: Sequence[int], amplitude: complex = 1.0) -> "Field":
        """The plane wave ``amplitude * exp(i ξ_k · (x - x_0))``."""
        k = tuple(int(v) for v in k)
        if len(k) != self.d:
            raise ValidationError(f"mode index {k} does not match d={self.d}")
        xi = 2.0 * np.pi * np.asarray(k) / self.box_length
        shifted = self.points() - self.origin
        return Field(self, amplitude * np.exp(1j * (shifted @ xi)))

    def to_dict(self) -> dict:
        return {"d": self.d, "n": self.n, "box_length": self.box_length}


@dataclass(frozen=True)
class Field:
    """Complex samples on a grid."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values)
        if values.shape != self.grid.shape:
            raise ValidationError(
                f"field shape {values.shape} does not match grid shape {self.grid.shape}"
            )
        object.__setattr__(self, "values", _frozen(values.astype(complex)))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    def _check(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise ValidationError("fields live on different grids")

    def __add__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar: complex) -> "Field":
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__

    @property
    def real(self) -> "Field":
        return Field(self.grid, self.values.real)

    @property
    def max_imag(self) -> float:
        return float(np.max(np.abs(self.values.imag)))

    def is_real(self, tol: float = 1e-12) -> bool:
        scale = max(float(np.max(np.abs(self.values))), 1.0)
        return self.max_imag <= tol * scale

    def norm(self) -> float:
        """Discrete L² norm ``(h^d Σ |F|²)^{1/2}``."""
        h = self.grid.spacing
        return float(np.sqrt(h**self.grid.d * np.sum(np.abs(self.values) ** 2)))

    def relative_error(self, reference: "Field") -> float:
        self._check(reference)
        ref = reference.norm()
        diff = (self - reference).norm()
        return diff / ref if ref > 0 else diff


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients on a grid's frequency lattice (FFT order)."""

    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs)
        if coeffs.shape != self.grid.shape:
            raise ValidationError(
                f"coefficient shape {coeffs.shape} does not match grid shape {self.grid.shape}"
            )
        object.__setattr__(self, "coeffs", _frozen(coeffs.astype(complex)))

    @property
    def zero_mode(self) -> complex:
        return complex(self.coeffs[(0,) * self.grid.d])

    def multiply(self, multiplier: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * multiplier)

    def has_zero_mode(self) -> bool:
        scale = float(np.max(np.abs(self.coeffs)))
        return abs(self.zero_mode) > ZERO_MODE_TOLERANCE * scale


def dft(f: Field) -> SpectralField:
    return SpectralField(f.grid, np.fft.fftn(f.values) / f.grid.size)


def idft(c: SpectralField) -> Field:
    return Field(c.grid, np.fft.ifftn(c.coeffs) * c.grid.size)


def fractional_power(
    f: Field,
    order: float,
    zero_mode_rule: str = "reject",
    mass: float = 0.0,
) -> Field:
    """Apply ``(|ξ|² + m²)^order``.

    For ``order < 0`` and ``m = 0`` the zero mode has no value; ``reject``
    raises if ``f`` has a zero-mode component and ``zero`` drops it.
    """
    if zero_mode_rule not in ZERO_MODES:
        raise ValidationError(f"zero_mode_rule must be one of {ZERO_MODES}")
    if mass < 0:
        raise ValidationError(f"mass must be non-negative, got {mass}")
    coeffs = dft(f)
    lam = f.grid.xi_squared() + mass**2
    origin = (0,) * f.grid.d
    if order == 0:
        return f
    if order < 0 and lam[origin] == 0:
        if zero_mode_rule == "reject" and coeffs.has_zero_mode():
            raise ValidationError(
                "negative fractional power of a field with a nonzero zero mode "
                "(band-pass the data or use zero_mode_rule='zero')"
            )
        safe = lam.copy()
        safe[origin] = 1.0
        multiplier = safe**order
        multiplier[origin] = 0.0
    else:
        multiplier = lam**order
    return idft(coeffs.multiply(multiplier))


def sobolev_norm(f: Field, s: float) -> float:
    """``(2π)^{-d/2} ‖⟨ξ⟩^s f̂‖₂`` with the continuum transform approximated on the grid.

    Normalized so that ``s = 0`` is :meth:`Field.norm`.
    """
    coeffs = dft(f).coeffs
    weight = (1.0 + f.grid.xi_squared()) ** s
    total = np.sum(weight * np.abs(coeffs) ** 2)
    return float(np.sqrt(f.grid.box_length**f.grid.d * total))


@dataclass(frozen=True)
class BumpSpec:
    """A sum of Gaussian bumps ``Σ a exp(-|y - c|² / (2 w²))``."""

    centers: np.ndarray
    widths: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        widths = np.atleast_1d(np.asarray(self.widths, dtype=float))
        amplitudes = np.atleast_1d(np.asarray(self.amplitudes, dtype=float))
        if not (len(centers) == len(widths) == len(amplitudes)):
            raise ValidationError("bump centers, widths and amplitudes differ in length")
        if np.any(widths <= 0):
            raise ValidationError("bump widths must be positive")
        object.__setattr__(self, "centers", _frozen(centers))
        object.__setattr__(self, "widths", _frozen(widths))
        object.__setattr__(self, "amplitudes", _frozen(amplitudes))

    @classmethod
    def single(cls, d: int, width: float = 0.5, center: Optional[Sequence[float]] = None):
        center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
        return cls(center[None, :], [width], [1.0])

    @classmethod
    def random(
        cls,
        d: int,
        count: int = 3,
        seed: int = 0,
        spread: float = 1.0,
        width_range: Tuple[float, float] = (0.4, 0.8),
    ) -> "BumpSpec":
        rng = np.random.default_rng(seed)
        return cls(
            rng.uniform(-spread, spread, size=(count, d)),
            rng.uniform(*width_range, size=count),
            rng.uniform(0.5, 1.5, size=count) * rng.choice([-1.0, 1.0], size=count),
        )

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    def _profiles(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        points = np.asarray(points, dtype=float)
        offsets = points[..., None, :] - self.centers
        r2 = np.sum(offsets**2, axis=-1)
        return offsets, self.amplitudes * np.exp(-0.5 * r2 / self.widths**2)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.sum(self._profiles(points)[1], axis=-1)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        offsets, profiles = self._profiles(points)
        return -np.sum(offsets * (profiles / self.widths**2)[..., None], axis=-2)

    def to_dict(self) -> dict:
        return {
            "centers": self.centers.tolist(),
            "widths": self.widths.tolist(),
            "amplitudes": self.amplitudes.tolist(),
        }


def _smooth_step(x: np.ndarray) -> np.ndarray:
    """C-infinity ramp from 0 (x <= 0) to 1 (x >= 1)."""
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def band_filter(grid: TorusGrid, r_lo: float, r_hi: float) -> np.ndarray:
    """Radial window equal to 1 inside the band and 0 outside ``[r_lo, r_hi]``."""
    if not (0 < r_lo < r_hi):
        raise ValidationError(f"empty band [{r_lo}, {r_hi}]: need 0 < r_lo < r_hi")
    if r_hi >= grid.nyquist_radius:
        raise ValidationError(
            f"band edge {r_hi} must stay below the Nyquist radius {grid.nyquist_radius:.6g}"
        )
    ramp = 0.25 * (r_hi - r_lo)
    radius = np.sqrt(grid.xi_squared())
    window = _smooth_step((radius - r_lo) / ramp) * _smooth_step((r_hi - radius) / ramp)
    window[radius <= r_lo] = 0.0
    window[radius >= r_hi] = 0.0
    return window


@dataclass(frozen=True)
class SpectralInterpolant:
    """Trigonometric interpolant of a grid field and of its gradient."""

    coeffs: SpectralField
    real: bool = True
    chunk: int = field(default=2048, repr=False)

    @classmethod
    def from_field(cls, f: Field) -> "SpectralInterpolant":
        return cls(dft(f), real=f.is_real())

    @property
    def grid(self) -> TorusGrid:
        return self.coeffs.grid

    def _derivative_wavenumbers(self) -> np.ndarray:
        k = self.grid.wavenumbers().copy()
        k[self.grid.n // 2] = 0.0
        return k

    def _evaluate(self, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
        grid = self.grid
        points = np.asarray(points, dtype=float).reshape(-1, grid.d)
        k = grid.wavenumbers()
        out = np.empty(len(points), dtype=complex)
        for start in range(0, len(points), self.chunk):
            block = points[start : start + self.chunk] - grid.origin
            phases = [np.exp(1j * np.outer(block[:, axis], k)) for axis in range(grid.d)]
            acc = np.einsum("pa,a...->p...", phases[0], coeffs)
            for axis in range(1, grid.d):
                acc = np.einsum("pa,pa...->p...", phases[axis], acc)
            out[start : start + self.chunk] = acc
        return out.real if self.real else out

    def values(self, points: Optional[np.ndarray] = None) -> np.ndarray:
        if points is None:
            values = idft(self.coeffs).values
            return values.real if self.real else values
        return self._evaluate(self.coeffs.coeffs, points)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.values(points)

    def gradient(self, points: Optional[np.ndarray] = None) -> np.ndarray:
        """Spectral gradient, shape ``(m, d)`` at points or ``(*shape, d)`` on the grid."""
        grid = self.grid
        k = self._derivative_wavenumbers()
        components = []
        for axis in range(grid.d):
            shape = [1] * grid.d
            shape[axis] = grid.n
            dcoeffs = self.coeffs.coeffs * (1j * k.reshape(shape))
            if points is None:
                component = np.fft.ifftn(dcoeffs) * grid.size
                components.append(component.real if self.real else component)
            else:
                components.append(self._evaluate(dcoeffs, points))
        return np.stack(components, axis=-1)


def make_test_data(
    grid: TorusGrid,
    bumps: BumpSpec,
    band: Optional[Tuple[float, float]] = None,
) -> Tuple[Field, Callable[..., np.ndarray]]:
    """Sample Gaussian bumps, optionally band-pass them, and return the
    real field with its spectral gradient closure."""
    if bumps.d != grid.d:
        raise ValidationError(f"bumps live in d={bumps.d}, grid has d={grid.d}")
    coeffs = dft(grid.sample(bumps))
    if band is not None:
        coeffs = coeffs.multiply(band_filter(grid, *band))
        origin = (0,) * grid.d
        filtered = np.array(coeffs.coeffs)
        filtered[origin] = 0.0
        coeffs = SpectralField(grid, filtered)
    data = Field(grid, idft(coeffs).values.real)
    interpolant = SpectralInterpolant(dft(data), real=True)
    logger.debug("test data on %s, band=%s, norm=%.6g", grid, band, data.norm())
    return data, interpolant.gradient
