from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .order import FractionalOrder
from .spectral import Field

BACKENDS = ("bessel", "subordination", "kernel")


@dataclass(frozen=True)
class SolutionSnapshot:
    """A solution field at time ``t`` together with where it came from."""

    t: float
    field: Field
    backend: str
    sigma: FractionalOrder
    mass: float = 0.0

    def __post_init__(self) -> None:
        if not self.t > 0:
            raise ValidationError(f"snapshot time must be positive, got t={self.t}")
        if self.backend not in BACKENDS:
            raise ValidationError(f"unknown backend {self.backend!r}")

    @property
    def grid(self):
        return self.field.grid

    def to_dict(self) -> dict:
        return {
            "backend": self.backend,
            "sigma": self.sigma.sigma,
            "t": self.t,
            "mass": self.mass,
            "grid": self.grid.to_dict(),
        }
