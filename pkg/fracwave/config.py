"""Run configuration for the command line.

Values are layered: defaults, then a JSON file, then command-line flags.
Flags left unset arrive as ``None`` and do not override anything.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from toolz import merge, valfilter

from .errors import ValidationError
from .order import FractionalOrder
from .quadrature import QuadratureSpec
from .spectral import BumpSpec, Field, TorusGrid, make_test_data

BACKEND_CHOICES = ("bessel", "subordination", "kernel", "all")
CHANNEL_CHOICES = ("neumann", "dirichlet", "both")
GRID_COMMANDS = ("solve", "multiplier-dump", "dtn")

THREADS_ENV = "FRACWAVE_THREADS"


def thread_count() -> int:
    """Worker cap from ``FRACWAVE_THREADS``, default ``min(4, cpu count)``."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValidationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValidationError(f"{THREADS_ENV} must be at least 1, got {value}")
    return value


@dataclass(frozen=True)
class RunConfig:
    command: str = "solve"
    sigma: float = 0.5
    d: int = 1
    n: int = 64
    box_length: float = 4.0 * math.pi
    times: Tuple[float, ...] = (1.0,)
    mass: float = 0.0
    backend: str = "bessel"
    channel: str = "neumann"
    method: str = "closed"
    zero_mode_rule: str = "reject"
    seed: int = 0
    bump_count: int = 3
    band: Optional[Tuple[float, float]] = (0.5, 4.0)
    t_sequence: Tuple[float, ...] = (0.01, 0.005, 0.0025, 0.00125)
    output_dir: str = "fracwave-out"
    tolerance: float = 1e-6
    radial_nodes: int = 48
    angular_nodes: int = 24
    quadrature: Dict[str, Any] = field(default_factory=dict)
    suite: str = "quick"

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown configuration keys: {', '.join(unknown)}")
        values = dict(data)
        for key in ("times", "t_sequence"):
            if key in values and values[key] is not None:
                raw = values[key]
                values[key] = tuple(float(v) for v in (raw if isinstance(raw, (list, tuple)) else [raw]))
        if values.get("band") is not None:
            values["band"] = tuple(float(v) for v in values["band"])
        return cls(**values)

    @classmethod
    def from_file(cls, path: Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read configuration {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError(f"configuration {path} must hold a JSON object")
        return cls.from_dict(data)

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Return a copy with every override that is not ``None`` applied."""
        return RunConfig.from_dict(merge(self.to_dict(), valfilter(lambda v: v is not None, overrides)))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["times"] = list(self.times)
        data["t_sequence"] = list(self.t_sequence)
        data["band"] = list(self.band) if self.band is not None else None
        return data

    @property
    def order(self) -> FractionalOrder:
        return FractionalOrder(self.sigma)

    @property
    def t(self) -> float:
        return self.times[0]

    def grid(self) -> TorusGrid:
        return TorusGrid(self.d, self.n, self.box_length)

    def bumps(self) -> BumpSpec:
        return BumpSpec.random(self.d, self.bump_count, self.seed)

    def initial_data(self) -> Tuple[Field, Field]:
        """Dirichlet and Neumann data: bumps drawn from ``seed`` and ``seed + 1``, band-passed."""
        grid = self.grid()
        f, _ = make_test_data(grid, BumpSpec.random(self.d, self.bump_count, self.seed), self.band)
        g, _ = make_test_data(grid, BumpSpec.random(self.d, self.bump_count, self.seed + 1), self.band)
        return f, g

    def quad(self, strict: bool = False) -> QuadratureSpec:
        """Quadrature settings; ``strict`` makes unconverged symbols raise."""
        settings = merge(self.quadrature, {"strict": True}) if strict else self.quadrature
        try:
            return QuadratureSpec(**settings)
        except TypeError as exc:
            raise ValidationError(f"bad quadrature settings: {exc}") from exc

    def validate(self, command: Optional[str] = None) -> "RunConfig":
        """Check the preconditions of ``command`` before any computation."""
        command = command or self.command
        self.order
        if any(not t > 0 for t in self.times) or not self.times:
            raise ValidationError(f"every t must be positive, got {list(self.times)}")
        if self.mass < 0:
            raise ValidationError(f"mass must be non-negative, got {self.mass}")
        if self.backend not in BACKEND_CHOICES:
            raise ValidationError(f"backend must be one of {BACKEND_CHOICES}, got {self.backend!r}")
        if self.channel not in CHANNEL_CHOICES:
            raise ValidationError(f"channel must be one of {CHANNEL_CHOICES}, got {self.channel!r}")
        if self.method not in ("closed", "contour"):
            raise ValidationError(f"method must be 'closed' or 'contour', got {self.method!r}")
        if self.zero_mode_rule not in ("reject", "zero", "limit"):
            raise ValidationError(f"unknown zero_mode_rule {self.zero_mode_rule!r}")
        if self.tolerance <= 0:
            raise ValidationError(f"tolerance must be positive, got {self.tolerance}")
        self.quad()
        if command in GRID_COMMANDS:
            grid = self.grid()
            if self.band is not None:
                lo, hi = self.band
                if not (0 < lo < hi):
                    raise ValidationError(f"empty band [{lo}, {hi}]: need 0 < r_lo < r_hi")
                if hi >= grid.nyquist_radius:
                    raise ValidationError(
                        f"band edge {hi} must stay below the Nyquist radius {grid.nyquist_radius:.6g}"
                    )
        if command == "solve" and self.backend in ("kernel", "all") and self.channel != "neumann":
            raise ValidationError("the kernel backend solves the Neumann problem only (channel=neumann)")
        if command == "solve" and self.backend in ("kernel", "all") and self.mass > 0:
            raise ValidationError("the kernel backend needs mass 0")
        if command == "kernel-eval" and self.d not in range(1, 6):
            raise ValidationError(f"kernel evaluation supports d in 1..5, got d={self.d}")
        if command == "dtn":
            if self.band is None:
                raise ValidationError("dtn needs band-passed data (set band)")
            if len(self.t_sequence) < 2:
                raise ValidationError("dtn needs at least two t values in t_sequence")
        return self
