"""Cross-checks between the solver backends, closed forms and bounds.

Every check produces :class:`CheckReport` records.  Checks are independent,
so a suite runs them as jobs in a thread pool and merges the reports sorted
by check name and parameters.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn
from toolz import concat, groupby

from .bessel import bessel_J, build_multiplier_plan, fixedtime_ratio, solve_bessel
from .errors import ValidationError
from .io import atomic_write_text
from .kernels import (
    KernelSpec,
    PointQuery,
    classical_d2_solve,
    classical_d3_solve,
    descent1d_solve,
    evaluate_kernel,
    kernel_high_solve,
    kernel_low_solve,
    recursion_solve,
    spherical_mean_solve,
)
from .order import FractionalOrder
from .oscillatory import (
    gamma_oscillatory,
    modified_bessel_K_imag,
    ode_residual_I,
    symbol_I,
    symbol_I_closed,
    truncated_integral,
)
from .quadrature import QuadratureSpec
from .spectral import BumpSpec, Field, TorusGrid, fractional_power, make_test_data
from .subordination import dtn_extract, l2_growth_ratio, solve_dirichlet_real, solve_neumann_real

logger = logging.getLogger(__name__)

SUITES = ("quick", "acceptance")

LIMIT_SEQUENCES = {
    2: (0.2, 0.1, 0.05, 0.01, 0.002),
    3: (0.4, 0.45, 0.49, 0.499),
    4: (0.8, 0.9, 0.95, 0.99, 0.998),
}

SIGMA_DECILES = tuple(round(0.1 * k, 1) for k in range(1, 10))


@dataclass(frozen=True)
class CheckReport:
    name: str
    parameters: Dict[str, Any]
    metric: float
    tolerance: float
    runtime: float = 0.0
    seed: Optional[int] = None

    @property
    def passed(self) -> bool:
        return bool(self.metric <= self.tolerance)

    def sort_key(self) -> Tuple[str, str]:
        return self.name, json.dumps(self.parameters, sort_keys=True)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "parameters": self.parameters,
            "metric": self.metric,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "runtime": self.runtime,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class HarnessConfig:
    """Grids, data and quadrature shared by the checks.

    ``box_length``/``grid_n`` hold the band-passed spectral problems;
    ``kernel_box``/``kernel_n`` the Gaussian data compared against the
    physical-space kernels, which needs room for the light cone.
    """

    seed: int = 0
    box_length: float = 4.0 * math.pi
    band: Tuple[float, float] = (0.5, 4.0)
    grid_n: Dict[int, int] = field(default_factory=lambda: {1: 64, 2: 32, 3: 32})
    kernel_box: float = 12.8
    kernel_n: Dict[int, int] = field(default_factory=lambda: {1: 128, 2: 128, 3: 64})
    draws: int = 20
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    quick: bool = False

    @classmethod
    def for_suite(cls, suite: str, seed: int = 0, quad: Optional[QuadratureSpec] = None) -> "HarnessConfig":
        if suite not in SUITES:
            raise ValidationError(f"suite must be one of {SUITES}, got {suite!r}")
        quick = suite == "quick"
        return cls(
            seed=seed,
            draws=4 if quick else 20,
            quad=quad or QuadratureSpec(),
            quick=quick,
        )

    def grid(self, d: int, refine: int = 1) -> TorusGrid:
        return TorusGrid(d, refine * self.grid_n[d], self.box_length)

    def kernel_grid(self, d: int) -> TorusGrid:
        return TorusGrid(d, self.kernel_n[d], self.kernel_box)


def _check(
    name: str,
    parameters: Dict[str, Any],
    tolerance: float,
    compute: Callable[[], float],
    seed: Optional[int] = None,
) -> CheckReport:
    started = time.perf_counter()
    metric = float(compute())
    report = CheckReport(name, parameters, metric, tolerance, time.perf_counter() - started, seed)
    logger.debug("%s %s: metric %.3g (tol %.3g)", name, parameters, metric, tolerance)
    return report


def _pick(cases: Sequence[Any], quick: bool, count: int = 1) -> Sequence[Any]:
    return cases[:count] if quick else cases


def band_data(grid: TorusGrid, seed: int, band: Tuple[float, float]) -> Field:
    data, _ = make_test_data(grid, BumpSpec.random(grid.d, seed=seed), band)
    return data


def kernel_bumps(d: int) -> BumpSpec:
    """Two Gaussians near the origin, used wherever kernels meet a grid."""
    centers = np.zeros((2, d))
    centers[0, 0] = 0.2
    centers[1] = -0.3 / math.sqrt(d)
    return BumpSpec(centers, [0.5, 0.45], [1.0, -0.6])


def _grid_queries(grid: TorusGrid) -> List[Tuple[int, ...]]:
    centre = grid.n // 2
    return [(centre + offset,) + (centre,) * (grid.d - 1) for offset in (0, 3, -5)]


def _query_point(d: int) -> np.ndarray:
    return np.array([0.3, -0.2, 0.1, 0.05, -0.1][:d])


class _CompactBump:
    """``exp(-1/(1 - |y-c|²/ρ²))`` inside ``|y-c| < ρ``, exactly 0 outside."""

    def __init__(self, center: Sequence[float], radius: float) -> None:
        self.center = np.asarray(center, dtype=float)
        self.radius = radius

    def _scaled(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        offsets = np.asarray(y, dtype=float) - self.center
        s = np.sum(offsets**2, axis=-1) / self.radius**2
        inside = s < 1.0
        safe = np.where(inside, 1.0 - s, 1.0)
        return offsets, np.where(inside, np.exp(-1.0 / safe), 0.0), safe

    def __call__(self, y: np.ndarray) -> np.ndarray:
        return self._scaled(y)[1]

    def gradient(self, y: np.ndarray) -> np.ndarray:
        offsets, values, safe = self._scaled(y)
        factor = -values / safe**2 * 2.0 / self.radius**2
        return offsets * factor[..., None]


# -- symbol checks -----------------------------------------------------------


def run_symbol_checks(config: Optional[HarnessConfig] = None) -> List[CheckReport]:
    """Oscillatory Gamma, the wave group, circle closure and the symbol ODE."""
    cfg = config or HarnessConfig()
    quad = cfg.quad
    reports = []
    for s in _pick(SIGMA_DECILES, cfg.quick, 3):
        reports.append(
            _check(
                "gamma-oscillatory",
                {"sigma": s},
                1e-8,
                lambda s=s: abs(gamma_oscillatory(s, quad) / gamma_fn(s) - 1.0),
            )
        )

    lams = np.arange(0.0, 101.0) if not cfg.quick else np.arange(0.0, 11.0)
    for t in _pick((0.1, 1.0, 5.0), cfg.quick, 2):

        def wave_group(t: float = t) -> float:
            return max(
                abs(symbol_I(0.5, lam, t, quad).value - np.exp(-1j * t * math.sqrt(lam)))
                for lam in lams
            )

        reports.append(
            _check("wave-group", {"t": t, "lambda_max": float(lams[-1])}, 1e-8, wave_group)
        )

    closure = [
        (s, lam, t)
        for s in (0.25, 0.5, 0.75)
        for lam in (0.5, 4.0, 50.0)
        for t in (0.3, 1.0, 3.0)
    ]
    for s, lam, t in _pick(closure, cfg.quick, 3):

        def circle(s: float = s, lam: float = lam, t: float = t) -> float:
            closed = symbol_I_closed(s, lam, t)
            return abs(symbol_I(s, lam, t, quad).value - closed) / abs(closed)

        reports.append(_check("circle-closure", {"sigma": s, "lambda": lam, "t": t}, 1e-7, circle))

    for r in _pick((0.5, 1.0, 4.0), cfg.quick):

        def k_half(r: float = r) -> float:
            exact = math.sqrt(math.pi / (2.0 * r)) * np.exp(-0.25j * math.pi - 1j * r)
            return abs(modified_bessel_K_imag(0.5, r, quad) - exact) / abs(exact)

        reports.append(_check("bessel-k-half", {"r": r}, 1e-9, k_half))

    for s in (0.3, 0.7):
        for lam in _pick((1.0, 4.0), cfg.quick):
            params = {"sigma": s, "lambda": lam, "t": 1.0, "h": 1e-3}
            reports.append(
                _check(
                    "symbol-ode",
                    params,
                    1e-4,
                    lambda s=s, lam=lam: ode_residual_I(s, lam, 1.0, 1e-3, quad),
                )
            )

            def order_of(s: float = s, lam: float = lam) -> float:
                coarse = ode_residual_I(s, lam, 1.0, 2e-2, quad)
                fine = ode_residual_I(s, lam, 1.0, 1e-2, quad)
                return abs(math.log2(coarse / fine) - 2.0)

            reports.append(
                _check("symbol-ode-order", {"sigma": s, "lambda": lam, "h": [2e-2, 1e-2]}, 0.3, order_of)
            )
    return reports


# -- Dirichlet-to-Neumann ----------------------------------------------------


def run_dtn_recovery(config: Optional[HarnessConfig] = None) -> List[CheckReport]:
    """Recover ``(-Δ)^σ f`` from the weighted Neumann trace."""
    cfg = config or HarnessConfig()
    t_sequence = (0.01, 0.005, 0.0025, 0.00125)
    reports = []
    for d in _pick((1, 2), cfg.quick):
        grid = cfg.grid(d)
        for s in _pick((0.25, 0.5, 0.75), cfg.quick, 2):

            def recovery(d: int = d, s: float = s, grid: TorusGrid = grid) -> float:
                order = FractionalOrder(s)
                f = band_data(grid, cfg.seed, (0.5, 3.0))
                extracted = dtn_extract(f, order, t_sequence)
                expected = fractional_power(f, s) * order.dtn_constant
                return extracted.relative_error(expected)

            params = {"d": d, "sigma": s, "n": grid.n, "t_sequence": list(t_sequence)}
            reports.append(_check("dtn-recovery", params, 1e-4, recovery, cfg.seed))
    return reports


# -- backend equivalence -----------------------------------------------------


def _spectral_pair(d: int, s: float, t: float, cfg: HarnessConfig) -> CheckReport:
    grid = cfg.grid(d)

    def compute() -> float:
        f = band_data(grid, cfg.seed, cfg.band)
        g = band_data(grid, cfg.seed + 1, cfg.band)
        dirichlet = solve_dirichlet_real(f, s, t, method="contour", quad=cfg.quad).field
        neumann = solve_neumann_real(g, s, t, method="contour", quad=cfg.quad).field
        return max(
            dirichlet.relative_error(solve_bessel(f, None, s, t).field),
            neumann.relative_error(solve_bessel(None, g, s, t).field),
        )

    params = {"pair": "bessel/subordination", "d": d, "sigma": s, "t": t, "n": grid.n}
    return _check("backend-compare", params, 1e-6, compute, cfg.seed)


def _kernel_pair(d: int, s: float, t: float, cfg: HarnessConfig) -> CheckReport:
    grid = cfg.kernel_grid(d)
    bumps = kernel_bumps(d)

    def compute() -> float:
        spectral = solve_bessel(None, grid.sample(bumps), s, t, zero_mode_rule="limit").field
        points = grid.points()
        reference, kernel = [], []
        for index in _grid_queries(grid):
            q = PointQuery(points[index], t)
            reference.append(spectral.values[index].real)
            kernel.append(evaluate_kernel("auto", bumps, bumps.gradient, q, s))
        reference = np.asarray(reference)
        return float(np.max(np.abs(np.asarray(kernel) - reference)) / np.max(np.abs(reference)))

    params = {
        "pair": "bessel/kernel",
        "d": d,
        "sigma": s,
        "t": t,
        "n": grid.n,
        "regime": "descent" if d == 1 and s > 0.5 else KernelSpec(d, s).regime,
    }
    return _check("backend-compare", params, 1e-3, compute)


def _recursion_pair(d: int, s: float, t: float) -> CheckReport:
    bumps = kernel_bumps(d)
    spec = KernelSpec(d, s)

    def compute() -> float:
        direct, recursed = [], []
        for shift in (0.0, 0.25, -0.4):
            q = PointQuery(_query_point(d) + shift, t)
            direct.append(kernel_high_solve(bumps, bumps.gradient, q, spec))
            recursed.append(recursion_solve(bumps, q, spec))
        direct = np.asarray(direct)
        return float(np.max(np.abs(direct - np.asarray(recursed))) / np.max(np.abs(direct)))

    params = {"pair": "kernel/recursion", "d": d, "sigma": s, "t": t}
    return _check("backend-compare", params, 1e-3, compute)


def run_backend_compare(config: Optional[HarnessConfig] = None) -> List[CheckReport]:
    """Relative differences between backend pairs on shared query sets."""
    cfg = config or HarnessConfig()
    spectral = [(d, s, t) for d in (1, 2, 3) for s in (0.25, 0.5, 0.75) for t in (0.3, 1.0)]
    kernel = [(1, 0.3, 0.5), (2, 0.6, 0.7), (3, 0.75, 0.5), (3, 0.25, 0.5), (1, 0.7, 0.5)]
    reports = [_spectral_pair(d, s, t, cfg) for d, s, t in _pick(spectral, cfg.quick, 2)]
    reports += [_kernel_pair(d, s, t, cfg) for d, s, t in _pick(kernel, cfg.quick, 2)]
    if not cfg.quick:
        reports.append(_recursion_pair(4, 0.8, 0.5))
    return reports


# -- PDE residuals -----------------------------------------------------------


def _field_residual(
    solve: Callable[[float], Field], s: float, t: float, h: float, mass: float = 0.0
) -> float:
    minus, centre, plus = (solve(tau) for tau in (t - h, t, t + h))
    second = (plus - centre * 2.0 + minus) * (1.0 / h**2)
    first = (plus - minus) * (1.0 / (2.0 * h))
    residual = second + first * ((1.0 - 2.0 * s) / t) + fractional_power(centre, 1.0, mass=mass)
    return residual.norm() / centre.norm()


def _solver(backend: str, f: Field, g: Field, s: float, mass: float = 0.0) -> Callable[[float], Field]:
    if backend == "bessel":
        return lambda tau: solve_bessel(f, g, s, tau, mass).field
    return lambda tau: (
        solve_dirichlet_real(f, s, tau, mass).field + solve_neumann_real(g, s, tau, mass).field
    )


def _kernel_residual(d: int, s: float, t: float, h: float) -> float:
    bumps = kernel_bumps(d)
    q = PointQuery(_query_point(d), t)

    def u(query: PointQuery) -> float:
        return evaluate_kernel("auto", bumps, bumps.gradient, query, s)

    centre = u(q)
    second = (u(q.shifted(dt=h)) - 2.0 * centre + u(q.shifted(dt=-h))) / h**2
    first = (u(q.shifted(dt=h)) - u(q.shifted(dt=-h))) / (2.0 * h)
    laplacian = sum(
        (u(q.shifted(dx=step)) - 2.0 * centre + u(q.shifted(dx=-step))) / h**2
        for step in h * np.eye(d)
    )
    return abs(second + (1.0 - 2.0 * s) / t * first - laplacian) / abs(centre)


def run_pde_residual(config: Optional[HarnessConfig] = None) -> List[CheckReport]:
    """Central-difference residual of ``∂_t²u + ((1-2σ)/t)∂_t u + Lu``."""
    cfg = config or HarnessConfig()
    reports = []

    trig = TorusGrid(1, 64, 4.0 * math.pi)
    f = trig.sample(lambda p: np.cos(0.5 * p[:, 0]))
    g = trig.sample(lambda p: 0.7 * np.sin(0.5 * p[:, 0]))
    for backend in ("bessel", "subordination"):
        reports.append(
            _check(
                "pde-residual",
                {"backend": backend, "data": "trig", "d": 1, "sigma": 0.5, "t": 1.0, "h": 1e-3},
                1e-8,
                partial(_field_residual, _solver(backend, f, g, 0.5), 0.5, 1.0, 1e-3),
            )
        )

    grid = cfg.grid(1)
    f = band_data(grid, cfg.seed, cfg.band)
    g = band_data(grid, cfg.seed + 1, cfg.band)
    for backend in ("bessel", "subordination"):
        for s in _pick((0.3, 0.7), cfg.quick):
            solve = _solver(backend, f, g, s)
            params = {"backend": backend, "d": 1, "sigma": s, "t": 1.0}
            reports.append(
                _check(
                    "pde-residual",
                    {**params, "h": 1e-3},
                    1e-4,
                    partial(_field_residual, solve, s, 1.0, 1e-3),
                    cfg.seed,
                )
            )

            def order_of(solve: Callable[[float], Field] = solve, s: float = s) -> float:
                coarse = _field_residual(solve, s, 1.0, 1e-2)
                fine = _field_residual(solve, s, 1.0, 5e-3)
                return abs(math.log2(coarse / fine) - 2.0)

            reports.append(
                _check("pde-residual-order", {**params, "h": [1e-2, 5e-3]}, 0.25, order_of, cfg.seed)
            )

    reports.append(
        _check(
            "pde-residual",
            {"backend": "kernel", "d": 2, "sigma": 0.6, "t": 0.7, "h": 1e-2},
            1e-2,
            partial(_kernel_residual, 2, 0.6, 0.7, 1e-2),
        )
    )
    return reports


def run_initial_data(config: Optional[HarnessConfig] = None) -> List[CheckReport]:
    """``u(·,t) → f`` and ``u(·,t)/t^{2σ} → g`` as ``t → 0``."""
    cfg = config or HarnessConfig()
    reports = []
    for d in _pick((1, 2), cfg.quick):
        grid = cfg.grid(d)
        f = band_data(grid, cfg.seed, cfg.band)
        for s in (0.25, 0.75):
            t = 1e-3
            reports.append(
                _check(
                    "initial-trace",
                    {"channel": "dirichlet", "d": d, "sigma": s, "t": t},
                    1e-4,
                    lambda f=f, s=s, t=t: solve_bessel(f, None, s, t).field.relative_error(f),
                    cfg.seed,
                )
            )
            reports.append(
                _check(
                    "initial-trace",
                    {"channel": "neumann", "d": d, "sigma": s, "t": t},
                    1e-4,
                    lambda f=f, s=s, t=t: (
                        solve_bessel(None, f, s, t).field * t ** (-2.0 * s)
                    ).relative_error(f),
                    cfg.seed,
                )
            )
    return reports


# -- limits and classical formulas -------------------------------------------


def limit_distances(
    d: int, sigma_sequence: Sequence[float], t: float = 0.5
) -> List[float]:
    """Relative distances from kernel solutions to the surface mean ``(1/(c_d t))∮ g dS``."""
    bumps = kernel_bumps(d)
    q = PointQuery(_query_point(d), t)
    mean = spherical_mean_solve(bumps, q, d)
    return [
        abs(evaluate_kernel("auto", bumps, bumps.gradient, q, s) - mean) / abs(mean)
        for s in sigma_sequence
    ]


def run_limit_study(
    d: int,
    sigma_sequence: Optional[Sequence[float]] = None,
    config: Optional[HarnessConfig] = None,
) -> List[CheckReport]:
    """Kernel solutions along a σ sequence approaching a surface-mean limit.

    The limit is ``σ → 0`` for ``d = 2``, ``σ → 1/2`` for ``d = 3`` and
    ``σ → 1`` for ``d = 4``.
    """
    if d not in LIMIT_SEQUENCES:
        raise ValidationError(f"limit studies exist for d in (2, 3, 4), got d={d}")
    sequence = tuple(sigma_sequence or LIMIT_SEQUENCES[d])
    started = time.perf_counter()
    distances = limit_distances(d, sequence)
    runtime = time.perf_counter() - started
    ratios = [b / a for a, b in zip(distances, distances[1:])]
    params = {"d": d, "sigmas": list(sequence), "distances": distances}
    return [
        CheckReport("limit-monotone", params, max(ratios) if ratios else 0.0, 1.0, runtime),
        CheckReport("limit-final", params, distances[-1], 1e-2, 0.0),
    ]


def run_classical_checks(config: Optional[HarnessConfig] = None) -> List[CheckReport]:
    """σ = 1/2 against the classical wave formulas."""
    cfg = config or HarnessConfig()
    reports = []
    grid = cfg.grid(2)
    xi = np.sqrt(grid.xi_squared())
    for t in _pick((0.3, 1.0, 5.0), cfg.quick):

        def multipliers(t: float = t) -> float:
            plan = build_multiplier_plan(grid, 0.5, t, zero_mode_rule="limit")
            safe = np.where(xi > 0, xi, 1.0)
            sine = np.where(xi > 0, np.sin(t * xi) / safe, t)
            return max(
                float(np.max(np.abs(plan.dirichlet - np.cos(t * xi)))),
                float(np.max(np.abs(plan.neumann - sine))),
            )

        reports.append(_check("classical-multiplier", {"d": 2, "t": t, "n": grid.n}, 1e-10, multipliers))

    for d, classical in ((2, classical_d2_solve), (3, classical_d3_solve)):
        bumps = kernel_bumps(d)
        q = PointQuery(_query_point(d), 0.5)
        kernel = partial(evaluate_kernel, "auto", bumps, bumps.gradient, q, 0.5)
        reports.append(
            _check(
                "classical-formula",
                {"d": d, "against": "kernel", "t": q.t},
                1e-8,
                lambda classical=classical, bumps=bumps, q=q, kernel=kernel: abs(
                    classical(bumps, q) - kernel()
                )
                / abs(kernel()),
            )
        )
        kgrid = cfg.kernel_grid(d)

        def spectral(classical=classical, bumps=bumps, kgrid=kgrid) -> float:
            u = solve_bessel(None, kgrid.sample(bumps), 0.5, 0.5, zero_mode_rule="limit").field
            points = kgrid.points()
            pairs = [
                (classical(bumps, PointQuery(points[i], 0.5)), u.values[i].real)
                for i in _grid_queries(kgrid)
            ]
            scale = max(abs(b) for _, b in pairs)
            return max(abs(a - b) for a, b in pairs) / scale

        reports.append(
            _check("classical-formula", {"d": d, "against": "bessel", "t": 0.5}, 1e-6, spectral)
        )

    bumps = kernel_bumps(1)
    q = PointQuery(_query_point(1), 0.5)
    reports.append(
        _check(
            "descent-limit",
            {"sigma": 0.5 + 1e-5, "t": q.t},
            1e-4,
            lambda: abs(
                descent1d_solve(bumps, q, 0.5 + 1e-5) - kernel_low_solve(bumps, q, KernelSpec(1, 0.5))
            )
            / abs(kernel_low_solve(bumps, q, KernelSpec(1, 0.5))),
        )
    )
    return reports


def run_propagation_checks(config: Optional[HarnessConfig] = None) -> List[CheckReport]:
    """Finite speed of propagation for kernels and for Klein–Gordon spectral solves."""
    cfg = config or HarnessConfig()
    reports = []
    for d, s in ((1, 0.3), (1, 0.7), (2, 0.6), (3, 0.25), (3, 0.5)):
        centre = np.zeros(d)
        centre[0] = 2.0
        bump = _CompactBump(centre, 0.5)
        q = PointQuery(np.zeros(d), 1.0)
        reports.append(
            _check(
                "kernel-support",
                {"d": d, "sigma": s, "t": q.t, "distance": 1.5},
                0.0,
                lambda bump=bump, q=q, s=s: abs(
                    evaluate_kernel("auto", bump, bump.gradient, q, s)
                ),
            )
        )

    grid = TorusGrid(1, 256, 8.0)
    width, t, mass = 0.2, 1.0, 2.0
    data = grid.sample(BumpSpec.single(1, width))
    outside = np.abs(grid.axis()) > t + 8.6 * width
    for s in _pick((0.3, 0.7), cfg.quick):

        def leakage(s: float = s) -> float:
            u = np.abs(solve_bessel(data, data, s, t, mass).field.values) ** 2
            return float(np.sum(u[outside]) / np.sum(u))

        reports.append(
            _check(
                "klein-gordon-leakage",
                {"sigma": s, "t": t, "mass": mass, "box_length": grid.box_length},
                1e-6,
                leakage,
            )
        )
    return reports


# -- bounds ------------------------------------------------------------------


def _drift(coarse: float, refined: float) -> float:
    if not (math.isfinite(coarse) and math.isfinite(refined)) or coarse == 0:
        return math.inf
    return abs(refined - coarse) / abs(coarse)


def aligned_radius(radius: float, amplitude: float) -> float:
    """Nearest ``R ≥ radius`` with phase ``R + A²/R`` a multiple of ``2π``.

    Upper cut-offs sampled this way all see the oscillating tail at the
    same phase, so the sup over ``R`` does not depend on where R falls.
    """
    turns = math.ceil((radius + amplitude**2 / radius) / (2.0 * math.pi))
    phase = 2.0 * math.pi * turns
    return 0.5 * (phase + math.sqrt(phase * phase - 4.0 * amplitude**2))


def truncated_sup(
    sigma: float,
    lams: Sequence[float],
    eps_grid: np.ndarray,
    r_grid: np.ndarray,
    quad: Optional[QuadratureSpec] = None,
) -> float:
    """``sup |∫_ε^R ...| / (1 + λ^{σ/2-1/4})`` over the sampled box (``t = 1, k = 1``)."""
    best = 0.0
    for lam in lams:
        weight = 1.0 + lam ** max(0.0, 0.5 * sigma - 0.25)
        amplitude = 0.5 * math.sqrt(lam)
        for eps in eps_grid:
            for R in r_grid:
                R = aligned_radius(R, amplitude)
                value = truncated_integral(sigma, lam, 1.0, eps, R, 1, quad)
                best = max(best, abs(value) / weight)
    return best


def growth_slope(sigma: float, lams: np.ndarray, t: float = 1.0) -> float:
    """Log-log slope of ``|∂_t² I + ((1-2σ)/t)∂_t I|`` against λ."""
    values = []
    for lam in lams:
        h = 1e-2 / math.sqrt(lam)
        minus, centre, plus = (symbol_I_closed(sigma, lam, tau) for tau in (t - h, t, t + h))
        second = (plus - 2.0 * centre + minus) / h**2
        first = (plus - minus) / (2.0 * h)
        values.append(abs(second + (1.0 - 2.0 * sigma) / t * first))
    slope, _ = np.polyfit(np.log(lams), np.log(values), 1)
    return float(slope)


def bessel_sup(sigma: float, r: np.ndarray) -> float:
    """``sup |J_{±σ}(r)| / r^{±σ}`` for ``r < 1`` and ``/ r^{-1/2}`` beyond."""
    best = 0.0
    for nu in (sigma, -sigma):
        shape = np.where(r < 1.0, r**nu, r**-0.5)
        best = max(best, float(np.max(np.abs(bessel_J(nu, r)) / shape)))
    return best


def symbol_sup(sigma: float, lams: np.ndarray, times: np.ndarray) -> float:
    """``sup |I_σ(λ, t)| / (1 + λ^{max(0, σ/2-1/4)})``."""
    lam, t = np.meshgrid(lams, times, indexing="ij")
    values = np.abs(symbol_I_closed(sigma, lam.ravel(), t.ravel()))
    weight = 1.0 + lam.ravel() ** max(0.0, 0.5 * sigma - 0.25)
    return float(np.max(values / weight))


def _ensemble_sup(cfg: HarnessConfig, refine: int, ratio: Callable[..., float], **cases: Sequence[Any]) -> float:
    grid = cfg.grid(1, refine)
    best = 0.0
    for draw in range(cfg.draws):
        f = band_data(grid, cfg.seed + 2 * draw, cfg.band)
        g = band_data(grid, cfg.seed + 2 * draw + 1, cfg.band)
        for s in cases["sigmas"]:
            for t in cases["times"]:
                best = max(best, ratio(f, g, s, t))
    return best


def run_bound_suite(config: Optional[HarnessConfig] = None) -> List[CheckReport]:
    """Empirical sups over parameter boxes and their drift under box refinement."""
    cfg = config or HarnessConfig()
    quad = cfg.quad
    reports = []

    def sup_drift(fn: Callable[[bool], float]) -> Tuple[float, float, float]:
        coarse, refined = fn(False), fn(True)
        return coarse, refined, _drift(coarse, refined)

    def add_sup(name: str, params: Dict[str, Any], fn: Callable[[bool], float], seed=None) -> None:
        started = time.perf_counter()
        coarse, refined, drift = sup_drift(fn)
        params = {**params, "fitted_constant": refined, "coarse_constant": coarse}
        reports.append(CheckReport(name, params, drift, 0.1, time.perf_counter() - started, seed))

    truncated_cases = [(0.4, (1.0,)), (0.8, (1.0, 1e2, 1e4))]
    for s, lams in _pick(truncated_cases, cfg.quick):
        add_sup(
            "bound-truncated",
            {"sigma": s, "lambdas": list(lams), "k": 1},
            lambda fine, s=s, lams=lams: truncated_sup(
                s,
                lams,
                np.logspace(-4, -2, 5 if fine else 3),
                np.logspace(2, 4, 5 if fine else 3),
                quad,
            ),
        )

    def divergence() -> float:
        coarse = abs(truncated_integral(0.4, 1.0, 1.0, 1e-2, 100.0, 3, quad))
        fine = abs(truncated_integral(0.4, 1.0, 1.0, 1e-6, 100.0, 3, quad))
        return 10.0 / (fine / coarse)

    reports.append(
        _check("bound-divergence", {"sigma": 0.4, "k": 3, "eps": [1e-2, 1e-6], "min_growth": 10.0}, 1.0, divergence)
    )

    exponent = 0.5 * 0.7 + 0.75
    reports.append(
        _check(
            "bound-growth-slope",
            {"sigma": 0.7, "exponent": exponent, "lambdas": [1e2, 1e4]},
            0.05,
            lambda: growth_slope(0.7, np.logspace(2, 4, 9)) - exponent,
        )
    )

    if cfg.quick:
        return reports

    for s in SIGMA_DECILES:
        add_sup(
            "bound-bessel",
            {"sigma": s, "r": [1e-3, 1e3]},
            lambda fine, s=s: bessel_sup(s, np.logspace(-3, 3, 6001 if fine else 3001)),
        )
        add_sup(
            "bound-symbol",
            {"sigma": s, "lambda": [0.0, 1e4], "t": [0.1, 10.0]},
            lambda fine, s=s: symbol_sup(
                s,
                np.concatenate([[0.0], np.logspace(-2, 4, 121 if fine else 61)]),
                np.logspace(-1, 1, 9 if fine else 5),
            ),
        )

    cases = {"sigmas": (0.25, 0.75), "times": (0.1, 1.0, 10.0)}
    for smoothness in (0.0, 1.0, 2.0):
        add_sup(
            "bound-fixedtime",
            {"s": smoothness, **{k: list(v) for k, v in cases.items()}, "draws": cfg.draws},
            lambda fine, smoothness=smoothness: _ensemble_sup(
                cfg,
                2 if fine else 1,
                lambda f, g, s, t: fixedtime_ratio(f, g, s, t, smoothness),
                **cases,
            ),
            cfg.seed,
        )
    add_sup(
        "bound-l2-growth",
        {**{k: list(v) for k, v in cases.items()}, "draws": cfg.draws},
        lambda fine: _ensemble_sup(
            cfg, 2 if fine else 1, lambda f, g, s, t: l2_growth_ratio(f, s, t), **cases
        ),
        cfg.seed,
    )
    return reports


# -- suites ------------------------------------------------------------------


def suite_jobs(suite: str, config: HarnessConfig) -> List[Callable[[], List[CheckReport]]]:
    jobs = [
        partial(run_symbol_checks, config),
        partial(run_dtn_recovery, config),
        partial(run_backend_compare, config),
        partial(run_pde_residual, config),
        partial(run_initial_data, config),
        partial(run_bound_suite, config),
        partial(run_propagation_checks, config),
    ]
    if suite == "acceptance":
        jobs += [partial(run_limit_study, d, None, config) for d in sorted(LIMIT_SEQUENCES)]
        jobs.append(partial(run_classical_checks, config))
    return jobs


def run_suite(
    suite: str = "quick",
    config: Optional[HarnessConfig] = None,
    threads: int = 1,
) -> List[CheckReport]:
    """Run every job of ``suite`` and merge the reports deterministically."""
    config = config or HarnessConfig.for_suite(suite)
    jobs = suite_jobs(suite, config)
    logger.info("running %d %s jobs on %d threads", len(jobs), suite, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda job: job(), jobs))
    return sorted(concat(results), key=CheckReport.sort_key)


def write_report(path: Path, reports: Sequence[CheckReport]) -> Path:
    text = json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"
    return atomic_write_text(path, text)


def _compact(parameters: Dict[str, Any]) -> str:
    shown = {k: v for k, v in parameters.items() if not isinstance(v, list)}
    return " ".join(f"{k}={v}" for k, v in sorted(shown.items()))


def summary_table(reports: Sequence[CheckReport]) -> str:
    """Human-readable table, one row per report plus a tally per check."""
    rows = [("check", "parameters", "metric", "tolerance", "status")]
    for r in reports:
        rows.append(
            (r.name, _compact(r.parameters), "%.3e" % r.metric, "%.1e" % r.tolerance, "ok" if r.passed else "FAIL")
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.append("")
    for name, group in sorted(groupby(lambda r: r.name, reports).items()):
        passed = sum(r.passed for r in group)
        lines.append(f"{name}: {passed}/{len(group)} passed")
    return "\n".join(lines)
