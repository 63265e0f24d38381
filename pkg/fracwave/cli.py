from __future__ import annotations

import functools
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import click
import numpy as np
from toolz import compose

from . import __version__
from .bessel import build_multiplier_plan, solve_bessel
from .config import BACKEND_CHOICES, CHANNEL_CHOICES, RunConfig, thread_count
from .errors import QuadratureError, ValidationError
from .io import render_rows, write_field_csv, write_manifest, write_rows, write_solution
from .kernels import KERNEL_OPS, PointQuery, evaluate_kernel
from .oscillatory import symbol_I, symbol_I_closed
from .snapshot import SolutionSnapshot
from .spectral import Field, SpectralInterpolant, fractional_power
from .subordination import dtn_extract, solve_dirichlet_real, solve_neumann_real
from .verify import SUITES, HarnessConfig, run_suite, summary_table, write_report

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = "FRACWAVE_LOG_LEVEL"


def _configure_logging(verbose: int) -> None:
    level = os.environ.get(LOG_LEVEL_ENV)
    if level is None:
        level = ("WARNING", "INFO", "DEBUG")[min(verbose, 2)]
    logging.basicConfig(
        level=level.upper(),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def handle_errors(fn: Callable[..., Any]) -> Callable[..., Any]:
    """Map validation failures to exit code 2 and numerical failures to 1."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            click.echo(f"invalid input: {exc}", err=True)
            sys.exit(2)
        except QuadratureError as exc:
            click.echo(f"numerical failure: {exc} (error estimate {exc.error_estimate:.3g})", err=True)
            sys.exit(1)

    return wrapper


def _parse_band(value: Optional[str]) -> Any:
    if value is None:
        return None
    if value.lower() == "none":
        return "none"
    try:
        lo, hi = (float(v) for v in value.split(":"))
    except ValueError as exc:
        raise ValidationError(f"band must look like LO:HI or 'none', got {value!r}") from exc
    return (lo, hi)


def _parse_floats(value: Optional[str], label: str) -> Optional[Tuple[float, ...]]:
    if value is None:
        return None
    try:
        return tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError as exc:
        raise ValidationError(f"{label} must be a comma separated list of numbers, got {value!r}") from exc


def _parse_range(value: str) -> np.ndarray:
    """``start:stop:step`` with ``stop`` included."""
    try:
        start, stop, step = (float(v) for v in value.split(":"))
    except ValueError as exc:
        raise ValidationError(f"range must look like START:STOP:STEP, got {value!r}") from exc
    if not step > 0 or stop < start:
        raise ValidationError(f"range {value!r} needs step > 0 and stop >= start")
    return np.arange(start, stop + 0.5 * step, step)


def load_config(ctx: click.Context, command: str, **flags: Any) -> RunConfig:
    """Defaults, then the ``--config`` file, then the flags; validated for ``command``."""
    path = ctx.obj.get("config_path") if ctx.obj else None
    base = RunConfig.from_file(path) if path is not None else RunConfig()
    flags = {k: str(v) if isinstance(v, Path) else v for k, v in flags.items()}
    if flags.get("times") == ():
        flags["times"] = None
    band = _parse_band(flags.pop("band", None))
    config = base.with_overrides(command=command, **flags)
    if band is not None:
        config = replace(config, band=None if band == "none" else band)
    logger.debug("effective configuration: %s", config.to_dict())
    return config.validate(command)


def _prepare_output(output_dir: Path, force: bool) -> Path:
    if output_dir.exists() and any(output_dir.iterdir()) and not force:
        click.echo(
            f"Destination {output_dir} exists and is not empty. Use --force to override.",
            err=True,
        )
        sys.exit(2)
    output_dir.mkdir(parents=True, exist_ok=True)
    return output_dir


def _emit(output: Optional[Path], header: Sequence[str], rows: List[Tuple[Any, ...]]) -> None:
    if output is None:
        click.echo(render_rows(header, rows), nl=False)
    else:
        write_rows(output, header, rows)
        click.echo(f"Wrote {len(rows)} rows to {output}")


sigma_option = click.option("--sigma", type=float, default=None, help="Fractional order σ in (0, 1)")
d_option = click.option("--d", "d", type=int, default=None, help="Spatial dimension")
grid_options = compose(
    click.option("--n", "n", type=int, default=None, help="Grid points per axis (power of two)"),
    click.option("--box-length", type=float, default=None, help="Side length of the periodic box"),
)
data_options = compose(
    click.option("--seed", type=int, default=None, help="Seed of the random bump data"),
    click.option("--bumps", "bump_count", type=int, default=None, help="Number of Gaussian bumps"),
    click.option("--band", default=None, help="Radial band LO:HI for the data, or 'none'"),
)
output_options = compose(
    click.option(
        "--output-dir",
        type=click.Path(file_okay=False, path_type=Path),
        default=None,
        help="Directory for CSV and JSON output",
    ),
    click.option(
        "--force",
        is_flag=True,
        default=False,
        help="Allow writing into a non-empty directory",
    ),
)


@click.group()
@click.version_option(__version__)
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="JSON configuration file; flags override its values",
)
@click.option("-v", "--verbose", count=True, help="Log more (repeat for debug output)")
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[Path], verbose: int) -> None:
    """Fractional wave extension solvers and their cross-checks."""
    _configure_logging(verbose)
    ctx.obj = {"config_path": config_path}


def _solve_backend(
    config: RunConfig, backend: str, f: Optional[Field], g: Optional[Field], t: float
) -> SolutionSnapshot:
    sigma, mass = config.order, config.mass
    if backend == "bessel":
        return solve_bessel(f, g, sigma, t, mass, config.zero_mode_rule)
    if backend == "subordination":
        quad = config.quad(strict=True)
        parts = []
        if f is not None:
            parts.append(solve_dirichlet_real(f, sigma, t, mass, config.method, quad).field)
        if g is not None:
            parts.append(
                solve_neumann_real(
                    g, sigma, t, mass, config.method, quad, zero_mode_rule=config.zero_mode_rule
                ).field
            )
        total = parts[0] if len(parts) == 1 else parts[0] + parts[1]
        return SolutionSnapshot(float(t), total, "subordination", sigma, mass)
    raise ValidationError(f"backend {backend!r} does not produce grid fields")


def kernel_line(config: RunConfig, g: Field, t: float) -> Tuple[np.ndarray, np.ndarray]:
    """Kernel solution on the grid line through the centre along axis 0.

    The data is the trigonometric interpolant of ``g``.
    """
    grid = g.grid
    centre = grid.n // 2
    index = (slice(None),) + (centre,) * (grid.d - 1)
    points = grid.points()[index]
    interpolant = SpectralInterpolant.from_field(g)

    def value(x: np.ndarray) -> float:
        return evaluate_kernel(
            "auto",
            interpolant,
            interpolant.gradient,
            PointQuery(x, t),
            config.order,
            config.radial_nodes,
            config.angular_nodes,
        )

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        values = np.array(list(pool.map(value, points)))
    return points, values


@cli.command()
@sigma_option
@d_option
@grid_options
@click.option("--t", "times", type=float, multiple=True, help="Time(s) to solve at; repeatable")
@click.option("--mass", type=float, default=None, help="Klein–Gordon mass m ≥ 0")
@click.option("--backend", type=click.Choice(BACKEND_CHOICES), default=None, help="Solver backend")
@click.option("--channel", type=click.Choice(CHANNEL_CHOICES), default=None, help="Which data to propagate")
@click.option("--method", type=click.Choice(["closed", "contour"]), default=None, help="Symbol evaluation for subordination")
@click.option("--zero-mode-rule", type=click.Choice(["reject", "zero", "limit"]), default=None, help="Zero-mode handling of Neumann data")
@data_options
@output_options
@click.pass_context
@handle_errors
def solve(ctx: click.Context, force: bool, **flags: Any) -> None:
    """Solve the extension problem and write solution snapshots."""
    config = load_config(ctx, "solve", **flags)
    dest = _prepare_output(Path(config.output_dir), force)
    f, g = config.initial_data()
    f = f if config.channel in ("dirichlet", "both") else None
    g = g if config.channel in ("neumann", "both") else None
    backends = ("bessel", "subordination", "kernel") if config.backend == "all" else (config.backend,)

    for k, t in enumerate(config.times):
        fields: Dict[str, Field] = {}
        lines: Dict[str, np.ndarray] = {}
        for backend in backends:
            stem = f"{backend}_t{k}"
            if backend == "kernel":
                points, values = kernel_line(config, g, t)
                lines["kernel"] = values
                rows = [
                    (i, *x, v, 0.0) for i, (x, v) in enumerate(zip(points, values))
                ]
                header = ["i0"] + [f"x{axis}" for axis in range(config.d)] + ["re", "im"]
                write_rows(dest / f"{stem}.csv", header, rows)
                write_manifest(
                    dest / f"{stem}.json",
                    {
                        "version": __version__,
                        "seed": config.seed,
                        "backend": "kernel",
                        "sigma": config.sigma,
                        "t": t,
                        "mass": config.mass,
                        "grid": config.grid().to_dict(),
                        "data_file": f"{stem}.csv",
                        "sampling": "line through the centre along axis 0",
                        "config": config.to_dict(),
                    },
                )
            else:
                snapshot = _solve_backend(config, backend, f, g, t)
                fields[backend] = snapshot.field
                write_solution(snapshot, dest, stem, config.to_dict(), config.seed)
            click.echo(f"{backend}: t={t:g} -> {dest / stem}.csv")

        if len(backends) > 1:
            diff = _diff_summary(fields, lines, config)
            write_manifest(dest / f"diff_t{k}.json", {"t": t, "differences": diff})
            for pair, value in sorted(diff.items()):
                click.echo(f"  {pair}: {value:.3e}")


def _diff_summary(fields: Dict[str, Field], lines: Dict[str, np.ndarray], config: RunConfig) -> Dict[str, float]:
    diff = {}
    if "bessel" in fields and "subordination" in fields:
        diff["bessel/subordination"] = fields["subordination"].relative_error(fields["bessel"])
    if "kernel" in lines and "bessel" in fields:
        grid = fields["bessel"].grid
        index = (slice(None),) + (grid.n // 2,) * (grid.d - 1)
        reference = fields["bessel"].values[index].real
        scale = float(np.max(np.abs(reference))) or 1.0
        diff["bessel/kernel"] = float(np.max(np.abs(lines["kernel"] - reference)) / scale)
    return diff


@cli.command("symbol-table")
@sigma_option
@click.option("--lambda", "lambda_range", default="0:10:0.5", show_default=True, help="λ values as START:STOP:STEP")
@click.option("--t", "times", type=float, multiple=True, help="Time(s); repeatable")
@click.option("--method", type=click.Choice(["closed", "contour"]), default="contour", show_default=True, help="How I_σ is evaluated")
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path), default=None, help="CSV file (stdout if omitted)")
@click.pass_context
@handle_errors
def symbol_table(ctx: click.Context, lambda_range: str, method: str, output: Optional[Path], **flags: Any) -> None:
    """Tabulate the symbol I_σ(λ, t)."""
    config = load_config(ctx, "symbol-table", **flags)
    lams = _parse_range(lambda_range)
    quad = config.quad(strict=True)
    rows = []
    for t in config.times:
        for lam in lams:
            if method == "contour":
                result = symbol_I(config.order, float(lam), t, quad)
                value, error = result.value, result.abs_error_estimate
            else:
                value, error = symbol_I_closed(config.order, float(lam), t), 0.0
            rows.append((config.sigma, float(lam), t, value.real, value.imag, error))
    _emit(output, ["sigma", "lambda", "t", "re", "im", "err"], rows)


@cli.command("kernel-eval")
@sigma_option
@d_option
@click.option("--t", "times", type=float, multiple=True, help="Time(s); repeatable")
@click.option("--op", type=click.Choice(KERNEL_OPS), default="auto", show_default=True, help="Kernel formula")
@click.option("--points", "layout", type=click.Choice(["line", "plane"]), default="line", show_default=True, help="Query layout")
@click.option("--extent", type=float, default=1.0, show_default=True, help="Half width of the query set")
@click.option("--count", type=int, default=11, show_default=True, help="Query points per axis")
@click.option("--seed", type=int, default=None, help="Seed of the random bump data")
@click.option("--bumps", "bump_count", type=int, default=None, help="Number of Gaussian bumps")
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path), default=None, help="CSV file (stdout if omitted)")
@click.pass_context
@handle_errors
def kernel_eval(
    ctx: click.Context,
    op: str,
    layout: str,
    extent: float,
    count: int,
    output: Optional[Path],
    **flags: Any,
) -> None:
    """Evaluate a physical-space kernel solution at query points."""
    config = load_config(ctx, "kernel-eval", **flags)
    if count < 1:
        raise ValidationError(f"count must be positive, got {count}")
    if layout == "plane" and config.d < 2:
        raise ValidationError("a plane of query points needs d >= 2")
    bumps = config.bumps()
    axis = np.linspace(-extent, extent, count)
    queries = []
    for a in axis:
        for b in axis if layout == "plane" else (0.0,):
            x = np.zeros(config.d)
            x[0] = a
            if layout == "plane":
                x[1] = b
            queries.append(x)

    def value(item: Tuple[np.ndarray, float]) -> float:
        x, t = item
        q = PointQuery(x, t)
        return evaluate_kernel(op, bumps, bumps.gradient, q, config.order, config.radial_nodes, config.angular_nodes)

    items = [(x, t) for t in config.times for x in queries]
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        values = list(pool.map(value, items))
    header = [f"x{axis}" for axis in range(config.d)] + ["t", "u"]
    _emit(output, header, [(*x, t, u) for (x, t), u in zip(items, values)])


@cli.command("multiplier-dump")
@sigma_option
@d_option
@grid_options
@click.option("--t", "times", type=float, multiple=True, help="Time(s); repeatable")
@click.option("--mass", type=float, default=None, help="Klein–Gordon mass m ≥ 0")
@click.option("--zero-mode-rule", type=click.Choice(["reject", "zero", "limit"]), default=None, help="Value of N at the zero mode")
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path), default=None, help="CSV file (stdout if omitted)")
@click.pass_context
@handle_errors
def multiplier_dump(ctx: click.Context, output: Optional[Path], **flags: Any) -> None:
    """Write the radial Dirichlet and Neumann multiplier profiles."""
    config = load_config(ctx, "multiplier-dump", band="none", **flags)
    rows = []
    for t in config.times:
        plan = build_multiplier_plan(config.grid(), config.order, t, config.mass, config.zero_mode_rule)
        xi, dirichlet, neumann = plan.radial_profile()
        rows.extend(zip([t] * len(xi), xi, dirichlet, neumann))
    _emit(output, ["t", "xi", "dirichlet", "neumann"], rows)


@cli.command()
@sigma_option
@d_option
@grid_options
@click.option("--t-sequence", default=None, help="Decreasing times, comma separated")
@click.option("--mass", type=float, default=None, help="Klein–Gordon mass m ≥ 0")
@click.option("--method", type=click.Choice(["closed", "contour"]), default=None, help="Symbol evaluation")
@data_options
@output_options
@click.pass_context
@handle_errors
def dtn(ctx: click.Context, force: bool, t_sequence: Optional[str], **flags: Any) -> None:
    """Recover (-Δ + m²)^σ f from the weighted Neumann trace."""
    config = load_config(ctx, "dtn", t_sequence=_parse_floats(t_sequence, "t-sequence"), **flags)
    dest = _prepare_output(Path(config.output_dir), force)
    f, _ = config.initial_data()
    order = config.order
    extracted = dtn_extract(f, order, config.t_sequence, config.mass, config.method, config.quad(strict=True))
    recovered = extracted * (1.0 / order.dtn_constant)
    reference = fractional_power(f, order.sigma, mass=config.mass)
    error = recovered.relative_error(reference)
    write_field_csv(dest / "dtn.csv", recovered)
    write_manifest(
        dest / "dtn.json",
        {
            "version": __version__,
            "seed": config.seed,
            "sigma": order.sigma,
            "mass": config.mass,
            "grid": config.grid().to_dict(),
            "t_sequence": list(config.t_sequence),
            "dtn_constant": [order.dtn_constant.real, order.dtn_constant.imag],
            "relative_error": error,
            "data_file": "dtn.csv",
            "config": config.to_dict(),
        },
    )
    click.echo(f"relative error of the recovered fractional power: {error:.3e}")


@cli.command()
@click.option("--suite", type=click.Choice(SUITES), default=None, help="Which checks to run [default: quick]")
@click.option("--seed", type=int, default=None, help="Seed of the random ensembles")
@click.option(
    "--report",
    type=click.Path(dir_okay=False, path_type=Path),
    default=Path("fracwave-report.json"),
    show_default=True,
    help="JSON report file",
)
@click.pass_context
@handle_errors
def verify(ctx: click.Context, report: Path, **flags: Any) -> None:
    """Run the verification suite; exit 0 only if every check passes."""
    config = load_config(ctx, "verify", **flags)
    harness = HarnessConfig.for_suite(config.suite, config.seed, config.quad())
    reports = run_suite(config.suite, harness, thread_count())
    write_report(report, reports)
    click.echo(summary_table(reports))
    failed = [r for r in reports if not r.passed]
    if failed:
        click.echo(f"{len(failed)} of {len(reports)} checks failed", err=True)
        sys.exit(1)
    click.echo(f"all {len(reports)} checks passed; report at {report}")
