"""Command-line interface for tvflow."""

import sys
from pathlib import Path
from typing import NoReturn

import click

from tvflow import __version__
from tvflow.config import PRESETS, Settings, build_spec, load_settings
from tvflow.datasets import MIDDLEBURY_DATASETS, MiddleburyClient, resolve_datasets, save_dataset
from tvflow.exceptions import FlowError
from tvflow.formatters import (
    configure_logging,
    print_error,
    print_failures,
    print_metrics,
    print_rank_table,
    print_reports,
    print_success,
    print_sweep,
)
from tvflow.grid import image_derivatives
from tvflow.io import read_flo, read_image, write_color_png, write_flo, write_report_csv
from tvflow.metrics import aggregate_ranks, evaluate, perturbation_sweep
from tvflow.plots import plot_error_curves, plot_sweep
from tvflow.solver import solve
from tvflow.synth import (
    SYNTHETIC_DATASETS,
    make_synthetic,
    parse_manifest,
    prepare_pair,
    run_benchmark,
)
from tvflow.types import GradientScale, GradientScheme, Isotropy, ModelKind

NO_RESULTS_EXIT_CODE = 5
DEFAULT_SWEEP_MAGNITUDES = (0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0)

FILE = click.Path(dir_okay=False, path_type=Path)


def _fail(message: str, e: FlowError) -> NoReturn:
    print_error(f"{message}: {e.message}")
    sys.exit(e.exit_code)


def get_settings(ctx: click.Context) -> Settings:
    """Load settings once per invocation.

    Raises:
        SystemExit: If a ``TVFLOW_*`` variable is invalid
    """
    if "settings" not in ctx.obj:
        try:
            ctx.obj["settings"] = load_settings(ctx.obj.get("env_file"))
        except FlowError as e:
            _fail("Invalid configuration", e)
    settings: Settings = ctx.obj["settings"]
    return settings


@click.group()
@click.version_option(version=__version__, prog_name="tvflow")
@click.option("--verbose", "-v", is_flag=True, help="Log solver progress to stderr")
@click.option(
    "--env-file",
    type=FILE,
    envvar="TVFLOW_ENV_FILE",
    help="Extra .env file with TVFLOW_* settings (or set TVFLOW_ENV_FILE)",
)
@click.pass_context
def cli(ctx: click.Context, verbose: bool, env_file: Path | None) -> None:
    """Total-variation optical flow estimation and evaluation.

    Defaults come from TVFLOW_* environment variables, read from the process
    environment, then --env-file, ./.env and ~/.env.
    """
    ctx.ensure_object(dict)
    ctx.obj["env_file"] = env_file
    configure_logging(verbose)


@cli.command()
@click.argument("frame1", type=FILE)
@click.argument("frame2", type=FILE)
@click.option("--out", "-o", type=FILE, required=True, help="Output .flo file")
@click.option(
    "--model",
    type=click.Choice([kind.value for kind in ModelKind]),
    default=ModelKind.L1_TV.value,
    show_default=True,
    help="Variational model",
)
@click.option("--alpha", type=click.FloatRange(min=0), help="Regularization weight (α or α₀)")
@click.option("--alpha1", type=click.FloatRange(min=0), help="Weight of the w term (α₁)")
@click.option("--bregman", type=click.IntRange(min=0), default=0, help="Bregman rounds (l2-tv)")
@click.option("--iters", type=click.IntRange(min=1), help="Iteration budget per solve")
@click.option("--tol", type=click.FloatRange(min=0), help="Stopping residual")
@click.option(
    "--isotropy",
    type=click.Choice([i.value for i in Isotropy]),
    default=Isotropy.ISOTROPIC.value,
    show_default=True,
)
@click.option("--gradient", type=click.Choice([s.value for s in GradientScheme]))
@click.option("--gradient-scale", type=click.Choice([s.value for s in GradientScale]))
@click.option("--tgv-full", is_flag=True, help="Per-component w for l1-tv-tv")
@click.option("--color", type=FILE, help="Also write a colour rendering of the flow")
@click.option("--verbose", "-v", is_flag=True, help="Log solver progress (same as tvflow -v)")
@click.pass_context
def estimate(
    ctx: click.Context,
    frame1: Path,
    frame2: Path,
    out: Path,
    model: str,
    alpha: float | None,
    alpha1: float | None,
    bregman: int,
    iters: int | None,
    tol: float | None,
    isotropy: str,
    gradient: str | None,
    gradient_scale: str | None,
    tgv_full: bool,
    color: Path | None,
    verbose: bool,
) -> None:
    """Estimate the flow between two frames.

    Weights default to the static parameters of the chosen model;
    --model l2-tv --bregman N uses the Bregman preset.

    Examples:
        tvflow estimate frame10.png frame11.png -o flow.flo
        tvflow estimate a.png b.png -o flow.flo --model l2-tv --bregman 10 --color flow.png
    """
    if verbose:
        configure_logging(verbose=True)
    settings = get_settings(ctx)
    preset = "l2-tv-breg" if model == ModelKind.L2_TV.value and bregman else model
    try:
        spec = build_spec(
            preset,
            alpha=alpha,
            alpha1=alpha1,
            bregman_iters=bregman,
            isotropy=isotropy,
            max_iters=iters or settings.max_iters,
            tol=settings.tol if tol is None else tol,
            tgv_full=tgv_full,
        )
        i1, i2 = read_image(frame1), read_image(frame2)
        derivs = image_derivatives(
            i1, i2, gradient or settings.gradient, gradient_scale or settings.gradient_scale
        )
        flow, reports = solve(spec, derivs)
        write_flo(out, flow)
        if color is not None:
            write_color_png(color, flow)
    except FlowError as e:
        _fail("Estimation failed", e)

    iterations = sum(r.iterations_run for r in reports)
    print_success(f"Wrote {out} ({spec.label}, {iterations} iterations)")


@cli.command()
@click.argument("flow", type=FILE)
@click.argument("ground_truth", type=FILE)
@click.option("--degrees", is_flag=True, help="Report AE in degrees")
def metrics(flow: Path, ground_truth: Path, degrees: bool) -> None:
    """Compare a flow with the ground truth (AEE in pixels, AE in radians).

    Pixels unknown in either file are excluded and counted.
    """
    try:
        v = read_flo(flow)
        v_gt = read_flo(ground_truth)
        report = evaluate(v, v_gt, dataset_name=ground_truth.name)
    except FlowError as e:
        _fail("Evaluation failed", e)
    print_metrics(report, v_gt.width * v_gt.height, degrees=degrees)


@cli.command()
@click.argument("manifest", type=FILE)
@click.option("--noise", type=click.FloatRange(min=0), help="Gaussian noise sigma (e.g. 0.002)")
@click.option("--seed", type=int, help="Random seed")
@click.option("--out", "-o", type=FILE, help="CSV report")
@click.option("--threads", type=click.IntRange(min=1), help="Worker threads (or TVFLOW_THREADS)")
@click.option("--compare-gradients", is_flag=True, help="Run forward and central differences")
@click.option("--plot", type=FILE, help="Error-curve figure")
@click.pass_context
def bench(
    ctx: click.Context,
    manifest: Path,
    noise: float | None,
    seed: int | None,
    out: Path | None,
    threads: int | None,
    compare_gradients: bool,
    plot: Path | None,
) -> None:
    """Run the benchmark described by a manifest.

    Exits with code 5 when no entry succeeds.
    """
    settings = get_settings(ctx)
    try:
        parsed = parse_manifest(manifest, settings)
        seed = parsed.seed if seed is None else seed
        datasets, failures = resolve_datasets(
            parsed.datasets, settings.data_dir, size=parsed.size, seed=seed
        )
        schemes = (
            (GradientScheme.FORWARD, GradientScheme.CENTRAL)
            if compare_gradients
            else parsed.schemes
        )
        result = None
        if datasets:
            result = run_benchmark(
                datasets,
                parsed.specs(),
                noise=parsed.noise if noise is None else noise,
                seed=seed,
                schemes=schemes,
                gradient_scale=parsed.gradient_scale,
                alpha_grid=parsed.alpha_grid,
                threads=threads or settings.threads,
                noise_frames=settings.noise_frames,
            )
            failures += result.failures
    except FlowError as e:
        _fail("Benchmark failed", e)

    print_failures(failures)
    if result is None or not result.reports:
        print_error("No benchmark entry succeeded")
        sys.exit(NO_RESULTS_EXIT_CODE)

    print_reports(result.reports)
    print_rank_table(aggregate_ranks(result.reports), PRESETS)
    try:
        if out is not None:
            write_report_csv(out, result.reports)
            print_success(f"Wrote {out}")
        if plot is not None:
            plot_error_curves(result.reports, plot)
            print_success(f"Wrote {plot}")
    except FlowError as e:
        _fail("Writing results failed", e)


@cli.command()
@click.argument("name", type=click.Choice(list(SYNTHETIC_DATASETS)))
@click.argument("outdir", type=click.Path(file_okay=False, path_type=Path))
@click.option("--size", type=click.IntRange(min=8), default=64, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--noise", type=click.FloatRange(min=0), default=0.0, show_default=True)
@click.option("--bits", type=click.Choice(["8", "16"]), default="8", show_default=True)
@click.pass_context
def synth(
    ctx: click.Context, name: str, outdir: Path, size: int, seed: int, noise: float, bits: str
) -> None:
    """Write a synthetic dataset directory (frame10.png, frame11.png, flow10.flo).

    The second frame is the first one warped by the ground-truth flow.
    """
    settings = get_settings(ctx)
    try:
        dataset = make_synthetic(name, size=size, seed=seed)
        pair = prepare_pair(dataset, noise, seed, settings.noise_frames)
        save_dataset(outdir, pair.frame1, pair.flow, pair.frame2, bits=int(bits))
    except FlowError as e:
        _fail("Synthesis failed", e)
    print_success(f"Wrote {name} ({size}x{size}) to {outdir}")


@cli.command()
@click.argument("flow", type=FILE)
@click.argument("out", type=FILE)
@click.option(
    "--max-magnitude",
    type=click.FloatRange(min=0, min_open=True),
    help="Magnitude shown at full saturation (99th percentile by default)",
)
def color(flow: Path, out: Path, max_magnitude: float | None) -> None:
    """Render a .flo file on the colour wheel."""
    try:
        write_color_png(out, read_flo(flow), max_magnitude)
    except FlowError as e:
        _fail("Rendering failed", e)
    print_success(f"Wrote {out}")


@cli.command()
@click.option(
    "--magnitude",
    "magnitudes",
    type=click.FloatRange(min=0),
    multiple=True,
    help="Ground-truth magnitude; repeat for several (default 0.1 to 100)",
)
@click.option("--perturbation", type=float, default=0.01, show_default=True)
@click.option("--relative", is_flag=True, help="Perturb by a fraction of the magnitude")
@click.option("--plot", type=FILE, help="Sweep figure")
def sweep(
    magnitudes: tuple[float, ...], perturbation: float, relative: bool, plot: Path | None
) -> None:
    """Show how AE shrinks for the same endpoint error at larger velocities."""
    rows = perturbation_sweep(magnitudes or DEFAULT_SWEEP_MAGNITUDES, perturbation, relative)
    print_sweep(rows)
    if plot is not None:
        try:
            plot_sweep(rows, plot)
        except FlowError as e:
            _fail("Plotting failed", e)
        print_success(f"Wrote {plot}")


@cli.command()
@click.argument("names", nargs=-1)
@click.option(
    "--dest",
    type=click.Path(file_okay=False, path_type=Path),
    help="Data directory (defaults to TVFLOW_DATA_DIR)",
)
@click.pass_context
def fetch(ctx: click.Context, names: tuple[str, ...], dest: Path | None) -> None:
    """Download Middlebury sequences with ground truth.

    Without NAMES all eight sequences are fetched.
    """
    settings = get_settings(ctx)
    target = dest or settings.data_dir
    try:
        with MiddleburyClient() as client:
            written = client.fetch(list(names) or list(MIDDLEBURY_DATASETS), target)
    except FlowError as e:
        _fail("Download failed", e)
    for path in written:
        print_success(f"Unpacked {path}")


if __name__ == "__main__":
    cli()
