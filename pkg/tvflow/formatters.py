"""Output formatters for the CLI."""

import logging
import math
from collections.abc import Iterable, Mapping, Sequence

from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from tvflow.config import PRESETS, REFERENCE_RANKS, Preset
from tvflow.types import BenchmarkFailure, ErrorReport, RankSummary, SweepRow


def configure_logging(verbose: bool = False) -> None:
    """Send ``tvflow`` log records to stderr through rich.

    Args:
        verbose: Show INFO records instead of warnings only
    """
    logger = logging.getLogger("tvflow")
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(console=Console(stderr=True), show_path=False, markup=False)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.INFO if verbose else logging.WARNING)


def format_ratio(value: float) -> str:
    """Format a relative error, showing degenerate ratios as ``inf``."""
    if math.isinf(value):
        return "inf"
    return f"{value:.3f}"


def print_success(message: str) -> None:
    """Print a success message.

    Args:
        message: Success message
    """
    console = Console()
    console.print(f"[green]✓[/green] {escape(message)}")


def print_error(message: str) -> None:
    """Print an error message.

    Args:
        message: Error message
    """
    console = Console()
    console.print(f"[red]✗[/red] {escape(message)}", style="red")


def print_metrics(report: ErrorReport, total_pixels: int, degrees: bool = False) -> None:
    """Print AEE and AE on one line, followed by the masked pixel count if any.

    Args:
        report: Errors of the estimate
        total_pixels: Number of grid pixels, masked ones included
        degrees: Report AE in degrees instead of radians
    """
    angle = math.degrees(report.ae) if degrees else report.ae
    unit = " deg" if degrees else ""
    print(f"AEE {report.aee:.6f}, AE {angle:.6f}{unit}")
    masked = total_pixels - report.n_pixels
    if masked:
        print(f"{masked} masked pixels excluded, {report.n_pixels} evaluated")


def print_reports(reports: Sequence[ErrorReport]) -> None:
    """Print one table row per model and dataset."""
    console = Console()
    if not reports:
        console.print("[yellow]No results.[/yellow]")
        return

    table = Table(title=f"Results ({len(reports)})", show_header=True)
    table.add_column("Model", style="green")
    table.add_column("Dataset", style="cyan")
    table.add_column("α", justify="right")
    table.add_column("α₁", justify="right")
    table.add_column("Iterations", justify="right", style="dim")
    table.add_column("AEE", justify="right", style="bold")
    table.add_column("AE", justify="right", style="bold")
    for r in reports:
        table.add_row(
            escape(r.model_name),
            escape(r.dataset_name),
            f"{r.alpha:g}",
            f"{r.alpha1:g}" if r.alpha1 else "",
            str(r.iterations),
            f"{r.aee:.4f}",
            f"{r.ae:.4f}",
        )
    console.print(table)


def _base_model(label: str) -> str:
    return label.split("[", 1)[0]


def print_rank_table(
    summaries: Iterable[RankSummary], presets: Mapping[str, Preset] = PRESETS
) -> None:
    """Print mean relative errors per model next to the static parameters.

    Published ranks are shown for models that have them.
    """
    console = Console()
    table = Table(title="Averaged ranks", show_header=True)
    table.add_column("Algorithm", style="green")
    table.add_column("Static α", justify="right")
    table.add_column("Static α₂", justify="right")
    table.add_column("∅AEE", justify="right", style="bold")
    table.add_column("∅AE", justify="right", style="bold")
    table.add_column("Datasets", justify="right", style="dim")
    table.add_column("Published ∅AEE / ∅AE", justify="right", style="dim")

    degenerate = []
    for summary in summaries:
        base = _base_model(summary.model_name)
        preset = presets.get(base)
        alpha2 = preset.alpha2 if preset else None
        reference = REFERENCE_RANKS.get(base)
        table.add_row(
            escape(summary.model_name),
            f"{preset.alpha:g}" if preset else "",
            f"{alpha2:g}" if alpha2 is not None else "",
            format_ratio(summary.mean_rel_aee),
            format_ratio(summary.mean_rel_ae),
            str(summary.n_datasets),
            f"{reference[0]:.3f} / {reference[1]:.3f}" if reference else "",
        )
        if summary.degenerate:
            degenerate.append(summary.model_name)
    console.print(table)
    if degenerate:
        console.print(
            f"[yellow]Some datasets were solved exactly by another model; "
            f"ratios of {escape(', '.join(degenerate))} are infinite there.[/yellow]"
        )


def print_failures(failures: Sequence[BenchmarkFailure]) -> None:
    """Print failed benchmark entries."""
    if not failures:
        return
    console = Console()
    table = Table(title=f"Failures ({len(failures)})", show_header=True)
    table.add_column("Model", style="red")
    table.add_column("Dataset", style="cyan")
    table.add_column("Error")
    for f in failures:
        table.add_row(escape(f.model_name), escape(f.dataset_name), escape(f.message))
    console.print(table)


def print_sweep(rows: Sequence[SweepRow]) -> None:
    """Print AEE and AE of a perturbation sweep."""
    console = Console()
    table = Table(title="Error under a fixed perturbation", show_header=True)
    table.add_column("|v_gt|", justify="right", style="cyan")
    table.add_column("AEE", justify="right")
    table.add_column("AE (rad)", justify="right")
    table.add_column("AE (deg)", justify="right", style="dim")
    for row in rows:
        table.add_row(
            f"{row.magnitude:g}",
            f"{row.aee:.6f}",
            f"{row.ae:.6f}",
            f"{math.degrees(row.ae):.4f}",
        )
    console.print(table)
