"""Headless figures for benchmark and sweep results."""

from collections.abc import Iterable, Sequence
from pathlib import Path

from matplotlib.figure import Figure

from tvflow.exceptions import FlowConfigError
from tvflow.io import atomic_write
from tvflow.types import ErrorReport, SweepRow


def _save(fig: Figure, path: str | Path) -> None:
    target = Path(path)
    fmt = target.suffix.lstrip(".").lower() or "png"
    fig.tight_layout()
    with atomic_write(target) as handle:
        fig.savefig(handle, format=fmt, dpi=150)


def plot_error_curves(reports: Iterable[ErrorReport], path: str | Path) -> None:
    """Plot AEE and AE per dataset, one curve per model.

    Datasets appear on the x axis in order of first appearance.

    Raises:
        FlowConfigError: If there are no reports
    """
    reports = list(reports)
    if not reports:
        raise FlowConfigError("nothing to plot: no benchmark reports")
    datasets = list(dict.fromkeys(r.dataset_name for r in reports))
    models = list(dict.fromkeys(r.model_name for r in reports))
    lookup = {(r.model_name, r.dataset_name): r for r in reports}

    fig = Figure(figsize=(10, 4))
    ax_aee, ax_ae = fig.subplots(1, 2)
    positions = range(len(datasets))
    for model in models:
        xs = [i for i, d in enumerate(datasets) if (model, d) in lookup]
        ax_aee.plot(xs, [lookup[(model, datasets[i])].aee for i in xs], marker="o", label=model)
        ax_ae.plot(xs, [lookup[(model, datasets[i])].ae for i in xs], marker="o", label=model)
    for ax, title in ((ax_aee, "AEE (pixels)"), (ax_ae, "AE (radians)")):
        ax.set_title(title)
        ax.set_xticks(list(positions))
        ax.set_xticklabels(datasets, rotation=45, ha="right")
        ax.grid(True, alpha=0.3)
    ax_ae.legend(fontsize="small")
    _save(fig, path)


def plot_sweep(rows: Sequence[SweepRow], path: str | Path) -> None:
    """Plot AEE and AE of a perturbation sweep against the ground-truth magnitude."""
    if not rows:
        raise FlowConfigError("nothing to plot: empty sweep")
    magnitudes = [row.magnitude for row in rows]

    fig = Figure(figsize=(6, 4))
    ax = fig.subplots()
    ax.plot(magnitudes, [row.aee for row in rows], marker="o", label="AEE")
    ax.plot(magnitudes, [row.ae for row in rows], marker="s", label="AE")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("ground-truth magnitude (pixels)")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)
