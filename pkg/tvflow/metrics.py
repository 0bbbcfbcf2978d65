"""Endpoint and angular errors between flow fields, and rank aggregation."""

import math
from collections import defaultdict
from collections.abc import Iterable, Sequence

import numpy as np

from tvflow.exceptions import FlowConfigError, FlowShapeError
from tvflow.types import ErrorReport, FlowField, RankSummary, SweepRow


def _common_mask(v: FlowField, v_gt: FlowField) -> np.ndarray:
    if v.shape != v_gt.shape:
        raise FlowShapeError(
            f"flow sizes differ: {v.width}x{v.height} vs {v_gt.width}x{v_gt.height}"
        )
    mask = v.mask & v_gt.mask
    if not mask.any():
        raise FlowShapeError("no pixel is valid in both flows")
    return mask


def aee(v: FlowField, v_gt: FlowField) -> float:
    """Average endpoint error in pixels over pixels valid in both fields."""
    mask = _common_mask(v, v_gt)
    return float(np.mean(np.hypot(v.v1[mask] - v_gt.v1[mask], v.v2[mask] - v_gt.v2[mask])))


def ae(v: FlowField, v_gt: FlowField) -> float:
    """Average angular error in radians between the lifted vectors ``(v1, v2, 1)``."""
    mask = _common_mask(v, v_gt)
    a1, a2 = v.v1[mask], v.v2[mask]
    b1, b2 = v_gt.v1[mask], v_gt.v2[mask]
    dot = (a1 * b1 + a2 * b2 + 1.0) / (
        np.sqrt(a1 * a1 + a2 * a2 + 1.0) * np.sqrt(b1 * b1 + b2 * b2 + 1.0)
    )
    return float(np.mean(np.arccos(np.clip(dot, -1.0, 1.0))))


def evaluate(
    v: FlowField,
    v_gt: FlowField,
    model_name: str = "",
    dataset_name: str = "",
    alpha: float = 0.0,
    alpha1: float = 0.0,
    iterations: int = 0,
) -> ErrorReport:
    """Compute both error measures and wrap them in a report."""
    return ErrorReport(
        model_name=model_name,
        dataset_name=dataset_name,
        aee=aee(v, v_gt),
        ae=ae(v, v_gt),
        n_pixels=int((v.mask & v_gt.mask).sum()),
        alpha=alpha,
        alpha1=alpha1,
        iterations=iterations,
    )


def _ratios(values: dict[str, float]) -> tuple[dict[str, float], set[str]]:
    best = min(values.values())
    if best > 0:
        return {name: value / best for name, value in values.items()}, set()
    ratios = {name: 1.0 if value == best else math.inf for name, value in values.items()}
    return ratios, {name for name, ratio in ratios.items() if math.isinf(ratio)}


def aggregate_ranks(reports: Iterable[ErrorReport]) -> list[RankSummary]:
    """Average every model's errors relative to the best model per dataset.

    For each dataset, AEE and AE are divided by the smallest value any model
    reached on it; the ratios are then averaged per model. When the smallest
    value is zero the models reaching it get ratio 1 and all others get
    ``inf`` and are flagged as degenerate.

    Args:
        reports: Reports of several models on several datasets

    Returns:
        One summary per model, in order of first appearance

    Raises:
        FlowConfigError: If no reports are given
    """
    by_dataset: dict[str, dict[str, ErrorReport]] = defaultdict(dict)
    order: list[str] = []
    for report in reports:
        by_dataset[report.dataset_name][report.model_name] = report
        if report.model_name not in order:
            order.append(report.model_name)
    if not by_dataset:
        raise FlowConfigError("cannot aggregate ranks of an empty report list")

    rel_aee: dict[str, list[float]] = defaultdict(list)
    rel_ae: dict[str, list[float]] = defaultdict(list)
    degenerate: set[str] = set()
    for group in by_dataset.values():
        aee_ratios, flagged_aee = _ratios({m: r.aee for m, r in group.items()})
        ae_ratios, flagged_ae = _ratios({m: r.ae for m, r in group.items()})
        degenerate |= flagged_aee | flagged_ae
        for model in group:
            rel_aee[model].append(aee_ratios[model])
            rel_ae[model].append(ae_ratios[model])

    return [
        RankSummary(
            model_name=model,
            mean_rel_aee=float(np.mean(rel_aee[model])),
            mean_rel_ae=float(np.mean(rel_ae[model])),
            n_datasets=len(rel_aee[model]),
            degenerate=model in degenerate,
        )
        for model in order
    ]


def perturbation_sweep(
    magnitudes: Sequence[float], perturbation: float = 0.01, relative: bool = False
) -> list[SweepRow]:
    """Errors of a perturbed ground-truth vector as its magnitude grows.

    The ground truth points along x. It is lengthened by ``perturbation``
    pixels, or by the fraction ``perturbation`` of its length when
    ``relative`` is set. Shows that AE penalizes the same endpoint error less
    at larger velocities.
    """
    rows = []
    for magnitude in magnitudes:
        gt = FlowField.constant((1, 1), magnitude, 0.0)
        extra = perturbation * magnitude if relative else perturbation
        v = FlowField.constant((1, 1), magnitude + extra, 0.0)
        rows.append(SweepRow(float(magnitude), aee(v, gt), ae(v, gt)))
    return rows
