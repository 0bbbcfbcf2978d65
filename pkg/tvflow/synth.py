"""Synthetic data and the benchmark protocol.

A benchmark run scales each ground-truth flow to at most one pixel, builds the
second frame by warping the first one with bicubic interpolation, optionally
adds Gaussian noise, solves every model and scores the result.
"""

import logging
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from dotenv import dotenv_values
from scipy.ndimage import gaussian_filter

from tvflow.config import NOISE_FRAMES, PRESETS, Settings, build_spec
from tvflow.exceptions import FlowConfigError, FlowError, FlowIOError, FlowShapeError
from tvflow.grid import image_derivatives
from tvflow.metrics import evaluate
from tvflow.solver import solve
from tvflow.types import (
    BenchmarkFailure,
    BenchmarkResult,
    Dataset,
    ErrorReport,
    FlowField,
    FlowScaling,
    GradientScale,
    GradientScheme,
    Image,
    Isotropy,
    ModelSpec,
)

logger = logging.getLogger(__name__)

Seed = int | np.random.Generator


def _rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def scale_flow_to_unit(v_gt: FlowField) -> FlowScaling:
    """Scale a flow down so its largest valid magnitude is at most one pixel.

    Flows already within one pixel are returned unchanged; flows are never
    scaled up. An all-zero flow is returned unchanged and flagged.
    """
    mask = v_gt.mask
    magnitude = v_gt.magnitude()[mask]
    peak = float(magnitude.max()) if magnitude.size else 0.0
    if peak == 0.0:
        logger.warning("ground-truth flow is zero everywhere; scaling skipped")
        return FlowScaling(v_gt, 1.0, degenerate=True)
    if peak <= 1.0:
        return FlowScaling(v_gt, 1.0)

    factor = 1.0 / peak
    v1 = np.where(mask, v_gt.v1 * factor, v_gt.v1)
    v2 = np.where(mask, v_gt.v2 * factor, v_gt.v2)
    return FlowScaling(FlowField(v1, v2, v_gt.valid), factor)


def _catmull_rom(t: np.ndarray) -> list[np.ndarray]:
    return [
        ((-0.5 * t + 1.0) * t - 0.5) * t,
        (1.5 * t - 2.5) * t * t + 1.0,
        ((-1.5 * t + 2.0) * t + 0.5) * t,
        (0.5 * t - 0.5) * t * t,
    ]


def warp_cubic(i1: Image, v: FlowField) -> Image:
    """Sample ``i1`` at ``x + v(x)`` with Catmull-Rom bicubic interpolation.

    Sample positions outside the image are clamped to the border. Invalid
    flow pixels are treated as zero flow.

    Raises:
        FlowShapeError: If the flow and image differ in size
    """
    if v.shape != i1.shape:
        raise FlowShapeError(f"flow {v.shape} does not match image {i1.shape}")
    h, w = i1.shape
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    mask = v.mask
    x = np.clip(cols + np.where(mask, v.v1, 0.0), 0.0, w - 1.0)
    y = np.clip(rows + np.where(mask, v.v2, 0.0), 0.0, h - 1.0)

    x0 = np.floor(x)
    y0 = np.floor(y)
    wx = _catmull_rom(x - x0)
    wy = _catmull_rom(y - y0)
    ix = [np.clip(x0.astype(np.intp) + k - 1, 0, w - 1) for k in range(4)]
    iy = [np.clip(y0.astype(np.intp) + k - 1, 0, h - 1) for k in range(4)]

    data = i1.data
    out = np.zeros_like(data)
    for m in range(4):
        row = np.zeros_like(data)
        for n in range(4):
            row += wx[n] * data[iy[m], ix[n]]
        out += wy[m] * row
    return Image(out)


def add_gaussian_noise(i: Image, sigma: float, seed: Seed = 0) -> Image:
    """Add seeded white Gaussian noise and clamp to ``[0, 1]``."""
    if sigma < 0:
        raise FlowConfigError(f"noise sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return Image(i.data.copy())
    noise = _rng(seed).normal(0.0, sigma, size=i.shape)
    return Image(np.clip(i.data + noise, 0.0, 1.0))


def smooth_texture(shape: tuple[int, int], seed: Seed = 0, sigma: float = 1.5) -> Image:
    """Gaussian-filtered white noise normalized to ``[0, 1]``."""
    field = gaussian_filter(_rng(seed).standard_normal(shape), sigma, mode="reflect")
    field -= field.min()
    return Image(field / field.max())


def translation(size: int = 64, seed: Seed = 0, shift: tuple[float, float] = (0.5, 0.0)) -> Dataset:
    """Texture moving by a constant sub-pixel shift."""
    texture = smooth_texture((size, size), seed)
    return Dataset("translation", texture, FlowField.constant(texture.shape, *shift))


def translating_block(size: int = 64, seed: Seed = 0, speed: float = 0.8) -> Dataset:
    """Static background with a square block moving along x."""
    texture = smooth_texture((size, size), seed)
    v1 = np.zeros(texture.shape)
    lo, hi = size // 3, size - size // 3
    v1[lo:hi, lo:hi] = speed
    return Dataset("translating-block", texture, FlowField(v1, np.zeros(texture.shape)))


def rotating_disc(size: int = 64, seed: Seed = 0, omega: float = 0.02) -> Dataset:
    """Disc rotating about the image centre on a static background."""
    texture = smooth_texture((size, size), seed)
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    centre = (size - 1) / 2.0
    dx, dy = cols - centre, rows - centre
    inside = np.hypot(dx, dy) <= size / 3.0
    v1 = np.where(inside, -omega * dy, 0.0)
    v2 = np.where(inside, omega * dx, 0.0)
    return Dataset("rotating-disc", texture, FlowField(v1, v2))


def smooth_flow(size: int = 64, seed: Seed = 0, peak: float = 0.75) -> Dataset:
    """Texture under a smooth random deformation with the given peak magnitude."""
    rng = _rng(seed)
    texture = smooth_texture((size, size), rng)
    components = [gaussian_filter(rng.standard_normal((size, size)), size / 8.0) for _ in range(2)]
    magnitude = np.hypot(*components).max()
    v1, v2 = (c * (peak / magnitude) for c in components)
    return Dataset("smooth-flow", texture, FlowField(v1, v2))


SYNTHETIC_DATASETS: dict[str, Callable[..., Dataset]] = {
    "translation": translation,
    "translating-block": translating_block,
    "rotating-disc": rotating_disc,
    "smooth-flow": smooth_flow,
}


def make_synthetic(name: str, size: int = 64, seed: int = 0) -> Dataset:
    """Build a named synthetic dataset.

    Raises:
        FlowConfigError: For unknown names or sizes below 8
    """
    generator = SYNTHETIC_DATASETS.get(name)
    if generator is None:
        raise FlowConfigError(
            f"Unknown synthetic dataset '{name}'. Available: {', '.join(SYNTHETIC_DATASETS)}"
        )
    if size < 8:
        raise FlowConfigError(f"synthetic datasets need size >= 8, got {size}")
    return generator(size=size, seed=seed)


@dataclass(frozen=True)
class PreparedPair:
    """Frames and scaled ground truth ready for solving."""

    name: str
    frame1: Image
    frame2: Image
    flow: FlowField


def _check_noise_frames(noise_frames: str) -> None:
    if noise_frames not in NOISE_FRAMES:
        raise FlowConfigError(
            f"noise_frames must be one of {', '.join(NOISE_FRAMES)}, got {noise_frames!r}"
        )


def prepare_pair(
    dataset: Dataset, noise: float = 0.0, seed: Seed = 0, noise_frames: str = "both"
) -> PreparedPair:
    """Scale the ground truth, synthesize the second frame and add noise.

    The second frame is the first one sampled at ``x - v_gt``, so image
    content moves by ``+v_gt`` and estimated flows compare directly with the
    ground truth.

    Raises:
        FlowConfigError: If ``noise_frames`` is not ``both`` or ``second``
    """
    _check_noise_frames(noise_frames)
    scaled = scale_flow_to_unit(dataset.flow).flow
    frame1 = dataset.frame1
    frame2 = warp_cubic(frame1, scaled.negated())
    if noise > 0:
        rng = _rng(seed)
        if noise_frames == "both":
            frame1 = add_gaussian_noise(frame1, noise, rng)
        frame2 = add_gaussian_noise(frame2, noise, rng)
    return PreparedPair(dataset.name, frame1, frame2, scaled)


@dataclass(frozen=True)
class _Entry:
    pair: PreparedPair
    label: str
    spec: ModelSpec
    scheme: GradientScheme


def _run_entry(
    entry: _Entry, gradient_scale: GradientScale, alpha_grid: Sequence[float] | None
) -> ErrorReport:
    pair = entry.pair
    derivs = image_derivatives(pair.frame1, pair.frame2, entry.scheme, gradient_scale)
    candidates = [entry.spec]
    if alpha_grid:
        candidates = [entry.spec.replace(alpha=float(alpha)) for alpha in alpha_grid]

    best: ErrorReport | None = None
    for spec in candidates:
        flow, reports = solve(spec, derivs)
        report = evaluate(
            flow,
            pair.flow,
            model_name=entry.label,
            dataset_name=pair.name,
            alpha=spec.alpha,
            alpha1=spec.alpha1,
            iterations=sum(r.iterations_run for r in reports),
        )
        if best is None or report.aee < best.aee:
            best = report
    assert best is not None
    return best


def _normalize_specs(
    specs: Sequence[ModelSpec] | Mapping[str, ModelSpec],
) -> list[tuple[str, ModelSpec]]:
    if isinstance(specs, Mapping):
        return list(specs.items())
    return [(spec.label, spec) for spec in specs]


def run_benchmark(
    datasets: Sequence[Dataset],
    specs: Sequence[ModelSpec] | Mapping[str, ModelSpec],
    noise: float = 0.0,
    seed: int = 0,
    schemes: Sequence[GradientScheme | str] = (GradientScheme.CENTRAL,),
    gradient_scale: GradientScale | str = GradientScale.FULL,
    alpha_grid: Sequence[float] | None = None,
    threads: int = 1,
    noise_frames: str = "both",
) -> BenchmarkResult:
    """Solve every model on every dataset and score the results.

    Entries that raise are recorded as failures; the rest of the run goes
    on. With several gradient schemes each model runs once per scheme and
    its label gets a ``[scheme]`` suffix. With ``alpha_grid`` each entry is
    solved for every listed weight and the lowest-AEE result is kept.

    Args:
        datasets: Frames with ground truth
        specs: Models, either labelled or labelled by their kind
        noise: Standard deviation of the added Gaussian noise
        seed: Base seed; dataset ``k`` uses the seed sequence ``(seed, k)``
        schemes: Image-gradient schemes to run
        gradient_scale: Central-difference scaling
        alpha_grid: Optional weights to search per entry
        threads: Worker threads for independent entries
        noise_frames: ``both`` or ``second``

    Returns:
        Reports in dataset, model, scheme order plus recorded failures

    Raises:
        FlowConfigError: If datasets or specs are empty or ``noise_frames`` is unknown
    """
    labelled = _normalize_specs(specs)
    if not datasets or not labelled:
        raise FlowConfigError("benchmark needs at least one dataset and one model")
    _check_noise_frames(noise_frames)
    scheme_list = [GradientScheme(s) for s in schemes]
    scale = GradientScale(gradient_scale)

    result = BenchmarkResult()
    entries: list[_Entry] = []
    for index, dataset in enumerate(datasets):
        try:
            pair = prepare_pair(dataset, noise, np.random.default_rng([seed, index]), noise_frames)
        except FlowError as e:
            logger.warning("dataset %s could not be prepared: %s", dataset.name, e.message)
            result.failures.append(BenchmarkFailure("*", dataset.name, e.message))
            continue
        for label, spec in labelled:
            for scheme in scheme_list:
                suffix = f"[{scheme.value}]" if len(scheme_list) > 1 else ""
                entries.append(_Entry(pair, label + suffix, spec, scheme))

    def run(entry: _Entry) -> ErrorReport | BenchmarkFailure:
        try:
            return _run_entry(entry, scale, alpha_grid)
        except FlowError as e:
            logger.warning("%s on %s failed: %s", entry.label, entry.pair.name, e.message)
            return BenchmarkFailure(entry.label, entry.pair.name, e.message)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, entries))
    else:
        outcomes = [run(entry) for entry in entries]

    for outcome in outcomes:
        if isinstance(outcome, ErrorReport):
            result.reports.append(outcome)
        else:
            result.failures.append(outcome)
    return result


def _model_key(name: str) -> str:
    return name.upper().replace("-", "_")


@dataclass(frozen=True)
class Manifest:
    """A benchmark run described in dotenv syntax.

    ``DATASETS`` and ``MODELS`` are comma-separated. Per-model weights are
    overridden with ``ALPHA_<MODEL>`` and ``ALPHA1_<MODEL>``, where the model
    name is upper-cased with dashes turned into underscores.
    """

    datasets: list[str]
    models: list[str]
    noise: float = 0.0
    seed: int = 0
    size: int = 64
    gradient: GradientScheme = GradientScheme.CENTRAL
    gradient_scale: GradientScale = GradientScale.FULL
    isotropy: Isotropy = Isotropy.ISOTROPIC
    max_iters: int = 5000
    tol: float = 1e-6
    alphas: dict[str, float] = field(default_factory=dict)
    alpha1s: dict[str, float] = field(default_factory=dict)
    alpha_grid: list[float] | None = None
    compare_gradients: bool = False

    def specs(self) -> dict[str, ModelSpec]:
        """Model specs keyed by model name, with overrides applied."""
        return {
            name: build_spec(
                name,
                alpha=self.alphas.get(name),
                alpha1=self.alpha1s.get(name),
                isotropy=self.isotropy,
                max_iters=self.max_iters,
                tol=self.tol,
            )
            for name in self.models
        }

    @property
    def schemes(self) -> tuple[GradientScheme, ...]:
        if self.compare_gradients:
            return (GradientScheme.FORWARD, GradientScheme.CENTRAL)
        return (self.gradient,)


def _split(raw: str) -> list[str]:
    return [item.strip() for item in raw.split(",") if item.strip()]


def _bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(raw)


def parse_manifest(path: str | Path, settings: Settings | None = None) -> Manifest:
    """Read a benchmark manifest.

    Keys missing from the file fall back to ``settings``.

    Args:
        path: Manifest file in dotenv syntax
        settings: Defaults for gradient, solver budget and seed

    Returns:
        The parsed manifest

    Raises:
        FlowIOError: If the file does not exist
        FlowConfigError: On missing ``DATASETS``/``MODELS``, unknown models or
            invalid values
    """
    source = Path(path)
    if not source.is_file():
        raise FlowIOError(f"Cannot read {source}: no such file")
    settings = settings or Settings()
    values = {key: value for key, value in dotenv_values(source).items() if value is not None}

    datasets = _split(values.get("DATASETS", ""))
    models = _split(values.get("MODELS", ""))
    if not datasets or not models:
        raise FlowConfigError(f"{source}: DATASETS and MODELS must list at least one entry")
    unknown = [name for name in models if name not in PRESETS]
    if unknown:
        raise FlowConfigError(
            f"{source}: unknown models {', '.join(unknown)}. Valid models: {', '.join(PRESETS)}"
        )

    def get(key: str, convert: Callable[[str], Any], default: Any) -> Any:
        raw = values.get(key)
        if raw is None or raw.strip() == "":
            return default
        try:
            return convert(raw.strip())
        except ValueError as e:
            raise FlowConfigError(f"{source}: invalid value for {key}: {raw!r}") from e

    alphas = {m: get(f"ALPHA_{_model_key(m)}", float, None) for m in models}
    alpha1s = {m: get(f"ALPHA1_{_model_key(m)}", float, None) for m in models}
    grid = get("ALPHA_GRID", lambda raw: [float(a) for a in _split(raw)], None)

    return Manifest(
        datasets=datasets,
        models=models,
        noise=get("NOISE", float, 0.0),
        seed=get("SEED", int, settings.seed),
        size=get("SIZE", int, 64),
        gradient=get("GRADIENT", GradientScheme, settings.gradient),
        gradient_scale=get("GRADIENT_SCALE", GradientScale, settings.gradient_scale),
        isotropy=get("ISOTROPY", Isotropy, Isotropy.ISOTROPIC),
        max_iters=get("MAX_ITERS", int, settings.max_iters),
        tol=get("TOL", float, settings.tol),
        alphas={m: a for m, a in alphas.items() if a is not None},
        alpha1s={m: a for m, a in alpha1s.items() if a is not None},
        alpha_grid=grid or None,
        compare_gradients=get("COMPARE_GRADIENTS", _bool, False),
    )
