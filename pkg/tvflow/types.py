"""Type definitions for tvflow grids, models and reports.

Grids are numpy arrays indexed ``[row, column]``: the column index is the
x axis (``i``) and the row index the y axis (``j``). Flow component ``v1``
points along x, ``v2`` along y.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from tvflow.exceptions import FlowConfigError, FlowShapeError

Array = np.ndarray


def _as_grid(values: Array, name: str) -> Array:
    grid = np.ascontiguousarray(values, dtype=np.float64)
    if grid.ndim != 2:
        raise FlowShapeError(f"{name} must be a 2-D grid, got shape {grid.shape}")
    return grid


class ModelKind(str, Enum):
    """The five variational models."""

    L2_L2 = "l2-l2"
    L2_TV = "l2-tv"
    L1_TV = "l1-tv"
    L1_TV_L2 = "l1-tv-l2"
    L1_TV_TV = "l1-tv-tv"

    @property
    def extended(self) -> bool:
        """Whether the model carries the auxiliary field ``w``."""
        return self in (ModelKind.L1_TV_L2, ModelKind.L1_TV_TV)

    @property
    def l2_data(self) -> bool:
        return self in (ModelKind.L2_L2, ModelKind.L2_TV)


class Isotropy(str, Enum):
    """How per-pixel gradient channels are combined in TV terms."""

    ISOTROPIC = "isotropic"
    ANISOTROPIC = "anisotropic"


class GradientScheme(str, Enum):
    """Spatial stencil for the image derivatives."""

    CENTRAL = "central"
    FORWARD = "forward"


class GradientScale(str, Enum):
    """``full`` keeps the unscaled central difference, ``half`` divides it by two."""

    FULL = "full"
    HALF = "half"


@dataclass(frozen=True)
class Image:
    """Single-channel intensity grid."""

    data: Array

    def __post_init__(self) -> None:
        data = _as_grid(self.data, "image")
        if data.shape[0] < 2 or data.shape[1] < 2:
            raise FlowShapeError(f"image must be at least 2x2, got {data.shape[1]}x{data.shape[0]}")
        if not np.all(np.isfinite(data)):
            raise FlowShapeError("image contains non-finite intensities")
        object.__setattr__(self, "data", data)

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.data.shape[0]), int(self.data.shape[1]))

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def height(self) -> int:
        return int(self.data.shape[0])


@dataclass(frozen=True)
class FlowField:
    """Two-component displacement field in pixels per frame.

    ``valid`` marks pixels with a known value. ``None`` means every pixel is
    valid. Invalid pixels keep whatever raw value they were loaded with.
    """

    v1: Array
    v2: Array
    valid: Array | None = None

    def __post_init__(self) -> None:
        v1 = _as_grid(self.v1, "v1")
        v2 = _as_grid(self.v2, "v2")
        if v1.shape != v2.shape:
            raise FlowShapeError(f"flow components differ in shape: {v1.shape} vs {v2.shape}")
        valid = self.valid
        if valid is not None:
            valid = np.asarray(valid, dtype=bool)
            if valid.shape != v1.shape:
                raise FlowShapeError(f"mask shape {valid.shape} does not match flow {v1.shape}")
            if valid.all():
                valid = None
        mask = np.ones(v1.shape, dtype=bool) if valid is None else valid
        if not (np.all(np.isfinite(v1[mask])) and np.all(np.isfinite(v2[mask]))):
            raise FlowShapeError("flow contains non-finite components")
        object.__setattr__(self, "v1", v1)
        object.__setattr__(self, "v2", v2)
        object.__setattr__(self, "valid", valid)

    @classmethod
    def zeros(cls, shape: tuple[int, int]) -> FlowField:
        return cls(np.zeros(shape), np.zeros(shape))

    @classmethod
    def constant(cls, shape: tuple[int, int], v1: float, v2: float) -> FlowField:
        return cls(np.full(shape, float(v1)), np.full(shape, float(v2)))

    def stack(self) -> Array:
        """Return the components as a new ``(2, height, width)`` array."""
        return np.stack([self.v1, self.v2])

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.v1.shape[0]), int(self.v1.shape[1]))

    @property
    def width(self) -> int:
        return int(self.v1.shape[1])

    @property
    def height(self) -> int:
        return int(self.v1.shape[0])

    @property
    def mask(self) -> Array:
        """Boolean validity grid (all ``True`` when no mask is set)."""
        if self.valid is None:
            return np.ones(self.shape, dtype=bool)
        return self.valid

    @property
    def n_valid(self) -> int:
        return int(self.mask.sum())

    def magnitude(self) -> Array:
        return np.hypot(self.v1, self.v2)

    def scaled(self, factor: float) -> FlowField:
        return FlowField(self.v1 * factor, self.v2 * factor, self.valid)

    def negated(self) -> FlowField:
        return FlowField(-self.v1, -self.v2, self.valid)


@dataclass(frozen=True)
class ImageDerivatives:
    """Discretized ``u_t``, ``u_x`` and ``u_y`` on the pixel grid."""

    ut: Array
    ux: Array
    uy: Array

    def __post_init__(self) -> None:
        ut = _as_grid(self.ut, "ut")
        ux = _as_grid(self.ux, "ux")
        uy = _as_grid(self.uy, "uy")
        if not ut.shape == ux.shape == uy.shape:
            raise FlowShapeError(
                f"derivative grids differ in shape: {ut.shape}, {ux.shape}, {uy.shape}"
            )
        object.__setattr__(self, "ut", ut)
        object.__setattr__(self, "ux", ux)
        object.__setattr__(self, "uy", uy)

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.ut.shape[0]), int(self.ut.shape[1]))

    @cached_property
    def grad_sq(self) -> Array:
        """Per-pixel ``|∇u|²``."""
        return self.ux * self.ux + self.uy * self.uy

    def residual(self, v: Array) -> Array:
        """Linearized constraint ``ρ(v) = ∇u·v + u_t`` for a ``(2, H, W)`` flow."""
        return self.ux * v[0] + self.uy * v[1] + self.ut


@dataclass(frozen=True)
class GradientField:
    """Forward differences of one channel: ``gx`` along columns, ``gy`` along rows."""

    gx: Array
    gy: Array

    def __post_init__(self) -> None:
        if self.gx.shape != self.gy.shape:
            raise FlowShapeError(
                f"gradient parts differ in shape: {self.gx.shape} vs {self.gy.shape}"
            )


@dataclass(frozen=True)
class ModelSpec:
    """A model together with its weights and solver budget.

    For the extended models ``alpha`` is the weight of the ``∇v - w`` term
    (``α₀``) and ``alpha1`` the weight of the term on ``w``.
    """

    kind: ModelKind
    alpha: float = 0.1
    alpha1: float = 0.0
    isotropy: Isotropy = Isotropy.ISOTROPIC
    max_iters: int = 5000
    tol: float = 1e-6
    bregman_iters: int = 0
    tgv_full: bool = False

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "kind", ModelKind(self.kind))
            object.__setattr__(self, "isotropy", Isotropy(self.isotropy))
        except ValueError as e:
            raise FlowConfigError(str(e)) from e

        for name in ("alpha", "alpha1", "tol"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise FlowConfigError(f"{name} must be a finite value >= 0, got {value}")
        if self.max_iters < 1:
            raise FlowConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.bregman_iters < 0:
            raise FlowConfigError(f"bregman_iters must be >= 0, got {self.bregman_iters}")
        if self.bregman_iters > 0 and self.kind is not ModelKind.L2_TV:
            raise FlowConfigError(
                f"Bregman iteration is only available for the l2-tv model, not {self.kind.value}: "
                "the iteration is derived for L2 data fidelity and is not defined for L1 data"
            )
        if self.kind is ModelKind.L2_L2 and self.alpha == 0:
            raise FlowConfigError(
                "l2-l2 needs alpha > 0 (the quadratic conjugate is undefined at 0)"
            )

    @property
    def alpha0(self) -> float:
        return self.alpha

    @property
    def label(self) -> str:
        if self.bregman_iters:
            return f"{self.kind.value}-breg"
        return self.kind.value

    def replace(self, **changes: object) -> ModelSpec:
        return dataclasses.replace(self, **changes)  # type: ignore[arg-type]


@dataclass
class PrimalState:
    """Primal unknowns: the flow ``v`` and, for extended models, ``w``.

    ``v`` has shape ``(2, H, W)``. ``w`` has shape ``(2, H, W)`` when shared
    between both flow components and ``(2, 2, H, W)`` per component.
    """

    v: Array
    w: Array | None = None

    @classmethod
    def zeros(cls, spec: ModelSpec, shape: tuple[int, int]) -> PrimalState:
        v = np.zeros((2, *shape))
        if not spec.kind.extended:
            return cls(v)
        w_shape = (2, 2, *shape) if spec.tgv_full else (2, *shape)
        return cls(v, np.zeros(w_shape))

    @classmethod
    def from_flow(cls, spec: ModelSpec, flow: FlowField) -> PrimalState:
        state = cls.zeros(spec, flow.shape)
        state.v = flow.stack()
        return state

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.v.shape[1]), int(self.v.shape[2]))

    def flow(self) -> FlowField:
        return FlowField(self.v[0], self.v[1])

    def copy(self) -> PrimalState:
        return PrimalState(self.v.copy(), None if self.w is None else self.w.copy())

    def axpy(self, other: PrimalState, scale: float) -> PrimalState:
        """Return ``self + scale * other``."""
        w = None if self.w is None or other.w is None else self.w + scale * other.w
        return PrimalState(self.v + scale * other.v, w)

    def extrapolate(self, previous: PrimalState) -> PrimalState:
        """Return the over-relaxed point ``2 * self - previous``."""
        w = None if self.w is None or previous.w is None else 2.0 * self.w - previous.w
        return PrimalState(2.0 * self.v - previous.v, w)

    def abs_diff_sum(self, other: PrimalState) -> float:
        total = float(np.abs(self.v - other.v).sum())
        if self.w is not None and other.w is not None:
            total += float(np.abs(self.w - other.w).sum())
        return total

    def inner(self, other: PrimalState) -> float:
        total = float(np.vdot(self.v, other.v))
        if self.w is not None and other.w is not None:
            total += float(np.vdot(self.w, other.w))
        return total

    def is_finite(self) -> bool:
        if not np.all(np.isfinite(self.v)):
            return False
        return self.w is None or bool(np.all(np.isfinite(self.w)))


@dataclass
class DualState:
    """Stacked dual channels ``(C, H, W)``.

    Layout: ``∂x v1, ∂y v1, ∂x v2, ∂y v2`` first, then the ``∇w`` channels
    of the TV/TV model (``∂x w1, ∂y w1, ∂x w2, ∂y w2`` for a shared ``w``,
    twice that for per-component ``w``).
    """

    data: Array

    @property
    def n_channels(self) -> int:
        return int(self.data.shape[0])

    @property
    def flow_block(self) -> Array:
        return self.data[:4]

    @property
    def w_block(self) -> Array:
        return self.data[4:]

    def inner(self, other: DualState) -> float:
        return float(np.vdot(self.data, other.data))


@dataclass(frozen=True)
class ProxContext:
    """Step sizes, weights and image derivatives shared by the prox operators."""

    tau: float
    sigma: float
    alpha: float
    alpha0: float
    alpha1: float
    derivs: ImageDerivatives

    def __post_init__(self) -> None:
        if not (self.tau > 0 and self.sigma > 0):
            raise FlowConfigError(
                f"step sizes must be positive, got tau={self.tau}, sigma={self.sigma}"
            )
        if min(self.alpha, self.alpha0, self.alpha1) < 0:
            raise FlowConfigError("regularization weights must be >= 0")


@dataclass
class SolveReport:
    """Summary of one primal-dual run."""

    iterations_run: int
    final_residual: float
    energy_history: list[float] = field(default_factory=list)
    bregman_round: int = 0
    converged: bool = False


@dataclass
class BregmanState:
    """Bregman variable ``b`` (shape ``(2, H, W)``) and its round index."""

    b: Array
    round: int = 0

    @classmethod
    def initial(cls, shape: tuple[int, int]) -> BregmanState:
        return cls(np.zeros((2, *shape)), 0)


@dataclass(frozen=True)
class ErrorReport:
    """Error measures for one model on one dataset. ``ae`` is in radians."""

    model_name: str
    dataset_name: str
    aee: float
    ae: float
    n_pixels: int
    alpha: float = 0.0
    alpha1: float = 0.0
    iterations: int = 0


@dataclass(frozen=True)
class RankSummary:
    """Mean relative errors of one model over all datasets."""

    model_name: str
    mean_rel_aee: float
    mean_rel_ae: float
    n_datasets: int
    degenerate: bool = False


@dataclass(frozen=True)
class FlowScaling:
    """Result of scaling a ground-truth flow to sub-pixel magnitude."""

    flow: FlowField
    factor: float
    degenerate: bool = False


@dataclass(frozen=True)
class BenchmarkFailure:
    """A benchmark entry that raised instead of producing a report."""

    model_name: str
    dataset_name: str
    message: str


@dataclass
class BenchmarkResult:
    """Reports and failures of one benchmark run."""

    reports: list[ErrorReport] = field(default_factory=list)
    failures: list[BenchmarkFailure] = field(default_factory=list)


@dataclass(frozen=True)
class SweepRow:
    """Errors of one perturbed ground-truth vector of the given magnitude."""

    magnitude: float
    aee: float
    ae: float


@dataclass(frozen=True)
class Dataset:
    """A first frame with its ground-truth flow and, if available, the second frame."""

    name: str
    frame1: Image
    flow: FlowField
    frame2: Image | None = None

    def __post_init__(self) -> None:
        if self.flow.shape != self.frame1.shape:
            raise FlowShapeError(
                f"dataset {self.name}: flow {self.flow.shape} "
                f"does not match frame {self.frame1.shape}"
            )
        if self.frame2 is not None and self.frame2.shape != self.frame1.shape:
            raise FlowShapeError(f"dataset {self.name}: frames differ in size")
