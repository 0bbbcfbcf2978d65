"""tvflow - Total-variation optical flow on a primal-dual solver."""

__version__ = "0.1.0"

from tvflow.config import PRESETS, Settings, build_spec, load_settings  # noqa: E402
from tvflow.exceptions import (  # noqa: E402
    FlowConfigError,
    FlowDivergenceError,
    FlowError,
    FlowFetchError,
    FlowFormatError,
    FlowIOError,
    FlowShapeError,
)
from tvflow.grid import image_derivatives  # noqa: E402
from tvflow.metrics import ae, aee, aggregate_ranks, evaluate  # noqa: E402
from tvflow.solver import bregman_solve, chambolle_pock, solve  # noqa: E402
from tvflow.types import FlowField, Image, ModelKind, ModelSpec  # noqa: E402

__all__ = [
    "PRESETS",
    "FlowConfigError",
    "FlowDivergenceError",
    "FlowError",
    "FlowFetchError",
    "FlowField",
    "FlowFormatError",
    "FlowIOError",
    "FlowShapeError",
    "Image",
    "ModelKind",
    "ModelSpec",
    "Settings",
    "ae",
    "aee",
    "aggregate_ranks",
    "bregman_solve",
    "build_spec",
    "chambolle_pock",
    "evaluate",
    "image_derivatives",
    "load_settings",
    "solve",
]
