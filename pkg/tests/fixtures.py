"""Shared test data: the 3x3 ambiguity example, reference constants and small scenes."""

import numpy as np

from tvflow.synth import smooth_texture, warp_cubic
from tvflow.types import FlowField, Image

# Two 3x3 frames where the top-left pair of pixels moves down by one row.
AMBIGUITY_FRAME_1 = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
AMBIGUITY_FRAME_2 = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])

# Candidate flows that all explain the motion above.
CANDIDATE_FLOWS = {
    "move-pixels": (
        np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
        np.zeros((3, 3)),
    ),
    "move-and-swap": (
        np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
        np.array([[1.0, -1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
    ),
    "move-image": (np.ones((3, 3)), np.zeros((3, 3))),
    "move-and-exchange": (
        np.array([[1.0, 1.0, 1.0], [0.0, 0.0, 1.0], [0.0, 0.0, -2.0]]),
        np.zeros((3, 3)),
    ),
}

# Static weights per preset.
STATIC_ALPHAS = {
    "l2-l2": 0.15,
    "l2-tv": 0.002,
    "l2-tv-breg": 0.02,
    "l1-tv": 0.1,
    "l1-tv-l2": 0.1,
    "l1-tv-tv": 0.1,
}

MANIFEST_TEXT = """\
DATASETS=synthetic:translation
MODELS=l2-l2,l1-tv
SIZE=16
MAX_ITERS=200
TOL=1e-5
GRADIENT_SCALE=half
"""


def candidate_flow(name: str) -> FlowField:
    """One of the candidate flows as a field."""
    v1, v2 = CANDIDATE_FLOWS[name]
    return FlowField(v1.copy(), v2.copy())


def translated_pair(size: int = 64, shift: float = 0.5, seed: int = 0) -> tuple[Image, Image]:
    """A smooth texture and its copy whose content moved by ``shift`` along x."""
    frame1 = smooth_texture((size, size), seed)
    frame2 = warp_cubic(frame1, FlowField.constant(frame1.shape, -shift, 0.0))
    return frame1, frame2


def random_image(shape: tuple[int, int], seed: int = 0) -> Image:
    """Uniform random intensities."""
    return Image(np.random.default_rng(seed).uniform(0.0, 1.0, size=shape))
