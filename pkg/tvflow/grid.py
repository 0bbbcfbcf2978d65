"""Finite-difference operators on the pixel grid.

The forward gradient and backward divergence are exact negative adjoints:
``<grad v, y> = -<v, div y>``. Both work on stacks of channels; the last two
axes are ``(rows, columns)``.
"""

from collections.abc import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from tvflow.exceptions import FlowShapeError
from tvflow.types import (
    GradientField,
    GradientScale,
    GradientScheme,
    Image,
    ImageDerivatives,
)


def image_derivatives(
    u0: Image,
    u1: Image,
    scheme: GradientScheme | str = GradientScheme.CENTRAL,
    scale: GradientScale | str = GradientScale.FULL,
) -> ImageDerivatives:
    """Discretize ``u_t``, ``u_x`` and ``u_y`` for a frame pair.

    ``u_t`` is the forward difference in time. The spatial derivatives of the
    first frame use central differences ``u[i+1] - u[i-1]`` (halved when
    ``scale`` is ``half``) or forward differences ``u[i+1] - u[i]``. Both
    schemes are zero on the first and last column (``u_x``) and row (``u_y``).

    Args:
        u0: First frame
        u1: Second frame
        scheme: Spatial stencil
        scale: ``full`` or ``half``; only affects the central stencil

    Returns:
        Derivative grids

    Raises:
        FlowShapeError: If the frames differ in size
    """
    if u0.shape != u1.shape:
        raise FlowShapeError(
            f"frame sizes differ: {u0.width}x{u0.height} vs {u1.width}x{u1.height}"
        )
    scheme = GradientScheme(scheme)
    scale = GradientScale(scale)

    u = u0.data
    ut = u1.data - u
    ux = np.zeros_like(u)
    uy = np.zeros_like(u)
    if scheme is GradientScheme.CENTRAL:
        ux[:, 1:-1] = u[:, 2:] - u[:, :-2]
        uy[1:-1, :] = u[2:, :] - u[:-2, :]
        if scale is GradientScale.HALF:
            ux *= 0.5
            uy *= 0.5
    else:
        ux[:, 1:-1] = u[:, 2:] - u[:, 1:-1]
        uy[1:-1, :] = u[2:, :] - u[1:-1, :]
    return ImageDerivatives(ut, ux, uy)


def gradient(channels: np.ndarray) -> np.ndarray:
    """Forward differences with Neumann boundary for a stack of channels.

    Args:
        channels: Array of shape ``(..., H, W)``

    Returns:
        Array of shape ``(..., 2, H, W)`` holding ``(gx, gy)`` per channel
    """
    out = np.zeros((*channels.shape[:-2], 2, *channels.shape[-2:]))
    out[..., 0, :, :-1] = channels[..., :, 1:] - channels[..., :, :-1]
    out[..., 1, :-1, :] = channels[..., 1:, :] - channels[..., :-1, :]
    return out


def divergence(field: np.ndarray) -> np.ndarray:
    """Backward-difference divergence, the negative adjoint of :func:`gradient`.

    Per axis: the first entry is kept, interior entries are differenced and
    the last entry is the negated previous value.

    Args:
        field: Array of shape ``(..., 2, H, W)``

    Returns:
        Array of shape ``(..., H, W)``
    """
    gx = field[..., 0, :, :]
    gy = field[..., 1, :, :]
    out = np.zeros(gx.shape)
    out[..., :, 0] = gx[..., :, 0]
    out[..., :, 1:-1] = gx[..., :, 1:-1] - gx[..., :, :-2]
    out[..., :, -1] = -gx[..., :, -2]
    out[..., 0, :] += gy[..., 0, :]
    out[..., 1:-1, :] += gy[..., 1:-1, :] - gy[..., :-2, :]
    out[..., -1, :] -= gy[..., -2, :]
    return out


def grad_forward(channel: np.ndarray) -> GradientField:
    """Forward-difference gradient of a single 2-D grid.

    Raises:
        FlowShapeError: If the grid is not 2-D or smaller than 2x2
    """
    channel = np.asarray(channel, dtype=np.float64)
    if channel.ndim != 2 or channel.shape[0] < 2 or channel.shape[1] < 2:
        raise FlowShapeError(f"gradient needs a 2-D grid of at least 2x2, got {channel.shape}")
    g = gradient(channel)
    return GradientField(g[0], g[1])


def div_backward(y: GradientField) -> np.ndarray:
    """Backward-difference divergence of a gradient field."""
    gx = np.asarray(y.gx, dtype=np.float64)
    if gx.ndim != 2 or gx.shape[0] < 2 or gx.shape[1] < 2:
        raise FlowShapeError(f"divergence needs 2-D grids of at least 2x2, got {gx.shape}")
    return divergence(np.stack([gx, np.asarray(y.gy, dtype=np.float64)]))


def largest_eigenvalue(
    matvec: Callable[[np.ndarray], np.ndarray], size: int, seed: int = 0
) -> float:
    """Largest eigenvalue of a symmetric positive semi-definite operator.

    Args:
        matvec: Function applying the operator to a flat vector
        size: Length of the vectors the operator acts on
        seed: Seed for the start vector

    Returns:
        The eigenvalue of largest magnitude
    """
    op = LinearOperator((size, size), matvec=matvec, dtype=np.float64)
    v0 = np.random.default_rng(seed).standard_normal(size)
    if size < 3:
        dense = np.column_stack([matvec(e) for e in np.eye(size)])
        return float(np.max(np.linalg.eigvalsh(dense)))
    values = eigsh(op, k=1, which="LA", v0=v0, return_eigenvectors=False, tol=1e-8)
    return float(values[0])


def gradient_norm_sq(shape: tuple[int, int]) -> float:
    """Estimate ``||∇||²`` on a grid of the given shape (bounded by 8)."""

    def matvec(x: np.ndarray) -> np.ndarray:
        grid = x.reshape(shape)
        return -divergence(gradient(grid)).ravel()

    return largest_eigenvalue(matvec, shape[0] * shape[1])
