"""Closed-form proximal maps and dual projections.

Flow-shaped arguments may be given as :class:`FlowField` or as ``(2, H, W)``
arrays; dual arguments as :class:`DualState` or ``(C, H, W)`` arrays. The
result has the same type as the input.
"""

from typing import TypeVar

import numpy as np

from tvflow.exceptions import FlowConfigError, FlowShapeError
from tvflow.types import DualState, FlowField, Isotropy, ProxContext

FlowLike = TypeVar("FlowLike", FlowField, np.ndarray)
DualLike = TypeVar("DualLike", DualState, np.ndarray)

# Points this close outside the ball count as feasible, which keeps the
# projection exactly idempotent.
FEASIBILITY_SLACK = 1e-13


def _flow_array(v: FlowField | np.ndarray) -> np.ndarray:
    if isinstance(v, FlowField):
        return v.stack()
    return np.asarray(v, dtype=np.float64)


def _like_flow(template: FlowLike, values: np.ndarray) -> FlowLike:
    if isinstance(template, FlowField):
        return FlowField(values[0], values[1], template.valid)  # type: ignore[return-value]
    return values  # type: ignore[return-value]


def _dual_array(y: DualState | np.ndarray) -> np.ndarray:
    if isinstance(y, DualState):
        return y.data
    return np.asarray(y, dtype=np.float64)


def _like_dual(template: DualLike, values: np.ndarray) -> DualLike:
    if isinstance(template, DualState):
        return DualState(values)  # type: ignore[return-value]
    return values  # type: ignore[return-value]


def _check_shape(v: np.ndarray, ctx: ProxContext) -> None:
    if v.shape[-2:] != ctx.derivs.shape:
        raise FlowShapeError(
            f"flow shape {v.shape[-2:]} does not match derivatives {ctx.derivs.shape}"
        )


def prox_data_l2(
    v_tilde: FlowLike, ctx: ProxContext, bregman_b: FlowField | np.ndarray | None = None
) -> FlowLike:
    """Prox of ``½ρ(v)²`` with ``ρ(v) = ∇u·v + u_t``.

    With a Bregman variable the input is first shifted by ``τ·α·b``, which
    accounts for the linear term ``-α<b, v>`` of the Bregman data term.

    Args:
        v_tilde: Point to evaluate the prox at
        ctx: Step size and derivatives
        bregman_b: Optional Bregman variable of the same shape

    Returns:
        ``ṽ - τ ρ(ṽ) / (1 + τ|∇u|²) ∇u`` per pixel
    """
    v = _flow_array(v_tilde)
    _check_shape(v, ctx)
    if bregman_b is not None:
        b = _flow_array(bregman_b)
        if b.shape != v.shape:
            raise FlowShapeError(f"Bregman variable shape {b.shape} does not match flow {v.shape}")
        v = v + (ctx.tau * ctx.alpha) * b

    d = ctx.derivs
    coef = ctx.tau * d.residual(v) / (1.0 + ctx.tau * d.grad_sq)
    return _like_flow(v_tilde, np.stack([v[0] - coef * d.ux, v[1] - coef * d.uy]))


def prox_data_l1(v_tilde: FlowLike, ctx: ProxContext) -> FlowLike:
    """Prox of ``|ρ(v)|`` (thresholding along the image gradient).

    Pixels with ``∇u = 0`` are returned unchanged.
    """
    v = _flow_array(v_tilde)
    _check_shape(v, ctx)
    d = ctx.derivs
    rho = d.residual(v)
    grad_sq = d.grad_sq
    threshold = ctx.tau * grad_sq

    on_line = np.divide(-rho, grad_sq, out=np.zeros_like(rho), where=grad_sq > 0)
    coef = np.where(rho < -threshold, ctx.tau, np.where(rho > threshold, -ctx.tau, on_line))
    return _like_flow(v_tilde, np.stack([v[0] + coef * d.ux, v[1] + coef * d.uy]))


def prox_w_l2(w_tilde: np.ndarray, ctx: ProxContext) -> np.ndarray:
    """Prox of ``(α₁/2)|w|²``: uniform shrinkage by ``1 + τα₁``."""
    return np.asarray(w_tilde, dtype=np.float64) / (1.0 + ctx.tau * ctx.alpha1)


def prox_dual_l2(y_tilde: DualLike, ctx: ProxContext) -> DualLike:
    """Prox of the conjugate ``|y|²/(2α)`` of the quadratic regularizer.

    Raises:
        FlowConfigError: If ``alpha`` is zero
    """
    if ctx.alpha <= 0:
        raise FlowConfigError("the quadratic regularizer needs alpha > 0")
    return _like_dual(y_tilde, _dual_array(y_tilde) / (1.0 + ctx.sigma / ctx.alpha))


def project_linf_ball(
    y_tilde: DualLike, weight: float, mode: Isotropy | str = Isotropy.ISOTROPIC
) -> DualLike:
    """Project dual channels onto the ball of radius ``weight``.

    Anisotropic mode clamps every channel to ``[-weight, weight]``. Isotropic
    mode treats all channels of a pixel as one vector and scales it back
    radially when its Euclidean norm exceeds ``weight``.

    Args:
        y_tilde: Channels of one regularization block, shape ``(C, H, W)``
        weight: Ball radius
        mode: Isotropy mode

    Returns:
        The projected channels
    """
    if weight < 0:
        raise FlowConfigError(f"projection radius must be >= 0, got {weight}")
    q = _dual_array(y_tilde)
    if weight == 0:
        return _like_dual(y_tilde, np.zeros_like(q))
    if Isotropy(mode) is Isotropy.ANISOTROPIC:
        return _like_dual(y_tilde, np.clip(q, -weight, weight))

    norm = np.sqrt(np.sum(q * q, axis=0))
    scale = np.divide(weight, norm, out=np.ones_like(norm), where=norm > weight + FEASIBILITY_SLACK)
    return _like_dual(y_tilde, q * scale)
