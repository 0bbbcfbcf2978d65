"""The five variational models as (G, F, K) triples.

Every model is solved as ``min_x G(x) + F(Kx)``:

============  ==========================  =================================
kind          G(x)                        F(Kx)
============  ==========================  =================================
l2-l2         ½|ρ(v)|²                    (α/2)|∇v|²
l2-tv         ½|ρ(v)|²                    α|∇v|
l1-tv         |ρ(v)|                      α|∇v|
l1-tv-l2      |ρ(v)| + (α₁/2)|w|²         α₀|∇v - w|
l1-tv-tv      |ρ(v)|                      α₀|∇v - w| + α₁|∇w|
============  ==========================  =================================

``w`` is shared by both flow components unless ``spec.tgv_full`` is set, in
which case each component gets its own ``w``.
"""

import logging

import numpy as np

from tvflow.exceptions import FlowShapeError
from tvflow.grid import divergence, gradient, largest_eigenvalue
from tvflow.prox import (
    project_linf_ball,
    prox_data_l1,
    prox_data_l2,
    prox_dual_l2,
    prox_w_l2,
)
from tvflow.types import (
    DualState,
    ImageDerivatives,
    Isotropy,
    ModelKind,
    ModelSpec,
    PrimalState,
    ProxContext,
)

logger = logging.getLogger(__name__)

GRADIENT_MODEL_STEPS = (1.0 / 4.0, 1.0 / 2.0)
EXTENDED_MODEL_STEPS = (1.0 / 5.0, 1.0 / 3.0)


def step_sizes(spec: ModelSpec) -> tuple[float, float]:
    """Primal and dual step sizes ``(tau, sigma)`` for a model."""
    return EXTENDED_MODEL_STEPS if spec.kind.extended else GRADIENT_MODEL_STEPS


def dual_channels(spec: ModelSpec) -> int:
    """Number of stacked dual channels for a model."""
    if spec.kind is ModelKind.L1_TV_TV:
        return 12 if spec.tgv_full else 8
    return 4


def make_context(spec: ModelSpec, derivs: ImageDerivatives) -> ProxContext:
    tau, sigma = step_sizes(spec)
    return ProxContext(
        tau=tau,
        sigma=sigma,
        alpha=spec.alpha,
        alpha0=spec.alpha0,
        alpha1=spec.alpha1,
        derivs=derivs,
    )


def _check_primal(spec: ModelSpec, x: PrimalState) -> None:
    if x.v.ndim != 3 or x.v.shape[0] != 2:
        raise FlowShapeError(f"flow block must have shape (2, H, W), got {x.v.shape}")
    if spec.kind.extended:
        expected = (2, 2, *x.shape) if spec.tgv_full else (2, *x.shape)
        if x.w is None or x.w.shape != expected:
            got = None if x.w is None else x.w.shape
            raise FlowShapeError(f"{spec.kind.value} needs w of shape {expected}, got {got}")
    elif x.w is not None:
        raise FlowShapeError(f"{spec.kind.value} has no auxiliary field w")


def apply_K(spec: ModelSpec, x: PrimalState) -> DualState:
    """Apply the model's linear operator ``K`` to a primal state."""
    _check_primal(spec, x)
    h, w = x.shape
    grad_v = gradient(x.v)
    if not spec.kind.extended:
        return DualState(grad_v.reshape(4, h, w))

    assert x.w is not None
    # Shared w broadcasts over the flow components.
    blocks = [(grad_v - x.w).reshape(4, h, w)]
    if spec.kind is ModelKind.L1_TV_TV:
        blocks.append(gradient(x.w).reshape(-1, h, w))
    return DualState(np.concatenate(blocks))


def apply_K_adjoint(spec: ModelSpec, y: DualState) -> PrimalState:
    """Apply ``Kᵀ``, the exact discrete adjoint of :func:`apply_K`."""
    expected = dual_channels(spec)
    if y.data.ndim != 3 or y.n_channels != expected:
        raise FlowShapeError(
            f"{spec.kind.value} needs {expected} dual channels, got shape {y.data.shape}"
        )
    h, w = y.data.shape[1:]
    flow_block = y.flow_block.reshape(2, 2, h, w)
    v = -divergence(flow_block)
    if not spec.kind.extended:
        return PrimalState(v)

    w_adj = -flow_block if spec.tgv_full else -flow_block.sum(axis=0)
    if spec.kind is ModelKind.L1_TV_TV:
        w_adj = w_adj - divergence(y.w_block.reshape(*w_adj.shape[:-2], 2, h, w))
    return PrimalState(v, w_adj)


def resolve_G(
    spec: ModelSpec,
    x_tilde: PrimalState,
    ctx: ProxContext,
    bregman_b: np.ndarray | None = None,
) -> PrimalState:
    """Primal prox of ``τG`` for the model."""
    if spec.kind.l2_data:
        v = prox_data_l2(x_tilde.v, ctx, bregman_b)
    else:
        v = prox_data_l1(x_tilde.v, ctx)

    w = x_tilde.w
    if spec.kind is ModelKind.L1_TV_L2:
        assert w is not None
        w = prox_w_l2(w, ctx)
    return PrimalState(v, w)


def resolve_Fstar(spec: ModelSpec, y_tilde: DualState, ctx: ProxContext) -> DualState:
    """Dual prox of ``σF*``: shrinkage for l2-l2, ball projections otherwise.

    The two blocks of the TV/TV model are projected independently with
    their own weights.
    """
    if spec.kind is ModelKind.L2_L2:
        return prox_dual_l2(y_tilde, ctx)

    weight = ctx.alpha0 if spec.kind.extended else ctx.alpha
    flow_block = project_linf_ball(y_tilde.flow_block, weight, spec.isotropy)
    if spec.kind is not ModelKind.L1_TV_TV:
        return DualState(flow_block)
    w_block = project_linf_ball(y_tilde.w_block, ctx.alpha1, spec.isotropy)
    return DualState(np.concatenate([flow_block, w_block]))


def _tv(channels: np.ndarray, isotropy: Isotropy) -> float:
    if isotropy is Isotropy.ANISOTROPIC:
        return float(np.abs(channels).sum())
    return float(np.sqrt(np.sum(channels * channels, axis=0)).sum())


def primal_energy(
    spec: ModelSpec,
    derivs: ImageDerivatives,
    x: PrimalState,
    bregman_b: np.ndarray | None = None,
) -> float:
    """Objective value ``G(x) + F(Kx)`` of a primal state.

    Inside a Bregman round the linear term ``-α<b, v>`` is included.
    """
    rho = derivs.residual(x.v)
    kx = apply_K(spec, x)
    kind = spec.kind

    if kind.l2_data:
        energy = 0.5 * float(np.sum(rho * rho))
    else:
        energy = float(np.abs(rho).sum())

    if kind is ModelKind.L2_L2:
        energy += 0.5 * spec.alpha * float(np.sum(kx.data * kx.data))
    else:
        energy += spec.alpha0 * _tv(kx.flow_block, spec.isotropy)

    if kind is ModelKind.L1_TV_L2:
        assert x.w is not None
        energy += 0.5 * spec.alpha1 * float(np.sum(x.w * x.w))
    elif kind is ModelKind.L1_TV_TV:
        energy += spec.alpha1 * _tv(kx.w_block, spec.isotropy)

    if bregman_b is not None:
        energy -= spec.alpha * float(np.vdot(bregman_b, x.v))
    return energy


def _flatten(x: PrimalState) -> np.ndarray:
    if x.w is None:
        return x.v.ravel()
    return np.concatenate([x.v.ravel(), x.w.ravel()])


def _unflatten(spec: ModelSpec, shape: tuple[int, int], vec: np.ndarray) -> PrimalState:
    template = PrimalState.zeros(spec, shape)
    n_v = template.v.size
    v = vec[:n_v].reshape(template.v.shape)
    if template.w is None:
        return PrimalState(v)
    return PrimalState(v, vec[n_v:].reshape(template.w.shape))


def operator_norm_sq(spec: ModelSpec, shape: tuple[int, int]) -> float:
    """Estimate ``||K||²`` as the largest eigenvalue of ``KᵀK``."""
    size = _flatten(PrimalState.zeros(spec, shape)).size

    def matvec(vec: np.ndarray) -> np.ndarray:
        x = _unflatten(spec, shape, np.asarray(vec, dtype=np.float64).ravel())
        return _flatten(apply_K_adjoint(spec, apply_K(spec, x)))

    return largest_eigenvalue(matvec, size)


def check_step_sizes(spec: ModelSpec, shape: tuple[int, int]) -> float:
    """Return ``τσ||K||²`` for the model on a grid, warning when it exceeds 1."""
    tau, sigma = step_sizes(spec)
    product = tau * sigma * operator_norm_sq(spec, shape)
    if product > 1.0:
        logger.warning(
            "step sizes tau=%.3g sigma=%.3g violate tau*sigma*||K||^2 <= 1 (%.4f) for %s",
            tau,
            sigma,
            product,
            spec.kind.value,
        )
    return product
