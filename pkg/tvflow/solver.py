"""Chambolle-Pock primal-dual iteration and the Bregman outer loop."""

import logging
from collections.abc import Callable

import numpy as np

from tvflow.exceptions import FlowConfigError, FlowDivergenceError, FlowShapeError
from tvflow.models import (
    apply_K,
    apply_K_adjoint,
    dual_channels,
    make_context,
    primal_energy,
    resolve_Fstar,
    resolve_G,
)
from tvflow.types import (
    BregmanState,
    DualState,
    FlowField,
    ImageDerivatives,
    ModelKind,
    ModelSpec,
    PrimalState,
    SolveReport,
)

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[int, float, float], None]

LOG_EVERY = 100


def chambolle_pock(
    spec: ModelSpec,
    derivs: ImageDerivatives,
    init: PrimalState | None = None,
    bregman_b: np.ndarray | None = None,
    callback: ProgressCallback | None = None,
    bregman_round: int = 0,
    log_every: int = LOG_EVERY,
) -> tuple[PrimalState, SolveReport]:
    """Solve one model with the primal-dual algorithm.

    Each iteration runs the dual step ``y ← prox_σF*(y + σKx̂)``, the primal
    step ``x ← prox_τG(x - τKᵀy)`` and the over-relaxation ``x̂ = 2x - x_prev``.
    The dual starts at zero and ``x̂`` at the initial primal point. Iteration
    stops once the mean absolute change of primal and dual variables drops to
    ``spec.tol`` or after ``spec.max_iters`` iterations.

    Args:
        spec: Model and solver budget
        derivs: Image derivatives of the frame pair
        init: Starting primal point (zero when omitted)
        bregman_b: Bregman variable for the shifted L2 data term
        callback: Called as ``callback(iteration, residual, energy)`` after
            every iteration
        bregman_round: Round index recorded in the report
        log_every: Log progress at INFO level every this many iterations

    Returns:
        Final primal state and the solve report

    Raises:
        FlowDivergenceError: If an iterate becomes non-finite
        FlowShapeError: If ``init`` or ``bregman_b`` do not match the grid
    """
    shape = derivs.shape
    if init is None:
        x = PrimalState.zeros(spec, shape)
    else:
        if init.shape != shape:
            raise FlowShapeError(f"initial state shape {init.shape} does not match grid {shape}")
        x = init.copy()
    if bregman_b is not None and bregman_b.shape != (2, *shape):
        raise FlowShapeError(
            f"Bregman variable shape {bregman_b.shape} does not match grid {shape}"
        )

    ctx = make_context(spec, derivs)
    n_pixels = shape[0] * shape[1]
    y = DualState(np.zeros((dual_channels(spec), *shape)))
    x_bar = x
    report = SolveReport(iterations_run=0, final_residual=float("inf"), bregman_round=bregman_round)

    logger.info(
        "solving %s on %dx%d grid (tau=%.3g, sigma=%.3g)",
        spec.kind.value,
        shape[1],
        shape[0],
        ctx.tau,
        ctx.sigma,
    )
    for k in range(1, spec.max_iters + 1):
        y_new = resolve_Fstar(spec, DualState(y.data + ctx.sigma * apply_K(spec, x_bar).data), ctx)
        x_new = resolve_G(spec, x.axpy(apply_K_adjoint(spec, y_new), -ctx.tau), ctx, bregman_b)
        x_bar = x_new.extrapolate(x)

        residual = max(x_new.abs_diff_sum(x), float(np.abs(y_new.data - y.data).sum())) / n_pixels
        if not np.isfinite(residual) or not x_new.is_finite():
            raise FlowDivergenceError(
                f"{spec.kind.value} diverged: non-finite values at iteration {k}", iteration=k
            )
        x, y = x_new, y_new

        energy = primal_energy(spec, derivs, x, bregman_b)
        report.energy_history.append(energy)
        report.iterations_run = k
        report.final_residual = residual
        if log_every and k % log_every == 0:
            logger.info("iteration %d: residual %.3e, energy %.6g", k, residual, energy)
        if callback is not None:
            callback(k, residual, energy)
        if residual <= spec.tol:
            report.converged = True
            break

    if report.converged:
        logger.info(
            "%s converged after %d iterations (residual %.3e)",
            spec.kind.value,
            report.iterations_run,
            report.final_residual,
        )
    else:
        logger.info(
            "%s stopped at the iteration budget %d (residual %.3e)",
            spec.kind.value,
            spec.max_iters,
            report.final_residual,
        )
    return x, report


def bregman_update(
    b: np.ndarray, derivs: ImageDerivatives, v: np.ndarray, alpha: float
) -> np.ndarray:
    """Return ``b - (1/α)(u_t + ∇u·v)∇u`` for a ``(2, H, W)`` flow ``v``."""
    rho = derivs.residual(v)
    return np.stack([b[0] - rho * derivs.ux / alpha, b[1] - rho * derivs.uy / alpha])


def bregman_solve(
    spec: ModelSpec,
    derivs: ImageDerivatives,
    callback: ProgressCallback | None = None,
) -> tuple[FlowField, list[SolveReport]]:
    """Run the Bregman iteration for the L2-TV model.

    Round ``n`` minimizes the L2-TV energy with the data term extended by
    ``-α<bⁿ, v>`` and warm-starts from the previous round's solution. After
    each round the Bregman variable is updated from the data residual.

    Args:
        spec: An ``l2-tv`` spec with ``bregman_iters >= 1``
        derivs: Image derivatives of the frame pair
        callback: Per-iteration progress callback passed to every round

    Returns:
        The flow of the last round and one report per round

    Raises:
        FlowConfigError: For other models or ``bregman_iters < 1``
    """
    if spec.kind is not ModelKind.L2_TV:
        raise FlowConfigError(f"Bregman iteration needs the l2-tv model, got {spec.kind.value}")
    if spec.bregman_iters < 1:
        raise FlowConfigError("bregman_solve needs bregman_iters >= 1")
    if spec.alpha <= 0:
        raise FlowConfigError("Bregman iteration needs alpha > 0")

    state = BregmanState.initial(derivs.shape)
    x: PrimalState | None = None
    reports: list[SolveReport] = []
    for n in range(spec.bregman_iters):
        logger.info("Bregman round %d/%d", n + 1, spec.bregman_iters)
        # b is identically zero in the first round, so it runs as a plain solve.
        b = state.b if n > 0 else None
        x, report = chambolle_pock(
            spec, derivs, init=x, bregman_b=b, callback=callback, bregman_round=n
        )
        reports.append(report)
        state = BregmanState(bregman_update(state.b, derivs, x.v, spec.alpha), n + 1)

    assert x is not None
    return x.flow(), reports


def solve(
    spec: ModelSpec,
    derivs: ImageDerivatives,
    callback: ProgressCallback | None = None,
) -> tuple[FlowField, list[SolveReport]]:
    """Solve a spec, dispatching to the Bregman loop when requested."""
    if spec.bregman_iters > 0:
        return bregman_solve(spec, derivs, callback)
    x, report = chambolle_pock(spec, derivs, callback=callback)
    return x.flow(), [report]
