"""Per-UE transmit power allocation over a fixed scheduled set.

The gradient-ascent allocator climbs the combined-receiver quadratic
objective (the numerator of the simplified SINR) and keeps every iterate on
the Frobenius power-budget sphere through a multiplicative rescaling factor.
The objective's gradient is proportional to the amplitudes themselves, so
the zero vector is a stationary point; iterates therefore start from the
equal-power-loading vector, which is the only starting point from which the
recursion makes progress.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateScalingError, NumericalError
from .precoding import SystemParams, equal_power_loading
from .rates import uniform_combiner

#: Relative tolerance on the budget trace before a rescale is triggered.
RESCALE_TOL = 1e-12


@dataclass(frozen=True)
class GaTrace:
    """Convergence record of one gradient-ascent run."""

    objective_per_iter: np.ndarray  # quadratic objective at every iteration
    d_final: np.ndarray
    scale_events: int


def _combined_gains(g_hat: np.ndarray, w: np.ndarray, a: np.ndarray) -> np.ndarray:
    """|per-UE combined channel gain|^2 through the weights and combiner."""
    r = w.T @ (g_hat @ a)
    return np.abs(r) ** 2


def objective_x(g_hat: np.ndarray, w: np.ndarray, d: np.ndarray,
                a: np.ndarray) -> float:
    """Combined desired-signal power: a Hermitian quadratic form in d."""
    return float(np.sum(_combined_gains(g_hat, w, a) * np.asarray(d) ** 2))


def gradient_d(g_hat: np.ndarray, w: np.ndarray, d: np.ndarray,
               a: np.ndarray) -> np.ndarray:
    """Gradient of the quadratic objective with respect to the amplitudes."""
    return 2.0 * _combined_gains(g_hat, w, a) * np.asarray(d, dtype=float)


def rescale_eta(w: np.ndarray, d: np.ndarray, p_budget: float) -> np.ndarray:
    """Scale d multiplicatively so ||W diag(d)||_F^2 meets the budget exactly."""
    d = np.asarray(d, dtype=float)
    trace = float(np.sum(np.linalg.norm(w, axis=0) ** 2 * d ** 2))
    if trace <= 0.0:
        raise DegenerateScalingError("cannot rescale an all-zero amplitude vector")
    return d * np.sqrt(p_budget / trace)


def epl_allocate(n_c: int, w: np.ndarray, p_budget: float) -> np.ndarray:
    """Equal power loading baseline."""
    return equal_power_loading(n_c, w, p_budget)


def ga_allocate(g_hat_cc: np.ndarray, w: np.ndarray, params: SystemParams,
                step_mode: str = "absolute") -> tuple[np.ndarray, GaTrace]:
    """Gradient-ascent power allocation with budget rescaling.

    ``step_mode`` selects how the configured step size is interpreted:

    * ``"absolute"`` uses it as-is (default 1e-3 * p_budget / n_c);
    * ``"kernel"`` divides it by the largest per-UE combined gain, making
      the trajectory invariant to the overall channel scale. Physical
      path-loss channels have combined gains many orders of magnitude below
      one, so this is the practical choice for simulation sweeps.

    Returns the final budget-feasible amplitude vector and the trace of the
    objective over all iterations.
    """
    if step_mode not in ("absolute", "kernel"):
        raise ValueError(f"unknown step_mode {step_mode!r}")
    n_c = w.shape[1]
    a = uniform_combiner(n_c)
    gains = _combined_gains(g_hat_cc, w, a)
    col_norms_sq = np.linalg.norm(w, axis=0) ** 2

    if params.ga_step is not None:
        step = params.ga_step
    elif step_mode == "kernel":
        # Relative step against the peak combined gain; 1e-3 keeps the
        # default 200-iteration run inside the stable ascent region.
        step = 1e-3
    else:
        step = 1e-3 * params.p_budget / n_c
    if step_mode == "kernel":
        peak = float(gains.max())
        if peak > 0.0:
            step = step / peak

    d = equal_power_loading(n_c, w, params.p_budget)
    objective = np.empty(params.ga_iters)
    objective[0] = float(np.sum(gains * d ** 2))
    scale_events = 0
    for i in range(1, params.ga_iters):
        d = d + step * 2.0 * gains * d
        if not np.all(np.isfinite(d)):
            raise NumericalError(f"gradient ascent diverged at iteration {i}")
        trace = float(np.sum(col_norms_sq * d ** 2))
        if abs(trace - params.p_budget) > RESCALE_TOL * max(params.p_budget, 1.0):
            d = d * np.sqrt(params.p_budget / trace)
            scale_events += 1
        objective[i] = float(np.sum(gains * d ** 2))
    return d, GaTrace(objective_per_iter=objective, d_final=d,
                      scale_events=scale_events)
