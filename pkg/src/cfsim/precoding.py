"""Linear downlink precoders and the weight/power-loading factorization.

A precoder is always factored as P = W * diag(d): W has unit-norm columns
carrying spatial direction only, and the real non-negative amplitude vector
d carries all per-UE power. The only transmit-power constraint is the
Frobenius norm ||P||_F^2 <= p_budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import counters
from .errors import PowerBudgetError, SingularChannelError

#: Condition-number cap for the ZF inversion, measured on the column-normalized
#: channel estimate so that weak-but-well-separated users stay admissible.
ZF_CONDITION_CAP = 1e10

#: Tolerance on the power-budget and column-norm invariants.
BUDGET_TOL = 1e-9


@dataclass(frozen=True)
class SystemParams:
    """Physical-layer scalars shared by precoding, rates, and allocation."""

    rho_f: float                 # per-antenna transmit power (linear)
    noise_var: float = 1.0       # receiver noise variance (linear)
    p_budget: float = 1.0        # Frobenius power budget of one precoder
    ga_step: float | None = None  # gradient-ascent step; None -> 1e-3*p_budget/n_c
    ga_iters: int = 100

    def __post_init__(self) -> None:
        for name in ("rho_f", "noise_var", "p_budget"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.ga_step is not None and self.ga_step <= 0.0:
            raise ValueError("ga_step must be strictly positive when given")
        if self.ga_iters < 1:
            raise ValueError("ga_iters must be >= 1")


def normalize_columns(w: np.ndarray) -> np.ndarray:
    """Scale every column of ``w`` to unit Euclidean norm."""
    norms = np.linalg.norm(w, axis=0)
    if np.any(norms == 0.0):
        raise SingularChannelError("cannot normalize a zero weight column")
    return w / norms


def _check_conditioning(g_hat: np.ndarray, cond_cap: float, ue_indices) -> None:
    m, n = g_hat.shape
    normalized = normalize_columns(g_hat)
    s = np.linalg.svd(normalized, compute_uv=False)
    counters.svd(m, n)
    if s[-1] == 0.0 or s[0] / s[-1] > cond_cap:
        ues = "" if ue_indices is None else f" for UE set {list(ue_indices)}"
        raise SingularChannelError(
            f"channel estimate is rank deficient or ill-conditioned{ues} "
            f"(condition number cap {cond_cap:g})")


def zf_weights(g_hat: np.ndarray, normalize: bool = True,
               cond_cap: float = ZF_CONDITION_CAP, ue_indices=None) -> np.ndarray:
    """Zero-forcing weights conj(G)(G^T conj(G))^-1, columns unit-normalized.

    Before normalization the weights satisfy G^T W = I exactly; pass
    ``normalize=False`` to get that raw matrix.
    """
    m, n = g_hat.shape
    if n > m:
        raise SingularChannelError(
            f"zero forcing needs at most as many UEs as APs ({n} > {m})")
    _check_conditioning(g_hat, cond_cap, ue_indices)
    b = g_hat.T @ g_hat.conj()
    counters.matmul(n, m, n)
    raw = g_hat.conj() @ np.linalg.inv(b)
    counters.inverse(n)
    counters.matmul(m, n, n)
    return normalize_columns(raw) if normalize else raw


def mmse_weights(g_hat: np.ndarray, params: SystemParams,
                 normalize: bool = True) -> np.ndarray:
    """Regularized-inverse (MMSE) weights with loading n*sigma_w^2/rho_f.

    Always well-posed: the regularizer keeps the inverted matrix positive
    definite for any channel estimate.
    """
    m, n = g_hat.shape
    xi = n * params.noise_var / params.rho_f
    b = g_hat.T @ g_hat.conj() + xi * np.eye(n)
    counters.matmul(n, m, n)
    raw = g_hat.conj() @ np.linalg.inv(b)
    counters.inverse(n)
    counters.matmul(m, n, n)
    return normalize_columns(raw) if normalize else raw


def equal_power_loading(n: int, w: np.ndarray, p_budget: float) -> np.ndarray:
    """Uniform amplitudes scaled so ||W diag(d)||_F^2 equals the budget."""
    if n < 1:
        raise ValueError("need at least one scheduled UE")
    if w.shape[1] != n:
        raise ValueError(f"weight matrix has {w.shape[1]} columns, expected {n}")
    scale = np.sqrt(p_budget) / np.linalg.norm(w, "fro")
    return np.full(n, scale)


@dataclass(frozen=True)
class Precoder:
    """Validated factorized precoder P = W diag(d)."""

    w: np.ndarray  # (M, n) complex, unit-norm columns
    d: np.ndarray  # (n,) real, non-negative

    def __post_init__(self) -> None:
        w = np.ascontiguousarray(self.w)
        d = np.ascontiguousarray(np.asarray(self.d, dtype=float))
        w.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "d", d)
        if w.ndim != 2 or d.ndim != 1 or w.shape[1] != d.shape[0]:
            raise ValueError("weights and amplitudes have inconsistent shapes")
        if np.any(np.abs(np.linalg.norm(w, axis=0) - 1.0) > BUDGET_TOL):
            raise ValueError("weight columns must have unit norm")
        if np.any(d < 0.0):
            raise ValueError("amplitude entries must be non-negative")

    @property
    def p_composite(self) -> np.ndarray:
        return self.w * self.d

    @property
    def num_ues(self) -> int:
        return self.d.shape[0]


def assemble(w: np.ndarray, d: np.ndarray, p_budget: float) -> Precoder:
    """Build a Precoder, enforcing the Frobenius power budget."""
    precoder = Precoder(w=w, d=np.asarray(d, dtype=float))
    power = float(np.linalg.norm(precoder.p_composite, "fro") ** 2)
    if power > p_budget * (1.0 + BUDGET_TOL) + BUDGET_TOL:
        raise PowerBudgetError(
            f"precoder power {power:.6g} exceeds budget {p_budget:.6g}")
    return precoder
