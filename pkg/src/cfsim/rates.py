"""Analytic downlink sum-rates.

Monolithic evaluation treats the whole network as one cluster: the rate is
log2 det of the identity plus the desired-signal Gram matrix whitened by the
CSI-error-plus-noise covariance. Clustered evaluation adds inter-cluster
interference terms to that covariance and sums per-cluster rates. A separate
simplified rate, seen through a uniform single-tap combiner, is what the
gradient-ascent power allocator optimizes.

Log-determinants are computed from a Cholesky factorization of the
symmetrized matrix, never from explicit determinants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import counters
from .errors import NumericalError
from .precoding import Precoder, SystemParams


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def logdet2_pd(a: np.ndarray) -> float:
    """log2 det of a Hermitian positive-definite matrix (Cholesky based)."""
    try:
        chol = np.linalg.cholesky(hermitian_part(a))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("covariance matrix is not positive definite") from exc
    counters.logdet(a.shape[0])
    diag = np.real(np.diag(chol))
    return float(2.0 * np.sum(np.log2(diag)))


def whitened_rate(sig: np.ndarray, cov: np.ndarray) -> float:
    """log2 det[sig cov^-1 + I] for Hermitian PSD ``sig`` and PD ``cov``.

    Whitens the signal Gram by the covariance's Cholesky factor and sums
    log1p over its eigenvalues, which keeps full relative precision even
    when the whitened eigenvalues are far below one.
    """
    n = sig.shape[0]
    try:
        chol = np.linalg.cholesky(hermitian_part(cov))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("covariance matrix is not positive definite") from exc
    counters.logdet(n)
    half = np.linalg.solve(chol, hermitian_part(sig))
    counters.inverse(n)
    white = np.linalg.solve(chol, half.conj().T).conj().T
    counters.inverse(n)
    eigs = np.linalg.eigvalsh(hermitian_part(white))
    counters.logdet(n)
    rate = float(np.sum(np.log1p(np.maximum(eigs, 0.0))) / np.log(2.0))
    if not np.isfinite(rate):
        raise NumericalError("rate evaluation produced a non-finite value")
    return rate


def _signal_gram(g: np.ndarray, p: np.ndarray, rho_f: float) -> np.ndarray:
    """rho_f * G^T P P^H conj(G) for a channel block G and composite precoder P."""
    n = g.shape[1]
    j = p.shape[1]
    t = g.T @ p
    counters.matmul(n, g.shape[0], j)
    out = rho_f * (t @ t.conj().T)
    counters.matmul(n, j, n)
    return out


def cf_sum_rate(g_hat: np.ndarray, g_err: np.ndarray, precoder: Precoder,
                params: SystemParams) -> float:
    """Monolithic sum-rate: log2 det[N (E + sigma_w^2 I)^-1 + I].

    N is the estimated-channel signal Gram and E the CSI-error Gram; the
    log-det is evaluated through :func:`whitened_rate`.
    """
    n = g_hat.shape[1]
    p = precoder.p_composite
    sig = _signal_gram(g_hat, p, params.rho_f)
    err = _signal_gram(g_err, p, params.rho_f) + params.noise_var * np.eye(n)
    return whitened_rate(sig, err)


def cluster_covariance(g_err_cc: np.ndarray, precoder_c: Precoder,
                       interferers, params: SystemParams) -> np.ndarray:
    """Interference-plus-noise covariance seen by one cluster's UEs.

    ``interferers`` is an iterable of ``(g_hat_ic, g_err_ic, precoder_i)``
    cross-channel blocks from every other cluster, each dimensioned
    (M_i, n_c). Own-cluster CSI error, interferers' estimated and error
    channels, and noise all contribute; the result is Hermitian with
    spectrum bounded below by the noise variance.
    """
    n_c = g_err_cc.shape[1]
    cov = _signal_gram(g_err_cc, precoder_c.p_composite, params.rho_f)
    for g_hat_ic, g_err_ic, precoder_i in interferers:
        if g_hat_ic.shape[1] != n_c or g_err_ic.shape[1] != n_c:
            raise ValueError(
                f"interferer block has {g_hat_ic.shape[1]} UE columns, expected {n_c}")
        p_i = precoder_i.p_composite
        cov = cov + _signal_gram(g_hat_ic, p_i, params.rho_f)
        cov = cov + _signal_gram(g_err_ic, p_i, params.rho_f)
    return hermitian_part(cov + params.noise_var * np.eye(n_c))


def cluster_sum_rate(g_hat_cc: np.ndarray, precoder_c: Precoder,
                     covariance: np.ndarray, params: SystemParams) -> float:
    """Per-cluster sum-rate log2 det[S R^-1 + I] against a given covariance."""
    sig = _signal_gram(g_hat_cc, precoder_c.p_composite, params.rho_f)
    return whitened_rate(sig, covariance)


def total_clustered_rate(per_cluster_rates) -> float:
    """Network total: plain left-to-right sum of the per-cluster rates."""
    total = 0.0
    for r in per_cluster_rates:
        total += float(r)
    return total


def uniform_combiner(n: int) -> np.ndarray:
    """Unit-norm all-ones combining vector over n scheduled UEs."""
    if n < 1:
        raise ValueError("combiner length must be >= 1")
    return np.full(n, 1.0 / np.sqrt(n))


def combined_sinr(g_hat_cc: np.ndarray, w: np.ndarray, d: np.ndarray,
                  params: SystemParams, g_err_cc: np.ndarray | None = None,
                  interferers=()) -> float:
    """Scalar SINR at the uniform combiner for a candidate power loading.

    Numerator: rho_f times the combined desired-signal power through
    W diag(d). Denominator: the combiner's quadratic form over the
    own-cluster CSI-error covariance, the interferers' true-channel
    covariance (``interferers`` iterates over ``(g_true_ic, precoder_i)``
    pairs), and noise.
    """
    n = w.shape[1]
    a = uniform_combiner(n)
    r = w.T @ (g_hat_cc @ a)
    num = params.rho_f * float(np.sum(np.abs(r) ** 2 * np.asarray(d) ** 2))

    den = params.noise_var  # a has unit norm
    p_c = w * np.asarray(d)
    if g_err_cc is not None:
        v = p_c.conj().T @ (g_err_cc.conj() @ a)
        den += params.rho_f * float(np.sum(np.abs(v) ** 2))
    for g_true_ic, precoder_i in interferers:
        v = precoder_i.p_composite.conj().T @ (g_true_ic.conj() @ a)
        den += params.rho_f * float(np.sum(np.abs(v) ** 2))
    return num / den


def simplified_sum_rate(g_hat_cc: np.ndarray, w: np.ndarray, d: np.ndarray,
                        params: SystemParams, g_err_cc: np.ndarray | None = None,
                        interferers=()) -> float:
    """Combined-receiver sum-rate 0.5*log2(1 + SINR) used by the allocator."""
    sinr = combined_sinr(g_hat_cc, w, d, params,
                         g_err_cc=g_err_cc, interferers=interferers)
    return 0.5 * float(np.log2(1.0 + sinr))


@dataclass(frozen=True)
class RateReport:
    """Per-cluster and total rates of one evaluated snapshot."""

    per_cluster_rate: tuple
    total_rate: float
    sinr_simplified: float | None = None

    def __post_init__(self) -> None:
        if any(r < 0.0 for r in self.per_cluster_rate) or self.total_rate < 0.0:
            raise ValueError("rates must be non-negative")
        if self.total_rate != total_clustered_rate(self.per_cluster_rate):
            raise ValueError("total_rate must equal the sum of per-cluster rates")
