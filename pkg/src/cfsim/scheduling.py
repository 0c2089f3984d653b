"""Multiuser scheduling: enhanced subset greedy plus its baselines.

All schedulers score candidate UE subsets with the same selection metric:
the intra-cluster sum-rate under MMSE precoding with equal power loading,
including the own-cluster CSI-error covariance but no inter-cluster terms
(other clusters' schedules are undetermined at selection time). Channel
power ranking uses the estimated channel, which is all a scheduler can
observe. All ties break toward the lowest UE index so runs are exactly
reproducible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .errors import ResourceCapError
from .precoding import SystemParams, assemble, equal_power_loading, mmse_weights
from .rates import cf_sum_rate

#: Default ceiling on the number of subsets exhaustive search may enumerate.
ES_DEFAULT_CAP = 10 ** 6


@dataclass(frozen=True)
class ScheduleState:
    """One point of a scheduler trajectory."""

    selected: tuple        # scheduled UE indices, in selection order
    remaining: tuple       # never-yet-selected UE indices, ascending
    swap_out: int | None   # UE removed to form this state, if any
    swap_in: int | None    # UE added to form this state, if any
    rate: float            # selection-metric rate of ``selected``


@dataclass(frozen=True)
class ScheduleResult:
    """Winning set, its metric rate, and the scored candidate history."""

    selected: tuple
    rate: float
    candidates: tuple  # of (selected-tuple, rate) in scoring order


def channel_power(g_u: np.ndarray) -> float:
    """Squared Euclidean norm of one UE's channel vector."""
    return float(np.real(np.vdot(g_u, g_u)))


def selection_rate(chan: ChannelRealization, subset, params: SystemParams) -> float:
    """Selection metric: intra-cluster rate under MMSE precoding with EPL.

    The subset is sorted internally so the metric is exactly invariant to
    the order in which a scheduler assembled the set.
    """
    subset = sorted(subset)
    g_hat = chan.g_hat[:, subset]
    g_err = chan.g_err[:, subset]
    w = mmse_weights(g_hat, params)
    d = equal_power_loading(len(subset), w, params.p_budget)
    return cf_sum_rate(g_hat, g_err, assemble(w, d, params.p_budget), params)


def _argmax_power(candidates, powers) -> int:
    best, best_p = None, -np.inf
    for u in candidates:
        if powers[u] > best_p:
            best, best_p = u, powers[u]
    return best


def _argmin_power(candidates, powers) -> int:
    best, best_p = None, np.inf
    for u in candidates:
        if powers[u] < best_p:
            best, best_p = u, powers[u]
    return best


def greedy_first_stage(chan: ChannelRealization, n_c: int,
                       params: SystemParams) -> ScheduleState:
    """Greedy selection seeded by the strongest UE, with early stopping.

    Starts from the UE of maximum estimated channel power, then repeatedly
    adds the UE that maximizes the selection metric. Stops when the target
    size is reached or when no addition improves the metric (the last,
    non-improving addition is discarded).
    """
    m_c, k_c = chan.g_hat.shape
    if not 1 <= n_c <= min(m_c, k_c):
        raise ValueError(f"need 1 <= n_c <= min(M_c, K_c), got n_c={n_c}")
    powers = [channel_power(chan.g_hat[:, u]) for u in range(k_c)]
    first = _argmax_power(range(k_c), powers)
    selected = [first]
    rate = selection_rate(chan, selected, params)
    while len(selected) < n_c:
        best_u, best_rate = None, -np.inf
        for u in range(k_c):
            if u in selected:
                continue
            r = selection_rate(chan, selected + [u], params)
            if r > best_rate:
                best_u, best_rate = u, r
        if best_rate <= rate:
            break
        selected.append(best_u)
        rate = best_rate
    remaining = tuple(u for u in range(k_c) if u not in selected)
    return ScheduleState(selected=tuple(selected), remaining=remaining,
                         swap_out=None, swap_in=None, rate=rate)


def next_swap(state: ScheduleState, chan: ChannelRealization,
              params: SystemParams) -> ScheduleState:
    """Swap the weakest selected UE for the strongest remaining one."""
    if not state.remaining:
        raise ValueError("no remaining UEs to swap in")
    powers = {u: channel_power(chan.g_hat[:, u])
              for u in (*state.selected, *state.remaining)}
    u_r = _argmin_power(state.selected, powers)
    u_a = _argmax_power(state.remaining, powers)
    selected = tuple(u for u in state.selected if u != u_r) + (u_a,)
    remaining = tuple(u for u in state.remaining if u != u_a)
    rate = selection_rate(chan, selected, params)
    return ScheduleState(selected=selected, remaining=remaining,
                         swap_out=u_r, swap_in=u_a, rate=rate)


def esg_schedule(chan: ChannelRealization, n_c: int,
                 params: SystemParams) -> ScheduleResult:
    """Enhanced subset greedy: first stage plus power-ranked single swaps.

    Scores the first-stage set and K_c - n_c swap candidates (exactly
    K_c - n_c + 1 sets) and returns the best of them.
    """
    k_c = chan.g_hat.shape[1]
    state = greedy_first_stage(chan, n_c, params)
    candidates = [(state.selected, state.rate)]
    for _ in range(k_c - n_c):
        state = next_swap(state, chan, params)
        candidates.append((state.selected, state.rate))
    best_set, best_rate = candidates[0]
    for sel, rate in candidates[1:]:
        if rate > best_rate:
            best_set, best_rate = sel, rate
    return ScheduleResult(selected=best_set, rate=best_rate,
                          candidates=tuple(candidates))


def sg_schedule(chan: ChannelRealization, n_c: int,
                params: SystemParams) -> ScheduleResult:
    """Standard greedy baseline: the first stage alone."""
    state = greedy_first_stage(chan, n_c, params)
    return ScheduleResult(selected=state.selected, rate=state.rate,
                          candidates=((state.selected, state.rate),))


def es_schedule(chan: ChannelRealization, n_c: int, params: SystemParams,
                cap: int = ES_DEFAULT_CAP) -> ScheduleResult:
    """Exhaustive search over every n_c-subset (lexicographic tie-break)."""
    k_c = chan.g_hat.shape[1]
    count = math.comb(k_c, n_c)
    if count > cap:
        raise ResourceCapError(
            f"exhaustive search over {count} subsets exceeds the cap of {cap}")
    best_set, best_rate = None, -np.inf
    candidates = []
    for subset in itertools.combinations(range(k_c), n_c):
        rate = selection_rate(chan, subset, params)
        candidates.append((subset, rate))
        if rate > best_rate:
            best_set, best_rate = subset, rate
    return ScheduleResult(selected=best_set, rate=best_rate,
                          candidates=tuple(candidates))
