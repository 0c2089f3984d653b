"""Sequential schedule-then-allocate pipeline and Monte Carlo sweeps.

Per snapshot the pipeline runs in two phases: every cluster first schedules
its UEs (under MMSE precoding with equal power loading) and allocates power
on the scheduled set; only after all clusters hold their final precoders is
every cluster's rate evaluated against the others' interference. Monolithic
cell-free operation is the single-cluster special case.

A trial draws one layout and one channel realization, shared across all SNR
grid points and across scheduler/allocator/precoder combinations, so that
ordering comparisons are paired. Trials are independent and may run on a
thread pool; results are keyed by trial index, so parallel and serial runs
produce identical records.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import counters
from .channel import (ChannelModelParams, ChannelRealization, NetworkLayout,
                      draw_channel, generate_layout, subchannel)
from .errors import ConfigError
from .power import GaTrace, epl_allocate, ga_allocate
from .precoding import (Precoder, SystemParams, assemble, mmse_weights,
                        zf_weights)
from .rates import cluster_covariance, cluster_sum_rate, total_clustered_rate
from .scheduling import (ES_DEFAULT_CAP, ScheduleResult, es_schedule,
                         esg_schedule, sg_schedule)

SCHEDULERS = ("esg", "sg", "es")
ALLOCATORS = ("ga", "epl")
PRECODERS = ("mmse", "zf")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved parameters of one Monte Carlo run."""

    num_aps: int
    num_ues: int
    num_clusters: int
    n_per_cluster: int
    channel: ChannelModelParams = ChannelModelParams()
    scheduler: str = "esg"
    allocator: str = "ga"
    precoder: str = "mmse"
    snr_grid_db: tuple = (-10.0, 0.0, 10.0, 20.0)
    snr_ref_distance_m: float = 18.0
    trials: int = 100
    master_seed: int = 12345
    noise_var: float = 1.0
    p_budget_total: float = 1.0
    ga_step: float | None = None
    ga_iters: int = 200
    ga_step_mode: str = "kernel"
    es_cap: int = ES_DEFAULT_CAP
    per_param_factor: int = 3
    empty_cluster: str = "regenerate"

    def __post_init__(self) -> None:
        c = self.num_clusters
        if self.scheduler not in SCHEDULERS:
            raise ConfigError(f"scheduler must be one of {SCHEDULERS}, got {self.scheduler!r}")
        if self.allocator not in ALLOCATORS:
            raise ConfigError(f"allocator must be one of {ALLOCATORS}, got {self.allocator!r}")
        if self.precoder not in PRECODERS:
            raise ConfigError(f"precoder must be one of {PRECODERS}, got {self.precoder!r}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.n_per_cluster < 1:
            raise ConfigError(f"n_per_cluster must be >= 1, got {self.n_per_cluster}")
        if self.n_per_cluster * c > self.num_aps:
            raise ConfigError(
                f"n_per_cluster={self.n_per_cluster} needs at least "
                f"{self.n_per_cluster * c} APs for {c} clusters, have {self.num_aps}")
        if self.n_per_cluster * c > self.num_ues:
            raise ConfigError(
                f"n_per_cluster={self.n_per_cluster} needs at least "
                f"{self.n_per_cluster * c} UEs for {c} clusters, have {self.num_ues}")
        if self.snr_ref_distance_m <= 0.0:
            raise ConfigError(
                f"snr_ref_distance_m must be positive, got {self.snr_ref_distance_m}")
        if self.ga_step_mode not in ("absolute", "kernel"):
            raise ConfigError(f"ga_step_mode must be absolute or kernel, got {self.ga_step_mode!r}")
        if self.empty_cluster not in ("regenerate", "error"):
            raise ConfigError(f"empty_cluster must be regenerate or error, got {self.empty_cluster!r}")

    @property
    def mode(self) -> str:
        return "CF" if self.num_clusters == 1 else "CLCF"

    @property
    def cluster_budget(self) -> float:
        # The total transmit budget is shared equally across clusters so that
        # monolithic and clustered runs spend the same network-wide power.
        return self.p_budget_total / self.num_clusters

    @property
    def reference_gain(self) -> float:
        """Linear path gain of a link at ``snr_ref_distance_m``.

        The SNR grid is referenced to this gain: a grid point of s dB means
        a per-antenna receive SNR of s dB for a UE at the reference distance
        from an AP. Sweeping raw transmit power against the physical
        path-loss scale (gains of order 1e-20) would drive every rate to the
        bottom of the double-precision range and is not usable. The 18 m
        default (a close-range AP-UE link) places the default -10..20 dB
        grid across the transition from the noise-limited to the
        multiplexing-limited regime of the default 400 m deployment.
        """
        from .channel import path_loss_db
        return 10.0 ** (path_loss_db(self.snr_ref_distance_m, self.channel) / 10.0)

    def system_at(self, snr_db: float) -> SystemParams:
        rho = self.noise_var * 10.0 ** (snr_db / 10.0) / self.reference_gain
        return SystemParams(rho_f=rho, noise_var=self.noise_var,
                            p_budget=self.cluster_budget,
                            ga_step=self.ga_step, ga_iters=self.ga_iters)


@dataclass(frozen=True)
class ClusterAllocation:
    """Final scheduling and precoding decision of one cluster."""

    schedule: ScheduleResult
    precoder: Precoder
    ue_global: tuple      # scheduled UEs, network-wide indices
    ga_trace: GaTrace | None


@dataclass(frozen=True)
class RunRow:
    """One (SNR point, trial) outcome."""

    snr_db: float
    trial: int
    total_rate: float
    per_cluster_rate: tuple
    selected: tuple  # per cluster, tuple of global UE indices


@dataclass
class RunRecord:
    """All rows of one run plus its cost accounting."""

    config: RunConfig
    rows: list
    signaling_load: int
    flop_count: int | None = None
    ga_traces: dict = field(default_factory=dict)  # (snr_db, cluster) -> ndarray, trial 0


def signaling_load(num_aps: int, num_ues: int, num_clusters: int, mode: str,
                   per_param_factor: int = 3, cluster_sizes=None) -> int:
    """Channel parameters delivered to central processing per snapshot.

    Monolithic mode counts every (AP, UE) pair; clustered mode counts only
    intra-cluster pairs, using the equal M/C x K/C split unless actual
    ``cluster_sizes`` (an iterable of (M_c, K_c)) are given.
    """
    if mode == "CF":
        return per_param_factor * num_aps * num_ues
    if mode != "CLCF":
        raise ValueError(f"mode must be CF or CLCF, got {mode!r}")
    if cluster_sizes is not None:
        return per_param_factor * sum(m_c * k_c for m_c, k_c in cluster_sizes)
    return per_param_factor * num_aps * num_ues // num_clusters


def _schedule(chan_c: ChannelRealization, n_c: int, system: SystemParams,
              scheduler: str, es_cap: int) -> ScheduleResult:
    if scheduler == "esg":
        return esg_schedule(chan_c, n_c, system)
    if scheduler == "sg":
        return sg_schedule(chan_c, n_c, system)
    return es_schedule(chan_c, n_c, system, cap=es_cap)


def _precode_and_allocate(chan_c: ChannelRealization, schedule: ScheduleResult,
                          system: SystemParams, precoder_kind: str,
                          allocator: str, ga_step_mode: str):
    sel = list(schedule.selected)
    g_hat = chan_c.g_hat[:, sel]
    if precoder_kind == "zf":
        w = zf_weights(g_hat, ue_indices=sel)
    else:
        w = mmse_weights(g_hat, system)
    trace = None
    if allocator == "ga":
        d, trace = ga_allocate(g_hat, w, system, step_mode=ga_step_mode)
    else:
        d = epl_allocate(len(sel), w, system.p_budget)
    return assemble(w, d, system.p_budget), trace


def allocate_cluster(chan_c: ChannelRealization, n_c: int, system: SystemParams,
                     scheduler: str, allocator: str, precoder_kind: str,
                     ga_step_mode: str = "kernel",
                     es_cap: int = ES_DEFAULT_CAP,
                     ue_global=None) -> ClusterAllocation:
    """Phase one for a single cluster: schedule, precode, allocate power."""
    schedule = _schedule(chan_c, n_c, system, scheduler, es_cap)
    precoder, trace = _precode_and_allocate(chan_c, schedule, system,
                                            precoder_kind, allocator, ga_step_mode)
    if ue_global is None:
        ue_global = tuple(schedule.selected)
    else:
        ue_global = tuple(int(np.asarray(ue_global)[u]) for u in schedule.selected)
    return ClusterAllocation(schedule=schedule, precoder=precoder,
                             ue_global=ue_global, ga_trace=trace)


def evaluate_clusters(chan: ChannelRealization, layout: NetworkLayout,
                      allocations, system: SystemParams) -> list:
    """Phase two: each cluster's rate against all final precoders."""
    rates = []
    num_clusters = layout.num_clusters
    for c in range(num_clusters):
        aps_c = layout.cluster_aps(c)
        sched_c = list(allocations[c].ue_global)
        block_cc = subchannel(chan, aps_c, sched_c)
        interferers = []
        for i in range(num_clusters):
            if i == c:
                continue
            block_ic = subchannel(chan, layout.cluster_aps(i), sched_c)
            interferers.append((block_ic.g_hat, block_ic.g_err,
                                allocations[i].precoder))
        cov = cluster_covariance(block_cc.g_err, allocations[c].precoder,
                                 interferers, system)
        rates.append(cluster_sum_rate(block_cc.g_hat, allocations[c].precoder,
                                      cov, system))
    return rates


def run_cluster(chan: ChannelRealization, layout: NetworkLayout, c: int,
                config: RunConfig, system: SystemParams,
                other_allocations=None):
    """Schedule and allocate cluster ``c``, then evaluate its rate.

    ``other_allocations`` maps the remaining cluster indices to their final
    :class:`ClusterAllocation`; with a single cluster it can be omitted and
    the result is the monolithic evaluation.
    """
    aps_c = layout.cluster_aps(c)
    ues_c = layout.cluster_ues(c)
    chan_c = subchannel(chan, aps_c, ues_c)
    alloc = allocate_cluster(chan_c, config.n_per_cluster, system,
                             config.scheduler, config.allocator, config.precoder,
                             ga_step_mode=config.ga_step_mode,
                             es_cap=config.es_cap, ue_global=ues_c)
    allocations = dict(other_allocations or {})
    allocations[c] = alloc
    if len(allocations) != layout.num_clusters:
        raise ValueError("run_cluster needs final allocations for every other cluster")
    rates = evaluate_clusters(chan, layout, allocations, system)
    return alloc, alloc.precoder.d, rates[c]


def _draw_trial(config: RunConfig, trial_seed):
    layout_seed, chan_seed = trial_seed.spawn(2)
    layout = generate_layout(
        config.num_aps, config.num_ues, config.num_clusters, config.channel,
        layout_seed,
        min_aps_per_cluster=config.n_per_cluster,
        min_ues_per_cluster=config.n_per_cluster,
        on_short_cluster=config.empty_cluster)
    chan = draw_channel(layout, config.channel, chan_seed)
    return layout, chan


def _run_trial(config: RunConfig, combos, trial: int, trial_seed):
    """All (SNR, combo) rows of one trial; schedules shared across combos."""
    layout, chan = _draw_trial(config, trial_seed)
    cluster_blocks = []
    cluster_ues = []
    for c in range(config.num_clusters):
        aps_c = layout.cluster_aps(c)
        ues_c = layout.cluster_ues(c)
        cluster_blocks.append(subchannel(chan, aps_c, ues_c))
        cluster_ues.append(ues_c)

    rows = {combo: [] for combo in combos}
    traces = {combo: {} for combo in combos}
    schedulers = sorted({s for s, _, _ in combos}, key=SCHEDULERS.index)
    for snr_db in config.snr_grid_db:
        system = config.system_at(snr_db)
        schedules = {
            s: [_schedule(cluster_blocks[c], config.n_per_cluster, system, s,
                          config.es_cap)
                for c in range(config.num_clusters)]
            for s in schedulers
        }
        for combo in combos:
            scheduler, allocator, precoder_kind = combo
            allocations = []
            for c in range(config.num_clusters):
                schedule = schedules[scheduler][c]
                precoder, trace = _precode_and_allocate(
                    cluster_blocks[c], schedule, system, precoder_kind,
                    allocator, config.ga_step_mode)
                ue_global = tuple(int(cluster_ues[c][u]) for u in schedule.selected)
                allocations.append(ClusterAllocation(
                    schedule=schedule, precoder=precoder,
                    ue_global=ue_global, ga_trace=trace))
                if trial == 0 and trace is not None:
                    traces[combo][(snr_db, c)] = trace.objective_per_iter
            rates = evaluate_clusters(chan, layout, allocations, system)
            rows[combo].append(RunRow(
                snr_db=snr_db, trial=trial,
                total_rate=total_clustered_rate(rates),
                per_cluster_rate=tuple(rates),
                selected=tuple(a.ue_global for a in allocations)))
    return rows, traces


def run_sweep(config: RunConfig, combos=None, threads: int = 1,
              count_flops: bool = False) -> dict:
    """Run all trials for one or more scheduler/allocator/precoder combos.

    Returns ``{(scheduler, allocator, precoder): RunRecord}``. Channel draws
    and schedules are shared across combos inside each trial. Flop counting
    forces serial execution (the counter is a plain accumulator).
    """
    if combos is None:
        combos = [(config.scheduler, config.allocator, config.precoder)]
    combos = [tuple(c) for c in combos]
    for s, a, p in combos:
        if s not in SCHEDULERS or a not in ALLOCATORS or p not in PRECODERS:
            raise ConfigError(f"invalid combo {(s, a, p)}")

    trial_seeds = np.random.SeedSequence(config.master_seed).spawn(config.trials)
    counter = counters.FlopCounter() if count_flops else None

    if count_flops or threads <= 1:
        context = counters.activate(counter) if counter else _null_context()
        with context:
            results = [_run_trial(config, combos, t, trial_seeds[t])
                       for t in range(config.trials)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda t: _run_trial(config, combos, t, trial_seeds[t]),
                range(config.trials)))

    load = signaling_load(config.num_aps, config.num_ues, config.num_clusters,
                          config.mode, config.per_param_factor)
    records = {}
    for combo in combos:
        rows = []
        for trial_rows, _ in results:
            rows.extend(trial_rows[combo])
        rows.sort(key=lambda r: r.trial)  # stable: keeps SNR grid order per trial
        traces = results[0][1][combo] if results else {}
        records[combo] = RunRecord(config=config, rows=rows,
                                   signaling_load=load,
                                   flop_count=counter.total if counter else None,
                                   ga_traces=traces)
    return records


def run_network(config: RunConfig, threads: int = 1,
                count_flops: bool = False) -> RunRecord:
    """Run the configured combo over the full SNR grid and trial count."""
    combo = (config.scheduler, config.allocator, config.precoder)
    return run_sweep(config, [combo], threads=threads,
                     count_flops=count_flops)[combo]


class _null_context:
    def __enter__(self):
        return None

    def __exit__(self, *exc):
        return False


def aggregate(record: RunRecord) -> list:
    """Mean/std of the total rate per SNR point, in grid order.

    Returns tuples ``(snr_db, mean_rate, std_rate, trials)``; the standard
    deviation is the sample deviation (ddof=1) when more than one trial ran.
    """
    out = []
    for snr_db in record.config.snr_grid_db:
        totals = np.array([r.total_rate for r in record.rows if r.snr_db == snr_db])
        std = float(totals.std(ddof=1)) if totals.size > 1 else 0.0
        out.append((snr_db, float(totals.mean()), std, int(totals.size)))
    return out


def config_digest(config: RunConfig) -> str:
    """Stable content hash of a run configuration."""
    payload = json.dumps(asdict(config), sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()
