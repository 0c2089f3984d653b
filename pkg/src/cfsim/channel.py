"""Network geometry, spatial clustering, and stochastic channel generation.

APs and UEs are single-antenna nodes dropped uniformly over a square area.
The area is partitioned into an equal grid of sqrt(C) x sqrt(C) tiles and
every node belongs to the tile that contains it. Large-scale gain is a
three-segment path-loss curve with log-normal shadowing beyond the outer
breakpoint; small-scale fading is i.i.d. unit-variance circularly-symmetric
complex Gaussian. Imperfect CSI is modelled by splitting each channel entry
into independent estimate and error components whose variances are a
configurable fraction of the large-scale gain.

All dB <-> linear conversions happen inside this module; everything else in
the package works with linear-scale quantities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SimulationError

# Distances are clamped to this floor before path-loss evaluation so that
# co-located nodes do not produce unbounded gain.
DISTANCE_FLOOR_M = 1.0


@dataclass(frozen=True)
class ChannelModelParams:
    """Physical parameters of the propagation model and the deployment area."""

    carrier_freq_mhz: float = 1900.0
    ap_height_m: float = 15.0
    ue_height_m: float = 1.5
    d0_m: float = 10.0
    d1_m: float = 50.0
    shadow_sigma_db: float = 8.0
    area_side_m: float = 400.0
    csi_error_fraction: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.d0_m < self.d1_m:
            raise ValueError(
                f"need 0 < d0 < d1, got d0={self.d0_m}, d1={self.d1_m}")
        if self.shadow_sigma_db < 0.0:
            raise ValueError(f"shadow_sigma_db must be >= 0, got {self.shadow_sigma_db}")
        if not 0.0 <= self.csi_error_fraction < 1.0:
            raise ValueError(
                f"csi_error_fraction must be in [0, 1), got {self.csi_error_fraction}")
        if self.area_side_m <= 0.0:
            raise ValueError(f"area_side_m must be positive, got {self.area_side_m}")


def propagation_constant_db(params: ChannelModelParams) -> float:
    """Frequency/height-dependent constant of the path-loss model, in dB."""
    f = params.carrier_freq_mhz
    return (46.3 + 33.9 * np.log10(f)
            - 13.82 * np.log10(params.ap_height_m)
            - (1.11 * np.log10(f) - 0.7) * params.ue_height_m
            + 1.56 * np.log10(f) - 0.8)


def path_loss_db(d_m, params: ChannelModelParams):
    """Three-segment path loss in dB at distance ``d_m`` (meters).

    Accepts a scalar or an array; distances are clamped to DISTANCE_FLOOR_M.
    The curve is continuous at both breakpoints and non-increasing in d.
    """
    d = np.maximum(np.asarray(d_m, dtype=float), DISTANCE_FLOOR_M)
    big_d = propagation_constant_db(params)
    d0, d1 = params.d0_m, params.d1_m
    far = -big_d - 35.0 * np.log10(d)
    mid = -big_d - 10.0 * np.log10(d1 ** 1.5 * d ** 2)
    near = -big_d - 10.0 * np.log10(d1 ** 1.5 * d0 ** 2)
    out = np.where(d > d1, far, np.where(d > d0, mid, near))
    if np.isscalar(d_m):
        return float(out)
    return out


def large_scale_coeff(d_m, shadow_z, params: ChannelModelParams):
    """Linear-scale large-scale gain: path loss times log-normal shadowing.

    Shadowing is only applied beyond the outer breakpoint d1; below it the
    gain is the deterministic path-loss value.
    """
    d = np.asarray(d_m, dtype=float)
    z = np.asarray(shadow_z, dtype=float)
    pl = path_loss_db(d, params)
    shadow_db = np.where(d > params.d1_m, params.shadow_sigma_db * z, 0.0)
    out = 10.0 ** ((pl + shadow_db) / 10.0)
    if np.isscalar(d_m):
        return float(out)
    return out


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class NetworkLayout:
    """AP/UE positions and their non-overlapping cluster memberships."""

    ap_positions: np.ndarray   # (M, 2)
    ue_positions: np.ndarray   # (K, 2)
    cluster_of_ap: np.ndarray  # (M,) int
    cluster_of_ue: np.ndarray  # (K,) int
    num_clusters: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "ap_positions", _readonly(self.ap_positions))
        object.__setattr__(self, "ue_positions", _readonly(self.ue_positions))
        object.__setattr__(self, "cluster_of_ap", _readonly(self.cluster_of_ap))
        object.__setattr__(self, "cluster_of_ue", _readonly(self.cluster_of_ue))
        if self.ap_positions.shape != (self.num_aps, 2):
            raise ValueError("ap_positions must be (M, 2)")
        if self.ue_positions.shape != (self.num_ues, 2):
            raise ValueError("ue_positions must be (K, 2)")
        for label, member in (("AP", self.cluster_of_ap), ("UE", self.cluster_of_ue)):
            if member.min(initial=0) < 0 or member.max(initial=0) >= self.num_clusters:
                raise ValueError(f"{label} cluster index out of range")

    @property
    def num_aps(self) -> int:
        return self.cluster_of_ap.shape[0]

    @property
    def num_ues(self) -> int:
        return self.cluster_of_ue.shape[0]

    def cluster_aps(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.cluster_of_ap == c)

    def cluster_ues(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.cluster_of_ue == c)

    @property
    def ap_counts(self) -> np.ndarray:
        return np.bincount(self.cluster_of_ap, minlength=self.num_clusters)

    @property
    def ue_counts(self) -> np.ndarray:
        return np.bincount(self.cluster_of_ue, minlength=self.num_clusters)


def _tile_index(xy: np.ndarray, side: float, grid: int) -> np.ndarray:
    ix = np.minimum((xy[:, 0] / side * grid).astype(int), grid - 1)
    iy = np.minimum((xy[:, 1] / side * grid).astype(int), grid - 1)
    return iy * grid + ix


def generate_layout(num_aps: int, num_ues: int, num_clusters: int,
                    params: ChannelModelParams, seed,
                    min_aps_per_cluster: int = 1,
                    min_ues_per_cluster: int = 1,
                    on_short_cluster: str = "regenerate",
                    max_attempts: int = 1000) -> NetworkLayout:
    """Draw a uniform random layout and cluster it on an equal spatial grid.

    ``num_clusters`` must be 1 or a perfect square; the square area is split
    into sqrt(C) x sqrt(C) equal tiles and each node's cluster is the tile
    containing it. A draw that leaves any cluster with fewer than the
    requested minimum of APs or UEs is redrawn (``on_short_cluster ==
    "regenerate"``, the default) or rejected (``"error"``).
    """
    grid = int(round(np.sqrt(num_clusters)))
    if num_clusters < 1 or grid * grid != num_clusters:
        raise ValueError(
            f"cluster count must be 1 or a perfect square, got {num_clusters}")
    if num_aps < num_clusters or num_ues < num_clusters:
        raise ValueError("need at least one AP and one UE per cluster")
    if on_short_cluster not in ("regenerate", "error"):
        raise ValueError(f"unknown on_short_cluster mode {on_short_cluster!r}")

    rng = np.random.default_rng(seed)
    side = params.area_side_m
    for _ in range(max_attempts):
        ap_pos = rng.uniform(0.0, side, size=(num_aps, 2))
        ue_pos = rng.uniform(0.0, side, size=(num_ues, 2))
        ap_cluster = _tile_index(ap_pos, side, grid)
        ue_cluster = _tile_index(ue_pos, side, grid)
        ap_counts = np.bincount(ap_cluster, minlength=num_clusters)
        ue_counts = np.bincount(ue_cluster, minlength=num_clusters)
        if ap_counts.min() >= min_aps_per_cluster and ue_counts.min() >= min_ues_per_cluster:
            return NetworkLayout(ap_pos, ue_pos, ap_cluster, ue_cluster, num_clusters)
        if on_short_cluster == "error":
            raise SimulationError(
                f"cluster membership short of the requested minimum "
                f"(AP counts {ap_counts.tolist()}, UE counts {ue_counts.tolist()})")
    raise SimulationError(
        f"could not draw a layout with >= {min_aps_per_cluster} APs and "
        f">= {min_ues_per_cluster} UEs per cluster in {max_attempts} attempts")


@dataclass(frozen=True)
class ChannelRealization:
    """One channel snapshot: large-scale gains and the CSI split.

    The true channel is exactly the sum of the estimate and the error;
    with a zero CSI error fraction the error matrix is exactly zero.
    """

    beta: np.ndarray    # (M, K) real, strictly positive
    g_true: np.ndarray  # (M, K) complex
    g_hat: np.ndarray   # (M, K) complex
    g_err: np.ndarray   # (M, K) complex

    def __post_init__(self) -> None:
        for name in ("beta", "g_true", "g_hat", "g_err"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        shape = self.beta.shape
        if any(getattr(self, n).shape != shape for n in ("g_true", "g_hat", "g_err")):
            raise ValueError("channel matrices must share one shape")
        if not np.all(self.beta > 0.0):
            raise ValueError("beta entries must be strictly positive")
        if not np.allclose(self.g_true, self.g_hat + self.g_err, rtol=0.0,
                           atol=1e-12 * max(1.0, float(np.abs(self.g_true).max(initial=0.0)))):
            raise ValueError("g_true must equal g_hat + g_err")

    @property
    def num_aps(self) -> int:
        return self.beta.shape[0]

    @property
    def num_ues(self) -> int:
        return self.beta.shape[1]


def draw_channel(layout: NetworkLayout, params: ChannelModelParams,
                 seed) -> ChannelRealization:
    """Draw one channel realization for every (AP, UE) pair of the layout."""
    rng = np.random.default_rng(seed)
    m, k = layout.num_aps, layout.num_ues
    diff = layout.ap_positions[:, None, :] - layout.ue_positions[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    z = rng.standard_normal((m, k))
    beta = large_scale_coeff(dist, z, params)

    eps = params.csi_error_fraction
    # Independent CN(0, (1-eps)) and CN(0, eps) components; their sum is the
    # unit-variance small-scale coefficient.
    re_hat, im_hat, re_err, im_err = rng.standard_normal((4, m, k))
    h_hat = np.sqrt((1.0 - eps) / 2.0) * (re_hat + 1j * im_hat)
    h_err = np.sqrt(eps / 2.0) * (re_err + 1j * im_err)
    root_beta = np.sqrt(beta)
    g_hat = root_beta * h_hat
    g_err = root_beta * h_err
    return ChannelRealization(beta=beta, g_true=g_hat + g_err,
                              g_hat=g_hat, g_err=g_err)


def _check_index_set(idx, bound: int, label: str) -> np.ndarray:
    idx = np.asarray(idx, dtype=int)
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError(f"{label} index set must be a non-empty 1-D sequence")
    if idx.min() < 0 or idx.max() >= bound:
        raise IndexError(f"{label} index out of range [0, {bound})")
    if np.unique(idx).size != idx.size:
        raise ValueError(f"{label} index set contains duplicates")
    return idx


def subchannel(chan: ChannelRealization, ap_set, ue_set) -> ChannelRealization:
    """Restrict a realization to the given APs and UEs (order preserved)."""
    aps = _check_index_set(ap_set, chan.num_aps, "AP")
    ues = _check_index_set(ue_set, chan.num_ues, "UE")
    sel = np.ix_(aps, ues)
    return ChannelRealization(beta=chan.beta[sel], g_true=chan.g_true[sel],
                              g_hat=chan.g_hat[sel], g_err=chan.g_err[sel])
