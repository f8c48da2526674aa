"""Two-user channel sharing with successive interference cancellation.

Covers the closed-form joint decoding probability, the heuristic that
sizes the shared/exclusive RU blocks of a pair, the shareability test,
equivalent-device construction and the pairing plan built from a
maximum-cardinality matching on the shareability graph.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .core import demand_matrix
from .matching import max_cardinality_matching
from .params import Channel, Device, SystemParams


class InfeasiblePairError(ValueError):
    """The pair cannot reach the reliability target within the delay budget."""


@dataclass(frozen=True)
class PairResource:
    channel: int
    shared_rus: int  # N_c, used by both devices
    exclusive_rus: int  # K_c, farther device only

    @property
    def total(self) -> int:
        return self.shared_rus + self.exclusive_rus


@dataclass
class EquivalentDevice:
    """A schedulable entity: one real device or a SIC pair.

    Times are linear slot indices in the entity's own frame. For pairs the
    frame is chosen so the later issue time falls in [1, T]; member times
    may therefore be <= 0 when the pair straddles the cycle boundary.
    """

    members: tuple[int, ...]
    issue: np.ndarray  # (C,) earliest start t_min(c)
    window: np.ndarray  # (C,) delay budget delta(c)
    demand: np.ndarray  # (C,) RUs needed on each channel
    delay_bound: int
    member_times: tuple[int, ...]
    shared: np.ndarray | None = None  # (C,) N_c
    extra: np.ndarray | None = None  # (C,) K_c
    latest_start: np.ndarray | None = None  # (C,) t_max(c)

    @property
    def is_pair(self) -> bool:
        return len(self.members) == 2


@dataclass
class PairingPlan:
    n_devices: int
    edges: list[tuple[int, int]]
    pairs: list[tuple[int, int]]  # (nearer, farther)
    entities: list[EquivalentDevice] = field(default_factory=list)

    @property
    def singles(self) -> list[int]:
        return [e.members[0] for e in self.entities if not e.is_pair]


def pair_success_prob(theta_i: float, theta_j: float, d_i: float, d_j: float, interf: float,
                      params: SystemParams) -> float:
    """Probability that device i decodes when it shares an RU with device j.

    ``theta_i``/``theta_j`` are linear per-RU SINR thresholds. The receiver
    applies two-stage SIC, so i succeeds if j is decoded first and i clears
    its threshold alone, or if i clears its threshold against j's
    interference while j fails.
    """
    if theta_i < 0 or theta_j < 0:
        raise ValueError("thresholds must be non-negative")
    if theta_i * theta_j == 1.0:
        warnings.warn("theta_i * theta_j == 1: perturbing theta_j", RuntimeWarning, stacklevel=2)
    lam = interf * d_i ** params.pathloss_exp / params.transmit_snr
    mu = interf * d_j ** params.pathloss_exp / params.transmit_snr
    return float(kernels.pair_success(float(theta_i), float(theta_j), lam, mu))


def nearer_first(dev_a: Device, dev_b: Device) -> tuple[Device, Device]:
    if (dev_b.distance, dev_b.id) < (dev_a.distance, dev_a.id):
        return dev_b, dev_a
    return dev_a, dev_b


def shared_demand(channel: Channel, dev_a: Device, dev_b: Device, params: SystemParams) -> PairResource | None:
    """Shared and exclusive RU counts for a pair on one channel, None if infeasible.

    Starts from each device's solo demand, grows the shared block until the
    nearer device reaches rho, then grows the total until the farther one
    does. Anything above Delta RUs is infeasible.
    """
    if dev_a.id == dev_b.id:
        raise ValueError("a device cannot share with itself")
    near, far = nearer_first(dev_a, dev_b)
    f = demand_matrix([near.distance, far.distance], [channel.interf_factor], params)[0]
    lam = channel.interf_factor * near.distance ** params.pathloss_exp / params.transmit_snr
    mu = channel.interf_factor * far.distance ** params.pathloss_exp / params.transmit_snr
    n_c, k_c = kernels.shared_demand(f[0], f[1], lam, mu, params.packet_bits, params.q,
                                     params.reliability, params.delay_slots)
    if n_c < 0:
        return None
    return PairResource(channel.id, int(n_c), int(k_c))


def sharing_gain(channel: Channel, dev_a: Device, dev_b: Device, params: SystemParams) -> int:
    """RUs saved on ``channel`` by sharing instead of serving both separately."""
    res = shared_demand(channel, dev_a, dev_b, params)
    if res is None:
        raise InfeasiblePairError(f"devices {dev_a.id},{dev_b.id} cannot share channel {channel.id}")
    f = demand_matrix([dev_a.distance, dev_b.distance], [channel.interf_factor], params)[0]
    return int(f[0] + f[1] - res.total)


def wrap_distance(t_a: int, t_b: int, cycle: int) -> int:
    """Issue-time distance accounting for the cycle wrap."""
    direct = abs(t_b - t_a)
    return min(direct, abs(min(t_a, t_b) + cycle - max(t_a, t_b)))


def temporal_ok(t_a: int, t_b: int, shared_rus: int, params: SystemParams) -> bool:
    limit = min(params.delay_slots - shared_rus, params.pairing_limit)
    return wrap_distance(t_a, t_b, params.cycle_slots) <= limit


def shareable(dev_a: Device, dev_b: Device, channels: Sequence[Channel], params: SystemParams) -> bool:
    """Edge test of the shareability graph: gain >= 0 and timing fits on every channel."""
    if dev_a.id == dev_b.id:
        raise ValueError("a device cannot share with itself")
    if wrap_distance(dev_a.issue_time, dev_b.issue_time, params.cycle_slots) > params.pairing_limit:
        return False
    for ch in channels:
        res = shared_demand(ch, dev_a, dev_b, params)
        if res is None:
            return False
        f = demand_matrix([dev_a.distance, dev_b.distance], [ch.interf_factor], params)[0]
        if f[0] + f[1] - res.total < 0:
            return False
        if not temporal_ok(dev_a.issue_time, dev_b.issue_time, res.shared_rus, params):
            return False
    return True


def pair_frame(t_near: int, t_far: int, cycle: int) -> tuple[int, int]:
    """Unwrap two issue times so they are close and the later one lies in [1, T]."""
    a, b = t_near, t_far
    if abs(min(a, b) + cycle - max(a, b)) < abs(b - a):
        if a < b:
            a += cycle
        else:
            b += cycle
    if max(a, b) > cycle:
        a -= cycle
        b -= cycle
    return a, b


def start_window(t_near: int, t_far: int, shared_rus: int, extra_rus: int, delta: int) -> tuple[int, int]:
    """Earliest and latest start of a pair's block on one channel.

    When the nearer device issues first the joint RUs lead; otherwise some
    exclusive RUs of the farther device may precede them.
    """
    n, k = shared_rus, extra_rus
    if t_near <= t_far:
        t_min = t_far
        t_max = min(t_near + delta - n, t_far + delta - n - k)
    else:
        t_min = max(t_far, t_near - k)
        t_max = t_far + delta - (n + k)
    return t_min, t_max


def equivalent_device(near: int, far: int, t_near: int, t_far: int, shared, extra,
                      params: SystemParams) -> EquivalentDevice:
    """Collapse a pair into one entity with per-channel issue time and delay."""
    shared = np.asarray(shared, dtype=np.int64)
    extra = np.asarray(extra, dtype=np.int64)
    a, b = pair_frame(t_near, t_far, params.cycle_slots)
    delta = params.delay_slots
    issue = np.empty_like(shared)
    latest = np.empty_like(shared)
    for c in range(shared.size):
        t_min, t_max = start_window(a, b, int(shared[c]), int(extra[c]), delta)
        assert t_max >= t_min, "shareability conditions guarantee a non-empty start window"
        issue[c], latest[c] = t_min, t_max
    window = latest - issue + shared + extra
    return EquivalentDevice(
        members=(near, far),
        issue=issue,
        window=window,
        demand=shared + extra,
        delay_bound=delta,
        member_times=(a, b),
        shared=shared,
        extra=extra,
        latest_start=latest,
    )


def single_device(dev: int, t: int, delay_bound: int, demand) -> EquivalentDevice:
    demand = np.asarray(demand, dtype=np.int64)
    return EquivalentDevice(
        members=(dev,),
        issue=np.full(demand.shape, t, dtype=np.int64),
        window=np.full(demand.shape, delay_bound, dtype=np.int64),
        demand=demand,
        delay_bound=delay_bound,
        member_times=(t,),
    )


def split_pair_slots(slots, t_near: int, t_far: int, shared_rus: int, extra_rus: int, t_min: int):
    """Split a committed block into (joint, exclusive) slot lists.

    Joint RUs go first when the nearer device issued first. Otherwise up to
    ``min(K, t_near - t_min)`` exclusive RUs lead, then the joint ones, then
    the remaining exclusive RUs.
    """
    slots = list(slots)
    n, k = shared_rus, extra_rus
    if len(slots) != n + k:
        raise ValueError("block size does not match N + K")
    if t_near <= t_far:
        return slots[:n], slots[n:]
    lead = max(0, min(k, t_near - t_min))
    return slots[lead:lead + n], slots[:lead] + slots[lead + n:]


def shareability_graph(dist, issue, interf, params: SystemParams, demand=None):
    """Edges of the shareability graph with per-channel (N, K) of each edge.

    Pairs further apart in time than the pairing limit are rejected before
    any RU computation. Returns ``(edges, shared, extra)`` where edge
    ``(a, b)`` lists the nearer device first and edges are sorted.
    """
    dist = np.asarray(dist, dtype=float)
    issue = np.asarray(issue, dtype=np.int64)
    interf = np.asarray(interf, dtype=float)
    if demand is None:
        demand = demand_matrix(dist, interf, params)
    n = dist.size
    T = params.cycle_slots
    ii, jj = np.triu_indices(n, k=1)
    direct = np.abs(issue[jj] - issue[ii])
    tdist = np.minimum(direct, np.abs(np.minimum(issue[ii], issue[jj]) + T - np.maximum(issue[ii], issue[jj])))
    keep = tdist <= params.pairing_limit
    ii, jj, tdist = ii[keep], jj[keep], tdist[keep]
    # nearer device first; ties go to the lower id, which ii already is
    swap = dist[jj] < dist[ii]
    pa = np.where(swap, jj, ii)
    pb = np.where(swap, ii, jj)
    ok, shared, extra = kernels.pair_table(
        pa, pb, tdist, dist, interf, demand, params.transmit_snr, params.pathloss_exp,
        params.packet_bits, params.q, params.reliability, params.delay_slots, params.pairing_limit,
    )
    pa, pb, shared, extra = pa[ok], pb[ok], shared[ok], extra[ok]
    order = np.lexsort((np.maximum(pa, pb), np.minimum(pa, pb)))
    edges = [(int(pa[o]), int(pb[o])) for o in order]
    return edges, shared[order], extra[order]


def build_pairing(dist, issue, interf, params: SystemParams, demand=None, delay_bounds=None) -> PairingPlan:
    """Pair devices via maximum matching and emit the equivalent-device list.

    Unpaired devices become singleton entities; entities are ordered by
    their smallest member id so runs are reproducible.
    """
    dist = np.asarray(dist, dtype=float)
    issue = np.asarray(issue, dtype=np.int64)
    interf = np.asarray(interf, dtype=float)
    if demand is None:
        demand = demand_matrix(dist, interf, params)
    n = dist.size
    if delay_bounds is None:
        delay_bounds = np.full(n, params.delay_slots, dtype=np.int64)
    edges, shared, extra = shareability_graph(dist, issue, interf, params, demand)
    lookup = {tuple(sorted(e)): idx for idx, e in enumerate(edges)}
    matched = max_cardinality_matching(n, [tuple(sorted(e)) for e in edges])
    entities: dict[int, EquivalentDevice] = {}
    pairs = []
    for u, v in matched:
        idx = lookup[(u, v)]
        near, far = edges[idx]
        pairs.append((near, far))
        entities[min(u, v)] = equivalent_device(
            near, far, int(issue[near]), int(issue[far]), shared[idx], extra[idx], params
        )
    paired = {x for p in pairs for x in p}
    for i in range(n):
        if i not in paired:
            entities[i] = single_device(i, int(issue[i]), int(delay_bounds[i]), demand[:, i])
    ordered = [entities[k] for k in sorted(entities)]
    return PairingPlan(n_devices=n, edges=edges, pairs=sorted(pairs), entities=ordered)


def pair_thresholds(shared_rus: int, extra_rus: int, params: SystemParams) -> tuple[float, float]:
    """Per-RU thresholds (nearer, farther) under equal bit spreading."""
    ell, q = params.packet_bits, params.q
    th_near = math.expm1(ell / (shared_rus * q) * math.log(2.0))
    th_far = math.expm1(ell / ((shared_rus + extra_rus) * q) * math.log(2.0))
    return th_near, th_far
