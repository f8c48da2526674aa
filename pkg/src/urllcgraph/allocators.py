"""Schedulers that place every device's packet inside its transmission window.

``gba``: repeated max-weight bipartite matching between channels and
devices; ``gba_sic`` runs the same loop over pairs produced by the SIC
pairing stage; ``bca`` serves devices in issue order on the channel that
finishes them earliest; ``fsa`` grabs the earliest free RUs across all
channels and spreads the packet's bits optimally over them.

All schedulers return a :class:`Schedule`. Slots are 1-based cycle slots;
internally a cursor may run past T, in which case slot s maps to
``(s - 1) % T + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .core import LN2, exact_error_prob
from .matching import max_weight_bipartite_matching
from .params import SystemParams
from .scenario import Scenario
from .sic import EquivalentDevice, PairingPlan, build_pairing, single_device, split_pair_slots

FREE, SOLO, SHARED, EXCLUSIVE = 0, 1, 2, 3
ROLE_NAMES = {SOLO: "solo", SHARED: "shared", EXCLUSIVE: "exclusive"}


@dataclass
class Schedule:
    """RU ownership over one cycle plus per-device outcome.

    ``owner[c, m]`` is the device using RU (c, m + 1), or -1. On shared RUs
    the owner is the nearer member and ``partner`` the farther one; on
    exclusive RUs the owner is the farther member of a pair. ``bits`` and
    ``partner_bits`` hold the per-RU load of owner and partner.
    """

    algorithm: str
    issue_times: np.ndarray
    delay_bounds: np.ndarray
    owner: np.ndarray
    partner: np.ndarray
    role: np.ndarray
    bits: np.ndarray
    partner_bits: np.ndarray
    served: np.ndarray
    completion: np.ndarray  # cycle slot of the last RU, 0 if excluded
    delay: np.ndarray  # slots from issue to completion inclusive, 0 if excluded
    pair_of: np.ndarray
    phases: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_devices(self) -> int:
        return int(self.served.size)

    @property
    def n_channels(self) -> int:
        return int(self.owner.shape[0])

    @property
    def cycle(self) -> int:
        return int(self.owner.shape[1])

    @property
    def n_served(self) -> int:
        return int(self.served.sum())

    @property
    def fraction_served(self) -> float:
        return self.n_served / self.n_devices if self.n_devices else 1.0

    @property
    def rus_used(self) -> int:
        return int((self.role != FREE).sum())

    def device_rus(self, dev: int) -> list[tuple[int, int, float, int]]:
        """(channel, slot, bits, role) of every RU the device transmits on."""
        out = []
        for c, m in zip(*np.nonzero(self.owner == dev)):
            out.append((int(c), int(m) + 1, float(self.bits[c, m]), int(self.role[c, m])))
        for c, m in zip(*np.nonzero(self.partner == dev)):
            out.append((int(c), int(m) + 1, float(self.partner_bits[c, m]), SHARED))
        return sorted(out)

    def rows(self):
        """Tabular view: (channel, slot, device, role name, bits) per transmission."""
        for c, m in zip(*np.nonzero(self.role != FREE)):
            role = int(self.role[c, m])
            yield int(c), int(m) + 1, int(self.owner[c, m]), ROLE_NAMES[role], float(self.bits[c, m])
            if role == SHARED:
                yield int(c), int(m) + 1, int(self.partner[c, m]), "shared", float(self.partner_bits[c, m])


class ScheduleBuilder:
    def __init__(self, algorithm: str, issue_times, delay_bounds, n_channels: int, cycle: int):
        n = len(issue_times)
        self.algorithm = algorithm
        self.issue = np.asarray(issue_times, dtype=np.int64)
        self.bounds = np.asarray(delay_bounds, dtype=np.int64)
        self.T = cycle
        shape = (n_channels, cycle)
        self.owner = np.full(shape, -1, dtype=np.int64)
        self.partner = np.full(shape, -1, dtype=np.int64)
        self.role = np.zeros(shape, dtype=np.int8)
        self.bits = np.zeros(shape)
        self.partner_bits = np.zeros(shape)
        self.served = np.zeros(n, dtype=bool)
        self.pair_of = np.full(n, -1, dtype=np.int64)

    def slot_index(self, slot: int) -> int:
        return (slot - 1) % self.T

    def assign(self, dev: int, channel: int, slot: int, bits: float, role: int = SOLO,
               partner: int = -1, partner_bits: float = 0.0):
        m = self.slot_index(slot)
        if self.role[channel, m] != FREE:
            raise RuntimeError(f"RU ({channel}, {m + 1}) allocated twice")
        self.owner[channel, m] = dev
        self.role[channel, m] = role
        self.bits[channel, m] = bits
        if role == SHARED:
            self.partner[channel, m] = partner
            self.partner_bits[channel, m] = partner_bits
            self.served[partner] = True
        self.served[dev] = True

    def finish(self, phases: int = 0, **meta) -> Schedule:
        n = self.served.size
        completion = np.zeros(n, dtype=np.int64)
        delay = np.zeros(n, dtype=np.int64)
        for who in (self.owner, self.partner):
            c_idx, m_idx = np.nonzero(who >= 0)
            devs = who[c_idx, m_idx]
            offset = (m_idx + 1 - self.issue[devs]) % self.T + 1
            for u, off, m in zip(devs, offset, m_idx):
                if off > delay[u]:
                    delay[u] = off
                    completion[u] = m + 1
        return Schedule(self.algorithm, self.issue.copy(), self.bounds.copy(), self.owner, self.partner,
                        self.role, self.bits, self.partner_bits, self.served.copy(), completion, delay,
                        self.pair_of, phases, dict(meta))


# ---------------------------------------------------------------------------
# Graph-based allocation (shared by plain GBA and GBA over pairs)
# ---------------------------------------------------------------------------

Matcher = Callable[[np.ndarray, np.ndarray], Sequence[tuple[int, int]]]


def default_matcher(weights: np.ndarray, mask: np.ndarray):
    return max_weight_bipartite_matching(weights, mask, tie_break=True)


@dataclass
class GraphAllocation:
    commits: list[tuple[int, int, list[int]]]  # (entity, channel, linear slots)
    excluded: list[int]
    phases: int


def take_slots(busy_row: np.ndarray, start: int, count: int, cycle: int) -> list[int]:
    """First ``count`` free linear slots from ``start`` on (wrapping the bitmap)."""
    out = []
    s = start
    while len(out) < count:
        if not busy_row[(s - 1) % cycle]:
            out.append(s)
        s += 1
    return out


def graph_allocate(entities: Sequence[EquivalentDevice], n_channels: int, cycle: int,
                   matcher: Matcher | None = None, trace: list | None = None) -> GraphAllocation:
    """Phase loop: match channels to entities, commit, advance channel cursors.

    Edge (c, e) exists when e's block fits on c before its deadline, given
    the cursor beta_c (last busy linear slot) and already busy wrapped slots.
    Weight is ``T + Delta_e - completion``, so matchings favour channels that
    finish early. Entities with no edge left are excluded. When ``trace``
    is a list, each phase appends ``(entity ids, edge mask, weights,
    matched (channel, entity) pairs)``.
    """
    matcher = matcher or default_matcher
    n = len(entities)
    if n == 0:
        return GraphAllocation([], [], 0)
    issue = np.stack([e.issue for e in entities]).astype(np.int64)
    window = np.stack([e.window for e in entities]).astype(np.int64)
    demand = np.stack([e.demand for e in entities], axis=1).astype(np.int64)
    bound = np.array([e.delay_bound for e in entities], dtype=np.int64)
    beta = np.zeros(n_channels, dtype=np.int64)
    busy = np.zeros((n_channels, cycle), dtype=bool)
    active = np.arange(n)
    commits, excluded = [], []
    phases = 0
    while active.size:
        comp = kernels.candidate_completions(beta, busy, issue[active], window[active], demand[:, active])
        mask = comp >= 0
        alive = mask.any(axis=0)
        excluded.extend(int(e) for e in active[~alive])
        active, comp, mask = active[alive], comp[:, alive], mask[:, alive]
        if not active.size:
            break
        weights = np.where(mask, cycle + bound[active][None, :] - comp, 0)
        assert np.all(weights[mask] >= 1)
        chosen = matcher(weights, mask)
        assert chosen, "a non-empty graph always yields a non-empty matching"
        phases += 1
        if trace is not None:
            trace.append((active.copy(), mask.copy(), weights.copy(),
                          [(int(c), int(active[col])) for c, col in chosen]))
        done = []
        for c, col in chosen:
            e = int(active[col])
            start = max(int(beta[c]), int(issue[e, c]) - 1) + 1
            slots = take_slots(busy[c], start, int(demand[c, e]), cycle)
            assert slots[-1] == comp[c, col]
            for s in slots:
                busy[c, (s - 1) % cycle] = True
            beta[c] = slots[-1]
            commits.append((e, int(c), slots))
            done.append(col)
        active = np.delete(active, done)
    return GraphAllocation(commits, sorted(excluded), phases)


def singleton_entities(scenario: Scenario, demand: np.ndarray) -> list[EquivalentDevice]:
    return [single_device(i, int(t), int(b), demand[:, i])
            for i, (t, b) in enumerate(zip(scenario.issue_times, scenario.delay_bounds))]


def gba(scenario: Scenario, params: SystemParams | None = None, *, exact: bool = False,
        matcher: Matcher | None = None) -> Schedule:
    """Graph-based allocation: every device on one channel, bits split evenly."""
    params = params or scenario.params
    demand = scenario.demand(exact=exact)
    ents = singleton_entities(scenario, demand)
    alloc = graph_allocate(ents, scenario.n_channels, params.cycle_slots, matcher)
    name = "gba_ni" if exact else "gba"
    b = ScheduleBuilder(name, scenario.issue_times, scenario.delay_bounds, scenario.n_channels, params.cycle_slots)
    for e, c, slots in alloc.commits:
        per_ru = params.packet_bits / len(slots)
        for s in slots:
            b.assign(e, c, s, per_ru)
    return b.finish(alloc.phases, link_model="exact" if exact else "threshold", excluded=alloc.excluded)


def gba_sic(scenario: Scenario, params: SystemParams | None = None, *, plan: PairingPlan | None = None,
            matcher: Matcher | None = None) -> Schedule:
    """Pair devices for SIC, then run the graph allocation over pairs and singles.

    A committed pair block is split into joint RUs (both members, the
    nearer sending ell/N bits per RU, the farther ell/(N+K)) and exclusive
    RUs of the farther member.
    """
    params = params or scenario.params
    if not scenario.uniform_delay:
        raise ValueError("channel sharing assumes a common delay bound")
    demand = scenario.demand()
    if plan is None:
        plan = build_pairing(scenario.distances, scenario.issue_times, scenario.interf, params, demand)
    alloc = graph_allocate(plan.entities, scenario.n_channels, params.cycle_slots, matcher)
    b = ScheduleBuilder("gba_sic", scenario.issue_times, scenario.delay_bounds, scenario.n_channels,
                        params.cycle_slots)
    ell = params.packet_bits
    for e, c, slots in alloc.commits:
        ent = plan.entities[e]
        if not ent.is_pair:
            per_ru = ell / len(slots)
            for s in slots:
                b.assign(ent.members[0], c, s, per_ru)
            continue
        near, far = ent.members
        n_c, k_c = int(ent.shared[c]), int(ent.extra[c])
        joint, excl = split_pair_slots(slots, *ent.member_times, n_c, k_c, int(ent.issue[c]))
        near_bits, far_bits = ell / n_c, ell / (n_c + k_c)
        for s in joint:
            b.assign(near, c, s, near_bits, SHARED, far, far_bits)
        for s in excl:
            b.assign(far, c, s, far_bits, EXCLUSIVE)
        b.pair_of[near], b.pair_of[far] = far, near
    excluded = sorted(m for e in alloc.excluded for m in plan.entities[e].members)
    return b.finish(alloc.phases, link_model="threshold", pairs=len(plan.pairs), excluded=excluded)


# ---------------------------------------------------------------------------
# Best-channel allocation
# ---------------------------------------------------------------------------


def issue_order(scenario: Scenario) -> np.ndarray:
    """Device indices sorted by issue time, ties by id."""
    return np.lexsort((np.arange(scenario.n_devices), scenario.issue_times))


def bca(scenario: Scenario, params: SystemParams | None = None, *, exact: bool = False) -> Schedule:
    """Serve devices in issue order, each on the channel that completes it first.

    Completion on channel c starts at max(t_i, beta_c + 1) and skips wrapped
    slots already in use. Ties go to the lowest channel id; a device whose
    earliest completion misses its deadline is excluded.
    """
    params = params or scenario.params
    T = params.cycle_slots
    C = scenario.n_channels
    demand = scenario.demand(exact=exact)
    beta = np.zeros(C, dtype=np.int64)
    busy = np.zeros((C, T), dtype=bool)
    name = "bca_ni" if exact else "bca"
    b = ScheduleBuilder(name, scenario.issue_times, scenario.delay_bounds, C, T)
    excluded = []
    for i in issue_order(scenario):
        t, bound = int(scenario.issue_times[i]), int(scenario.delay_bounds[i])
        comp = kernels.candidate_completions(
            beta, busy, np.full((1, C), t), np.full((1, C), bound), demand[:, i:i + 1]
        )[:, 0]
        if not np.any(comp >= 0):
            excluded.append(int(i))
            continue
        c = int(np.argmin(np.where(comp >= 0, comp, np.iinfo(np.int64).max)))
        start = max(int(beta[c]), t - 1) + 1
        slots = take_slots(busy[c], start, int(demand[c, i]), T)
        per_ru = params.packet_bits / len(slots)
        for s in slots:
            busy[c, (s - 1) % T] = True
            b.assign(int(i), c, s, per_ru)
        beta[c] = slots[-1]
    return b.finish(0, link_model="exact" if exact else "threshold", excluded=excluded)


# ---------------------------------------------------------------------------
# Frequency-spanning allocation
# ---------------------------------------------------------------------------


def real_bit_split(r: Sequence[int], lam: Sequence[float], ell: float, q: float) -> list[float]:
    """Real-valued bit split maximising the joint success over independent channels.

    Closed-form stationary point over channels holding RUs; channels that
    come out negative are dropped one at a time (most negative first) and
    their share handed to the rest in proportion to their RU counts.
    """
    active = [c for c in range(len(r)) if r[c] > 0]
    if not active:
        raise ValueError("at least one RU is required")
    k = [0.0] * len(r)
    R = sum(r[c] for c in active)
    logs = {c: math.log2(r[c] / lam[c]) for c in active}
    mean = sum(r[c] * logs[c] for c in active) / R
    for c in active:
        k[c] = r[c] * ell / R + q * r[c] * (logs[c] - mean)
    while True:
        worst = min(active, key=lambda c: (k[c], c))
        if k[worst] >= 0.0:
            break
        rest = R - r[worst]
        active.remove(worst)
        for j in active:
            k[j] += r[j] * k[worst] / rest
        k[worst] = 0.0
        R = rest
    return k


def round_bits(k: Sequence[float], total: int) -> np.ndarray:
    """Integer split with the given total, largest fractional parts rounded up."""
    k = np.maximum(np.asarray(k, dtype=float), 0.0)
    base = np.floor(k)
    short = int(round(total - base.sum()))
    if short > 0:
        frac = k - base
        order = np.lexsort((np.arange(k.size), -frac))
        base[order[:short]] += 1
    elif short < 0:
        order = np.lexsort((np.arange(k.size), k - base))
        order = [o for o in order if base[o] > 0]
        base[order[:-short]] -= 1
    return base.astype(np.int64)


def optimal_bit_split(r, lam, params: SystemParams, integer: bool = True) -> np.ndarray:
    """Bits per channel for a device holding ``r[c]`` RUs on channel c."""
    r = [int(x) for x in np.asarray(r).reshape(-1)]
    lam = [float(x) for x in np.asarray(lam).reshape(-1)]
    if len(r) != len(lam):
        raise ValueError("r and lam differ in length")
    if sum(r) < 1:
        raise ValueError("at least one RU is required")
    k = real_bit_split(r, lam, params.packet_bits, params.q)
    if not integer:
        return np.asarray(k)
    return round_bits(k, params.packet_bits)


def spanning_exponent(k, r, lam, q: float) -> float:
    """Sum over used channels of Lambda_c (2^(k_c/(r_c q)) - 1)."""
    total = 0.0
    for kc, rc, lc in zip(k, r, lam):
        if rc > 0:
            total += lc * math.expm1(kc / (rc * q) * LN2)
    return total


def spanning_packet_prob(k, r, d: float, lam, params: SystemParams) -> float:
    """Success of a packet whose RUs span channels with independent fading."""
    scale = d ** params.pathloss_exp / params.transmit_snr
    return math.exp(-scale * spanning_exponent(k, r, lam, params.q))


def _fsa_core(scenario: Scenario, params: SystemParams, name: str,
              split: Callable[[list[int], list[float]], Sequence[float]],
              prob: Callable[[Sequence[float], list[int], float, list[float]], float], **meta) -> Schedule:
    T = params.cycle_slots
    C = scenario.n_channels
    lam = [float(x) for x in scenario.interf]
    chan_order = [int(c) for c in np.argsort(scenario.interf, kind="stable")]
    busy = np.zeros((C, T), dtype=bool)
    b = ScheduleBuilder(name, scenario.issue_times, scenario.delay_bounds, C, T)
    rho = params.reliability
    excluded = []
    for i in issue_order(scenario):
        t, bound = int(scenario.issue_times[i]), int(scenario.delay_bounds[i])
        d = float(scenario.distances[i])
        r = [0] * C
        held = []
        k = None
        done = False
        for s in range(t, t + bound):
            m = (s - 1) % T
            for c in chan_order:
                if busy[c, m]:
                    continue
                busy[c, m] = True
                held.append((c, m))
                r[c] += 1
                k = split(r, lam)
                if prob(k, r, d, lam) > rho:
                    done = True
                    break
            if done:
                break
        if not done:
            for c, m in held:
                busy[c, m] = False
            excluded.append(int(i))
            continue
        for c, m in held:
            if k[c] > 0:
                b.assign(int(i), c, m + 1, float(k[c]) / r[c])
            else:
                # channel dropped from the split: its RUs stay free
                busy[c, m] = False
    return b.finish(0, excluded=excluded, **meta)


def fsa(scenario: Scenario, params: SystemParams | None = None) -> Schedule:
    """Frequency-spanning allocation.

    Devices in issue order take free RUs one at a time, earliest slot first
    and lowest interference first within a slot, until the optimally split
    packet clears rho. Devices that run out of window are excluded and give
    their RUs back. On a correlated-fading scenario this delegates to the
    correlated split.
    """
    params = params or scenario.params
    if scenario.fading_mode == "correlated":
        from .correlated import fsa_correlated

        return fsa_correlated(scenario, params)
    ell, q = params.packet_bits, params.q

    def split(r, lam):
        return round_bits(real_bit_split(r, lam, ell, q), ell)

    def prob(k, r, d, lam):
        return spanning_packet_prob(k, r, d, lam, params)

    return _fsa_core(scenario, params, "fsa", split, prob, link_model="threshold", fading="independent")


# ---------------------------------------------------------------------------
# Reliability bookkeeping and validity checks
# ---------------------------------------------------------------------------


@dataclass
class Requirements:
    """Per (device, channel, partner) the largest per-RU threshold to clear."""

    dev: np.ndarray
    chan: np.ndarray
    theta: np.ndarray
    partner: np.ndarray
    partner_theta: np.ndarray
    bits: np.ndarray


def requirements(schedule: Schedule, params: SystemParams) -> Requirements:
    table: dict[tuple[int, int, int], list[float]] = {}

    def add(u, c, v, bits, pbits):
        key = (u, c, v)
        cur = table.get(key)
        if cur is None or bits > cur[0]:
            table[key] = [bits, pbits]

    for c, m in zip(*np.nonzero(schedule.role != FREE)):
        u = int(schedule.owner[c, m])
        bits = float(schedule.bits[c, m])
        if schedule.role[c, m] == SHARED:
            v = int(schedule.partner[c, m])
            pb = float(schedule.partner_bits[c, m])
            add(u, int(c), v, bits, pb)
            add(v, int(c), u, pb, bits)
        else:
            add(u, int(c), -1, bits, 0.0)
    keys = sorted(table)
    q = params.q
    th = lambda b: math.expm1(b / q * LN2)  # noqa: E731
    return Requirements(
        dev=np.array([k[0] for k in keys], dtype=np.int64),
        chan=np.array([k[1] for k in keys], dtype=np.int64),
        theta=np.array([th(table[k][0]) for k in keys]),
        partner=np.array([k[2] for k in keys], dtype=np.int64),
        partner_theta=np.array([th(table[k][1]) for k in keys]),
        bits=np.array([table[k][0] for k in keys]),
    )


def analytic_success(schedule: Schedule, scenario: Scenario, correlated: bool | None = None,
                     exact: bool | None = None) -> np.ndarray:
    """Model-level success probability of every device (0 for excluded ones).

    Within a channel the device must clear its largest threshold; joint RUs
    use the two-stage SIC formula. Across channels probabilities multiply
    under independent fading and take the minimum under correlated fading.
    ``exact`` swaps the threshold model for the exact per-RU error
    probability on solo RUs.
    """
    params = scenario.params
    if correlated is None:
        correlated = schedule.meta.get("fading", scenario.fading_mode) == "correlated"
    if exact is None:
        exact = schedule.meta.get("link_model") == "exact"
    req = requirements(schedule, params)
    snr = scenario.snr_mean()
    per_chan: dict[tuple[int, int], float] = {}
    for u, c, th, v, pth, bits in zip(req.dev, req.chan, req.theta, req.partner, req.partner_theta, req.bits):
        if v < 0:
            if exact:
                p = 1.0 - exact_error_prob(bits, scenario.distances[u], scenario.interf[c], params)
            else:
                p = math.exp(-th / snr[u, c])
        else:
            p = kernels.pair_success(float(th), float(pth), 1.0 / snr[u, c], 1.0 / snr[v, c])
        key = (int(u), int(c))
        per_chan[key] = min(per_chan.get(key, 1.0), p)
    out = np.zeros(schedule.n_devices)
    out[schedule.served] = 1.0
    for (u, _c), p in per_chan.items():
        out[u] = min(out[u], p) if correlated else out[u] * p
    return out


def check_schedule(schedule: Schedule, scenario: Scenario, single_channel: bool | None = None,
                   tol: float = 1e-9) -> list[str]:
    """Return a list of violated invariants (empty when the schedule is valid)."""
    params = scenario.params
    T = params.cycle_slots
    ell = params.packet_bits
    problems = []
    if single_channel is None:
        single_channel = not schedule.algorithm.startswith("fsa")
    used = np.zeros(schedule.n_devices, dtype=bool)
    for u in range(schedule.n_devices):
        rus = schedule.device_rus(u)
        used[u] = bool(rus)
        if not rus:
            continue
        t, bound = int(schedule.issue_times[u]), int(schedule.delay_bounds[u])
        offsets = [(s - t) % T for _, s, _, _ in rus]
        if max(offsets) >= bound:
            problems.append(f"device {u}: RU outside window")
        if schedule.delay[u] != max(offsets) + 1 or schedule.delay[u] > bound:
            problems.append(f"device {u}: delay {schedule.delay[u]} inconsistent")
        if single_channel and len({c for c, *_ in rus}) > 1:
            problems.append(f"device {u}: spans channels")
        shared_bits = sum(b for _, _, b, role in rus if role == SHARED)
        other_bits = sum(b for _, _, b, role in rus if role != SHARED)
        sent = shared_bits + other_bits
        if abs(sent - ell) > 1e-6 * ell:
            problems.append(f"device {u}: carries {sent} bits, expected {ell}")
    if np.any(used != schedule.served):
        problems.append("served flags disagree with RU ownership")
    if np.any(schedule.delay[~schedule.served] != 0):
        problems.append("excluded device with non-zero delay")
    success = analytic_success(schedule, scenario)
    low = schedule.served & (success <= params.reliability - tol)
    for u in np.nonzero(low)[0]:
        problems.append(f"device {u}: analytic success {success[u]:.9g} below rho")
    return problems
