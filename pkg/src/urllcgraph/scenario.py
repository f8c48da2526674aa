"""Scenario container and the random scenario generator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import demand_matrix, demand_matrix_exact, mean_snr
from .params import Channel, Device, SystemParams

FADING_MODES = ("independent", "correlated")

# keep devices off the receiver so path loss stays finite
MIN_DISTANCE = 0.1

# stream ids passed to SeedSequence.spawn-like derivation
_STREAM_POSITION = 0
_STREAM_ISSUE = 1
_STREAM_CHANNEL = 2


@dataclass
class Scenario:
    """One cycle's worth of devices and channels.

    ``issue_times`` are 1-based slot indices in [1, T]. Demand matrices are
    computed lazily and cached, the exact-error variant being expensive.
    """

    params: SystemParams
    distances: np.ndarray
    issue_times: np.ndarray
    interf: np.ndarray
    positions: np.ndarray | None = None
    delay_bounds: np.ndarray | None = None
    fading_mode: str = "independent"
    seed: int | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.distances = np.asarray(self.distances, dtype=float).reshape(-1)
        self.issue_times = np.asarray(self.issue_times, dtype=np.int64).reshape(-1)
        self.interf = np.asarray(self.interf, dtype=float).reshape(-1)
        n = self.distances.size
        if self.issue_times.size != n:
            raise ValueError("distances and issue_times differ in length")
        if self.interf.size == 0:
            raise ValueError("at least one channel is required")
        if np.any(self.distances <= 0):
            raise ValueError("distances must be positive")
        if np.any(self.interf < 1.0):
            raise ValueError("interference factors must be >= 1")
        T = self.params.cycle_slots
        if n and (self.issue_times.min() < 1 or self.issue_times.max() > T):
            raise ValueError(f"issue times must lie in [1, {T}]")
        if self.delay_bounds is None:
            self.delay_bounds = np.full(n, self.params.delay_slots, dtype=np.int64)
        else:
            self.delay_bounds = np.asarray(self.delay_bounds, dtype=np.int64).reshape(-1)
            if self.delay_bounds.size != n:
                raise ValueError("delay_bounds length mismatch")
            if np.any(self.delay_bounds < 1) or np.any(self.delay_bounds > T):
                raise ValueError("delay bounds must lie in [1, T]")
        if self.fading_mode not in FADING_MODES:
            raise ValueError(f"fading_mode must be one of {FADING_MODES}")

    @property
    def n_devices(self) -> int:
        return int(self.distances.size)

    @property
    def n_channels(self) -> int:
        return int(self.interf.size)

    @property
    def devices(self) -> list[Device]:
        return [Device(i, float(d), int(t), int(b))
                for i, (d, t, b) in enumerate(zip(self.distances, self.issue_times, self.delay_bounds))]

    @property
    def channels(self) -> list[Channel]:
        return [Channel(c, float(y)) for c, y in enumerate(self.interf)]

    @property
    def uniform_delay(self) -> bool:
        return bool(np.all(self.delay_bounds == self.params.delay_slots))

    def demand(self, exact: bool = False) -> np.ndarray:
        """(C, N) RU demand under the threshold model or the exact error model."""
        key = "demand_exact" if exact else "demand"
        if key not in self._cache:
            fn = demand_matrix_exact if exact else demand_matrix
            self._cache[key] = fn(self.distances, self.interf, self.params)
        return self._cache[key]

    def snr_mean(self) -> np.ndarray:
        """(N, C) average received SINR."""
        if "snr" not in self._cache:
            self._cache["snr"] = mean_snr(self.distances[:, None], self.interf[None, :], self.params)
        return self._cache["snr"]

    def with_fading(self, mode: str) -> "Scenario":
        out = Scenario(self.params, self.distances, self.issue_times, self.interf, self.positions,
                       self.delay_bounds, mode, self.seed)
        out._cache = self._cache
        return out


def scenario_streams(seed: int) -> list[np.random.Generator]:
    """Independent Philox streams for positions, issue times and channels."""
    children = np.random.SeedSequence(seed).spawn(3)
    return [np.random.Generator(np.random.Philox(s)) for s in children]


def generate_scenario(n_devices: int, n_channels: int, params: SystemParams, seed: int,
                      fading_mode: str = "independent") -> Scenario:
    """Draw a scenario: devices uniform on a disc, issue times uniform, Y_c uniform.

    Radii follow ``L * sqrt(u)``; draws closer than 0.1 m are redrawn.
    Issue times are uniform integers on [1, T] and interference factors
    ``1 + Y_c`` with ``Y_c`` uniform on [0, Y_M]. Each quantity has its own
    stream, so changing N leaves the channel draw untouched.
    """
    if n_devices < 0 or n_channels < 1:
        raise ValueError("need n_devices >= 0 and n_channels >= 1")
    g_pos, g_issue, g_chan = scenario_streams(seed)
    L = params.area_radius
    radius = L * np.sqrt(g_pos.random(n_devices))
    bad = radius < MIN_DISTANCE
    while bad.any():
        radius[bad] = L * np.sqrt(g_pos.random(int(bad.sum())))
        bad = radius < MIN_DISTANCE
    angle = g_pos.uniform(0.0, 2.0 * np.pi, n_devices)
    positions = np.column_stack((radius * np.cos(angle), radius * np.sin(angle)))
    issue = g_issue.integers(1, params.cycle_slots + 1, size=n_devices)
    interf = 1.0 + g_chan.uniform(0.0, params.max_interf, n_channels)
    return Scenario(params, radius, issue, interf, positions=positions,
                    fading_mode=fading_mode, seed=seed)
