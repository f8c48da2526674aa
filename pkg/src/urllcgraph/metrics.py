"""Service, delay, age-of-information and fairness metrics of a schedule."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

N_BINS = 10


def jain(x) -> float:
    """Jain's index (sum x)^2 / (n sum x^2); NaN for an all-zero vector."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("jain index of an empty vector")
    top = float(np.max(np.abs(x)))
    if top == 0.0:
        return float("nan")
    x = x / top  # scale-free, and keeps tiny entries from underflowing when squared
    return float(x.sum() ** 2 / (x.size * np.dot(x, x)))


def distance_bins(distances, served, radius: float, n_bins: int = N_BINS):
    """Device count and served count in equal-width radial bins over [0, radius]."""
    edges = np.linspace(0.0, radius, n_bins + 1)
    idx = np.clip(np.searchsorted(edges, distances, side="right") - 1, 0, n_bins - 1)
    count = np.bincount(idx, minlength=n_bins)
    hit = np.bincount(idx, weights=np.asarray(served, dtype=float), minlength=n_bins)
    return edges, count, hit


def served_profile(distances, served, radius: float, n_bins: int = N_BINS) -> np.ndarray:
    """Per-bin served fraction, NaN for empty bins."""
    _, count, hit = distance_bins(distances, served, radius, n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(count > 0, hit / np.maximum(count, 1), np.nan)


def jain_over_bins(profile) -> float:
    profile = np.asarray(profile, dtype=float)
    return jain(profile[~np.isnan(profile)])


@dataclass
class MetricsReport:
    algorithm: str
    n_devices: int
    n_channels: int
    n_served: int
    fraction_served: float
    mean_delay: float  # over served devices
    max_delay: int
    mean_aoi: float
    jain_bin: float
    jain_dev: float
    served_bins: list[float]
    runtime_s: float
    delay_averaged_over: str = "served"

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_schedule(schedule, scenario, runtime_s: float = 0.0) -> MetricsReport:
    served = schedule.served
    n = schedule.n_devices
    delays = schedule.delay[served]
    mean_delay = float(delays.mean()) if delays.size else float("nan")
    profile = served_profile(scenario.distances, served, scenario.params.area_radius)
    return MetricsReport(
        algorithm=schedule.algorithm,
        n_devices=n,
        n_channels=schedule.n_channels,
        n_served=int(served.sum()),
        fraction_served=schedule.fraction_served,
        mean_delay=mean_delay,
        max_delay=int(delays.max()) if delays.size else 0,
        mean_aoi=mean_delay + scenario.params.cycle_slots / 2.0,
        jain_bin=jain_over_bins(profile) if n else float("nan"),
        jain_dev=jain(served.astype(float)) if n else float("nan"),
        served_bins=[float(v) for v in profile],
        runtime_s=float(runtime_s),
    )
