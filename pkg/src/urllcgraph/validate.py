"""Monte Carlo check of a schedule's per-device decoding success."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .allocators import Schedule, analytic_success, requirements
from .scenario import Scenario

MIN_TRIALS = 10_000


@dataclass
class ReliabilityReport:
    trials: int
    successes: np.ndarray
    analytic: np.ndarray
    served: np.ndarray

    @property
    def empirical(self) -> np.ndarray:
        return self.successes / self.trials

    def sigma(self) -> np.ndarray:
        p = np.clip(self.analytic, 0.0, 1.0)
        return np.sqrt(p * (1.0 - p) / self.trials)

    def lower_bound(self, n_sigma: float = 3.0) -> np.ndarray:
        return self.analytic - n_sigma * self.sigma()

    def passed(self, n_sigma: float = 3.0) -> np.ndarray:
        """Served devices whose empirical rate clears the analytic value minus n sigma."""
        return ~self.served | (self.empirical >= self.lower_bound(n_sigma))


def fading_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0x5A11])))


def validate_reliability(schedule: Schedule, scenario: Scenario, trials: int, seed: int = 0,
                         chunk: int = 20_000, use_numba: bool | None = None) -> ReliabilityReport:
    """Simulate ``trials`` cycles and count per-device packet successes.

    Every cycle draws unit-mean exponential fading per (channel, device), or
    one value per device when the scenario's fading is correlated across
    channels. A device succeeds when each of its RUs clears its SINR
    threshold; joint RUs apply the two-stage SIC decoding event.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials")
    params = scenario.params
    correlated = schedule.meta.get("fading", scenario.fading_mode) == "correlated"
    req = requirements(schedule, params)
    snr = scenario.snr_mean()
    n, c = scenario.n_devices, scenario.n_channels
    rng = fading_generator(seed)
    counts = np.zeros(n, dtype=np.int64)
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        shape = (m, n) if correlated else (m, c, n)
        fading = rng.standard_exponential(shape)
        counts += kernels.mc_success_counts(snr, fading, correlated, req.dev, req.chan, req.theta,
                                            req.partner, req.partner_theta, n, use_numba=use_numba)
        done += m
    # the simulation uses threshold decoding, so compare against that model
    analytic = analytic_success(schedule, scenario, correlated=correlated, exact=False)
    return ReliabilityReport(trials, counts, analytic, schedule.served.copy())
