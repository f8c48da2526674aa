"""Bit allocation and FSA when one fading coefficient is shared by all channels.

With a common fading draw the packet survives iff its worst channel does,
so the best split makes every channel equally hard: Lambda_c
(2^(k_c/(r_c q)) - 1) takes the same value on all used channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .allocators import Schedule, _fsa_core, round_bits
from .core import LN2
from .params import SystemParams
from .scenario import Scenario

BISECTION_TOL = 1e-6
MAX_ITER = 200


@dataclass(frozen=True)
class CorrelatedSplit:
    bits: np.ndarray  # real-valued k_c per channel, 0 where r_c = 0
    exponent: float  # common Lambda_c (2^(k_c/(r_c q)) - 1)

    def prob(self, d: float, params: SystemParams) -> float:
        return math.exp(-self.exponent * d ** params.pathloss_exp / params.transmit_snr)


def correlated_packet_prob(k, r, d: float, lam, params: SystemParams) -> float:
    """Success probability of the worst used channel."""
    k = np.asarray(k, dtype=float)
    r = np.asarray(r, dtype=float)
    lam = np.asarray(lam, dtype=float)
    used = r > 0
    if not used.any():
        raise ValueError("at least one RU is required")
    worst = np.max(lam[used] * np.expm1(k[used] / (r[used] * params.q) * LN2))
    return math.exp(-worst * d ** params.pathloss_exp / params.transmit_snr)


def _bits_from_first(k1: float, r: list[int], lam: list[float], q: float) -> list[float]:
    # every channel matches channel 0's exponent
    r1, l1 = r[0], lam[0]
    level = l1 * math.expm1(k1 / (r1 * q) * LN2)
    return [ri * q * math.log2(level / li + 1.0) for ri, li in zip(r, lam)]


def correlated_split_real(r, lam, ell: float, q: float) -> tuple[list[float], float]:
    """Bisection on the first used channel's bits so the total equals ell."""
    idx = [c for c in range(len(r)) if r[c] > 0]
    if not idx:
        raise ValueError("at least one RU is required")
    rs = [int(r[c]) for c in idx]
    ls = [float(lam[c]) for c in idx]
    lo, hi = 0.0, float(ell)
    k = _bits_from_first(hi, rs, ls, q)
    for _ in range(MAX_ITER):
        mid = 0.5 * (lo + hi)
        k = _bits_from_first(mid, rs, ls, q)
        excess = sum(k) - ell
        if abs(excess) < BISECTION_TOL:
            break
        if excess > 0:
            hi = mid
        else:
            lo = mid
    out = [0.0] * len(r)
    for c, kc in zip(idx, k):
        out[c] = kc
    exponent = ls[0] * math.expm1(k[0] / (rs[0] * q) * LN2)
    return out, exponent


def correlated_optimal_split(r, lam, params: SystemParams) -> CorrelatedSplit:
    r = [int(x) for x in np.asarray(r).reshape(-1)]
    lam = [float(x) for x in np.asarray(lam).reshape(-1)]
    if len(r) != len(lam):
        raise ValueError("r and lam differ in length")
    k, exponent = correlated_split_real(r, lam, params.packet_bits, params.q)
    assert abs(sum(k) - params.packet_bits) < 10 * BISECTION_TOL
    return CorrelatedSplit(np.asarray(k), exponent)


def fsa_correlated(scenario: Scenario, params: SystemParams | None = None, integer: bool = False) -> Schedule:
    """FSA with the equal-exponent split and worst-channel serve test.

    Bits stay real-valued unless ``integer`` is set, in which case the split
    is rounded to whole bits before the serve test.
    """
    params = params or scenario.params
    ell, q = params.packet_bits, params.q

    def split(r, lam):
        k, _ = correlated_split_real(r, lam, ell, q)
        return round_bits(k, ell) if integer else k

    def prob(k, r, d, lam):
        return correlated_packet_prob(k, r, d, lam, params)

    name = "fsa_correlated_int" if integer else "fsa_correlated"
    return _fsa_core(scenario, params, name, split, prob, link_model="threshold", fading="correlated")
