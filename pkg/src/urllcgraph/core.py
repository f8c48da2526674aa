"""Single-transmitter link model.

Threshold (step) approximation of short-packet decoding over Rayleigh
block fading, the exact error probability by numerical integration of the
finite-blocklength error function, and the minimum number of RUs needed to
reach a target reliability.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .params import SystemParams

LN2 = math.log(2.0)
SQRT2 = math.sqrt(2.0)

# upper cut-off of the fading integral; the integrand is bounded by exp(-x)
FADING_CUTOFF = 40.0
QUAD_TOL = 1e-8


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""


def snr_threshold(bits, params: SystemParams):
    """SINR needed to carry ``bits`` on one RU: 2**(bits/q) - 1."""
    bits = np.asarray(bits, dtype=float)
    if np.any(bits < 0):
        raise ValueError("bits must be non-negative")
    out = np.expm1(bits / params.q * LN2)
    return float(out) if out.ndim == 0 else out


def mean_snr(d, interf, params: SystemParams):
    """Average received SINR Gamma_T d^-alpha / Lambda."""
    return params.transmit_snr * np.asarray(d, dtype=float) ** (-params.pathloss_exp) / np.asarray(interf, dtype=float)


def decode_prob(bits, d, interf, params: SystemParams):
    """Probability that one RU carrying ``bits`` is decoded (threshold model)."""
    out = np.exp(-np.asarray(snr_threshold(bits, params)) / mean_snr(d, interf, params))
    return float(out) if np.ndim(out) == 0 else out


def same_channel_packet_prob(bit_split, d, interf, params: SystemParams) -> float:
    """Packet success when all RUs sit on one channel (one fading draw).

    The packet survives only if the most loaded RU does, so this is the
    minimum of the per-RU probabilities.
    """
    split = np.asarray(bit_split, dtype=float)
    if split.size == 0:
        raise ValueError("bit_split must be non-empty")
    return float(np.min(decode_prob(split, d, interf, params)))


def min_rus(d, interf, params: SystemParams):
    """Least R with decode_prob(ell/R) > rho, from the closed form.

    Accepts scalars or broadcastable arrays. The closed form is followed by
    a one-step guard against floating-point ties at exact integers.
    """
    d = np.asarray(d, dtype=float)
    interf = np.asarray(interf, dtype=float)
    arg = -params.transmit_snr * math.log(params.reliability) / (interf * d ** params.pathloss_exp)
    per_ru = np.log1p(arg) / LN2
    assert np.all(per_ru > 0), "rho < 1 always leaves a positive per-RU rate"
    r = np.ceil(params.packet_bits / params.q / per_ru)
    r = np.maximum(r, 1.0)
    too_low = decode_prob(params.packet_bits / r, d, interf, params) <= params.reliability
    r = np.where(too_low, r + 1, r)
    prev = np.maximum(r - 1, 1.0)
    slack = (r > 1) & (decode_prob(params.packet_bits / prev, d, interf, params) > params.reliability)
    r = np.where(slack, prev, r).astype(np.int64)
    return int(r) if r.ndim == 0 else r


def demand_matrix(dist, interf, params: SystemParams) -> np.ndarray:
    """F(c, i) for every channel/device pair, shape (C, N).

    Demands above T are clipped to T + 1, which no window can hold.
    """
    f = min_rus(np.asarray(dist)[None, :], np.asarray(interf)[:, None], params)
    return np.minimum(np.atleast_2d(f), params.cycle_slots + 1).astype(np.int64)


def _error_integrand(x, gain, bits, q):
    snr = gain * x
    if snr <= 0.0:
        return math.exp(-x)
    lg = math.log1p(snr)
    disp = -math.expm1(-2.0 * lg)
    if disp <= 0.0:
        return math.exp(-x)
    z = math.sqrt(q / disp) * lg - bits * LN2 / math.sqrt(disp * q)
    return 0.5 * math.erfc(z / SQRT2) * math.exp(-x)


def exact_error_prob(bits: float, d: float, interf: float, params: SystemParams) -> float:
    """Packet error probability of one RU averaged over exponential fading.

    Integrates Q(sqrt(q/V) ln(1+G x) - b ln2 / sqrt(V q)) e^-x over
    [0, 40], with the channel dispersion V evaluated at the instantaneous
    SINR G x. Breakpoints are placed around the threshold crossing, where
    the integrand drops from e^-x to 0 over a narrow band.
    """
    if bits <= 0:
        return 0.0
    q = params.q
    gain = float(mean_snr(d, interf, params))
    x_star = math.expm1(bits / q * LN2) / gain
    points = [x_star * f for f in (1e-3, 1e-2, 0.1, 0.3, 1.0, 3.0, 10.0, 100.0) if x_star * f < FADING_CUTOFF]
    value, abserr, info, *rest = integrate.quad(
        _error_integrand, 0.0, FADING_CUTOFF, args=(gain, bits, q),
        points=points or None, limit=500, epsabs=1e-13, epsrel=1e-10, full_output=1,
    )
    if abserr > QUAD_TOL:
        msg = rest[0] if rest else "tolerance not reached"
        raise QuadratureError(
            f"quad failed for bits={bits}, d={d}, Lambda={interf}: "
            f"value={value:.3e} abserr={abserr:.3e} neval={info['neval']} ({msg})"
        )
    return min(max(value, 0.0), 1.0)


def min_rus_exact(d: float, interf: float, params: SystemParams) -> int:
    """Least R with 1 - exact_error_prob(ell/R) > rho (the "-ni" demand).

    Success is monotone in R, so the walk starts at the threshold-model
    answer and moves down or up to the boundary; this gives the same R as
    an upward scan from two below it. Returns T + 1 when no R up to T
    suffices.
    """
    ell = params.packet_bits
    rho = params.reliability
    cap = params.cycle_slots

    def ok(r):
        return 1.0 - exact_error_prob(ell / r, d, interf, params) > rho

    r = max(1, min(int(min_rus(d, interf, params)), cap))
    if ok(r):
        while r > 1 and ok(r - 1):
            r -= 1
        return r
    while r <= cap:
        r += 1
        if ok(r):
            return r
    return cap + 1


def demand_matrix_exact(dist, interf, params: SystemParams) -> np.ndarray:
    dist = np.asarray(dist, dtype=float)
    interf = np.asarray(interf, dtype=float)
    out = np.empty((interf.size, dist.size), dtype=np.int64)
    for c, lam in enumerate(interf):
        for i, d in enumerate(dist):
            out[c, i] = min_rus_exact(float(d), float(lam), params)
    return np.minimum(out, params.cycle_slots + 1)
