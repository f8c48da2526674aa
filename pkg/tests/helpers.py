"""Brute-force oracles shared by the test modules."""

import itertools
import math

import numpy as np

from urllcgraph.params import SystemParams


def brute_force_assignment(weights, mask):
    """Best total weight over all matchings of a small bipartite graph."""
    n, m = weights.shape
    best = 0.0

    def rec(row, used, total):
        nonlocal best
        if row == n:
            best = max(best, total)
            return
        rec(row + 1, used, total)
        for col in range(m):
            if mask[row, col] and not used & (1 << col):
                rec(row + 1, used | (1 << col), total + weights[row, col])

    rec(0, 0, 0.0)
    return best


def brute_force_matching(weights, mask):
    """A maximum-weight matching itself, first found among ties in row order."""
    n, m = weights.shape
    best = [-1.0, []]

    def rec(row, used, total, pairs):
        if row == n:
            if total > best[0]:
                best[0], best[1] = total, list(pairs)
            return
        for col in range(m):
            if mask[row, col] and not used & (1 << col):
                pairs.append((row, col))
                rec(row + 1, used | (1 << col), total + weights[row, col], pairs)
                pairs.pop()
        rec(row + 1, used, total, pairs)

    rec(0, 0, 0.0, [])
    return best[1]


def brute_force_cardinality(n, edges):
    """Size of a maximum matching by exhaustive search over edge subsets."""
    best = 0

    def rec(i, used, size):
        nonlocal best
        if size + (len(edges) - i) <= best:
            return
        if i == len(edges):
            best = max(best, size)
            return
        u, v = edges[i]
        if not used & ((1 << u) | (1 << v)):
            rec(i + 1, used | (1 << u) | (1 << v), size + 1)
        rec(i + 1, used, size)

    rec(0, 0, 0)
    return best


def random_graph(rng, n, p):
    return [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < p]


def least_rus_brute(d, lam, p: SystemParams, cap=200):
    """Least R whose per-RU success exceeds rho, by linear scan."""
    for r in range(1, cap + 1):
        th = 2.0 ** (p.packet_bits / (r * p.q)) - 1.0
        if math.exp(-th * lam * d ** p.pathloss_exp / p.transmit_snr) > p.reliability:
            return r
    return cap + 1


def mc_sic_success(th_u, th_v, lam_u, lam_v, draws, rng):
    """Monte Carlo estimate of the two-stage SIC success of user u."""
    x = rng.standard_exponential(draws) / lam_u
    y = rng.standard_exponential(draws) / lam_v
    ok = ((y >= th_v * (1 + x)) & (x >= th_u)) | (x >= th_u * (1 + y))
    p = ok.mean()
    return p, math.sqrt(max(p * (1 - p), 1.0 / draws) / draws)


def scenario_from(params, dist, issue, interf, **kw):
    from urllcgraph.scenario import Scenario

    return Scenario(params, np.asarray(dist, float), np.asarray(issue), np.asarray(interf, float), **kw)
