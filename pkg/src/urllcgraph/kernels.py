"""Hot numeric kernels with a numba path and a plain numpy/python path.

Set ``URLLCGRAPH_DISABLE_NUMBA=1`` before import to force the fallback.
Every kernel exists in both forms (``*_py`` and ``*_nb``) so tests and the
benchmark can run them side by side; the unsuffixed name is the one
selected by the flag.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

DISABLED = os.environ.get("URLLCGRAPH_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
USE_NUMBA = numba is not None and not DISABLED

LN2 = math.log(2.0)


def _jit(func):
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True)(func)


# ---------------------------------------------------------------------------
# Hungarian algorithm (shortest augmenting path, rows <= cols, minimisation)
# ---------------------------------------------------------------------------


def _hungarian_py(cost):
    n, m = cost.shape
    inf = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=np.int64)
    way = np.zeros(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, inf)
        used = np.zeros(m + 1, dtype=np.bool_)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    row_to_col = np.full(n, -1, dtype=np.int64)
    for j in range(1, m + 1):
        if p[j] != 0:
            row_to_col[p[j] - 1] = j - 1
    return row_to_col


_hungarian_nb = _jit(_hungarian_py)


def hungarian(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost assignment of every row of ``cost`` (rows <= cols).

    Returns the column assigned to each row.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    if cost.shape[0] > cost.shape[1]:
        raise ValueError("hungarian expects rows <= cols")
    if cost.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    if USE_NUMBA:
        return _hungarian_nb(cost)
    return _hungarian_py(cost)


# ---------------------------------------------------------------------------
# Two-user SIC success probability and the shared-demand heuristic
# ---------------------------------------------------------------------------


def _pair_success_py(theta_i, theta_j, lam, mu):
    if theta_j == 0.0:
        return math.exp(-lam * theta_i)
    if theta_i == 0.0:
        return 1.0
    prod = theta_i * theta_j
    if prod == 1.0:
        theta_j = theta_j * (1.0 + 4.0 * 2.220446049250313e-16)
        prod = theta_i * theta_j
    base = math.exp(-lam * theta_i - mu * theta_j * (1.0 + theta_i))
    # written with theta_j in numerators so tiny thresholds do not overflow
    w = mu * theta_j / (lam + mu * theta_j)
    if prod < 1.0:
        s = theta_j * (theta_i + 1.0) / (1.0 - prod)
        a = lam * theta_i + mu
        sb = (theta_i + 1.0) * (lam + mu * theta_j) / (1.0 - prod)
        t2 = mu * math.exp(-lam * theta_i) / a * (-math.expm1(-s * a))
        t3 = w * (math.exp(lam - sb) - base)
        p = base + t2 + t3
    else:
        p = math.exp(-lam * theta_i) * (
            math.exp(-mu * theta_j * (1.0 + theta_i)) * (1.0 - w)
            + mu / (lam * theta_i + mu)
        )
    if p < 0.0:
        return 0.0
    if p > 1.0:
        return 1.0
    return p


_pair_success_nb = _jit(_pair_success_py)


def _shared_demand_core(f_near, f_far, lam, mu, ell, q, rho, max_total, success):
    rx = f_near
    r = f_far if f_far > f_near else f_near
    if r > max_total:
        return -1, -1
    while True:
        th_i = math.expm1(ell / (rx * q) * LN2)
        th_j = math.expm1(ell / (r * q) * LN2)
        if success(th_i, th_j, lam, mu) >= rho:
            break
        if r == rx:
            r += 1
        rx += 1
        if r > max_total:
            return -1, -1
    while True:
        th_i = math.expm1(ell / (rx * q) * LN2)
        th_j = math.expm1(ell / (r * q) * LN2)
        if success(th_j, th_i, mu, lam) >= rho:
            break
        r += 1
        if r > max_total:
            return -1, -1
    return rx, r - rx


def _shared_demand_py(f_near, f_far, lam, mu, ell, q, rho, max_total):
    return _shared_demand_core(f_near, f_far, lam, mu, ell, q, rho, max_total, _pair_success_py)


if numba is not None:

    @numba.njit(cache=True, nogil=True)
    def _shared_demand_nb(f_near, f_far, lam, mu, ell, q, rho, max_total):
        rx = f_near
        r = f_far if f_far > f_near else f_near
        if r > max_total:
            return -1, -1
        while True:
            th_i = math.expm1(ell / (rx * q) * LN2)
            th_j = math.expm1(ell / (r * q) * LN2)
            if _pair_success_nb(th_i, th_j, lam, mu) >= rho:
                break
            if r == rx:
                r += 1
            rx += 1
            if r > max_total:
                return -1, -1
        while True:
            th_i = math.expm1(ell / (rx * q) * LN2)
            th_j = math.expm1(ell / (r * q) * LN2)
            if _pair_success_nb(th_j, th_i, mu, lam) >= rho:
                break
            r += 1
            if r > max_total:
                return -1, -1
        return rx, r - rx

else:  # pragma: no cover
    _shared_demand_nb = _shared_demand_py


def pair_success(theta_i: float, theta_j: float, lam: float, mu: float) -> float:
    if USE_NUMBA:
        return _pair_success_nb(theta_i, theta_j, lam, mu)
    return _pair_success_py(theta_i, theta_j, lam, mu)


def shared_demand(f_near, f_far, lam, mu, ell, q, rho, max_total):
    fn = _shared_demand_nb if USE_NUMBA else _shared_demand_py
    return fn(int(f_near), int(f_far), float(lam), float(mu), float(ell), float(q), float(rho), int(max_total))


def _pair_table_body(pa, pb, tdist, dist, interf, demand, gamma_t, alpha, ell, q, rho, delta, m_t, sd):
    n_pairs = pa.shape[0]
    n_chan = interf.shape[0]
    ok = np.zeros(n_pairs, dtype=np.bool_)
    shared = np.zeros((n_pairs, n_chan), dtype=np.int64)
    extra = np.zeros((n_pairs, n_chan), dtype=np.int64)
    for p in range(n_pairs):
        a = pa[p]
        b = pb[p]
        if tdist[p] > m_t:
            continue
        good = True
        for c in range(n_chan):
            fa = demand[c, a]
            fb = demand[c, b]
            lam = interf[c] * dist[a] ** alpha / gamma_t
            mu = interf[c] * dist[b] ** alpha / gamma_t
            n_c, k_c = sd(fa, fb, lam, mu, ell, q, rho, delta)
            if n_c < 0:
                good = False
                break
            if fa + fb - (n_c + k_c) < 0:
                good = False
                break
            limit = delta - n_c
            if m_t < limit:
                limit = m_t
            if tdist[p] > limit:
                good = False
                break
            shared[p, c] = n_c
            extra[p, c] = k_c
        ok[p] = good
    return ok, shared, extra


def _pair_table_py(pa, pb, tdist, dist, interf, demand, gamma_t, alpha, ell, q, rho, delta, m_t):
    return _pair_table_body(pa, pb, tdist, dist, interf, demand, gamma_t, alpha, ell, q, rho, delta, m_t,
                            _shared_demand_py)


if numba is not None:

    @numba.njit(cache=True, nogil=True)
    def _pair_table_nb(pa, pb, tdist, dist, interf, demand, gamma_t, alpha, ell, q, rho, delta, m_t):
        n_pairs = pa.shape[0]
        n_chan = interf.shape[0]
        ok = np.zeros(n_pairs, dtype=np.bool_)
        shared = np.zeros((n_pairs, n_chan), dtype=np.int64)
        extra = np.zeros((n_pairs, n_chan), dtype=np.int64)
        for p in range(n_pairs):
            a = pa[p]
            b = pb[p]
            if tdist[p] > m_t:
                continue
            good = True
            for c in range(n_chan):
                fa = demand[c, a]
                fb = demand[c, b]
                lam = interf[c] * dist[a] ** alpha / gamma_t
                mu = interf[c] * dist[b] ** alpha / gamma_t
                n_c, k_c = _shared_demand_nb(fa, fb, lam, mu, ell, q, rho, delta)
                if n_c < 0:
                    good = False
                    break
                if fa + fb - (n_c + k_c) < 0:
                    good = False
                    break
                limit = delta - n_c
                if m_t < limit:
                    limit = m_t
                if tdist[p] > limit:
                    good = False
                    break
                shared[p, c] = n_c
                extra[p, c] = k_c
            ok[p] = good
        return ok, shared, extra

else:  # pragma: no cover
    _pair_table_nb = _pair_table_py


def pair_table(pa, pb, tdist, dist, interf, demand, gamma_t, alpha, ell, q, rho, delta, m_t):
    """Evaluate the shareability test for candidate pairs ``(pa[p], pb[p])``.

    ``pa`` holds the nearer device of each pair. Returns ``(ok, N, K)``
    where ``N``/``K`` are per-channel shared/exclusive RU counts (only
    meaningful where ``ok``).
    """
    args = (
        np.ascontiguousarray(pa, dtype=np.int64),
        np.ascontiguousarray(pb, dtype=np.int64),
        np.ascontiguousarray(tdist, dtype=np.int64),
        np.ascontiguousarray(dist, dtype=np.float64),
        np.ascontiguousarray(interf, dtype=np.float64),
        np.ascontiguousarray(demand, dtype=np.int64),
        float(gamma_t), float(alpha), float(ell), float(q), float(rho), int(delta), int(m_t),
    )
    if USE_NUMBA:
        return _pair_table_nb(*args)
    return _pair_table_py(*args)


# ---------------------------------------------------------------------------
# Slot placement for the graph-based allocators
# ---------------------------------------------------------------------------


def _place_end_py(busy_row, start, count, deadline, n_slots):
    """Last linear slot of ``count`` free slots taken from ``start`` onward, or -1."""
    got = 0
    s = start
    while s <= deadline:
        if not busy_row[(s - 1) % n_slots]:
            got += 1
            if got == count:
                return s
        s += 1
    return -1


_place_end_nb = _jit(_place_end_py)


def _candidate_completions_loop(beta, busy, issue, window, demand, place):
    n_chan, n_slots = busy.shape
    n_ent = issue.shape[0]
    out = np.full((n_chan, n_ent), -1, dtype=np.int64)
    for c in range(n_chan):
        for e in range(n_ent):
            need = demand[c, e]
            if need <= 0 or need > window[e, c]:
                continue
            t = issue[e, c]
            start = beta[c] if beta[c] > t - 1 else t - 1
            start += 1
            deadline = t + window[e, c] - 1
            if start + need - 1 > deadline:
                continue
            out[c, e] = place(busy[c], start, need, deadline, n_slots)
    return out


if numba is not None:

    @numba.njit(cache=True, nogil=True)
    def _candidate_completions_nb(beta, busy, issue, window, demand):
        n_chan, n_slots = busy.shape
        n_ent = issue.shape[0]
        out = np.full((n_chan, n_ent), -1, dtype=np.int64)
        for c in range(n_chan):
            for e in range(n_ent):
                need = demand[c, e]
                if need <= 0 or need > window[e, c]:
                    continue
                t = issue[e, c]
                start = beta[c] if beta[c] > t - 1 else t - 1
                start += 1
                deadline = t + window[e, c] - 1
                if start + need - 1 > deadline:
                    continue
                out[c, e] = _place_end_nb(busy[c], start, need, deadline, n_slots)
        return out

else:  # pragma: no cover
    def _candidate_completions_nb(beta, busy, issue, window, demand):
        return _candidate_completions_loop(beta, busy, issue, window, demand, _place_end_py)


def _candidate_completions_py(beta, busy, issue, window, demand):
    """Vectorised fallback: contiguous blocks in numpy, wrap collisions in a loop."""
    n_chan, n_slots = busy.shape
    t = issue.T  # (C, n)
    win = window.T
    start = np.maximum(beta[:, None], t - 1) + 1
    deadline = t + win - 1
    end = start + demand - 1
    feasible = (demand > 0) & (demand <= win) & (end <= deadline)
    out = np.where(feasible, end, -1)
    # only blocks reaching past the cycle can hit wrapped busy slots
    crowded = feasible & (end > n_slots)
    for c, e in zip(*np.nonzero(crowded)):
        out[c, e] = _place_end_py(busy[c], int(start[c, e]), int(demand[c, e]), int(deadline[c, e]), n_slots)
    return out.astype(np.int64)


def candidate_completions(beta, busy, issue, window, demand):
    """Completion slot of every (channel, entity) candidate, -1 when infeasible.

    ``beta`` (C,) last busy linear slot per channel; ``busy`` (C, T) occupancy
    bitmap; ``issue``/``window`` (n, C) per-entity issue slot and delay budget;
    ``demand`` (C, n) RU counts. Blocks are only ever appended after the
    cursor, so when ``beta[c] <= T`` the slots ``beta[c] + 1 .. T`` are free;
    the numpy path relies on this.
    """
    args = (
        np.ascontiguousarray(beta, dtype=np.int64),
        np.ascontiguousarray(busy, dtype=np.bool_),
        np.ascontiguousarray(issue, dtype=np.int64),
        np.ascontiguousarray(window, dtype=np.int64),
        np.ascontiguousarray(demand, dtype=np.int64),
    )
    if USE_NUMBA:
        return _candidate_completions_nb(*args)
    return _candidate_completions_py(*args)


# ---------------------------------------------------------------------------
# Monte Carlo decoding of a committed schedule
# ---------------------------------------------------------------------------
#
# A schedule is reduced to "requirements": per (device, channel) the largest
# per-RU threshold it must clear. Shared requirements also carry the partner
# and its threshold so the two-stage SIC event can be applied.


def _mc_count_py(snr_mean, fading, correlated, rec_dev, rec_chan, rec_theta, rec_partner, rec_ptheta, n_dev):
    trials = fading.shape[0]
    ok = np.ones((trials, n_dev), dtype=np.bool_)
    for r in range(rec_dev.shape[0]):
        u = rec_dev[r]
        c = rec_chan[r]
        h_u = fading[:, u] if correlated else fading[:, c, u]
        s_u = snr_mean[u, c] * h_u
        v = rec_partner[r]
        if v < 0:
            good = s_u >= rec_theta[r]
        else:
            h_v = fading[:, v] if correlated else fading[:, c, v]
            s_v = snr_mean[v, c] * h_v
            th_u = rec_theta[r]
            th_v = rec_ptheta[r]
            partner_first = s_v >= th_v * (1.0 + s_u)
            good = (partner_first & (s_u >= th_u)) | (s_u >= th_u * (1.0 + s_v))
        ok[:, u] &= good
    return ok.sum(axis=0).astype(np.int64)


if numba is not None:

    @numba.njit(cache=True, nogil=True)
    def _mc_count_nb(snr_mean, fading, correlated, rec_dev, rec_chan, rec_theta, rec_partner, rec_ptheta, n_dev):
        trials = fading.shape[0]
        counts = np.zeros(n_dev, dtype=np.int64)
        fail = np.zeros(n_dev, dtype=np.bool_)
        for t in range(trials):
            fail[:] = False
            for r in range(rec_dev.shape[0]):
                u = rec_dev[r]
                if fail[u]:
                    continue
                c = rec_chan[r]
                if correlated:
                    h_u = fading[t, 0, u]
                else:
                    h_u = fading[t, c, u]
                s_u = snr_mean[u, c] * h_u
                v = rec_partner[r]
                if v < 0:
                    good = s_u >= rec_theta[r]
                else:
                    if correlated:
                        h_v = fading[t, 0, v]
                    else:
                        h_v = fading[t, c, v]
                    s_v = snr_mean[v, c] * h_v
                    th_u = rec_theta[r]
                    th_v = rec_ptheta[r]
                    good = (s_v >= th_v * (1.0 + s_u) and s_u >= th_u) or (s_u >= th_u * (1.0 + s_v))
                if not good:
                    fail[u] = True
            for u in range(n_dev):
                if not fail[u]:
                    counts[u] += 1
        return counts

else:  # pragma: no cover
    _mc_count_nb = None


def mc_success_counts(snr_mean, fading, correlated, rec_dev, rec_chan, rec_theta, rec_partner, rec_ptheta, n_dev,
                      use_numba=None):
    """Per-device count of trials in which every requirement is met.

    ``fading`` is (trials, C, N) for independent channels or (trials, N)
    when one coefficient is shared by all channels of a device.
    """
    use = USE_NUMBA if use_numba is None else use_numba
    rec = (
        np.ascontiguousarray(rec_dev, dtype=np.int64),
        np.ascontiguousarray(rec_chan, dtype=np.int64),
        np.ascontiguousarray(rec_theta, dtype=np.float64),
        np.ascontiguousarray(rec_partner, dtype=np.int64),
        np.ascontiguousarray(rec_ptheta, dtype=np.float64),
    )
    snr_mean = np.ascontiguousarray(snr_mean, dtype=np.float64)
    if use and _mc_count_nb is not None:
        fad = fading[:, None, :] if correlated else fading
        return _mc_count_nb(snr_mean, np.ascontiguousarray(fad, dtype=np.float64), bool(correlated), *rec, n_dev)
    return _mc_count_py(snr_mean, fading, bool(correlated), *rec, n_dev)
