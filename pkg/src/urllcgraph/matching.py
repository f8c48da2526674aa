"""Exact matching solvers.

``max_weight_bipartite_matching``: Hungarian algorithm on a rectangular
weight matrix with optional edge mask.

``max_cardinality_matching``: Edmonds' blossom algorithm on a general
undirected graph.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from . import kernels

# Bits reserved for the pseudo-random part of the tie-break perturbation.
_JITTER_BITS = 20


def tie_break_weights(weights: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Scale integer weights so that ties resolve deterministically.

    Each edge gets ``w * M - (rank * 2**20 + jitter)`` where ``rank`` is the
    row-major position of (row, col) and ``jitter`` a fixed pseudo-random
    20-bit integer. ``M`` exceeds any achievable penalty sum, so the
    maximiser of the scaled problem is a maximiser of the original one,
    preferring small (row, col) pairs and unique with overwhelming
    probability.
    """
    w = np.asarray(weights)
    if not np.all(np.equal(np.mod(w[mask], 1), 0)):
        raise ValueError("tie-breaking needs integer weights")
    n, m = w.shape
    rank = np.arange(n * m, dtype=np.int64).reshape(n, m)
    jitter = np.random.default_rng(0x5EED).integers(0, 1 << _JITTER_BITS, size=(n, m), dtype=np.int64)
    penalty = (rank << _JITTER_BITS) + jitter
    scale = int(min(n, m)) * (int(n * m) << _JITTER_BITS) + 1
    scaled = w.astype(np.int64) * scale - penalty
    if np.abs(scaled[mask]).max(initial=0) >= 2**53:
        raise OverflowError("perturbed weights exceed exact float range")
    return np.where(mask, scaled, 0).astype(np.float64)


def max_weight_bipartite_matching(weights, mask=None, tie_break: bool = False) -> list[tuple[int, int]]:
    """Maximum-weight matching of a bipartite graph given as a dense matrix.

    Parameters
    ----------
    weights : (n, m) array of non-negative edge weights.
    mask : optional (n, m) bool array; False marks a missing edge.
    tie_break : apply :func:`tie_break_weights` before solving.

    Returns
    -------
    Sorted list of ``(row, col)`` pairs. Zero-weight edges may be left out,
    since they do not change the optimum.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2:
        raise ValueError("weights must be a 2-D array")
    mask = np.ones(w.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if w.size == 0 or not mask.any():
        return []
    if np.any(w[mask] < 0):
        raise ValueError("edge weights must be non-negative")
    if tie_break:
        w = tie_break_weights(w, mask)
    transposed = w.shape[0] > w.shape[1]
    if transposed:
        w, mask = w.T, mask.T
    n, m = w.shape
    w = np.where(mask, w, 0.0)
    top = max(float(w.max()), 0.0)
    # pad with one dummy column per row so leaving a row unmatched is free
    cost = np.full((n, m + n), top)
    cost[:, :m] = top - w
    assign = kernels.hungarian(cost)
    pairs = []
    for row, col in enumerate(assign):
        if col < m and mask[row, col] and w[row, col] > 0:
            pairs.append((col, row) if transposed else (row, int(col)))
    return sorted((int(a), int(b)) for a, b in pairs)


def matching_weight(weights, pairs) -> float:
    w = np.asarray(weights)
    return float(sum(w[a, b] for a, b in pairs))


def max_cardinality_matching(n: int, edges) -> list[tuple[int, int]]:
    """Maximum-cardinality matching on an undirected graph with ``n`` vertices.

    Edmonds' blossom algorithm, O(V^3). Returns sorted ``(u, v)`` with u < v.
    """
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        if u == v:
            raise ValueError("self-loops are not allowed")
        adj[u].append(v)
        adj[v].append(u)
    for row in adj:
        row.sort()
    match = [-1] * n

    # greedy start; augmenting search below fixes any suboptimality
    for u in range(n):
        if match[u] == -1:
            for v in adj[u]:
                if match[v] == -1:
                    match[u], match[v] = v, u
                    break

    def find_path(root):
        used = [False] * n
        parent = [-1] * n
        base = list(range(n))
        used[root] = True
        queue = deque([root])

        def lca(a, b):
            seen = [False] * n
            while True:
                a = base[a]
                seen[a] = True
                if match[a] == -1:
                    break
                a = parent[match[a]]
            while True:
                b = base[b]
                if seen[b]:
                    return b
                b = parent[match[b]]

        def mark_path(v, b, child, blossom):
            while base[v] != b:
                blossom[base[v]] = blossom[base[match[v]]] = True
                parent[v] = child
                child = match[v]
                v = parent[match[v]]

        while queue:
            v = queue.popleft()
            for to in adj[v]:
                if base[v] == base[to] or match[v] == to:
                    continue
                if to == root or (match[to] != -1 and parent[match[to]] != -1):
                    cur = lca(v, to)
                    blossom = [False] * n
                    mark_path(v, cur, to, blossom)
                    mark_path(to, cur, v, blossom)
                    for i in range(n):
                        if blossom[base[i]]:
                            base[i] = cur
                            if not used[i]:
                                used[i] = True
                                queue.append(i)
                elif parent[to] == -1:
                    parent[to] = v
                    if match[to] == -1:
                        return to, parent
                    used[match[to]] = True
                    queue.append(match[to])
        return -1, parent

    for root in range(n):
        if match[root] != -1 or not adj[root]:
            continue
        end, parent = find_path(root)
        while end != -1:
            pv = parent[end]
            nxt = match[pv]
            match[end] = pv
            match[pv] = end
            end = nxt
    return sorted((u, v) for u, v in enumerate(match) if v > u)
