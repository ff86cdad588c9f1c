"""Exact maximum-weight assignment of K slots to distinct items.

The constraint matrix of the slot/item assignment polytope is totally
unimodular, so the combinatorial optimum coincides with the LP relaxation;
a potentials-based augmenting-path method (rectangular Hungarian) solves it
exactly in O(K^2 J).
"""

from __future__ import annotations

import math

import numpy as np


def solve_assignment(weights) -> tuple[int, ...]:
    """Return, per slot, the item of a maximum-weight assignment.

    ``weights`` is a K x J matrix (K <= J); +inf entries are exploration
    sentinels and are treated as a common value larger than any finite
    weight, so ties among them resolve by lowest (slot, item) index.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2:
        raise ValueError("weights must be a 2-d matrix")
    n_slots, n_items = w.shape
    if n_slots > n_items:
        raise ValueError("cannot assign more slots than items")
    finite = w[np.isfinite(w)]
    big = float(np.abs(finite).sum()) + 1.0 if finite.size else 1.0
    cost = -np.where(np.isposinf(w), big, w)

    inf = math.inf
    u = [0.0] * (n_slots + 1)
    v = [0.0] * (n_items + 1)
    match = [0] * (n_items + 1)  # match[j] = slot assigned to item j (1-based)
    for slot in range(1, n_slots + 1):
        match[0] = slot
        j0 = 0
        min_reduced = [inf] * (n_items + 1)
        used = [False] * (n_items + 1)
        way = [0] * (n_items + 1)
        while True:
            used[j0] = True
            s0 = match[j0]
            delta = inf
            j1 = 0
            row = cost[s0 - 1]
            for j in range(1, n_items + 1):
                if used[j]:
                    continue
                reduced = row[j - 1] - u[s0] - v[j]
                if reduced < min_reduced[j]:
                    min_reduced[j] = reduced
                    way[j] = j0
                if min_reduced[j] < delta:
                    delta = min_reduced[j]
                    j1 = j
            for j in range(n_items + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    min_reduced[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j_prev = way[j0]
            match[j0] = match[j_prev]
            j0 = j_prev

    assignment = [0] * n_slots
    for j in range(1, n_items + 1):
        if match[j]:
            assignment[match[j] - 1] = j - 1
    return tuple(assignment)
