"""Max-weight bipartite matching and association rounding.

The matcher is the classic O(n^3) potentials / shortest-augmenting-path
scheme, run on the negated weights. Ties break by scan order (lowest
index first), which keeps results deterministic across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_ZERO_ROW_BUMP = 1e-12


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]
    total: float


def _solve_square_min(cost: np.ndarray) -> np.ndarray:
    """Column index matched to each row of a square cost matrix."""
    n = cost.shape[0]
    a = np.zeros((n + 1, n + 1))
    a[1:, 1:] = cost
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=int)
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = np.nonzero(~used)[0]
            cur = a[i0, free] - u[i0] - v[free]
            better = cur < minv[free]
            minv[free] = np.where(better, cur, minv[free])
            way[free[better]] = j0
            k = int(np.argmin(minv[free]))
            delta = minv[free][k]
            j1 = int(free[k])
            taken = np.nonzero(used)[0]
            u[p[taken]] += delta
            v[taken] -= delta
            minv[free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = int(way[j0])
            p[j0] = p[j1]
            j0 = j1
    col_of_row = np.zeros(n, dtype=int)
    for j in range(1, n + 1):
        col_of_row[p[j] - 1] = j - 1
    return col_of_row


def hungarian_max(weights: np.ndarray) -> Matching:
    """Maximum-weight assignment on a rectangular weight table.

    The table is padded to square with zero weights internally. Every row
    is matched when columns are plentiful; with more rows than columns the
    rows parked on padding are left out of the result.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.size == 0:
        raise ValueError("weights must be a non-empty 2-D array")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    rows, cols = w.shape
    n = max(rows, cols)
    padded = np.zeros((n, n))
    padded[:rows, :cols] = w
    col_of_row = _solve_square_min(-padded)
    pairs = tuple((i, int(col_of_row[i])) for i in range(rows)
                  if col_of_row[i] < cols)
    total = float(sum(w[i, j] for i, j in pairs))
    return Matching(pairs=pairs, total=total)


def round_connection(x_frac: np.ndarray) -> np.ndarray:
    """Round a fractional association to a binary one.

    Rows with mass above one are renormalized, empty rows receive a tiny
    seed at their largest raw entry (first index on ties), and each server
    is replicated into ceil(N/M) slots so the matcher can spread load
    without exceeding a balanced capacity.
    """
    raw = np.asarray(x_frac, dtype=float)
    if raw.ndim != 2 or raw.size == 0:
        raise ValueError("x_frac must be a non-empty 2-D array")
    if not np.all(np.isfinite(raw)):
        raise ValueError("x_frac must be finite")
    n, m = raw.shape
    w = np.clip(raw, 0.0, None)
    sums = w.sum(axis=1)
    heavy = sums > 1.0
    w[heavy] /= sums[heavy, None]
    for i in np.nonzero(sums <= 0)[0]:
        w[i, int(np.argmax(raw[i]))] = _ZERO_ROW_BUMP

    slots = math.ceil(n / m)
    table = np.repeat(w, slots, axis=1)
    matching = hungarian_max(table)
    x_bin = np.zeros((n, m))
    for i, slot in matching.pairs:
        x_bin[i, slot // slots] = 1.0
    return x_bin


__all__ = ["Matching", "hungarian_max", "round_connection"]
