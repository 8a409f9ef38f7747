"""Exact Wasserstein-1 references for equal-size empirical distributions, and finite differences."""
from __future__ import annotations

import itertools
import math
from typing import Callable

import numpy as np

MAX_ASSIGNMENT_N = 512


def w1_exact_1d(a, b) -> float:
    """Mean absolute difference of the sorted samples."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if len(a) != len(b) or len(a) == 0:
        raise ValueError(f"w1_exact_1d needs equal nonempty sizes, got {len(a)} and {len(b)}")
    return math.fsum(np.abs(a - b)) / len(a)


def linear_assignment(cost: np.ndarray) -> np.ndarray:
    """Hungarian algorithm (shortest augmenting paths with potentials), O(n^3).

    Returns ``perm`` with row i assigned to column ``perm[i]``, minimising
    ``cost[i, perm[i]].sum()``.
    """
    cost = np.asarray(cost, dtype=np.float64)
    n = cost.shape[0]
    if cost.ndim != 2 or cost.shape[1] != n:
        raise ValueError(f"square cost matrix required, got {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    # 1-based columns; column 0 is the virtual start of each augmenting path
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, dtype=np.int64)   # match[j]: row (1-based) on column j, 0 if free
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            free = ~used
            free[0] = False
            cur = cost[i0 - 1] - u[i0] - v[1:]
            better = free[1:] & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            masked = np.where(free, minv, np.inf)
            j1 = int(np.argmin(masked))
            delta = masked[j1]
            used_cols = np.flatnonzero(used)
            u[match[used_cols]] += delta
            v[used_cols] -= delta
            minv[free] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    perm = np.empty(n, dtype=np.int64)
    perm[match[1:] - 1] = np.arange(n)
    return perm


def _points(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    return p[:, None] if p.ndim == 1 else p


def pairwise_distances(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    diff = p[:, None, :] - q[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def w1_exact_assignment(p, q, max_n: int = MAX_ASSIGNMENT_N) -> float:
    """Exact W1 between two uniform empirical distributions of equal size (Euclidean cost)."""
    p, q = _points(p), _points(q)
    if len(p) != len(q) or len(p) == 0:
        raise ValueError(f"equal nonempty sample sizes required, got {len(p)} and {len(q)}")
    if p.shape[1] != q.shape[1]:
        raise ValueError(f"dimension mismatch {p.shape[1]} vs {q.shape[1]}")
    if len(p) > max_n:
        raise ValueError(f"n={len(p)} exceeds the assignment cap of {max_n}; subsample both sides first")
    cost = pairwise_distances(p, q)
    perm = linear_assignment(cost)
    return math.fsum(cost[np.arange(len(p)), perm]) / len(p)


def w1_brute_force(p, q) -> float:
    """Minimum over all n! bijections; only for tiny n."""
    p, q = _points(p), _points(q)
    n = len(p)
    if len(q) != n or n == 0:
        raise ValueError("equal nonempty sample sizes required")
    if n > 8:
        raise ValueError("brute force limited to n <= 8")
    cost = pairwise_distances(p, q)
    perms = np.array(list(itertools.permutations(range(n))))
    totals = cost[np.arange(n), perms].sum(axis=1)
    best = perms[int(np.argmin(totals))]
    return math.fsum(cost[np.arange(n), best]) / n


def finite_diff_grad(fn: Callable[[np.ndarray], float], point, h: float = 1e-5) -> np.ndarray:
    """Central differences, one coordinate at a time."""
    x = np.array(point, dtype=np.float64)
    out = np.zeros_like(x)
    flat, gflat = x.reshape(-1), out.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(fn(x))
        flat[i] = orig - h
        fm = float(fn(x))
        flat[i] = orig
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise FloatingPointError(f"non-finite function value near coordinate {i}")
        gflat[i] = (fp - fm) / (2.0 * h)
    return out
