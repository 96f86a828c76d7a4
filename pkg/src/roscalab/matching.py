"""Maximum-weight perfect matching of participants to rounds.

The Hungarian method finds an optimal assignment and dual potentials. Among
all optimal assignments we then return the lexicographically smallest
``rounds`` vector, found by walking the graph of dual-tight edges.
"""

from __future__ import annotations

import itertools
import math
from collections import deque

import numpy as np

from .core import Allocation, RoscaInstance, matching_weight

BRUTE_FORCE_MAX_N = 10


def hungarian(weights: np.ndarray) -> tuple[list[int], np.ndarray, np.ndarray]:
    """Maximize sum of ``weights[i, col[i]]``.

    Returns the column of each row plus row and column potentials ``u, w`` with
    ``u[i] + w[j] >= weights[i, j]`` and equality on matched edges.
    """
    a = -np.asarray(weights, dtype=float)
    n = a.shape[0]
    INF = math.inf
    # 1-based arrays, index 0 is a sentinel column.
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match_col = [0] * (n + 1)  # row matched to column j
    way = [0] * (n + 1)
    rows = a.tolist()
    for i in range(1, n + 1):
        match_col[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match_col[j0]
            row = rows[i0 - 1]
            ui0 = u[i0]
            delta = INF
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match_col[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match_col[j0] = match_col[j1]
            j0 = j1
    col = [0] * n
    for j in range(1, n + 1):
        col[match_col[j] - 1] = j - 1
    # Minimization potentials (u, v) satisfy u_i + v_j <= a_ij; negate for the max form.
    return col, -np.array(u[1:]), -np.array(v[1:])


def _tight_edges(weights: np.ndarray, u: np.ndarray, w: np.ndarray, tol: float) -> np.ndarray:
    return np.abs(u[:, None] + w[None, :] - weights) <= tol


def _lex_smallest(tight: np.ndarray, start: list[int]) -> list[int]:
    """Lexicographically smallest perfect matching inside ``tight``, given one."""
    n = tight.shape[0]
    col = list(start)
    row_of = [0] * n
    for i, j in enumerate(col):
        row_of[j] = i
    fixed_rows = [False] * n
    fixed_cols = [False] * n
    for i in range(n):
        for j in range(n):
            if fixed_cols[j] or not tight[i, j]:
                continue
            if col[i] == j:
                break
            # Need an alternating path from row_of[j] to column col[i] avoiding fixed
            # rows/cols and avoiding row i and column j.
            src, target = row_of[j], col[i]
            prev = {src: None}
            queue = deque([src])
            found_row = None
            while queue and found_row is None:
                r = queue.popleft()
                for c in range(n):
                    if fixed_cols[c] or c == j or not tight[r, c]:
                        continue
                    if c == target:
                        found_row = r
                        break
                    nr = row_of[c]
                    if nr not in prev and not fixed_rows[nr] and nr != i:
                        prev[nr] = (r, c)
                        queue.append(nr)
            if found_row is None:
                continue
            # Rotate: found_row takes target, each predecessor shifts along the path.
            r, c = found_row, target
            while r is not None:
                old = col[r]
                col[r] = c
                row_of[c] = r
                c = old
                step = prev[r]
                r = step[0] if step else None
            col[i] = j
            row_of[j] = i
            break
        fixed_rows[i] = True
        fixed_cols[col[i]] = True
    return col


def optimal_welfare(instance: RoscaInstance) -> tuple[float, Allocation]:
    """Maximum total allocated value and the lexicographically smallest maximizer."""
    v = instance.values
    col, u, w = hungarian(v)
    base = Allocation(tuple(col))
    tol = 1e-9 * instance.scale
    lex = Allocation(tuple(_lex_smallest(_tight_edges(v, u, w, tol), col)))
    best, best_alloc = matching_weight(instance, base), base
    lex_val = matching_weight(instance, lex)
    if lex_val >= best:
        best, best_alloc = lex_val, lex
    return best, best_alloc


def brute_force_optimal(instance: RoscaInstance) -> tuple[float, Allocation]:
    """Exhaustive maximum over all n! allocations; first maximizer in lexicographic order."""
    if instance.n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force refused for n={instance.n} > {BRUTE_FORCE_MAX_N}")
    best, best_perm = -math.inf, None
    v = instance.values
    for perm in itertools.permutations(range(instance.n)):
        s = math.fsum(v[i, t] for i, t in enumerate(perm))
        if s > best:
            best, best_perm = s, perm
    return best, Allocation(best_perm)
