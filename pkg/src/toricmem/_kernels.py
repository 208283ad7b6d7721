"""Numba-accelerated inner loops, with transparent pure-Python fallback.

Everything here is written against plain numpy arrays so the same code runs
(uncompiled, slowly) if numba is unavailable.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - mirror always ships numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


@njit(cache=True)
def bfs_all_rows(indptr, other, n_vertices):
    """All-pairs unweighted BFS distances over a CSR adjacency (int16)."""
    dist = np.full((n_vertices, n_vertices), -1, np.int16)
    queue = np.empty(n_vertices, np.int32)
    for s in range(n_vertices):
        row = dist[s]
        row[s] = 0
        queue[0] = s
        head, tail = 0, 1
        while head < tail:
            v = queue[head]
            head += 1
            dv = row[v]
            for k in range(indptr[v], indptr[v + 1]):
                w = other[k]
                if row[w] < 0:
                    row[w] = dv + 1
                    queue[tail] = w
                    tail += 1
    return dist


def warmup():
    """Trigger jit compilation of the kernels (call before forking workers)."""
    indptr = np.array([0, 2, 4], np.int32)
    other = np.array([1, 1, 0, 0], np.int32)
    bfs_all_rows(indptr, other, 2)
