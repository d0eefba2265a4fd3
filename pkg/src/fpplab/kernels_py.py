"""Pure python/heapq twin of the numba shortest-path kernel.

Same contract and tie-breaking as ``kernels_numba.dijkstra_grid``; the
final ``dist``/``parent`` arrays are bit-identical because both kernels
compute the same sums in tree order and normalize equal-distance parents
to the lexicographic minimum. Selected with ``FPP_LAB_BACKEND=numpy``.
"""

import heapq

import numpy as np

__all__ = ["dijkstra_grid"]

_TIE_TOL = 1e-12


def dijkstra_grid(nx, ny, hw, vw, src, mode, target_mask, n_targets, allowed, dist, parent, finalized):
    restrict = allowed.shape[0] > 0
    heap = [(0.0, int(src))]
    dist[src] = 0.0

    remaining = int(n_targets)
    tau = np.inf
    contact = -1
    second = -1
    push = heapq.heappush
    pop = heapq.heappop

    while heap:
        d, v = pop(heap)
        if finalized[v]:
            continue
        if mode == 2 and d > tau + _TIE_TOL:
            break
        finalized[v] = 1

        if target_mask[v]:
            if mode == 1:
                remaining -= 1
                if remaining <= 0:
                    break
            elif mode == 2:
                if contact < 0:
                    contact = v
                    tau = d
                elif second < 0 and d <= tau + _TIE_TOL:
                    second = v

        x = v % nx
        y = v // nx
        if x + 1 < nx:
            _relax(v, v + 1, d + hw[y, x], nx, restrict, allowed, dist, parent, heap, push)
        if x > 0:
            _relax(v, v - 1, d + hw[y, x - 1], nx, restrict, allowed, dist, parent, heap, push)
        if y + 1 < ny:
            _relax(v, v + nx, d + vw[y, x], nx, restrict, allowed, dist, parent, heap, push)
        if y > 0:
            _relax(v, v - nx, d + vw[y - 1, x], nx, restrict, allowed, dist, parent, heap, push)

    return contact, second


def _relax(v, w, nd, nx, restrict, allowed, dist, parent, heap, push):
    if restrict and allowed[w] == 0:
        return
    dw = dist[w]
    if nd < dw:
        dist[w] = nd
        parent[w] = v
        push(heap, (nd, w))
    elif nd == dw:
        p = parent[w]
        if p >= 0:
            x, y = v % nx, v // nx
            px, py = p % nx, p // nx
            if x < px or (x == px and y < py):
                parent[w] = v
