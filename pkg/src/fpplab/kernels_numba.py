"""Numba-compiled shortest-path kernel over a rectangular lattice window.

Vertices are window-local row-major indices ``v = y*nx + x`` so the hot
loop is allocation-free; the binary heap lives in two flat arrays with
lazy deletion. Tie-breaking on equal tentative distances prefers the
lexicographically smaller parent (by window coordinates), which makes the
parent tree deterministic; the pure-python twin in ``kernels_py`` applies
the same rule and must produce bit-identical ``dist``/``parent`` arrays.

Modes:
  0 - full single-source tree (run until the heap drains)
  1 - stop once all marked targets are finalized
  2 - hitting: stop once every vertex no farther than the first-reached
      target is finalized; reports the contact vertex and any second
      target within 1e-12 of the hitting time.
"""

import numpy as np
from numba import njit

__all__ = ["dijkstra_grid"]

_TIE_TOL = 1e-12


@njit(cache=True, nogil=True)
def dijkstra_grid(nx, ny, hw, vw, src, mode, target_mask, n_targets, allowed, dist, parent, finalized):
    n_vertices = nx * ny
    restrict = allowed.shape[0] > 0

    cap = n_vertices + 16
    heap_key = np.empty(cap, np.float64)
    heap_val = np.empty(cap, np.int64)
    size = 0

    dist[src] = 0.0
    heap_key[0] = 0.0
    heap_val[0] = src
    size = 1

    remaining = n_targets
    tau = np.inf
    contact = np.int64(-1)
    second = np.int64(-1)

    while size > 0:
        d = heap_key[0]
        v = heap_val[0]
        # pop root, sift last element down
        size -= 1
        lk = heap_key[size]
        lv = heap_val[size]
        i = 0
        while True:
            left = 2 * i + 1
            if left >= size:
                break
            c = left
            right = left + 1
            if right < size and heap_key[right] < heap_key[left]:
                c = right
            if heap_key[c] < lk:
                heap_key[i] = heap_key[c]
                heap_val[i] = heap_val[c]
                i = c
            else:
                break
        if size > 0:
            heap_key[i] = lk
            heap_val[i] = lv

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

        for side in range(4):
            if side == 0:
                if x + 1 >= nx:
                    continue
                w = v + 1
                wt = hw[y, x]
            elif side == 1:
                if x <= 0:
                    continue
                w = v - 1
                wt = hw[y, x - 1]
            elif side == 2:
                if y + 1 >= ny:
                    continue
                w = v + nx
                wt = vw[y, x]
            else:
                if y <= 0:
                    continue
                w = v - nx
                wt = vw[y - 1, x]

            if restrict and allowed[w] == 0:
                continue
            nd = d + wt
            dw = dist[w]
            if nd < dw:
                dist[w] = nd
                parent[w] = v
                if size >= cap:
                    new_cap = cap * 2
                    nk = np.empty(new_cap, np.float64)
                    nv = np.empty(new_cap, np.int64)
                    nk[:size] = heap_key[:size]
                    nv[:size] = heap_val[:size]
                    heap_key = nk
                    heap_val = nv
                    cap = new_cap
                # sift up
                j = size
                size += 1
                while j > 0:
                    p = (j - 1) // 2
                    if heap_key[p] > nd:
                        heap_key[j] = heap_key[p]
                        heap_val[j] = heap_val[p]
                        j = p
                    else:
                        break
                heap_key[j] = nd
                heap_val[j] = w
            elif nd == dw:
                # deterministic tie-break: lexicographically smaller parent
                p = parent[w]
                if p >= 0:
                    px = p % nx
                    py = p // nx
                    if x < px or (x == px and y < py):
                        parent[w] = v

    return contact, second
