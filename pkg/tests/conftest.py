import math

import numpy as np
import pytest

from fpplab import DirectionFrame, EdgeId, EdgeWeightField, WeightDistribution


@pytest.fixture(scope="session")
def exp1():
    return WeightDistribution.exponential(1.0)


@pytest.fixture(scope="session")
def diag():
    return DirectionFrame.diagonal()


@pytest.fixture(scope="session")
def axis():
    return DirectionFrame.axis()


def brute_force_passage(field: EdgeWeightField, src, dst, window, region=None):
    """Exhaustive minimum over self-avoiding paths inside the window.

    Positive weights make best-so-far pruning exact. Only usable on tiny
    windows; this is the independent oracle the engine is checked against.
    """
    src, dst = tuple(src), tuple(dst)
    best = [math.inf, None]

    def neighbors(v):
        x, y = v
        for w in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if window.contains(w) and (region is None or region(*w)):
                yield w

    def dfs(v, visited, acc):
        if acc >= best[0]:
            return
        if v == dst:
            best[0] = acc
            best[1] = list(visited)
            return
        for w in neighbors(v):
            if w not in visited:
                visited.append(w)
                dfs(w, visited, acc + field.weight(EdgeId.between(v, w)))
                visited.pop()

    if region is not None and not (region(*src) and region(*dst)):
        return math.inf, None
    dfs(src, [src], 0.0)
    return best[0], best[1]


def path_weight(field: EdgeWeightField, path) -> float:
    return sum(
        field.weight(EdgeId.between(tuple(path[i]), tuple(path[i + 1])))
        for i in range(len(path) - 1)
    )


def two_smallest_path_sums(field: EdgeWeightField, src, dst, window):
    """The two smallest self-avoiding path sums (for uniqueness checks)."""
    src, dst = tuple(src), tuple(dst)
    sums = []

    def dfs(v, visited, acc):
        if v == dst:
            sums.append(acc)
            return
        x, y = v
        for w in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if window.contains(w) and w not in visited:
                visited.append(w)
                dfs(w, visited, acc + field.weight(EdgeId.between(v, w)))
                visited.pop()

    dfs(src, [src], 0.0)
    sums.sort()
    return sums[0], (sums[1] if len(sums) > 1 else math.inf)


def seeded_rng(tag: int) -> np.random.Generator:
    return np.random.default_rng(0xF99 + tag)
