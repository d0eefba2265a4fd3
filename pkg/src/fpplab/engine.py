"""Exact shortest-path computation over the weighted lattice.

Searches run on finite windows, but results carry an exactness
certificate: whenever a geodesic touches the window boundary the window
is regrown and the search repeated, so a successful result is the true
unrestricted optimum (boundary excursions beyond the final window cannot
be shorter). Weights are generated lazily inside the window by the
weights module; the heap kernel itself lives in ``kernels_numba`` /
``kernels_py`` and is selected by ``FPP_LAB_BACKEND``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import backend
from .errors import (
    DegenerateChord,
    MultipleContacts,
    NoCrossing,
    SurrogateTooFlat,
    Unreachable,
    WindowExhausted,
)
from .geometry import DirectionFrame, LatticePoint, floor_point
from .weights import Axis, EdgeId, EdgeWeightField

__all__ = [
    "Window",
    "WindowPolicy",
    "GeodesicResult",
    "SourceTree",
    "ResampleRule",
    "resample_none",
    "resample_all",
    "resample_beyond_chord",
    "resample_outside_region",
    "resample_matching",
    "passage_time",
    "passage_time_to_many",
    "source_tree",
    "wet_region",
    "hitting_time",
    "h_ball",
    "h_ball_boundary",
    "resample_passage_time",
    "restricted_passage_time",
    "wandering",
]

_HIT_TIE_TOL = 1e-12


def _get_kernel():
    if backend.use_numba():
        from . import kernels_numba

        return kernels_numba.dijkstra_grid
    from . import kernels_py

    return kernels_py.dijkstra_grid


@dataclass(frozen=True)
class Window:
    """Inclusive rectangle of lattice vertices [x0, x1] x [y0, y1]."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ValueError("window corners out of order")

    @property
    def nx(self) -> int:
        return self.x1 - self.x0 + 1

    @property
    def ny(self) -> int:
        return self.y1 - self.y0 + 1

    @property
    def n_vertices(self) -> int:
        return self.nx * self.ny

    def contains(self, p: Iterable[int]) -> bool:
        x, y = p
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def on_boundary(self, p: Iterable[int]) -> bool:
        x, y = p
        return x == self.x0 or x == self.x1 or y == self.y0 or y == self.y1

    def index(self, p: Iterable[int]) -> int:
        x, y = p
        return (y - self.y0) * self.nx + (x - self.x0)

    def point(self, idx: int) -> LatticePoint:
        return LatticePoint(self.x0 + idx % self.nx, self.y0 + idx // self.nx)

    @classmethod
    def around(cls, points: Sequence[Iterable[int]], pad: int) -> "Window":
        xs = [int(p[0]) for p in points]
        ys = [int(p[1]) for p in points]
        return cls(min(xs) - pad, min(ys) - pad, max(xs) + pad, max(ys) + pad)


@dataclass(frozen=True)
class WindowPolicy:
    """How search windows are sized and regrown.

    The initial window is the bounding box of the query points inflated by
    ``inflation`` times their spread on every side; each retry multiplies
    the inflation by ``growth``, up to ``max_expansions`` retries. A policy
    with ``fixed`` set pins the search to that window and never expands
    (boundary contact is then reported in the result, not an error).
    """

    inflation: float = 1.0
    growth: float = 1.5
    max_expansions: int = 8
    fixed: Window | None = None

    @classmethod
    def fixed_window(cls, window: Window) -> "WindowPolicy":
        return cls(fixed=window)

    def window_for(self, points: Sequence[Iterable[int]], attempt: int) -> Window:
        if self.fixed is not None:
            return self.fixed
        xs = [float(p[0]) for p in points]
        ys = [float(p[1]) for p in points]
        spread = math.hypot(max(xs) - min(xs), max(ys) - min(ys))
        pad = max(1, math.ceil(self.inflation * (self.growth**attempt) * max(spread, 1.0)))
        return Window.around(points, pad)

    def attempts(self) -> int:
        return 1 if self.fixed is not None else self.max_expansions + 1


DEFAULT_POLICY = WindowPolicy()


@dataclass(frozen=True)
class GeodesicResult:
    """Passage time plus the unique minimizing lattice path."""

    time: float
    path: list[LatticePoint]
    touched_boundary: bool
    window_used: Window
    expansions: int

    @property
    def source(self) -> LatticePoint:
        return self.path[0]

    @property
    def target(self) -> LatticePoint:
        return self.path[-1]


class SourceTree:
    """Single-source distances and parent links over one window."""

    def __init__(self, source: LatticePoint, window: Window, dist: np.ndarray, parent: np.ndarray):
        self.source = source
        self.window = window
        self._dist = dist
        self._parent = parent

    def dist_at(self, p: Iterable[int]) -> float:
        if not self.window.contains(p):
            raise KeyError(f"{tuple(p)} outside window")
        return float(self._dist[self.window.index(p)])

    def parent_of(self, p: Iterable[int]) -> LatticePoint | None:
        if not self.window.contains(p):
            raise KeyError(f"{tuple(p)} outside window")
        idx = self._parent[self.window.index(p)]
        return None if idx < 0 else self.window.point(int(idx))

    def path_to(self, p: Iterable[int]) -> list[LatticePoint]:
        return _walk_path(self.window, self._parent, self.window.index(p))

    def dist_array(self) -> np.ndarray:
        return self._dist

    def wet_region(self, t: float) -> set[LatticePoint]:
        idxs = np.nonzero(self._dist <= t)[0]
        return {self.window.point(int(i)) for i in idxs}


def wet_region(tree: SourceTree, t: float) -> set[LatticePoint]:
    """Vertices reachable from the tree's source within time t."""
    return tree.wet_region(t)


# ---------------------------------------------------------------------------
# resampling rules

@dataclass(frozen=True)
class ResampleRule:
    """Which edges draw fresh weights from an alternate stream.

    Structured kinds get vectorized masks; ``predicate`` falls back to a
    per-edge python loop, which is fine at desk scale.
    """

    kind: str  # none | all | beyond_chord | outside_set | predicate
    frame: DirectionFrame | None = None
    threshold: float = 0.0
    points: frozenset = dataclass_field(default_factory=frozenset)
    predicate: Callable[[EdgeId], bool] | None = None


def resample_none() -> ResampleRule:
    return ResampleRule("none")


def resample_all() -> ResampleRule:
    return ResampleRule("all")


def resample_beyond_chord(frame: DirectionFrame, threshold: float) -> ResampleRule:
    """Resample every edge with an endpoint whose chord coordinate exceeds
    ``threshold``; weights on the half-space at or below it stay frozen."""
    return ResampleRule("beyond_chord", frame=frame, threshold=threshold)


def resample_outside_region(points: Iterable[Iterable[int]]) -> ResampleRule:
    """Resample every edge with an endpoint outside the given vertex set."""
    return ResampleRule("outside_set", points=frozenset(LatticePoint(*p) for p in points))


def resample_matching(predicate: Callable[[EdgeId], bool]) -> ResampleRule:
    return ResampleRule("predicate", predicate=predicate)


def _coerce_rule(rule) -> ResampleRule:
    if isinstance(rule, ResampleRule):
        return rule
    if callable(rule):
        return resample_matching(rule)
    raise TypeError("resample rule must be a ResampleRule or an EdgeId predicate")


def _resample_masks(rule: ResampleRule, window: Window) -> tuple[np.ndarray, np.ndarray]:
    nx, ny = window.nx, window.ny
    if rule.kind == "all":
        return np.ones((ny, max(nx - 1, 0)), bool), np.ones((max(ny - 1, 0), nx), bool)
    if rule.kind == "beyond_chord":
        xs = np.arange(window.x0, window.x1 + 1, dtype=np.float64)
        ys = np.arange(window.y0, window.y1 + 1, dtype=np.float64)
        pi1, _ = rule.frame.project_arrays(xs[None, :], ys[:, None])
        above = pi1 > rule.threshold
        hm = above[:, :-1] | above[:, 1:]
        vm = above[:-1, :] | above[1:, :]
        return hm, vm
    if rule.kind == "outside_set":
        inside = np.zeros((ny, nx), bool)
        for px, py in rule.points:
            if window.contains((px, py)):
                inside[py - window.y0, px - window.x0] = True
        hm = ~(inside[:, :-1] & inside[:, 1:])
        vm = ~(inside[:-1, :] & inside[1:, :])
        return hm, vm
    if rule.kind == "predicate":
        hm = np.zeros((ny, max(nx - 1, 0)), bool)
        vm = np.zeros((max(ny - 1, 0), nx), bool)
        pred = rule.predicate
        for j in range(ny):
            for i in range(nx - 1):
                hm[j, i] = pred(EdgeId((window.x0 + i, window.y0 + j), Axis.HORIZONTAL))
        for j in range(ny - 1):
            for i in range(nx):
                vm[j, i] = pred(EdgeId((window.x0 + i, window.y0 + j), Axis.VERTICAL))
        return hm, vm
    raise ValueError(f"unknown resample kind {rule.kind!r}")


def _window_weights(
    field: EdgeWeightField,
    window: Window,
    rule: ResampleRule | None = None,
    alt_stream: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    hw, vw = field.window_weights(window.x0, window.y0, window.nx, window.ny)
    if rule is not None and rule.kind != "none":
        alt = field.with_stream(alt_stream)
        ha, va = alt.window_weights(window.x0, window.y0, window.nx, window.ny)
        hm, vm = _resample_masks(rule, window)
        hw = np.where(hm, ha, hw)
        vw = np.where(vm, va, vw)
    return np.ascontiguousarray(hw), np.ascontiguousarray(vw)


# ---------------------------------------------------------------------------
# searches

_EMPTY_U8 = np.zeros(0, np.uint8)


def _search(window: Window, hw, vw, src_idx: int, mode: int, target_idxs, allowed=None):
    n = window.n_vertices
    dist = np.full(n, np.inf)
    parent = np.full(n, -1, np.int64)
    finalized = np.zeros(n, np.uint8)
    target_mask = np.zeros(n, np.uint8)
    for t in target_idxs:
        target_mask[t] = 1
    n_targets = int(target_mask.sum())
    allowed_arr = _EMPTY_U8 if allowed is None else allowed
    contact, second = _get_kernel()(
        window.nx, window.ny, hw, vw, src_idx, mode, target_mask, n_targets, allowed_arr, dist, parent, finalized
    )
    return dist, parent, finalized, int(contact), int(second)


def _walk_path(window: Window, parent: np.ndarray, idx: int) -> list[LatticePoint]:
    rev = [idx]
    while True:
        nxt = int(parent[rev[-1]])
        if nxt < 0:
            break
        rev.append(nxt)
    return [window.point(i) for i in reversed(rev)]


def _path_touches_boundary(window: Window, path: list[LatticePoint]) -> bool:
    return any(window.on_boundary(p) for p in path)


def _oriented_path_time(window: Window, hw: np.ndarray, vw: np.ndarray, path: list[LatticePoint]) -> float:
    """Sum the path's edge weights from its lexicographically smaller
    endpoint, so swapping source and target yields a bit-identical time."""
    if len(path) < 2:
        return 0.0
    seq = path if path[0] <= path[-1] else list(reversed(path))
    x0, y0 = window.x0, window.y0
    total = 0.0
    for p, q in zip(seq, seq[1:]):
        if p.y == q.y:
            total += hw[p.y - y0, min(p.x, q.x) - x0]
        else:
            total += vw[min(p.y, q.y) - y0, p.x - x0]
    return float(total)


def passage_time(
    field: EdgeWeightField,
    src,
    dst,
    policy: WindowPolicy = DEFAULT_POLICY,
) -> GeodesicResult:
    """Minimal passage time and geodesic between two points.

    Real-valued endpoints are floored into the lattice first. With a
    growing policy the result is certified exact: the geodesic does not
    touch the final window's boundary. Raises ``WindowExhausted`` when the
    expansion budget runs out.
    """
    return resample_passage_time(field, src, dst, resample_none(), None, policy)


def resample_passage_time(
    field: EdgeWeightField,
    src,
    dst,
    resample_edges,
    alt_stream: int | None,
    policy: WindowPolicy = DEFAULT_POLICY,
) -> GeodesicResult:
    """Passage time where edges matched by the rule draw weights from an
    independent stream and all other edges keep their original weights."""
    rule = _coerce_rule(resample_edges)
    if rule.kind != "none":
        if alt_stream is None or alt_stream == field.stream_tag:
            raise ValueError("alt_stream must differ from the field's stream_tag")
    src_l, dst_l = floor_point(src), floor_point(dst)
    if src_l == dst_l:
        w = Window(src_l.x, src_l.y, src_l.x, src_l.y)
        return GeodesicResult(0.0, [src_l], False, w, 0)

    last: GeodesicResult | None = None
    for attempt in range(policy.attempts()):
        window = policy.window_for([src_l, dst_l], attempt)
        hw, vw = _window_weights(field, window, rule, alt_stream)
        dist, parent, _, _, _ = _search(window, hw, vw, window.index(src_l), 1, [window.index(dst_l)])
        path = _walk_path(window, parent, window.index(dst_l))
        touched = _path_touches_boundary(window, path)
        last = GeodesicResult(_oriented_path_time(window, hw, vw, path), path, touched, window, attempt)
        if not touched or policy.fixed is not None:
            return last
    raise WindowExhausted(
        f"geodesic still touches the boundary after {policy.max_expansions} expansions "
        f"(window {last.window_used})"
    )


@dataclass(frozen=True)
class MultiTargetResult:
    """Certified passage times from one source to several targets under a
    single weight realization."""

    source: LatticePoint
    targets: list[LatticePoint]
    times: np.ndarray
    window: Window
    expansions: int
    _parent: np.ndarray
    _dist: np.ndarray

    def path_to(self, target) -> list[LatticePoint]:
        return _walk_path(self.window, self._parent, self.window.index(target))

    def geodesic(self, target) -> GeodesicResult:
        t = LatticePoint(*target)
        time = float(self.times[self.targets.index(t)])
        return GeodesicResult(time, self.path_to(t), False, self.window, self.expansions)


def passage_time_to_many(
    field: EdgeWeightField,
    src,
    targets: Sequence,
    policy: WindowPolicy = DEFAULT_POLICY,
    resample_edges: ResampleRule | None = None,
    alt_stream: int | None = None,
) -> MultiTargetResult:
    """Passage times from one source to many targets, all under the same
    weight realization, certified like ``passage_time``.

    This is the workhorse behind every contrast statistic: transverse
    increments, increment variances and long-range correlations all read
    several passage times off one realization.
    """
    rule = resample_none() if resample_edges is None else _coerce_rule(resample_edges)
    src_l = floor_point(src)
    targets_l = [floor_point(t) for t in targets]
    unique = sorted(set(targets_l) - {src_l})

    for attempt in range(policy.attempts()):
        window = policy.window_for([src_l, *targets_l], attempt)
        hw, vw = _window_weights(field, window, rule, alt_stream)
        idxs = [window.index(t) for t in unique]
        dist, parent, finalized, _, _ = _search(window, hw, vw, window.index(src_l), 1, idxs)
        touched = False
        for t in unique:
            if _path_touches_boundary(window, _walk_path(window, parent, window.index(t))):
                touched = True
                break
        if touched and policy.fixed is None:
            continue
        per_target = {
            t: _oriented_path_time(window, hw, vw, _walk_path(window, parent, window.index(t)))
            for t in unique
        }
        per_target[src_l] = 0.0
        times = np.array([per_target[t] for t in targets_l])
        return MultiTargetResult(src_l, targets_l, times, window, attempt, parent, dist)
    raise WindowExhausted(f"multi-target search exhausted {policy.max_expansions} expansions")


def source_tree(field: EdgeWeightField, src, window: Window) -> SourceTree:
    """Distances and parent links from one source to every vertex of the
    window, confined to the window."""
    src_l = floor_point(src)
    if not window.contains(src_l):
        raise ValueError(f"source {src_l} outside window")
    hw, vw = _window_weights(field, window)
    dist, parent, _, _, _ = _search(window, hw, vw, window.index(src_l), 0, [])
    return SourceTree(src_l, window, dist, parent)


def hitting_time(
    field: EdgeWeightField,
    src,
    target: Iterable,
    window: Window,
    certified: bool = True,
) -> tuple[float, LatticePoint, set[LatticePoint]]:
    """First time the growing wet region from ``src`` reaches ``target``.

    Returns ``(tau, contact, frozen)`` where ``contact`` is the unique
    minimizing target vertex and ``frozen`` the wet region at time tau.
    Raises ``MultipleContacts`` on a floating-point tie between target
    points (almost surely impossible; signals a degenerate seed). With
    ``certified`` (the default), a frozen region reaching the window
    boundary raises ``WindowExhausted`` because the window was too small
    for an exact answer; ``certified=False`` returns the window-confined
    hitting data as is.
    """
    src_l = floor_point(src)
    target_pts = {LatticePoint(*floor_point(t)) for t in target}
    if not target_pts:
        raise ValueError("target set is empty")
    if src_l in target_pts:
        raise ValueError("source must not belong to the target set")
    inside = [t for t in target_pts if window.contains(t)]
    if not inside:
        raise ValueError("target set does not intersect the window")
    if not window.contains(src_l):
        raise ValueError(f"source {src_l} outside window")

    hw, vw = _window_weights(field, window)
    dist, parent, finalized, contact, second = _search(
        window, hw, vw, window.index(src_l), 2, [window.index(t) for t in inside]
    )
    if contact < 0:
        raise Unreachable("no target vertex was reached")
    if second >= 0:
        raise MultipleContacts(
            f"targets {window.point(contact)} and {window.point(second)} reached within {_HIT_TIE_TOL}"
        )
    tau = float(dist[contact])
    contact_pt = window.point(contact)
    wet_idx = np.nonzero((dist <= tau) & (finalized == 1))[0]
    frozen = {window.point(int(i)) for i in wet_idx}
    if certified and any(window.on_boundary(p) for p in frozen):
        raise WindowExhausted("frozen region touches the window boundary; enlarge the window")
    overlap = frozen & target_pts
    if overlap != {contact_pt}:
        raise MultipleContacts(f"frozen region meets the target set at {sorted(overlap)}")
    return tau, contact_pt, frozen


def h_ball(
    h_func: Callable[[int, int], float],
    center,
    k: float,
    containment_factor: float = 4.0,
) -> tuple[set[LatticePoint], set[LatticePoint], float]:
    """Smallest ball of a surrogate distance ``h_func`` around ``center``
    containing the Euclidean ball of radius k, with its vertex boundary.

    ``h_func(dx, dy)`` maps a lattice displacement to a nonnegative value.
    Returns ``(ball, boundary, level)``. Raises ``SurrogateTooFlat`` when
    the ball is not bounded inside the scan window of radius
    ``ceil(containment_factor * k)``.
    """
    if k < 2:
        raise ValueError("radius k must be at least 2")
    cx, cy = floor_point(center)
    radius = math.ceil(containment_factor * k)
    level = -math.inf
    kk = math.ceil(k)
    for dx in range(-kk, kk + 1):
        for dy in range(-kk, kk + 1):
            if dx * dx + dy * dy <= k * k:
                level = max(level, h_func(dx, dy))
    ball: set[LatticePoint] = set()
    for dx in range(-radius, radius + 1):
        for dy in range(-radius, radius + 1):
            if h_func(dx, dy) <= level:
                if abs(dx) == radius or abs(dy) == radius:
                    raise SurrogateTooFlat(
                        f"surrogate ball is unbounded within scan radius {radius}"
                    )
                ball.add(LatticePoint(cx + dx, cy + dy))
    boundary = {
        p
        for p in ball
        if any(q not in ball for q in ((p.x + 1, p.y), (p.x - 1, p.y), (p.x, p.y + 1), (p.x, p.y - 1)))
    }
    return ball, boundary, level


def h_ball_boundary(
    h_func: Callable[[int, int], float],
    center,
    k: float,
    containment_factor: float = 4.0,
) -> set[LatticePoint]:
    """Vertex boundary of the surrogate-distance ball around ``center``."""
    return h_ball(h_func, center, k, containment_factor)[1]


def restricted_passage_time(
    field: EdgeWeightField,
    src,
    dst,
    region: Callable[[int, int], bool],
    window: Window,
) -> GeodesicResult:
    """Minimum passage time over paths whose vertices all satisfy
    ``region(x, y)``, confined to the window.

    Raises ``Unreachable`` when no admissible path exists.
    """
    src_l, dst_l = floor_point(src), floor_point(dst)
    if not (region(*src_l) and region(*dst_l)):
        raise ValueError("source and target must satisfy the region predicate")
    if src_l == dst_l:
        return GeodesicResult(0.0, [src_l], False, window, 0)
    if not (window.contains(src_l) and window.contains(dst_l)):
        raise ValueError("source and target must lie inside the window")
    allowed = np.zeros(window.n_vertices, np.uint8)
    for j in range(window.ny):
        y = window.y0 + j
        base = j * window.nx
        for i in range(window.nx):
            if region(window.x0 + i, y):
                allowed[base + i] = 1
    hw, vw = _window_weights(field, window)
    dst_idx = window.index(dst_l)
    dist, parent, finalized, _, _ = _search(window, hw, vw, window.index(src_l), 1, [dst_idx], allowed)
    if not finalized[dst_idx]:
        raise Unreachable("no admissible path inside the window")
    path = _walk_path(window, parent, dst_idx)
    time = _oriented_path_time(window, hw, vw, path)
    return GeodesicResult(time, path, _path_touches_boundary(window, path), window, 0)


def wandering(result: GeodesicResult, frame: DirectionFrame, base, k: float) -> float:
    """Maximum tangential deviation of the geodesic from its chord at chord
    coordinate ``k``.

    The geodesic is treated as the polyline through its lattice points, so
    crossings of the line at non-integer chord coordinates are found by
    segment intersection. Raises ``NoCrossing`` when the polyline never
    attains the coordinate (including negative ``k`` the path does not
    reach) and ``DegenerateChord`` when the endpoints have zero chord
    separation.
    """
    ux, uy = float(base[0]), float(base[1])
    px = np.array([p.x for p in result.path], dtype=np.float64) - ux
    py = np.array([p.y for p in result.path], dtype=np.float64) - uy
    pi1, pi2 = frame.project_arrays(px, py)
    chord1, chord2 = pi1[-1], pi2[-1]
    if abs(chord1) < 1e-12:
        raise DegenerateChord("endpoints have zero extent along the frame direction")
    slope = chord2 / chord1

    offsets: list[float] = []
    a = pi1 - k
    hits = np.abs(a) == 0.0
    offsets.extend(pi2[hits].tolist())
    if len(a) > 1:
        a0, a1 = a[:-1], a[1:]
        crossing = (a0 * a1) < 0.0
        if crossing.any():
            t = a0[crossing] / (a0[crossing] - a1[crossing])
            w2 = pi2[:-1][crossing] + t * (pi2[1:][crossing] - pi2[:-1][crossing])
            offsets.extend(w2.tolist())
    if not offsets:
        raise NoCrossing(f"geodesic polyline never attains chord coordinate {k}")
    return float(max(abs(o - k * slope) for o in offsets))
