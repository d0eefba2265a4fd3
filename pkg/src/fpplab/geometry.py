"""Planar geometry: lattice points, direction frames, oblique projections,
the floor map into the lattice, and discretized transverse segments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DegenerateFrame

__all__ = [
    "LatticePoint",
    "RealPoint",
    "floor_point",
    "DirectionFrame",
    "TransverseSegment",
]

_FRAME_TOL = 1e-9


class LatticePoint(NamedTuple):
    x: int
    y: int


class RealPoint(NamedTuple):
    x: float
    y: float


def floor_point(p: Iterable[float]) -> LatticePoint:
    """Down-left corner of the unit cell containing p."""
    x, y = p
    return LatticePoint(math.floor(x), math.floor(y))


@dataclass(frozen=True)
class DirectionFrame:
    """Ordered pair of directions (theta, theta_t) used as an oblique basis.

    ``theta`` points along the chord under study and ``theta_t`` along the
    tangent of the limit shape there. For the lattice symmetry directions
    (axis and diagonal) the tangent is perpendicular by symmetry, so those
    frames need no empirical limit-shape input; for other directions the
    caller supplies ``theta_t`` explicitly.
    """

    theta: float
    theta_t: float

    def __post_init__(self):
        if abs(math.sin(self.theta_t - self.theta)) <= _FRAME_TOL:
            raise DegenerateFrame(
                f"directions {self.theta} and {self.theta_t} are numerically parallel"
            )

    @classmethod
    def axis(cls) -> "DirectionFrame":
        return cls(0.0, math.pi / 2)

    @classmethod
    def diagonal(cls) -> "DirectionFrame":
        return cls(math.pi / 4, 3 * math.pi / 4)

    @property
    def u_theta(self) -> RealPoint:
        return RealPoint(math.cos(self.theta), math.sin(self.theta))

    @property
    def u_tangent(self) -> RealPoint:
        return RealPoint(math.cos(self.theta_t), math.sin(self.theta_t))

    def project(self, v: Iterable[float]) -> tuple[float, float]:
        """Coordinates (pi1, pi2) with v = pi1*u_theta + pi2*u_tangent.

        Solved through the explicit inverse of the 2x2 basis matrix.
        """
        vx, vy = v
        det = math.sin(self.theta_t - self.theta)
        ct, st = math.cos(self.theta), math.sin(self.theta)
        ctt, stt = math.cos(self.theta_t), math.sin(self.theta_t)
        pi1 = (vx * stt - vy * ctt) / det
        pi2 = (vy * ct - vx * st) / det
        return pi1, pi2

    def project_arrays(self, xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        det = math.sin(self.theta_t - self.theta)
        ct, st = math.cos(self.theta), math.sin(self.theta)
        ctt, stt = math.cos(self.theta_t), math.sin(self.theta_t)
        return (xs * stt - ys * ctt) / det, (ys * ct - xs * st) / det

    def point_at(self, n: float, ell: float) -> RealPoint:
        ct, st = math.cos(self.theta), math.sin(self.theta)
        ctt, stt = math.cos(self.theta_t), math.sin(self.theta_t)
        return RealPoint(n * ct + ell * ctt, n * st + ell * stt)


@dataclass(frozen=True)
class TransverseSegment:
    """Segment transverse to the frame: chord coordinate fixed at ``n``,
    tangential coordinate running over [d, d + L]."""

    frame: DirectionFrame
    n: float
    L: float
    d: float = 0.0

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("segment width must be positive")

    def point(self, ell: float) -> RealPoint:
        return self.frame.point_at(self.n, ell)

    def lattice_points(self) -> list[LatticePoint]:
        """Floor images of the segment sampled at unit spacing.

        Both endpoint images are always included; duplicates are removed
        with order preserved (ascending tangential coordinate). A segment
        shorter than one unit cell may collapse to a single point, which is
        returned rather than treated as an error.
        """
        ells = [self.d + i for i in range(int(math.floor(self.L)) + 1)]
        if ells[-1] < self.d + self.L:
            ells.append(self.d + self.L)
        out: list[LatticePoint] = []
        seen = set()
        for ell in ells:
            p = floor_point(self.point(ell))
            if p not in seen:
                seen.add(p)
                out.append(p)
        return out
