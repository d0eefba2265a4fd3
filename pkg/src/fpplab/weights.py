"""Deterministic lazy edge weights on the planar integer lattice.

Every nearest-neighbor edge carries an i.i.d. nonnegative continuous
weight with finite exponential moments. Nothing is stored: a counter-based
hash of ``(master_seed, stream_tag, edge)`` yields a uniform variate which
is pushed through the inverse CDF of the configured distribution. Lookups
are therefore pure functions, independent of traversal order, and safe to
evaluate concurrently; windows of billions of edges cost no memory.

Distinct ``stream_tag`` values give mutually independent weight
configurations over the same lattice, which is how partially resampled
passage times are realized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

__all__ = [
    "Axis",
    "EdgeId",
    "WeightDistribution",
    "EdgeWeightField",
    "distribution_mean",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB

_NP_GOLDEN = np.uint64(_GOLDEN)
_NP_MIX_A = np.uint64(_MIX_A)
_NP_MIX_B = np.uint64(_MIX_B)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_NEG53 = 2.0**-53


class Axis(IntEnum):
    HORIZONTAL = 0
    VERTICAL = 1


@dataclass(frozen=True, order=True)
class EdgeId:
    """Canonical identifier of an undirected nearest-neighbor edge.

    ``origin`` is the lexicographically smaller endpoint; the edge runs to
    ``origin + e1`` (horizontal) or ``origin + e2`` (vertical), so every
    undirected edge has exactly one id.
    """

    origin: tuple[int, int]
    axis: Axis

    @classmethod
    def between(cls, u: tuple[int, int], v: tuple[int, int]) -> "EdgeId":
        (ux, uy), (vx, vy) = u, v
        if abs(ux - vx) + abs(uy - vy) != 1:
            raise ValueError(f"{u} and {v} are not nearest neighbors")
        if (vx, vy) < (ux, uy):
            ux, uy, vx, vy = vx, vy, ux, uy
        axis = Axis.HORIZONTAL if vx == ux + 1 else Axis.VERTICAL
        return cls((ux, uy), axis)

    def endpoints(self) -> tuple[tuple[int, int], tuple[int, int]]:
        x, y = self.origin
        if self.axis == Axis.HORIZONTAL:
            return (x, y), (x + 1, y)
        return (x, y), (x, y + 1)


@dataclass(frozen=True)
class WeightDistribution:
    """Edge-weight law: continuous, nonnegative, with a finite MGF near zero.

    ``kind`` is one of ``exponential`` (a=rate), ``uniform_shifted``
    (a=lo, b=hi) or ``weibull`` (a=shape, b=scale). Parameters violating
    the exponential-moment condition are rejected at construction
    (in particular Weibull shapes below 1).
    """

    kind: str
    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.kind == "exponential":
            if not self.a > 0:
                raise ValueError("exponential rate must be positive")
        elif self.kind == "uniform_shifted":
            if not (self.a >= 0 and self.b > self.a):
                raise ValueError("uniform_shifted needs 0 <= lo < hi")
        elif self.kind == "weibull":
            if not self.a >= 1:
                raise ValueError("weibull shape below 1 has no exponential moments")
            if not self.b > 0:
                raise ValueError("weibull scale must be positive")
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def exponential(cls, rate: float) -> "WeightDistribution":
        return cls("exponential", float(rate))

    @classmethod
    def uniform_shifted(cls, lo: float, hi: float) -> "WeightDistribution":
        return cls("uniform_shifted", float(lo), float(hi))

    @classmethod
    def weibull(cls, shape: float, scale: float) -> "WeightDistribution":
        return cls("weibull", float(shape), float(scale))

    def mean(self) -> float:
        """Exact closed-form mean of one edge weight."""
        if self.kind == "exponential":
            return 1.0 / self.a
        if self.kind == "uniform_shifted":
            return 0.5 * (self.a + self.b)
        return self.b * math.gamma(1.0 + 1.0 / self.a)

    def mgf_radius(self) -> float:
        """Supremum of c with E exp(c * weight) finite.

        Metadata only; no downstream computation relies on a specific value.
        """
        if self.kind == "exponential":
            return self.a
        if self.kind == "uniform_shifted":
            return math.inf
        return math.inf if self.a > 1 else 1.0 / self.b

    def quantile(self, u: np.ndarray) -> np.ndarray:
        """Inverse CDF, vectorized; u must lie strictly inside (0, 1)."""
        if self.kind == "exponential":
            return -np.log1p(-u) / self.a
        if self.kind == "uniform_shifted":
            return self.a + (self.b - self.a) * u
        return self.b * np.power(-np.log1p(-u), 1.0 / self.a)

    def cdf(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=np.float64)
        if self.kind == "exponential":
            return np.where(w < 0, 0.0, -np.expm1(-self.a * w))
        if self.kind == "uniform_shifted":
            return np.clip((w - self.a) / (self.b - self.a), 0.0, 1.0)
        z = np.where(w < 0, 0.0, w / self.b)
        return -np.expm1(-np.power(z, self.a))

    def as_dict(self) -> dict:
        if self.kind == "exponential":
            return {"kind": self.kind, "rate": self.a}
        if self.kind == "uniform_shifted":
            return {"kind": self.kind, "lo": self.a, "hi": self.b}
        return {"kind": self.kind, "shape": self.a, "scale": self.b}

    @classmethod
    def from_dict(cls, spec: dict) -> "WeightDistribution":
        kind = spec.get("kind")
        if kind == "exponential":
            return cls.exponential(spec["rate"])
        if kind == "uniform_shifted":
            return cls.uniform_shifted(spec["lo"], spec["hi"])
        if kind == "weibull":
            return cls.weibull(spec["shape"], spec["scale"])
        raise ValueError(f"unknown distribution kind {kind!r}")


def distribution_mean(d: WeightDistribution) -> float:
    return d.mean()


def _mix_int(z: int) -> int:
    # splitmix64 finalizer over python ints (masked to 64 bits)
    z ^= z >> 30
    z = (z * _MIX_A) & _MASK64
    z ^= z >> 27
    z = (z * _MIX_B) & _MASK64
    z ^= z >> 31
    return z


def _combine_int(h: int, v: int) -> int:
    return _mix_int(h ^ ((v + _GOLDEN) & _MASK64))


def _mix_arr(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> _S30)
    z = z * _NP_MIX_A
    z ^= z >> _S27
    z = z * _NP_MIX_B
    z ^= z >> _S31
    return z


def _combine_arr(h: np.ndarray, v: np.ndarray) -> np.ndarray:
    return _mix_arr(h ^ (v + _NP_GOLDEN))


def _to_u64(x: int) -> int:
    return x & _MASK64


@dataclass(frozen=True)
class EdgeWeightField:
    """Immutable, storage-free weight assignment for the whole lattice.

    ``weight(edge)`` depends only on (distribution, master_seed, stream_tag,
    edge id); repeated queries agree bit-exactly. Fields differing only in
    ``stream_tag`` behave as independent configurations.
    """

    distribution: WeightDistribution
    master_seed: int
    stream_tag: int = 0

    def _base_hash(self) -> int:
        return _combine_int(_mix_int(_to_u64(self.master_seed)), _to_u64(self.stream_tag))

    def with_stream(self, stream_tag: int) -> "EdgeWeightField":
        return EdgeWeightField(self.distribution, self.master_seed, stream_tag)

    def uniform(self, edge: EdgeId) -> float:
        """Underlying uniform variate in (0, 1) for one edge."""
        x, y = edge.origin
        h = _combine_int(self._base_hash(), _to_u64(x))
        h = _combine_int(h, _to_u64(y))
        h = _combine_int(h, int(edge.axis))
        return ((h >> 11) + 0.5) * _TWO_NEG53

    def weight(self, edge: EdgeId) -> float:
        """Weight of one canonical edge; strictly positive, finite."""
        u = np.array([self.uniform(edge)], dtype=np.float64)
        return float(self.distribution.quantile(u)[0])

    def window_weights(self, x0: int, y0: int, nx: int, ny: int) -> tuple[np.ndarray, np.ndarray]:
        """Weights of every edge with both endpoints in an nx-by-ny window.

        Returns ``(hw, vw)`` where ``hw[j, i]`` is the weight of the edge
        from ``(x0+i, y0+j)`` to ``(x0+i+1, y0+j)`` and ``vw[j, i]`` the
        weight of the edge from ``(x0+i, y0+j)`` to ``(x0+i, y0+j+1)``.
        Bit-identical to per-edge ``weight`` calls.
        """
        xs = (np.arange(x0, x0 + nx, dtype=np.int64)).astype(np.uint64)
        ys = (np.arange(y0, y0 + ny, dtype=np.int64)).astype(np.uint64)
        base = np.uint64(self._base_hash())
        hx = _combine_arr(base, xs)  # (nx,)
        hxy = _combine_arr(hx[None, :], ys[:, None])  # (ny, nx)
        uh = _uniform_from_hash(_combine_arr(hxy[:, : nx - 1], np.uint64(int(Axis.HORIZONTAL))))
        uv = _uniform_from_hash(_combine_arr(hxy[: ny - 1, :], np.uint64(int(Axis.VERTICAL))))
        return self.distribution.quantile(uh), self.distribution.quantile(uv)


def _uniform_from_hash(h: np.ndarray) -> np.ndarray:
    return ((h >> _S11).astype(np.float64) + 0.5) * _TWO_NEG53
