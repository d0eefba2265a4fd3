"""Log-log regression and derived scaling quantities.

Power-law exponents come from ordinary least squares on logs with
percentile-bootstrap confidence intervals. A fitted fluctuation-scale
table supports the wandering scale (square root of distance times scale),
its inverse, and the decay function used to size long-range correlation
separations, all interpolated linearly in log-log with a guarded
extrapolation range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateDesign, OutOfRange, TooFewPositive

__all__ = [
    "ExponentFit",
    "ScaleTable",
    "fit_power_law",
    "delta_of",
    "delta_inverse",
    "f_of",
    "f_inverse",
    "ChiXiReport",
    "chi_xi_report",
    "transverse_exponent",
    "CorrelationDecayFit",
    "correlation_exponent",
]

_BOOT_RESAMPLES = 1000
_CI_LEVEL = 0.90
_REL_TOL = 1e-9


@dataclass(frozen=True)
class ExponentFit:
    """Result of a log-log OLS fit with a bootstrap 90% CI."""

    exponent: float
    intercept: float
    r_squared: float
    ci_low: float
    ci_high: float
    n_points: int

    def as_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_points": self.n_points,
        }


def _ols_loglog(lx: np.ndarray, ly: np.ndarray) -> tuple[float, float]:
    mx, my = lx.mean(), ly.mean()
    dx = lx - mx
    sxx = float(np.dot(dx, dx))
    if sxx == 0.0:
        raise DegenerateDesign("all predictor values coincide")
    slope = float(np.dot(dx, ly - my)) / sxx
    return slope, my - slope * mx


def fit_power_law(points: Sequence[tuple[float, float]], bootstrap_seed: int = 0) -> ExponentFit:
    """OLS of log y on log x over positive points, with percentile CI.

    Requires at least three points with not-all-equal x. The CI comes from
    1000 bootstrap resamples of the points (seeded, deterministic) and is
    widened if needed to contain the point estimate.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise ValueError("need at least three points")
    if any(x <= 0 or y <= 0 for x, y in pts):
        raise ValueError("points must be strictly positive for a log-log fit")
    lx = np.log(np.array([p[0] for p in pts]))
    ly = np.log(np.array([p[1] for p in pts]))
    if np.all(lx == lx[0]):
        raise DegenerateDesign("all x values are equal")
    slope, intercept = _ols_loglog(lx, ly)
    resid = ly - (intercept + slope * lx)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot

    rng = np.random.default_rng(bootstrap_seed)
    n = len(pts)
    slopes = []
    for _ in range(_BOOT_RESAMPLES):
        idx = rng.integers(0, n, size=n)
        bx = lx[idx]
        if np.all(bx == bx[0]):
            continue
        s, _ = _ols_loglog(bx, ly[idx])
        slopes.append(s)
    if slopes:
        lo, hi = np.percentile(slopes, [5.0, 95.0])
        lo, hi = min(float(lo), slope), max(float(hi), slope)
    else:
        lo = hi = slope
    return ExponentFit(slope, intercept, r2, lo, hi, n)


@dataclass(frozen=True)
class ScaleTable:
    """Fitted fluctuation scale sigma(r) on a ladder of radii.

    Interpolation is linear in log-log; beyond the fitted radii the end
    slopes extend the table, but only up to ``guard_factor`` times past
    either end (OutOfRange otherwise).
    """

    radii: tuple[float, ...]
    sigmas: tuple[float, ...]
    guard_factor: float = 4.0

    def __post_init__(self):
        if len(self.radii) != len(self.sigmas) or not self.radii:
            raise ValueError("radii and sigmas must be equal-length and nonempty")
        if any(s <= 0 for s in self.sigmas) or any(r <= 0 for r in self.radii):
            raise ValueError("radii and sigmas must be positive")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must be strictly increasing")

    @property
    def r_min(self) -> float:
        return self.radii[0] / self.guard_factor

    @property
    def r_max(self) -> float:
        return self.radii[-1] * self.guard_factor

    def sigma(self, r: float) -> float:
        if not (self.r_min <= r <= self.r_max):
            raise OutOfRange(f"r={r} beyond guard range [{self.r_min}, {self.r_max}]")
        lr = np.log(np.asarray(self.radii))
        ls = np.log(np.asarray(self.sigmas))
        x = math.log(r)
        if len(lr) == 1:
            return float(self.sigmas[0])
        if x <= lr[0]:
            slope = (ls[1] - ls[0]) / (lr[1] - lr[0])
            return math.exp(ls[0] + slope * (x - lr[0]))
        if x >= lr[-1]:
            slope = (ls[-1] - ls[-2]) / (lr[-1] - lr[-2])
            return math.exp(ls[-1] + slope * (x - lr[-1]))
        return float(math.exp(np.interp(x, lr, ls)))

    def as_dict(self) -> dict:
        return {"radii": list(self.radii), "sigmas": list(self.sigmas), "guard_factor": self.guard_factor}

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]], guard_factor: float = 4.0) -> "ScaleTable":
        pairs = sorted((float(r), float(s)) for r, s in pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs), guard_factor)


def delta_of(table: ScaleTable, n: float) -> float:
    """Predicted wandering scale at chord distance n: sqrt(n * sigma(n))."""
    return math.sqrt(n * table.sigma(n))


def delta_inverse(table: ScaleTable, value: float) -> float:
    """Distance at which the wandering scale reaches ``value``.

    Monotone bisection on the log of the distance, to relative tolerance
    1e-9; requires the scale to be increasing over the guard range.
    """
    lo, hi = table.r_min, table.r_max
    grid = np.exp(np.linspace(math.log(lo), math.log(hi), 64))
    vals = [delta_of(table, g) for g in grid]
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ValueError("wandering scale is not increasing; cannot invert")
    if not (vals[0] <= value <= vals[-1]):
        raise OutOfRange(f"value {value} outside attainable range [{vals[0]}, {vals[-1]}]")
    return _bisect_log(lambda n: delta_of(table, n) - value, lo, hi)


def f_of(table: ScaleTable, n: float) -> float:
    """Tangential decay rate: wandering scale times sqrt(log n) over n."""
    if n < 3:
        raise ValueError("n must be at least 3")
    return delta_of(table, n) * math.sqrt(math.log(n)) / n


def f_inverse(table: ScaleTable, y: float) -> float:
    """Largest distance whose decay rate is still at least y."""
    lo, hi = max(3.0, table.r_min), table.r_max
    if lo >= hi:
        raise OutOfRange("guard range collapses below n=3")
    grid = np.exp(np.linspace(math.log(lo), math.log(hi), 512))
    vals = np.array([f_of(table, g) for g in grid])
    ok = np.nonzero(vals >= y)[0]
    if ok.size == 0:
        raise OutOfRange(f"decay rate never reaches {y} on the guard range")
    last = int(ok[-1])
    if last == len(grid) - 1:
        raise OutOfRange(f"decay rate still at least {y} at the guard boundary")
    return _bisect_log(lambda n: f_of(table, n) - y, grid[last], grid[last + 1])


def _bisect_log(fn, lo: float, hi: float) -> float:
    llo, lhi = math.log(lo), math.log(hi)
    flo = fn(lo)
    if flo == 0.0:
        return lo
    for _ in range(200):
        mid = math.exp(0.5 * (llo + lhi))
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            llo = math.log(mid)
        else:
            lhi = math.log(mid)
        if lhi - llo <= _REL_TOL:
            break
    return math.exp(0.5 * (llo + lhi))


@dataclass(frozen=True)
class ChiXiReport:
    """Joint fluctuation/wandering exponent report with the scaling-relation residual."""

    chi: float
    chi_ci: tuple[float, float]
    xi_direct: float
    xi_ci: tuple[float, float]
    xi_kpz: float
    xi_kpz_ci: tuple[float, float]
    kpz_residual: float
    kpz_residual_ci: tuple[float, float]

    def as_dict(self) -> dict:
        return {
            "chi": self.chi,
            "chi_ci": list(self.chi_ci),
            "xi_direct": self.xi_direct,
            "xi_ci": list(self.xi_ci),
            "xi_kpz": self.xi_kpz,
            "xi_kpz_ci": list(self.xi_kpz_ci),
            "kpz_residual": self.kpz_residual,
            "kpz_residual_ci": list(self.kpz_residual_ci),
        }


def chi_xi_report(sigma_fit: ExponentFit, wander_fit: ExponentFit) -> ChiXiReport:
    """Combine a fluctuation-exponent fit and a wandering-exponent fit.

    ``xi_kpz`` maps the fluctuation exponent through the scaling relation
    (1 + chi) / 2; the residual chi - (2 xi - 1) measures how far the two
    direct fits sit from that relation. CIs propagate by interval
    arithmetic.
    """
    chi, (clo, chi_hi) = sigma_fit.exponent, (sigma_fit.ci_low, sigma_fit.ci_high)
    xi, (xlo, xhi) = wander_fit.exponent, (wander_fit.ci_low, wander_fit.ci_high)
    return ChiXiReport(
        chi=chi,
        chi_ci=(clo, chi_hi),
        xi_direct=xi,
        xi_ci=(xlo, xhi),
        xi_kpz=(1.0 + chi) / 2.0,
        xi_kpz_ci=((1.0 + clo) / 2.0, (1.0 + chi_hi) / 2.0),
        kpz_residual=chi - (2.0 * xi - 1.0),
        kpz_residual_ci=(clo - (2.0 * xhi - 1.0), chi_hi - (2.0 * xlo - 1.0)),
    )


def transverse_exponent(d_table: Sequence[tuple[float, float]], bootstrap_seed: int = 0) -> ExponentFit:
    """Power-law fit of mean transverse increment against segment width."""
    if len(d_table) < 3:
        raise ValueError("need at least three widths")
    xs = [x for x, _ in d_table]
    if max(xs) < 8 * min(xs):
        raise ValueError("widths should span at least a factor of 8")
    return fit_power_law(d_table, bootstrap_seed)


@dataclass(frozen=True)
class CorrelationDecayFit:
    fit: ExponentFit
    n_dropped: int

    def as_dict(self) -> dict:
        return {"fit": self.fit.as_dict(), "n_dropped": self.n_dropped}


def correlation_exponent(
    corr_table: Sequence[tuple[float, float]], bootstrap_seed: int = 0
) -> CorrelationDecayFit:
    """Power-law fit of correlation decay, dropping non-positive entries."""
    kept = [(j, c) for j, c in corr_table if c > 0]
    dropped = len(corr_table) - len(kept)
    if len(kept) < 3:
        raise TooFewPositive(f"only {len(kept)} positive correlations remain")
    return CorrelationDecayFit(fit_power_law(kept, bootstrap_seed), dropped)
