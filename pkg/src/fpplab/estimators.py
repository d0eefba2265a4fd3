"""Monte Carlo estimators for passage-time statistics.

Each experiment draws independent replicates from a seeded plan; within a
replicate every passage time is read off one shared weight realization
(common-realization discipline), which is what makes contrast statistics
like transverse increments and long-range correlations meaningful.
Replicates that exhaust their search windows are excluded and counted; an
experiment aborts when more than one percent fail.
"""

from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .engine import (
    DEFAULT_POLICY,
    WindowPolicy,
    h_ball,
    hitting_time,
    passage_time,
    passage_time_to_many,
    resample_beyond_chord,
    resample_outside_region,
    wandering,
)
from .errors import ExperimentFailed, SeparationTooLarge, WindowExhausted, NoCrossing
from .fitting import ScaleTable, delta_of
from .geometry import DirectionFrame, TransverseSegment, floor_point
from .weights import EdgeWeightField, WeightDistribution, _combine_int, _mix_int, _to_u64

__all__ = [
    "SampleSummary",
    "ReplicatePlan",
    "estimate_h",
    "estimate_sigma",
    "assumption_diagnostics",
    "transverse_increment",
    "increment_variance",
    "wandering_profile",
    "long_range_correlation",
    "LongRangeCorrelation",
    "nonrandom_fluctuation",
    "NonrandomFluctuationReport",
    "conditional_decomposition",
    "ConditionalDecomposition",
    "HalfSpace",
    "HittingBall",
    "euclidean_surrogate",
    "fit_h_surrogate",
    "WeightedNormSurrogate",
    "FAILURE_BUDGET",
]

_QUANTILE_LEVELS = (0.05, 0.25, 0.5, 0.75, 0.95)
FAILURE_BUDGET = 0.01
ORIGIN = (0, 0)


@dataclass(frozen=True)
class SampleSummary:
    """Replicate count, location, spread and quantiles of a scalar statistic."""

    n_replicates: int
    mean: float
    variance: float
    std_error: float
    quantiles: dict[float, float]
    n_failed: int = 0
    degenerate: bool = False
    raw_path: str | None = None

    @classmethod
    def from_samples(cls, values, n_failed: int = 0, raw_path: str | None = None) -> "SampleSummary":
        v = np.asarray(values, dtype=np.float64)
        if v.size == 0:
            raise ValueError("cannot summarize zero samples")
        n = int(v.size)
        variance = float(v.var(ddof=1)) if n > 1 else 0.0
        if n == 1:
            warnings.warn("single-replicate summary: variance degenerate", stacklevel=2)
        return cls(
            n_replicates=n,
            mean=float(v.mean()),
            variance=variance,
            std_error=math.sqrt(variance / n),
            quantiles={q: float(np.quantile(v, q)) for q in _QUANTILE_LEVELS},
            n_failed=n_failed,
            degenerate=(n == 1),
            raw_path=raw_path,
        )

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    def as_dict(self) -> dict:
        return {
            "n_replicates": self.n_replicates,
            "mean": self.mean,
            "variance": self.variance,
            "std_error": self.std_error,
            "quantiles": {str(q): v for q, v in self.quantiles.items()},
            "n_failed": self.n_failed,
            "degenerate": self.degenerate,
            "raw_path": self.raw_path,
        }


@dataclass(frozen=True)
class ReplicatePlan:
    """Master seed plus replicate count; per-replicate seeds are derived
    injectively so replicates are independent and order-free."""

    master_seed: int
    n_replicates: int

    def __post_init__(self):
        if self.n_replicates < 1:
            raise ValueError("need at least one replicate")

    def replicate_seed(self, i: int) -> int:
        if not 0 <= i:
            raise ValueError("replicate index must be nonnegative")
        return _combine_int(_mix_int(_to_u64(self.master_seed)), i)

    def field(self, distribution: WeightDistribution, i: int) -> EdgeWeightField:
        return EdgeWeightField(distribution, self.replicate_seed(i), stream_tag=0)


def _bootstrap_rng(plan: ReplicatePlan, salt: int = 0xB007) -> np.random.Generator:
    return np.random.default_rng(_combine_int(_to_u64(plan.master_seed), salt))


# ---------------------------------------------------------------------------
# experiment machinery shared with the harness

class ExperimentKernel:
    """One experiment = per-replicate row production plus summarization.

    Subclasses are pure value objects: ``replicate(i)`` must depend only on
    the construction arguments and ``i``, so rows can be computed in any
    order, on any worker, with identical results.
    """

    name = "experiment"

    def statistic_names(self) -> list[str]:
        raise NotImplementedError

    def replicate(self, i: int) -> dict[str, float]:
        raise NotImplementedError

    def summarize(self, samples: dict[str, list[float]], n_failed: int) -> dict:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def artifacts(self, i: int) -> dict[str, str]:
        """Optional per-replicate side files (relative path -> text)."""
        return {}


def run_replicates(kernel: ExperimentKernel, plan: ReplicatePlan) -> tuple[dict[str, list[float]], int]:
    """Serial replicate loop with the 1% failure budget."""
    samples: dict[str, list[float]] = defaultdict(list)
    failures = 0
    for i in range(plan.n_replicates):
        try:
            rows = kernel.replicate(i)
        except WindowExhausted:
            failures += 1
            continue
        for key, value in rows.items():
            samples[key].append(value)
    check_failure_budget(failures, plan.n_replicates)
    return dict(samples), failures


def check_failure_budget(failures: int, total: int) -> None:
    if failures > FAILURE_BUDGET * total:
        raise ExperimentFailed(
            f"{failures}/{total} replicates failed, above the {FAILURE_BUDGET:.0%} budget"
        )


def _fmt(value: float) -> str:
    return f"{value:g}"


# ---------------------------------------------------------------------------
# point statistics

class PassageLadderKernel(ExperimentKernel):
    """Passage times from the origin to a ladder of targets along a ray."""

    name = "passage_ladder"

    def __init__(self, distribution, frame: DirectionFrame, n_ladder: Sequence[float],
                 plan: ReplicatePlan, policy: WindowPolicy = DEFAULT_POLICY):
        self.distribution = distribution
        self.frame = frame
        self.n_ladder = [float(n) for n in n_ladder]
        self.plan = plan
        self.policy = policy
        self.targets = [frame.point_at(n, 0.0) for n in self.n_ladder]
        for n, t in zip(self.n_ladder, self.targets):
            if floor_point(t) == floor_point(ORIGIN):
                raise ValueError(f"ladder entry {n} floors to the origin")

    def statistic_names(self):
        return [f"T@n={_fmt(n)}" for n in self.n_ladder]

    def replicate(self, i: int) -> dict[str, float]:
        field = self.plan.field(self.distribution, i)
        out = {}
        for n, target in zip(self.n_ladder, self.targets):
            out[f"T@n={_fmt(n)}"] = passage_time(field, ORIGIN, target, self.policy).time
        return out

    def summarize(self, samples, n_failed):
        per_n = {}
        table = []
        for n in self.n_ladder:
            s = SampleSummary.from_samples(samples[f"T@n={_fmt(n)}"], n_failed)
            per_n[_fmt(n)] = s.as_dict()
            table.append([n, s.sigma])
        return {"per_n": per_n, "scale_table": table}

    def params(self):
        return {"n_ladder": self.n_ladder}


class SigmaLadderKernel(PassageLadderKernel):
    name = "sigma_ladder"

    def summarize(self, samples, n_failed):
        out = super().summarize(samples, n_failed)
        rng = _bootstrap_rng(self.plan)
        sigma_se = {}
        diagnostics = {}
        for n in self.n_ladder:
            v = np.asarray(samples[f"T@n={_fmt(n)}"])
            boots = []
            for _ in range(1000):
                idx = rng.integers(0, v.size, v.size)
                boots.append(v[idx].std(ddof=1))
            sigma_se[_fmt(n)] = float(np.std(boots))
            diagnostics[_fmt(n)] = assumption_diagnostics(v)
        out["sigma_se"] = sigma_se
        out["diagnostics"] = diagnostics
        # descriptive only: range of local log-log slopes of the scale ladder
        table = out["scale_table"]
        if len(table) >= 2:
            slopes = [
                math.log(s1 / s0) / math.log(r1 / r0)
                for (r0, s0), (r1, s1) in zip(table, table[1:])
            ]
            out["slope_range"] = {"min": min(slopes), "max": max(slopes)}
        return out


def estimate_h(distribution, target, plan: ReplicatePlan,
               policy: WindowPolicy = DEFAULT_POLICY) -> SampleSummary:
    """Mean passage time from the origin to a fixed target."""
    if floor_point(target) == floor_point(ORIGIN):
        raise ValueError("target floors to the origin")
    values = []
    failures = 0
    for i in range(plan.n_replicates):
        try:
            values.append(passage_time(plan.field(distribution, i), ORIGIN, target, policy).time)
        except WindowExhausted:
            failures += 1
    check_failure_budget(failures, plan.n_replicates)
    return SampleSummary.from_samples(values, failures)


def estimate_sigma(distribution, r: float, frame: DirectionFrame, plan: ReplicatePlan,
                   policy: WindowPolicy = DEFAULT_POLICY) -> SampleSummary:
    """Passage-time samples at distance r along the frame direction.

    The fluctuation scale at r is read off as ``sqrt(summary.variance)``;
    that operational definition is recorded in downstream metadata.
    """
    if r < 4:
        raise ValueError("distance must be at least 4")
    return estimate_h(distribution, frame.point_at(float(r), 0.0), plan, policy)


def assumption_diagnostics(values) -> dict:
    """Empirical tail diagnostics of standardized passage-time samples:
    the exponential-tail fraction beyond four scale units and the mass of
    each half of the distribution half a scale unit away from the mean."""
    v = np.asarray(values, dtype=np.float64)
    mean = v.mean()
    sd = v.std(ddof=1) if v.size > 1 else 0.0
    if sd == 0.0:
        return {"frac_beyond_4sd": 0.0, "frac_lower_tail": 0.0, "frac_upper_tail": 0.0}
    z = (v - mean) / sd
    return {
        "frac_beyond_4sd": float(np.mean(np.abs(z) > 4)),
        "frac_lower_tail": float(np.mean(z < -0.5)),
        "frac_upper_tail": float(np.mean(z > 0.5)),
    }


# ---------------------------------------------------------------------------
# transverse increments

class TransverseIncrementKernel(ExperimentKernel):
    """Max passage-time spread over transverse segments of several widths,
    all widths sharing one realization and one source tree per replicate."""

    name = "transverse_increment"

    def __init__(self, distribution, frame: DirectionFrame, n: float, L_ladder: Sequence[float],
                 plan: ReplicatePlan, policy: WindowPolicy = DEFAULT_POLICY,
                 scale_table: ScaleTable | None = None):
        self.distribution = distribution
        self.frame = frame
        self.n = float(n)
        self.L_ladder = [float(L) for L in L_ladder]
        self.plan = plan
        self.policy = policy
        self.segment_points = {
            L: TransverseSegment(frame, self.n, L).lattice_points() for L in self.L_ladder
        }
        self.all_targets = []
        seen = set()
        for L in self.L_ladder:
            for p in self.segment_points[L]:
                if p not in seen:
                    seen.add(p)
                    self.all_targets.append(p)
        self.regime_warnings = []
        if scale_table is not None:
            for L in self.L_ladder:
                if L > delta_of(scale_table, self.n):
                    self.regime_warnings.append(L)
                    warnings.warn(
                        f"segment width {L} exceeds the wandering scale at n={self.n}; "
                        "increment statistics there are geometry-dominated", stacklevel=2,
                    )

    def statistic_names(self):
        return [f"D@L={_fmt(L)}" for L in self.L_ladder]

    def replicate(self, i: int) -> dict[str, float]:
        field = self.plan.field(self.distribution, i)
        mtr = passage_time_to_many(field, ORIGIN, self.all_targets, self.policy)
        times = {p: t for p, t in zip(mtr.targets, mtr.times)}
        out = {}
        for L in self.L_ladder:
            vals = [times[p] for p in self.segment_points[L]]
            out[f"D@L={_fmt(L)}"] = float(max(vals) - min(vals))
        return out

    def summarize(self, samples, n_failed):
        per_L = {
            _fmt(L): SampleSummary.from_samples(samples[f"D@L={_fmt(L)}"], n_failed).as_dict()
            for L in self.L_ladder
        }
        table = [[L, float(np.mean(samples[f"D@L={_fmt(L)}"]))] for L in self.L_ladder]
        return {"per_L": per_L, "mean_D_table": table, "regime_warnings": self.regime_warnings}

    def params(self):
        return {"n": self.n, "L_ladder": self.L_ladder}


def transverse_increment(distribution, frame, n, L, plan,
                         policy: WindowPolicy = DEFAULT_POLICY,
                         scale_table: ScaleTable | None = None) -> SampleSummary:
    """Spread of passage times over one transverse segment of width L."""
    kernel = TransverseIncrementKernel(distribution, frame, n, [L], plan, policy, scale_table)
    samples, failures = run_replicates(kernel, plan)
    return SampleSummary.from_samples(samples[f"D@L={_fmt(float(L))}"], failures)


class IncrementVarianceKernel(ExperimentKernel):
    """Signed transverse increment between the chord target and offset
    targets, one shared realization per replicate."""

    name = "increment_variance"

    def __init__(self, distribution, frame, n: float, L_ladder: Sequence[float],
                 plan: ReplicatePlan, policy: WindowPolicy = DEFAULT_POLICY):
        self.distribution = distribution
        self.frame = frame
        self.n = float(n)
        self.L_ladder = [float(L) for L in L_ladder]
        self.plan = plan
        self.policy = policy
        self.base_target = frame.point_at(self.n, 0.0)
        self.offset_targets = [frame.point_at(self.n, L) for L in self.L_ladder]

    def statistic_names(self):
        return [f"dT@L={_fmt(L)}" for L in self.L_ladder]

    def replicate(self, i: int) -> dict[str, float]:
        field = self.plan.field(self.distribution, i)
        mtr = passage_time_to_many(field, ORIGIN, [self.base_target, *self.offset_targets], self.policy)
        base = mtr.times[0]
        return {
            f"dT@L={_fmt(L)}": float(base - mtr.times[1 + j])
            for j, L in enumerate(self.L_ladder)
        }

    def summarize(self, samples, n_failed):
        per_L = {}
        var_table = []
        rng = _bootstrap_rng(self.plan)
        for L in self.L_ladder:
            v = np.asarray(samples[f"dT@L={_fmt(L)}"])
            s = SampleSummary.from_samples(v, n_failed)
            boots = []
            for _ in range(1000):
                idx = rng.integers(0, v.size, v.size)
                boots.append(v[idx].var(ddof=1))
            entry = s.as_dict()
            entry["variance_se"] = float(np.std(boots))
            per_L[_fmt(L)] = entry
            var_table.append([L, s.variance])
        return {"per_L": per_L, "variance_table": var_table}

    def params(self):
        return {"n": self.n, "L_ladder": self.L_ladder}


def increment_variance(distribution, frame, n, L, plan,
                       policy: WindowPolicy = DEFAULT_POLICY) -> SampleSummary:
    """Summary of the signed increment; its variance field is the Monte
    Carlo estimate of the increment variance."""
    kernel = IncrementVarianceKernel(distribution, frame, n, [L], plan, policy)
    samples, failures = run_replicates(kernel, plan)
    return SampleSummary.from_samples(samples[f"dT@L={_fmt(float(L))}"], failures)


# ---------------------------------------------------------------------------
# wandering

class WanderingProfileKernel(ExperimentKernel):
    """Geodesic wandering at several chord coordinates, one geodesic per
    replicate; replicates whose polyline misses a coordinate are counted
    separately for that coordinate.

    With ``dump_geodesics`` each replicate's path is also emitted as a
    newline-delimited "x y" file under ``geodesics/``.
    """

    name = "wandering_profile"

    def __init__(self, distribution, frame, n: float, ks: Sequence[float],
                 plan: ReplicatePlan, policy: WindowPolicy = DEFAULT_POLICY,
                 dump_geodesics: bool = False):
        self.distribution = distribution
        self.frame = frame
        self.n = float(n)
        self.ks = [float(k) for k in ks]
        if any(not 0 < k < self.n for k in self.ks):
            raise ValueError("chord coordinates must lie strictly between 0 and n")
        self.plan = plan
        self.policy = policy
        self.target = frame.point_at(self.n, 0.0)
        self.dump_geodesics = dump_geodesics

    def statistic_names(self):
        return [f"W@k={_fmt(k)}" for k in self.ks]

    def _geodesic(self, i: int):
        # memoize the last geodesic so artifacts(i) after replicate(i) is free
        cached = getattr(self, "_geo_cache", None)
        if cached is not None and cached[0] == i:
            return cached[1]
        field = self.plan.field(self.distribution, i)
        geo = passage_time(field, ORIGIN, self.target, self.policy)
        self._geo_cache = (i, geo)
        return geo

    def replicate(self, i: int) -> dict[str, float]:
        geo = self._geodesic(i)
        out = {}
        for k in self.ks:
            try:
                out[f"W@k={_fmt(k)}"] = wandering(geo, self.frame, ORIGIN, k)
            except NoCrossing:
                pass
        return out

    def artifacts(self, i: int) -> dict[str, str]:
        if not self.dump_geodesics:
            return {}
        geo = self._geodesic(i)
        body = "\n".join(f"{p.x} {p.y}" for p in geo.path) + "\n"
        return {f"geodesics/replicate_{i}.txt": body}

    def summarize(self, samples, n_failed):
        attempted = self.plan.n_replicates - n_failed
        per_k = {}
        for k in self.ks:
            vals = samples.get(f"W@k={_fmt(k)}", [])
            missing = attempted - len(vals) + n_failed
            per_k[_fmt(k)] = SampleSummary.from_samples(vals, missing).as_dict()
            per_k[_fmt(k)]["n_no_crossing"] = attempted - len(vals)
        return {"per_k": per_k}

    def params(self):
        return {"n": self.n, "ks": self.ks}


def wandering_profile(distribution, frame, n, ks, plan,
                      policy: WindowPolicy = DEFAULT_POLICY) -> dict[float, SampleSummary]:
    kernel = WanderingProfileKernel(distribution, frame, n, ks, plan, policy)
    samples, failures = run_replicates(kernel, plan)
    attempted = plan.n_replicates - failures
    out = {}
    for k in kernel.ks:
        vals = samples.get(f"W@k={_fmt(k)}", [])
        out[k] = SampleSummary.from_samples(vals, attempted - len(vals) + failures)
    return out


# ---------------------------------------------------------------------------
# long-range correlations

@dataclass(frozen=True)
class LongRangeCorrelation:
    covariance: float
    covariance_ci: tuple[float, float]
    covariance_se: float
    correlation: float
    correlation_ci: tuple[float, float]
    separation: float
    n_replicates: int

    def as_dict(self) -> dict:
        return {
            "covariance": self.covariance,
            "covariance_ci": list(self.covariance_ci),
            "covariance_se": self.covariance_se,
            "correlation": self.correlation,
            "correlation_ci": list(self.correlation_ci),
            "separation": self.separation,
            "n_replicates": self.n_replicates,
        }


def _cov_corr(ta: np.ndarray, tb: np.ndarray) -> tuple[float, float]:
    cov = float(np.cov(ta, tb, ddof=1)[0, 1])
    if np.array_equal(ta, tb):
        return cov, 1.0
    denom = ta.std(ddof=1) * tb.std(ddof=1)
    corr = 1.0 if denom == 0.0 else float(np.clip(cov / denom, -1.0, 1.0))
    return cov, corr


def _paired_bootstrap(ta, tb, rng, n_boot=1000):
    covs, corrs = [], []
    n = ta.size
    for _ in range(n_boot):
        idx = rng.integers(0, n, n)
        c, r = _cov_corr(ta[idx], tb[idx])
        covs.append(c)
        corrs.append(r)
    return np.asarray(covs), np.asarray(corrs)


class LongRangeCorrelationKernel(ExperimentKernel):
    """Covariance and correlation of passage times to two targets separated
    tangentially by multiples of the fitted wandering scale."""

    name = "long_range_correlation"

    def __init__(self, distribution, frame, n: float, J_ladder: Sequence[float],
                 plan: ReplicatePlan, scale_table: ScaleTable,
                 policy: WindowPolicy = DEFAULT_POLICY):
        self.distribution = distribution
        self.frame = frame
        self.n = float(n)
        self.J_ladder = [float(j) for j in J_ladder]
        self.plan = plan
        self.policy = policy
        self.scale_table = scale_table
        delta_n = delta_of(scale_table, self.n)
        self.separations = {J: J * delta_n * math.sqrt(math.log(self.n)) for J in self.J_ladder}
        for J, sep in self.separations.items():
            if sep > 2 * self.n:
                raise SeparationTooLarge(
                    f"separation {sep:.1f} at J={J} exceeds twice the chord distance {self.n}"
                )
        self.targets = []
        for J in self.J_ladder:
            sep = self.separations[J]
            self.targets.append(frame.point_at(self.n, sep))
            self.targets.append(frame.point_at(self.n, -sep))

    def statistic_names(self):
        names = []
        for J in self.J_ladder:
            names.append(f"Ta@J={_fmt(J)}")
            names.append(f"Tb@J={_fmt(J)}")
        return names

    def replicate(self, i: int) -> dict[str, float]:
        field = self.plan.field(self.distribution, i)
        mtr = passage_time_to_many(field, ORIGIN, self.targets, self.policy)
        out = {}
        for j, J in enumerate(self.J_ladder):
            out[f"Ta@J={_fmt(J)}"] = float(mtr.times[2 * j])
            out[f"Tb@J={_fmt(J)}"] = float(mtr.times[2 * j + 1])
        return out

    def summarize(self, samples, n_failed):
        rng = _bootstrap_rng(self.plan)
        per_J = {}
        corr_table = []
        for J in self.J_ladder:
            ta = np.asarray(samples[f"Ta@J={_fmt(J)}"])
            tb = np.asarray(samples[f"Tb@J={_fmt(J)}"])
            cov, corr = _cov_corr(ta, tb)
            covs, corrs = _paired_bootstrap(ta, tb, rng)
            rec = LongRangeCorrelation(
                covariance=cov,
                covariance_ci=(float(np.percentile(covs, 5)), float(np.percentile(covs, 95))),
                covariance_se=float(covs.std()),
                correlation=corr,
                correlation_ci=(float(np.percentile(corrs, 5)), float(np.percentile(corrs, 95))),
                separation=self.separations[J],
                n_replicates=int(ta.size),
            )
            per_J[_fmt(J)] = rec.as_dict()
            corr_table.append([J, corr])
        return {"per_J": per_J, "correlation_table": corr_table}

    def params(self):
        return {"n": self.n, "J_ladder": self.J_ladder, "scale_table": self.scale_table.as_dict()}


def long_range_correlation(distribution, frame, n, J, plan, scale_table,
                           policy: WindowPolicy = DEFAULT_POLICY) -> LongRangeCorrelation:
    kernel = LongRangeCorrelationKernel(distribution, frame, n, [J], plan, scale_table, policy)
    samples, failures = run_replicates(kernel, plan)
    summary = kernel.summarize(samples, failures)
    rec = summary["per_J"][_fmt(float(J))]
    return LongRangeCorrelation(
        covariance=rec["covariance"],
        covariance_ci=tuple(rec["covariance_ci"]),
        covariance_se=rec["covariance_se"],
        correlation=rec["correlation"],
        correlation_ci=tuple(rec["correlation_ci"]),
        separation=rec["separation"],
        n_replicates=rec["n_replicates"],
    )


# ---------------------------------------------------------------------------
# nonrandom fluctuations

@dataclass(frozen=True)
class NonrandomFluctuationReport:
    """Excess of the finite-scale mean passage time over its linear limit.

    The primary limit rate is the ladder minimum of mean/distance (the
    unbiased direction under subadditivity). A secondary estimate
    extrapolates by fitting mean(n) = g*n + c*sigma(n)*log(n), the
    correction form of the nonrandom-fluctuation bound.
    """

    g_hat: float
    g_hat_extrapolated: float
    correction_coefficient: float
    entries: list[dict]

    def as_dict(self) -> dict:
        return {
            "g_hat": self.g_hat,
            "g_hat_extrapolated": self.g_hat_extrapolated,
            "correction_coefficient": self.correction_coefficient,
            "entries": self.entries,
        }


def nonrandom_fluctuation(distribution, frame, n_ladder, plan,
                          policy: WindowPolicy = DEFAULT_POLICY) -> NonrandomFluctuationReport:
    if len(n_ladder) < 3 or any(b <= a for a, b in zip(n_ladder, n_ladder[1:])):
        raise ValueError("ladder must be increasing with at least three entries")
    kernel = PassageLadderKernel(distribution, frame, n_ladder, plan, policy)
    samples, failures = run_replicates(kernel, plan)
    return summarize_nonrandom_fluctuation(kernel, samples, failures)


def summarize_nonrandom_fluctuation(kernel: PassageLadderKernel, samples, n_failed) -> NonrandomFluctuationReport:
    sums = {n: SampleSummary.from_samples(samples[f"T@n={_fmt(n)}"], n_failed) for n in kernel.n_ladder}
    rates = {n: sums[n].mean / n for n in kernel.n_ladder}
    n_star = min(rates, key=rates.get)
    g_hat = rates[n_star]
    g_se = sums[n_star].std_error / n_star

    # secondary estimator: least squares on mean(n) = g*n + c*sigma(n)*log(n)
    ns = np.array(kernel.n_ladder)
    means = np.array([sums[n].mean for n in kernel.n_ladder])
    design = np.column_stack([ns, np.array([sums[n].sigma for n in kernel.n_ladder]) * np.log(ns)])
    coeffs, *_ = np.linalg.lstsq(design, means, rcond=None)
    g_extrapolated, correction = float(coeffs[0]), float(coeffs[1])

    entries = []
    for n in kernel.n_ladder:
        s = sums[n]
        excess = s.mean - n * g_hat
        if n == n_star:
            excess_se = 0.0
        else:
            excess_se = math.sqrt(s.std_error**2 + (n * g_se) ** 2)
        ratio = excess / (s.sigma * math.log(n)) if s.sigma > 0 else float("nan")
        entries.append(
            {
                "n": n,
                "h_hat": s.mean,
                "h_se": s.std_error,
                "excess": excess,
                "excess_se": excess_se,
                "ratio_to_sigma_log": ratio,
                "attains_min": n == n_star,
            }
        )
    return NonrandomFluctuationReport(
        g_hat=g_hat,
        g_hat_extrapolated=g_extrapolated,
        correction_coefficient=correction,
        entries=entries,
    )


class NonrandomFluctuationKernel(PassageLadderKernel):
    name = "nonrandom_fluctuation"

    def summarize(self, samples, n_failed):
        out = super().summarize(samples, n_failed)
        out["report"] = summarize_nonrandom_fluctuation(self, samples, n_failed).as_dict()
        return out


# ---------------------------------------------------------------------------
# conditional decompositions via partial resampling

@dataclass(frozen=True)
class HalfSpace:
    """Condition on the weights of edges lying in the half-space of chord
    coordinate at most m; everything beyond is resampled."""

    m: float


@dataclass(frozen=True)
class HittingBall:
    """Condition on the frozen wet region obtained by running the origin's
    growth until it first touches the surrogate-distance ball of radius k
    around the far target."""

    k: float


def euclidean_surrogate(dx: int, dy: int) -> float:
    return math.hypot(dx, dy)


@dataclass(frozen=True)
class WeightedNormSurrogate:
    """Direction-weighted norm interpolating measured mean passage rates
    between the axis and diagonal directions."""

    axis_rate: float
    diagonal_rate: float

    def __call__(self, dx: int, dy: int) -> float:
        r = math.hypot(dx, dy)
        if r == 0.0:
            return 0.0
        phi = math.atan2(abs(dy), abs(dx))
        if phi > math.pi / 4:
            phi = math.pi / 2 - phi
        w = phi / (math.pi / 4)
        return r * ((1.0 - w) * self.axis_rate + w * self.diagonal_rate)

    def describe(self) -> dict:
        return {
            "kind": "weighted_norm",
            "axis_rate": self.axis_rate,
            "diagonal_rate": self.diagonal_rate,
        }


def fit_h_surrogate(distribution, radius: float, plan: ReplicatePlan,
                    policy: WindowPolicy = DEFAULT_POLICY) -> WeightedNormSurrogate:
    """Fit the weighted-norm surrogate from mean passage times along the
    two symmetry directions at the given calibration radius."""
    ax = estimate_h(distribution, (float(radius), 0.0), plan, policy)
    diag = estimate_h(distribution, DirectionFrame.diagonal().point_at(float(radius), 0.0), plan, policy)
    return WeightedNormSurrogate(ax.mean / radius, diag.mean / radius)


@dataclass(frozen=True)
class ConditionalDecomposition:
    """Resampling estimates of the conditional variance structure.

    ``exp_cond_var_*`` is half the mean squared gap between the passage
    time and its partner computed with fresh weights outside the
    conditioning region; ``exp_cond_cov_bound`` is their Cauchy-Schwarz
    product. ``cov_of_cond_means`` is only the unconditional covariance
    minus that bound, reported as a non-rigorous diagnostic.
    ``var_of_cond_mean_*`` is the sample covariance of the pair, an
    unbiased surrogate for the variance of the conditional mean.
    """

    exp_cond_var_a: float
    exp_cond_var_a_se: float
    exp_cond_var_b: float
    exp_cond_var_b_se: float
    exp_cond_cov_bound: float
    cov_of_cond_means: float
    cov_of_cond_means_rigorous: bool
    var_of_cond_mean_a: float
    var_of_cond_mean_b: float
    full_var_a: float
    full_var_b: float
    n_replicates: int
    conditioning: dict

    def as_dict(self) -> dict:
        return {
            "exp_cond_var_a": self.exp_cond_var_a,
            "exp_cond_var_a_se": self.exp_cond_var_a_se,
            "exp_cond_var_b": self.exp_cond_var_b,
            "exp_cond_var_b_se": self.exp_cond_var_b_se,
            "exp_cond_cov_bound": self.exp_cond_cov_bound,
            "cov_of_cond_means": self.cov_of_cond_means,
            "cov_of_cond_means_rigorous": self.cov_of_cond_means_rigorous,
            "var_of_cond_mean_a": self.var_of_cond_mean_a,
            "var_of_cond_mean_b": self.var_of_cond_mean_b,
            "full_var_a": self.full_var_a,
            "full_var_b": self.full_var_b,
            "n_replicates": self.n_replicates,
            "conditioning": self.conditioning,
        }


ALT_STREAM = 1


class ConditionalDecompositionKernel(ExperimentKernel):
    """Passage times to two transverse targets together with their partial
    resamples outside one or more conditioning regions."""

    name = "conditional_decomposition"

    def __init__(self, distribution, frame, n: float, ell: float,
                 conditionings: Sequence[HalfSpace | HittingBall], plan: ReplicatePlan,
                 policy: WindowPolicy = DEFAULT_POLICY,
                 h_surrogate: Callable[[int, int], float] | None = None):
        self.distribution = distribution
        self.frame = frame
        self.n = float(n)
        self.ell = float(ell)
        self.conditionings = list(conditionings)
        self.plan = plan
        self.policy = policy
        self.h_surrogate = h_surrogate
        self.target_a = frame.point_at(self.n, 0.0)
        self.target_b = frame.point_at(self.n, self.ell)
        self._hballs: dict[float, set] = {}
        for cond in self.conditionings:
            if isinstance(cond, HittingBall):
                surrogate = h_surrogate if h_surrogate is not None else euclidean_surrogate
                ball, _, _ = h_ball(surrogate, floor_point(self.target_a), cond.k)
                self._hballs[cond.k] = ball

    def _label(self, cond) -> str:
        return f"m={_fmt(cond.m)}" if isinstance(cond, HalfSpace) else f"k={_fmt(cond.k)}"

    def statistic_names(self):
        names = ["Ta", "Tb"]
        for cond in self.conditionings:
            lab = self._label(cond)
            if isinstance(cond, HittingBall):
                names.append(f"tau@{lab}")
            names.append(f"TaP@{lab}")
            names.append(f"TbP@{lab}")
        return names

    def replicate(self, i: int) -> dict[str, float]:
        field = self.plan.field(self.distribution, i)
        targets = [self.target_a, self.target_b]
        mtr = passage_time_to_many(field, ORIGIN, targets, self.policy)
        out = {"Ta": float(mtr.times[0]), "Tb": float(mtr.times[1])}
        for cond in self.conditionings:
            lab = self._label(cond)
            if isinstance(cond, HalfSpace):
                rule = resample_beyond_chord(self.frame, cond.m)
            else:
                tau, _, frozen = self._hit(field, cond)
                out[f"tau@{lab}"] = tau
                rule = resample_outside_region(frozen)
            mtr_p = passage_time_to_many(
                field, ORIGIN, targets, self.policy, resample_edges=rule, alt_stream=ALT_STREAM
            )
            out[f"TaP@{lab}"] = float(mtr_p.times[0])
            out[f"TbP@{lab}"] = float(mtr_p.times[1])
        return out

    def _hit(self, field, cond: HittingBall):
        ball = self._hballs[cond.k]
        pts = [floor_point(ORIGIN), *ball]
        for attempt in range(self.policy.attempts()):
            window = self.policy.window_for(pts, attempt)
            try:
                return hitting_time(field, ORIGIN, ball, window)
            except WindowExhausted:
                if self.policy.fixed is not None:
                    raise
        raise WindowExhausted("hitting search exhausted its expansion budget")

    def summarize(self, samples, n_failed):
        ta = np.asarray(samples["Ta"])
        tb = np.asarray(samples["Tb"])
        per_region = {}
        for cond in self.conditionings:
            lab = self._label(cond)
            tap = np.asarray(samples[f"TaP@{lab}"])
            tbp = np.asarray(samples[f"TbP@{lab}"])
            sq_a = 0.5 * (ta - tap) ** 2
            sq_b = 0.5 * (tb - tbp) ** 2
            va, vb = float(sq_a.mean()), float(sq_b.mean())
            bound = math.sqrt(va * vb)
            cov_ab = float(np.cov(ta, tb, ddof=1)[0, 1]) if ta.size > 1 else 0.0
            conditioning = {"kind": "half_space", "m": cond.m} if isinstance(cond, HalfSpace) else {
                "kind": "hitting_ball",
                "k": cond.k,
                "surrogate": (
                    self.h_surrogate.describe()
                    if hasattr(self.h_surrogate, "describe")
                    else {"kind": "euclidean"} if self.h_surrogate is None else {"kind": "custom"}
                ),
            }
            rec = ConditionalDecomposition(
                exp_cond_var_a=va,
                exp_cond_var_a_se=float(sq_a.std(ddof=1) / math.sqrt(sq_a.size)) if sq_a.size > 1 else 0.0,
                exp_cond_var_b=vb,
                exp_cond_var_b_se=float(sq_b.std(ddof=1) / math.sqrt(sq_b.size)) if sq_b.size > 1 else 0.0,
                exp_cond_cov_bound=bound,
                cov_of_cond_means=cov_ab - bound,
                cov_of_cond_means_rigorous=False,
                var_of_cond_mean_a=float(np.cov(ta, tap, ddof=1)[0, 1]) if ta.size > 1 else 0.0,
                var_of_cond_mean_b=float(np.cov(tb, tbp, ddof=1)[0, 1]) if tb.size > 1 else 0.0,
                full_var_a=float(ta.var(ddof=1)) if ta.size > 1 else 0.0,
                full_var_b=float(tb.var(ddof=1)) if tb.size > 1 else 0.0,
                n_replicates=int(ta.size),
                conditioning=conditioning,
            )
            per_region[lab] = rec.as_dict()
        return {"per_region": per_region}

    def params(self):
        return {
            "n": self.n,
            "ell": self.ell,
            "conditionings": [self._label(c) for c in self.conditionings],
        }


def conditional_decomposition(distribution, frame, n, ell, conditioning, plan,
                              policy: WindowPolicy = DEFAULT_POLICY,
                              h_surrogate=None) -> ConditionalDecomposition:
    kernel = ConditionalDecompositionKernel(
        distribution, frame, n, ell, [conditioning], plan, policy, h_surrogate
    )
    samples, failures = run_replicates(kernel, plan)
    summary = kernel.summarize(samples, failures)
    rec = summary["per_region"][kernel._label(conditioning)]
    return ConditionalDecomposition(**rec)
