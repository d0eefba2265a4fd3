"""Experiment configuration, deterministic parallel execution, persistence.

A run consumes one JSON config, fans replicate indices out to a worker
pool, buffers the rows, and writes them in replicate order, so raw output
is byte-identical for any worker count. Completed replicates are also
streamed to ``replicates.jsonl`` as they finish, which is what resuming a
killed run reads back; the final CSV/summary of a resumed run match an
uninterrupted one exactly.

Output files (per run directory):
  config.json      - canonical echo of the configuration
  manifest.json    - config hash, code version, timestamps, per-replicate status
  replicates.jsonl - per-replicate rows in completion order (resume journal)
  raw.csv          - ``replicate,statistic,value`` in replicate order
  summary.json     - per-statistic summaries plus experiment-specific records
"""

from __future__ import annotations

import datetime
import hashlib
import json
import multiprocessing
import os
from pathlib import Path

from . import __version__ as code_version
from .engine import WindowPolicy
from .errors import ConfigInvalid, ManifestMismatch, OutputUnwritable, WindowExhausted
from .estimators import (
    ConditionalDecompositionKernel,
    HalfSpace,
    HittingBall,
    IncrementVarianceKernel,
    LongRangeCorrelationKernel,
    NonrandomFluctuationKernel,
    ReplicatePlan,
    SampleSummary,
    SigmaLadderKernel,
    TransverseIncrementKernel,
    WanderingProfileKernel,
    check_failure_budget,
)
from .fitting import ScaleTable, chi_xi_report, correlation_exponent, fit_power_law, transverse_exponent
from .geometry import DirectionFrame
from .weights import WeightDistribution

SCHEMA_VERSION = 1
WORKERS_ENV = "FPP_LAB_WORKERS"

EXPERIMENTS = (
    "SigmaLadder",
    "WanderingProfile",
    "TransverseIncrement",
    "IncrementVariance",
    "LongRangeCorrelation",
    "NonrandomFluctuation",
    "ConditionalDecomposition",
    "ExponentReport",
)

__all__ = [
    "EXPERIMENTS",
    "SCHEMA_VERSION",
    "WORKERS_ENV",
    "validate_config",
    "config_hash",
    "run",
    "checkpoint_resume",
    "fit_table_file",
]


# ---------------------------------------------------------------------------
# validation

def _require(cfg: dict, field: str, kind, path: str):
    if field not in cfg:
        raise ConfigInvalid(path, "missing required field")
    value = cfg[field]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigInvalid(path, f"expected {getattr(kind, '__name__', kind)}")
    return value


def _number_list(cfg: dict, field: str, path: str, increasing=False, min_len=1):
    raw = _require(cfg, field, list, path)
    if len(raw) < min_len:
        raise ConfigInvalid(path, f"needs at least {min_len} entries")
    out = []
    for i, v in enumerate(raw):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigInvalid(f"{path}[{i}]", "expected a number")
        out.append(float(v))
    if increasing and any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigInvalid(path, "must be strictly increasing")
    return out


def _parse_frame(spec, path: str) -> DirectionFrame:
    if isinstance(spec, str):
        if spec == "symmetry:diagonal":
            return DirectionFrame.diagonal()
        if spec == "symmetry:axis":
            return DirectionFrame.axis()
        raise ConfigInvalid(path, "expected symmetry:diagonal, symmetry:axis or an object")
    if isinstance(spec, dict):
        theta = _require(spec, "theta", float, f"{path}.theta")
        theta_t = _require(spec, "theta_t", float, f"{path}.theta_t")
        try:
            return DirectionFrame(theta, theta_t)
        except Exception as exc:
            raise ConfigInvalid(path, str(exc))
    raise ConfigInvalid(path, "expected a string or object")


def _parse_distribution(spec, path: str) -> WeightDistribution:
    if not isinstance(spec, dict):
        raise ConfigInvalid(path, "expected an object")
    try:
        return WeightDistribution.from_dict(spec)
    except (KeyError, ValueError) as exc:
        raise ConfigInvalid(path, str(exc))


def _parse_policy(spec, path: str) -> WindowPolicy:
    if spec is None:
        return WindowPolicy()
    if not isinstance(spec, dict):
        raise ConfigInvalid(path, "expected an object")
    kwargs = {}
    for key in ("inflation", "growth"):
        if key in spec:
            kwargs[key] = _require(spec, key, float, f"{path}.{key}")
    if "max_expansions" in spec:
        kwargs["max_expansions"] = _require(spec, "max_expansions", int, f"{path}.max_expansions")
    unknown = set(spec) - {"inflation", "growth", "max_expansions"}
    if unknown:
        raise ConfigInvalid(f"{path}.{sorted(unknown)[0]}", "unknown policy field")
    return WindowPolicy(**kwargs)


def _parse_scale_table(scales: dict, path: str, out_dir: Path | None) -> ScaleTable:
    n_sources = ("scale_table" in scales) + ("scale_from" in scales)
    if n_sources != 1:
        raise ConfigInvalid(f"{path}.scale_table", "provide exactly one of scale_table or scale_from")
    if "scale_table" in scales:
        pairs = scales["scale_table"]
        if not isinstance(pairs, list) or any(len(p) != 2 for p in pairs):
            raise ConfigInvalid(f"{path}.scale_table", "expected a list of [r, sigma] pairs")
        try:
            return ScaleTable.from_pairs([(float(r), float(s)) for r, s in pairs])
        except ValueError as exc:
            raise ConfigInvalid(f"{path}.scale_table", str(exc))
    ref = Path(scales["scale_from"])
    if out_dir is not None and not ref.is_absolute():
        ref = out_dir.parent / ref
    try:
        payload = json.loads(ref.read_text())
        return ScaleTable.from_pairs([(r, s) for r, s in payload["derived"]["scale_table"]])
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigInvalid(f"{path}.scale_from", f"cannot load scale table: {exc}")


class ValidatedConfig:
    def __init__(self, cfg: dict, out_dir: Path | None = None):
        if not isinstance(cfg, dict):
            raise ConfigInvalid("<root>", "config must be a JSON object")
        self.experiment = _require(cfg, "experiment", str, "experiment")
        if self.experiment not in EXPERIMENTS:
            raise ConfigInvalid("experiment", f"unknown experiment {self.experiment!r}")
        self.raw = cfg
        self.out_dir = out_dir or Path(cfg.get("output_dir", "runs/" + self.experiment.lower()))

        plan_spec = _require(cfg, "plan", dict, "plan")
        master_seed = _require(plan_spec, "master_seed", int, "plan.master_seed")
        n_replicates = _require(plan_spec, "n_replicates", int, "plan.n_replicates")
        if self.experiment != "ExponentReport" and n_replicates < 2:
            raise ConfigInvalid("plan.n_replicates", "variance-bearing experiments need at least 2")
        self.plan = ReplicatePlan(master_seed, max(n_replicates, 1))

        if self.experiment == "ExponentReport":
            self.distribution = None
            self.frame = None
            self.policy = WindowPolicy()
            self.scales = _require(cfg, "scales", dict, "scales")
            return

        self.distribution = _parse_distribution(_require(cfg, "distribution", dict, "distribution"), "distribution")
        self.frame = _parse_frame(cfg.get("frame", "symmetry:diagonal"), "frame")
        self.policy = _parse_policy(cfg.get("window_policy"), "window_policy")
        self.scales = _require(cfg, "scales", dict, "scales")

    def build_kernel(self):
        s, path = self.scales, "scales"
        exp = self.experiment
        if exp == "SigmaLadder":
            ladder = _number_list(s, "n_ladder", f"{path}.n_ladder", increasing=True, min_len=1)
            if any(n < 4 for n in ladder):
                raise ConfigInvalid(f"{path}.n_ladder", "entries must be at least 4")
            return SigmaLadderKernel(self.distribution, self.frame, ladder, self.plan, self.policy)
        if exp == "WanderingProfile":
            n = _require(s, "n", float, f"{path}.n")
            ks = _number_list(s, "k_list", f"{path}.k_list", min_len=1)
            dump = bool(s.get("dump_geodesics", False))
            try:
                return WanderingProfileKernel(
                    self.distribution, self.frame, n, ks, self.plan, self.policy, dump_geodesics=dump
                )
            except ValueError as exc:
                raise ConfigInvalid(f"{path}.k_list", str(exc))
        if exp == "TransverseIncrement":
            n = _require(s, "n", float, f"{path}.n")
            ladder = _number_list(s, "L_ladder", f"{path}.L_ladder", increasing=True, min_len=1)
            table = None
            if "scale_table" in s or "scale_from" in s:
                table = _parse_scale_table(s, path, self.out_dir)
            return TransverseIncrementKernel(
                self.distribution, self.frame, n, ladder, self.plan, self.policy, table
            )
        if exp == "IncrementVariance":
            n = _require(s, "n", float, f"{path}.n")
            ladder = _number_list(s, "L_ladder", f"{path}.L_ladder", increasing=True, min_len=1)
            return IncrementVarianceKernel(self.distribution, self.frame, n, ladder, self.plan, self.policy)
        if exp == "LongRangeCorrelation":
            n = _require(s, "n", float, f"{path}.n")
            ladder = _number_list(s, "J_ladder", f"{path}.J_ladder", increasing=True, min_len=1)
            table = _parse_scale_table(s, path, self.out_dir)
            return LongRangeCorrelationKernel(
                self.distribution, self.frame, n, ladder, self.plan, table, self.policy
            )
        if exp == "NonrandomFluctuation":
            ladder = _number_list(s, "n_ladder", f"{path}.n_ladder", increasing=True, min_len=3)
            return NonrandomFluctuationKernel(self.distribution, self.frame, ladder, self.plan, self.policy)
        if exp == "ConditionalDecomposition":
            n = _require(s, "n", float, f"{path}.n")
            ell = _require(s, "ell", float, f"{path}.ell")
            mode = _require(s, "mode", str, f"{path}.mode")
            if mode == "half_space":
                values = _number_list(s, "m_ladder", f"{path}.m_ladder", increasing=True, min_len=1)
                conds = [HalfSpace(m) for m in values]
            elif mode == "hitting_ball":
                values = _number_list(s, "k_list", f"{path}.k_list", increasing=True, min_len=1)
                conds = [HittingBall(k) for k in values]
            else:
                raise ConfigInvalid(f"{path}.mode", "expected half_space or hitting_ball")
            return ConditionalDecompositionKernel(
                self.distribution, self.frame, n, ell, conds, self.plan, self.policy
            )
        raise ConfigInvalid("experiment", f"{exp} has no replicate kernel")


def validate_config(cfg: dict, out_dir: Path | None = None) -> ValidatedConfig:
    """Validate a config dict; raises ConfigInvalid naming the bad field."""
    validated = ValidatedConfig(cfg, out_dir)
    if validated.experiment == "ExponentReport":
        _validate_report_inputs(validated.scales)
    else:
        validated.build_kernel()
    return validated


def _validate_report_inputs(scales: dict):
    if "sigma_summary" not in scales:
        raise ConfigInvalid("scales.sigma_summary", "missing required field")
    if "wandering_summaries" not in scales or not isinstance(scales["wandering_summaries"], list):
        raise ConfigInvalid("scales.wandering_summaries", "expected a list of summary paths")


# ---------------------------------------------------------------------------
# canonical form + hashing

def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in sorted(obj.items())}
    if isinstance(obj, list):
        return [_canonical(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float):
        return obj
    raise ConfigInvalid("<config>", f"non-serializable value of type {type(obj).__name__}")


def config_hash(cfg: dict) -> str:
    """Stable hash of the canonicalized config.

    The replicate count and output directory are excluded so a run can be
    extended or relocated and still resume against the same manifest.
    """
    body = _canonical(cfg)
    body.pop("output_dir", None)
    if isinstance(body.get("plan"), dict):
        body["plan"] = {k: v for k, v in body["plan"].items() if k != "n_replicates"}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _dump_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# worker pool

_WORKER_KERNEL = None


def _init_worker(cfg: dict):
    global _WORKER_KERNEL
    _WORKER_KERNEL = ValidatedConfig(cfg).build_kernel()


def _run_one(i: int):
    try:
        rows = _WORKER_KERNEL.replicate(i)
        return i, rows, None, _WORKER_KERNEL.artifacts(i)
    except WindowExhausted as exc:
        return i, None, f"window_exhausted: {exc}", {}


def _compute_rows(cfg: dict, kernel, indices, workers: int, journal: Path, out_dir: Path):
    """Compute replicate rows for the given indices, journaling each one and
    writing any per-replicate artifact files."""
    results = {}
    with journal.open("a") as jf:

        def record(i, rows, error, artifacts):
            results[i] = (rows, error)
            for rel, body in artifacts.items():
                target = out_dir / rel
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_text(body)
            entry = {"replicate": i}
            if error is None:
                entry["rows"] = rows
            else:
                entry["error"] = error
            jf.write(json.dumps(entry, sort_keys=True) + "\n")
            jf.flush()

        if workers <= 1:
            for i in indices:
                try:
                    record(i, kernel.replicate(i), None, kernel.artifacts(i))
                except WindowExhausted as exc:
                    record(i, None, f"window_exhausted: {exc}", {})
        else:
            ctx = multiprocessing.get_context("fork" if hasattr(os, "fork") else "spawn")
            with ctx.Pool(workers, initializer=_init_worker, initargs=(cfg,)) as pool:
                for i, rows, error, artifacts in pool.imap_unordered(_run_one, indices, chunksize=1):
                    record(i, rows, error, artifacts)
    return results


def _load_journal(journal: Path) -> dict:
    done = {}
    if journal.exists():
        for line in journal.read_text().splitlines():
            if not line.strip():
                continue
            entry = json.loads(line)
            done[int(entry["replicate"])] = (entry.get("rows"), entry.get("error"))
    return done


# ---------------------------------------------------------------------------
# run + resume

def _resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return 1


def run(cfg: dict, workers: int | None = None, out_dir=None, resume: bool = False) -> dict:
    """Execute one experiment config; returns the manifest dict.

    Identical config and seed produce byte-identical ``raw.csv`` and
    ``summary.json`` regardless of worker count. With ``resume=True`` a
    prior manifest in the output directory is required and only missing
    replicates are computed.
    """
    validated = validate_config(cfg, Path(out_dir) if out_dir else None)
    out = validated.out_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OutputUnwritable(f"cannot write to {out}: {exc}")

    cfg_hash = config_hash(validated.raw)
    manifest_path = out / "manifest.json"
    journal_path = out / "replicates.jsonl"

    prior: dict = {}
    if resume:
        if not manifest_path.exists():
            raise ManifestMismatch(f"no manifest to resume at {manifest_path}")
        manifest = json.loads(manifest_path.read_text())
        if manifest.get("config_hash") != cfg_hash:
            raise ManifestMismatch(
                f"config hash {cfg_hash} does not match manifest {manifest.get('config_hash')}"
            )
        prior = _load_journal(journal_path)
    else:
        journal_path.unlink(missing_ok=True)

    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    _dump_json(out / "config.json", _canonical(validated.raw))
    if validated.experiment == "ExponentReport":
        manifest = _finalize_report(validated, out, cfg_hash, started)
        return manifest

    # provisional manifest so a killed run can be resumed
    n = validated.plan.n_replicates
    _dump_json(
        manifest_path,
        {
            "schema_version": SCHEMA_VERSION,
            "config_hash": cfg_hash,
            "code_version": code_version,
            "experiment": validated.experiment,
            "n_replicates": n,
            "started_at": started,
            "finished_at": None,
            "statuses": ["pending"] * n,
        },
    )

    kernel = validated.build_kernel()
    missing = [i for i in range(n) if i not in prior]
    fresh = _compute_rows(validated.raw, kernel, missing, _resolve_workers(workers), journal_path, out)
    results = {**prior, **fresh}

    statuses = []
    samples: dict[str, list[float]] = {}
    failures = 0
    for i in range(n):
        rows, error = results[i]
        if error is not None:
            failures += 1
            statuses.append(error)
            continue
        statuses.append("done")
        for stat in kernel.statistic_names():
            if stat in rows:
                samples.setdefault(stat, []).append(rows[stat])
    check_failure_budget(failures, n)

    _write_raw_csv(out / "raw.csv", kernel, results, n)
    per_stat = {
        stat: SampleSummary.from_samples(vals, failures, raw_path="raw.csv").as_dict()
        for stat, vals in samples.items()
    }
    summary = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": cfg_hash,
        "experiment": validated.experiment,
        "params": kernel.params(),
        "statistics": per_stat,
        "derived": kernel.summarize(samples, failures),
        "n_failed": failures,
    }
    _dump_json(out / "summary.json", summary)

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": cfg_hash,
        "code_version": code_version,
        "experiment": validated.experiment,
        "n_replicates": n,
        "started_at": started,
        "finished_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "statuses": statuses,
    }
    _dump_json(manifest_path, manifest)
    return manifest


def checkpoint_resume(cfg: dict, workers: int | None = None, out_dir=None) -> dict:
    """Complete the missing replicates of a previously started run."""
    return run(cfg, workers=workers, out_dir=out_dir, resume=True)


def _write_raw_csv(path: Path, kernel, results: dict, n: int) -> None:
    lines = ["replicate,statistic,value"]
    order = kernel.statistic_names()
    for i in range(n):
        rows, error = results[i]
        if error is not None:
            continue
        for stat in order:
            if stat in rows:
                lines.append(f"{i},{stat},{float(rows[stat])!r}")
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# exponent report

def _load_summary(path: Path, base: Path):
    p = Path(path)
    if not p.is_absolute():
        p = base / p
    return json.loads(p.read_text())


def _finalize_report(validated: ValidatedConfig, out: Path, cfg_hash: str, started: str) -> dict:
    scales = validated.scales
    base = out.parent
    sigma_summary = _load_summary(scales["sigma_summary"], base)
    table = sigma_summary["derived"]["scale_table"]
    sigma_fit = fit_power_law([(r, s) for r, s in table])

    k_fraction = float(scales.get("wandering_k_fraction", 0.5))
    wander_pts = []
    for path in scales["wandering_summaries"]:
        summ = _load_summary(path, base)
        n = float(summ["params"]["n"])
        per_k = summ["derived"]["per_k"]
        want = k_fraction * n
        key = min(per_k, key=lambda k: abs(float(k) - want))
        wander_pts.append((n, per_k[key]["quantiles"]["0.5"]))
    wander_fit = fit_power_law(sorted(wander_pts))
    report = chi_xi_report(sigma_fit, wander_fit)

    derived = {
        "sigma_fit": sigma_fit.as_dict(),
        "wandering_fit": wander_fit.as_dict(),
        "chi_xi": report.as_dict(),
        "scale_table": table,
        "wandering_medians": [[n, w] for n, w in sorted(wander_pts)],
    }
    if "transverse_summary" in scales:
        tsum = _load_summary(scales["transverse_summary"], base)
        tfit = transverse_exponent([(L, m) for L, m in tsum["derived"]["mean_D_table"]])
        derived["transverse_fit"] = tfit.as_dict()
    if "correlation_summary" in scales:
        csum = _load_summary(scales["correlation_summary"], base)
        cfit = correlation_exponent([(J, c) for J, c in csum["derived"]["correlation_table"]])
        derived["correlation_fit"] = cfit.as_dict()

    summary = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": cfg_hash,
        "experiment": "ExponentReport",
        "params": {"wandering_k_fraction": k_fraction},
        "statistics": {},
        "derived": derived,
        "n_failed": 0,
    }
    _dump_json(out / "summary.json", summary)
    (out / "raw.csv").write_text("replicate,statistic,value\n")
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": cfg_hash,
        "code_version": code_version,
        "experiment": "ExponentReport",
        "n_replicates": 0,
        "started_at": started,
        "finished_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "statuses": [],
    }
    _dump_json(out / "manifest.json", manifest)
    return manifest


def fit_table_file(points_path, out_path=None) -> dict:
    """Fit a power law to a JSON table of [x, y] pairs; returns the fit
    payload including a checksum of the input table."""
    p = Path(points_path)
    pairs = json.loads(p.read_text())
    blob = json.dumps(_canonical(pairs), sort_keys=True, separators=(",", ":"))
    fit = fit_power_law([(float(x), float(y)) for x, y in pairs])
    payload = {
        "schema_version": SCHEMA_VERSION,
        "fit": fit.as_dict(),
        "input_checksum": hashlib.sha256(blob.encode()).hexdigest()[:16],
        "n_points": len(pairs),
    }
    if out_path is not None:
        _dump_json(Path(out_path), payload)
    return payload
