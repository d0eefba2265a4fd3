import copy
import json

import pytest

from fpplab import cli, harness
from fpplab.errors import ConfigInvalid, ExperimentFailed, ManifestMismatch


def base_config(out_dir, n_replicates=4):
    return {
        "experiment": "SigmaLadder",
        "distribution": {"kind": "exponential", "rate": 1.0},
        "frame": "symmetry:diagonal",
        "scales": {"n_ladder": [8, 16]},
        "plan": {"master_seed": 4242, "n_replicates": n_replicates},
        "output_dir": str(out_dir),
    }


def test_smoke_run_outputs(tmp_path):
    cfg = base_config(tmp_path / "run")
    manifest = harness.run(cfg, workers=1)
    assert manifest["statuses"] == ["done"] * 4
    out = tmp_path / "run"
    raw = (out / "raw.csv").read_text().splitlines()
    assert raw[0] == "replicate,statistic,value"
    assert len(raw) == 1 + 4 * 2  # ladder of two targets, four replicates
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema_version"] == harness.SCHEMA_VERSION
    assert summary["config_hash"] == manifest["config_hash"]
    assert "T@n=8" in summary["statistics"]
    assert len(summary["derived"]["scale_table"]) == 2
    cfg_echo = json.loads((out / "config.json").read_text())
    assert cfg_echo["experiment"] == "SigmaLadder"


def test_rerun_byte_identical(tmp_path):
    cfg1 = base_config(tmp_path / "a")
    cfg2 = base_config(tmp_path / "b")
    harness.run(cfg1, workers=1)
    harness.run(cfg2, workers=1)
    assert (tmp_path / "a/raw.csv").read_bytes() == (tmp_path / "b/raw.csv").read_bytes()
    assert (tmp_path / "a/summary.json").read_bytes() == (tmp_path / "b/summary.json").read_bytes()


def test_worker_count_independence(tmp_path):
    outputs = {}
    for workers in (1, 4):
        cfg = base_config(tmp_path / f"w{workers}")
        harness.run(cfg, workers=workers)
        outputs[workers] = (
            (tmp_path / f"w{workers}/raw.csv").read_bytes(),
            (tmp_path / f"w{workers}/summary.json").read_bytes(),
        )
    assert outputs[1] == outputs[4]


def test_manifest_statuses_partition(tmp_path):
    cfg = base_config(tmp_path / "run", n_replicates=5)
    manifest = harness.run(cfg, workers=1)
    assert len(manifest["statuses"]) == 5
    assert all(s == "done" for s in manifest["statuses"])


def test_config_validation_errors(tmp_path):
    cfg = base_config(tmp_path / "x")
    bad = copy.deepcopy(cfg)
    bad["scales"]["n_ladder"] = [16, 8]
    with pytest.raises(ConfigInvalid) as err:
        harness.validate_config(bad)
    assert err.value.field == "scales.n_ladder"

    bad = copy.deepcopy(cfg)
    del bad["plan"]
    with pytest.raises(ConfigInvalid) as err:
        harness.validate_config(bad)
    assert err.value.field == "plan"

    bad = copy.deepcopy(cfg)
    bad["plan"]["n_replicates"] = 1
    with pytest.raises(ConfigInvalid) as err:
        harness.validate_config(bad)
    assert err.value.field == "plan.n_replicates"

    bad = copy.deepcopy(cfg)
    bad["distribution"] = {"kind": "weibull", "shape": 0.5, "scale": 1.0}
    with pytest.raises(ConfigInvalid):
        harness.validate_config(bad)

    bad = copy.deepcopy(cfg)
    bad["experiment"] = "Nonsense"
    with pytest.raises(ConfigInvalid):
        harness.validate_config(bad)


def test_config_hash_ignores_replicates_and_output(tmp_path):
    a = base_config(tmp_path / "a", n_replicates=3)
    b = base_config(tmp_path / "b", n_replicates=30)
    assert harness.config_hash(a) == harness.config_hash(b)
    c = copy.deepcopy(a)
    c["distribution"]["rate"] = 2.0
    assert harness.config_hash(c) != harness.config_hash(a)


def test_resume_extension_matches_uninterrupted(tmp_path):
    full = base_config(tmp_path / "full", n_replicates=6)
    harness.run(full, workers=1)

    partial = base_config(tmp_path / "resume", n_replicates=3)
    harness.run(partial, workers=1)
    extended = base_config(tmp_path / "resume", n_replicates=6)
    harness.checkpoint_resume(extended, workers=1)

    assert (tmp_path / "full/raw.csv").read_bytes() == (tmp_path / "resume/raw.csv").read_bytes()
    assert (tmp_path / "full/summary.json").read_bytes() == (tmp_path / "resume/summary.json").read_bytes()


def test_output_unwritable(tmp_path):
    from fpplab.errors import OutputUnwritable

    blocker = tmp_path / "blocker"
    blocker.write_text("")
    cfg = base_config(blocker / "sub")
    with pytest.raises(OutputUnwritable):
        harness.run(cfg, workers=1)


def test_sigma_slope_range_diagnostic(tmp_path):
    cfg = base_config(tmp_path / "run")
    harness.run(cfg, workers=1)
    derived = json.loads((tmp_path / "run/summary.json").read_text())["derived"]
    assert derived["slope_range"]["min"] <= derived["slope_range"]["max"]


def test_resume_requires_manifest(tmp_path):
    cfg = base_config(tmp_path / "missing")
    with pytest.raises(ManifestMismatch):
        harness.checkpoint_resume(cfg, workers=1)


def test_resume_rejects_altered_distribution(tmp_path):
    cfg = base_config(tmp_path / "run")
    harness.run(cfg, workers=1)
    altered = copy.deepcopy(cfg)
    altered["distribution"] = {"kind": "uniform_shifted", "lo": 0.0, "hi": 2.0}
    with pytest.raises(ManifestMismatch):
        harness.checkpoint_resume(altered, workers=1)


def test_failure_budget_aborts(tmp_path):
    # a non-growing, undersized window policy exhausts on most replicates
    cfg = base_config(tmp_path / "fail", n_replicates=30)
    cfg["scales"] = {"n_ladder": [48]}
    cfg["window_policy"] = {"inflation": 0.05, "growth": 1.0, "max_expansions": 0}
    with pytest.raises(ExperimentFailed):
        harness.run(cfg, workers=1)


def test_wandering_and_conditional_configs(tmp_path):
    cfg = {
        "experiment": "WanderingProfile",
        "distribution": {"kind": "exponential", "rate": 1.0},
        "frame": "symmetry:diagonal",
        "scales": {"n": 16, "k_list": [8]},
        "plan": {"master_seed": 7, "n_replicates": 3},
        "output_dir": str(tmp_path / "wander"),
    }
    manifest = harness.run(cfg, workers=1)
    summary = json.loads((tmp_path / "wander/summary.json").read_text())
    assert "8" in summary["derived"]["per_k"]

    cfg2 = {
        "experiment": "ConditionalDecomposition",
        "distribution": {"kind": "exponential", "rate": 1.0},
        "frame": "symmetry:diagonal",
        "scales": {"n": 16, "ell": 4, "mode": "half_space", "m_ladder": [0, 8, 16]},
        "plan": {"master_seed": 8, "n_replicates": 4},
        "output_dir": str(tmp_path / "cond"),
    }
    harness.run(cfg2, workers=1)
    summary2 = json.loads((tmp_path / "cond/summary.json").read_text())
    assert set(summary2["derived"]["per_region"]) == {"m=0", "m=8", "m=16"}


def test_geodesic_dump_flag(tmp_path):
    cfg = {
        "experiment": "WanderingProfile",
        "distribution": {"kind": "exponential", "rate": 1.0},
        "frame": "symmetry:diagonal",
        "scales": {"n": 12, "k_list": [6], "dump_geodesics": True},
        "plan": {"master_seed": 77, "n_replicates": 3},
        "output_dir": str(tmp_path / "dump"),
    }
    harness.run(cfg, workers=1)
    for i in range(3):
        body = (tmp_path / "dump" / "geodesics" / f"replicate_{i}.txt").read_text()
        lines = body.strip().splitlines()
        assert lines[0] == "0 0"
        pts = [tuple(map(int, ln.split())) for ln in lines]
        assert all(abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1 for a, b in zip(pts, pts[1:]))


def test_long_range_scale_from_file(tmp_path):
    sigma_cfg = base_config(tmp_path / "sigma")
    harness.run(sigma_cfg, workers=1)
    cfg = {
        "experiment": "LongRangeCorrelation",
        "distribution": {"kind": "exponential", "rate": 1.0},
        "frame": "symmetry:diagonal",
        "scales": {"n": 16, "J_ladder": [1], "scale_from": str(tmp_path / "sigma/summary.json")},
        "plan": {"master_seed": 11, "n_replicates": 5},
        "output_dir": str(tmp_path / "corr"),
    }
    harness.run(cfg, workers=1)
    summary = json.loads((tmp_path / "corr/summary.json").read_text())
    assert "1" in summary["derived"]["per_J"]


def test_exponent_report_pipeline(tmp_path):
    sigma_cfg = {
        "experiment": "SigmaLadder",
        "distribution": {"kind": "exponential", "rate": 1.0},
        "frame": "symmetry:diagonal",
        "scales": {"n_ladder": [8, 16, 32]},
        "plan": {"master_seed": 21, "n_replicates": 30},
        "output_dir": str(tmp_path / "sigma"),
    }
    harness.run(sigma_cfg, workers=1)
    wander_paths = []
    for n in (8, 16, 32):
        wcfg = {
            "experiment": "WanderingProfile",
            "distribution": {"kind": "exponential", "rate": 1.0},
            "frame": "symmetry:diagonal",
            "scales": {"n": n, "k_list": [n / 2]},
            "plan": {"master_seed": 23, "n_replicates": 30},
            "output_dir": str(tmp_path / f"wander{n}"),
        }
        harness.run(wcfg, workers=1)
        wander_paths.append(str(tmp_path / f"wander{n}" / "summary.json"))
    report_cfg = {
        "experiment": "ExponentReport",
        "scales": {
            "sigma_summary": str(tmp_path / "sigma/summary.json"),
            "wandering_summaries": wander_paths,
        },
        "plan": {"master_seed": 0, "n_replicates": 1},
        "output_dir": str(tmp_path / "report"),
    }
    harness.run(report_cfg, workers=1)
    report = json.loads((tmp_path / "report/summary.json").read_text())
    assert {"sigma_fit", "wandering_fit", "chi_xi"} <= set(report["derived"])
    assert report["derived"]["chi_xi"]["xi_kpz"] == pytest.approx(
        (1 + report["derived"]["sigma_fit"]["exponent"]) / 2
    )


def test_cli_validate_and_fit(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(base_config(tmp_path / "out")))
    assert cli.main(["validate", "--config", str(cfg_path)]) == 0

    bad_path = tmp_path / "bad.json"
    bad = base_config(tmp_path / "out")
    bad["scales"]["n_ladder"] = []
    bad_path.write_text(json.dumps(bad))
    assert cli.main(["validate", "--config", str(bad_path)]) == 2

    table_path = tmp_path / "table.json"
    table_path.write_text(json.dumps([[10, 100], [100, 10000], [1000, 1000000]]))
    fit_out = tmp_path / "fit.json"
    assert cli.main(["fit", "--points", str(table_path), "--out", str(fit_out)]) == 0
    payload = json.loads(fit_out.read_text())
    assert payload["fit"]["exponent"] == pytest.approx(2.0)
    assert "input_checksum" in payload


def test_cli_runs_experiment(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(base_config(tmp_path / "out", n_replicates=2)))
    rc = cli.main(["sigma-ladder", "--config", str(cfg_path), "--workers", "1"])
    assert rc == 0
    assert (tmp_path / "out/summary.json").exists()


def test_cli_rejects_mismatched_subcommand(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(base_config(tmp_path / "out")))
    assert cli.main(["wandering-profile", "--config", str(cfg_path)]) == 2
