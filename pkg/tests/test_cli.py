import csv
import json
import subprocess
import sys

import pytest

from wavecross.cli import main
from wavecross.experiment import (CSV_COLUMNS, ConfigError, ReportError, bundled_configs, load_config,
                                  merge_summaries, validate)

SMALL = {
    "schema_version": 1, "study_id": "small_crossing", "kind": "pipeline",
    "model": {"name": "schrodinger_crossing_1d", "params": {}},
    "initial": {"z0": [-1.0, 2.0], "gamma0": [[[0.0, 1.0]]], "band": 1},
    "eps": [0.04, 0.02],
    "time": {"t0": 0.0, "after_crossing": 0.5},
    "outputs": {"grids": True},
    "tolerances": {"min_order": 0.5, "alpha_flat_zero": 1e-12},
}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_every_criterion_has_a_bundled_config():
    names = bundled_configs()
    for k in range(1, 11):
        assert f"acceptance_c{k:02d}" in names
    assert "schrodinger_crossing_1d" in names and "gapped_adiabatic_1d" in names
    for n in names:
        load_config(n)


def test_bundled_schrodinger_crossing(tmp_path, capsys):
    assert main(["run", "schrodinger_crossing_1d", "--out-dir", str(tmp_path), "--threads", "3"]) == 0
    out = tmp_path / "schrodinger_crossing_1d"
    ev = json.loads((out / "eps_0.005" / "crossing.json").read_text())
    assert ev["alpha_flat"] == [0.0]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"]
    assert {c["name"] for c in summary["criteria"]} >= {"observed_order", "alpha_flat_zero", "overlap_band2"}


def test_bundled_gapped_adiabatic(tmp_path):
    assert main(["run", "gapped_adiabatic_1d", "--out-dir", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "gapped_adiabatic_1d" / "convergence.csv")))
    assert list(rows[0]) == CSV_COLUMNS
    assert rows[0]["order_est"] == "nan"
    assert all(float(r["order_est"]) >= 0.9 for r in rows[1:])


def test_malformed_config_names_key(tmp_path, capsys):
    bad = dict(SMALL, model={"nam": "free"})
    assert main(["run", write(tmp_path, bad), "--out-dir", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "config" and err["key"] == "model.nam"
    assert json.loads((tmp_path / "error.json").read_text())["key"] == "model.nam"


@pytest.mark.parametrize("patch,key", [
    ({"eps": [0.01, 0.02]}, "eps"),
    ({"schema_version": 2}, "schema_version"),
    ({"initial": {"z0": [1.0]}}, "initial.z0"),
    ({"time": {"t0": 0.0, "t_end": 1.0, "after_crossing": 0.5}}, "time"),
    ({"method": {"approximation": "exact"}}, "method.approximation"),
    ({"model": {"name": "nope"}}, "model.name"),
    ({"model": {"name": "harmonic", "params": {"omeg": 1}}}, "model.params"),
    ({"extra": 1}, "extra"),
])
def test_validation_errors(patch, key):
    cfg = dict(SMALL)
    cfg.update(patch)
    with pytest.raises(ConfigError) as exc:
        validate(cfg)
    assert exc.value.key == key


def test_invalid_json(tmp_path, capsys):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    assert main(["run", str(p), "--out-dir", str(tmp_path)]) == 2


def test_criterion_params_checked():
    with pytest.raises(ConfigError) as exc:
        validate({"schema_version": 1, "study_id": "c", "kind": "criterion", "criterion": 1,
                  "params": {"n_cases": 3, "bogus": 1}})
    assert exc.value.key == "params.bogus"


def test_pipeline_outputs_and_determinism(tmp_path):
    cfg = write(tmp_path, SMALL)
    assert main(["run", cfg, "--out-dir", str(tmp_path / "a")]) == 0
    assert main(["run", cfg, "--out-dir", str(tmp_path / "b"), "--threads", "2"]) == 0
    a = (tmp_path / "a" / "small_crossing" / "summary.json").read_bytes()
    b = (tmp_path / "b" / "small_crossing" / "summary.json").read_bytes()
    assert a == b
    d = tmp_path / "a" / "small_crossing" / "eps_0.02"
    for name in ("solution.json", "crossing.json", "grid_semiclassical.csv", "grid_oracle.csv"):
        assert (d / name).exists()
    head = next(csv.reader(open(d / "grid_oracle.csv")))
    assert head == ["x1", "re1", "im1", "re2", "im2"]


def test_criterion_run_with_seed_is_deterministic(tmp_path):
    for sub in ("a", "b"):
        assert main(["run", "acceptance_c01", "--out-dir", str(tmp_path / sub), "--seed", "3"]) == 0
    a = (tmp_path / "a" / "acceptance_c01" / "summary.json").read_bytes()
    assert a == (tmp_path / "b" / "acceptance_c01" / "summary.json").read_bytes()


def test_failing_tolerance_exits_one(tmp_path):
    cfg = dict(SMALL, study_id="strict", tolerances={"max_error": 1e-9}, outputs={})
    assert main(["run", write(tmp_path, cfg), "--out-dir", str(tmp_path)]) == 1


def test_hk_pipeline(tmp_path):
    cfg = {"schema_version": 1, "study_id": "hk_harmonic", "model": {"name": "harmonic"},
           "initial": {"z0": [-0.5, 0.5]}, "eps": [0.02, 0.01], "time": {"t_end": 1.0},
           "method": {"approximation": "hk"}, "tolerances": {"max_error": 1e-3}}
    assert main(["run", write(tmp_path, cfg), "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "hk_harmonic" / "eps_0.01" / "hk_seeds.csv").exists()


# ------------------------------------------------------------------ report

def _summary(tmp_path, sid, passed=True, version=1, value=1.0, name=None):
    data = {"schema_version": version, "study_id": sid, "kind": "pipeline", "passed": passed,
            "rows": [{"eps": 0.01, "t": 1.0, "err_total": 0.1, "err_band2": None, "order_est": None}],
            "criteria": [{"name": "observed_order", "value": value, "threshold": 0.5, "passed": passed}]}
    p = tmp_path / (name or f"{sid}.json")
    p.write_text(json.dumps(data))
    return str(p)


def test_report_single_pass_through(tmp_path, capsys):
    f = _summary(tmp_path, "one")
    assert main(["report", f, "--out-dir", str(tmp_path / "rep")]) == 0
    text = (tmp_path / "rep" / "report.txt").read_text()
    assert text.count("== ") == 1 and "one" in text


def test_report_two_sections_sorted(tmp_path):
    fs = [_summary(tmp_path, "zeta"), _summary(tmp_path, "alpha", passed=False)]
    assert main(["report", *fs, "--out-dir", str(tmp_path / "rep")]) == 1
    text = (tmp_path / "rep" / "report.txt").read_text()
    assert text.index("alpha") < text.index("zeta") and text.count("== ") == 2
    rows = list(csv.reader(open(tmp_path / "rep" / "report.csv")))
    assert rows[0] == ["study_id", "criterion", "passed", "value", "threshold"]
    assert [r[0] for r in rows[1:]] == ["alpha", "zeta"]


def test_report_identical_duplicates_merge(tmp_path):
    a = _summary(tmp_path, "s", name="a.json")
    b = _summary(tmp_path, "s", name="b.json")
    assert len(merge_summaries([a, b])) == 1


def test_report_conflicting_duplicates(tmp_path):
    a = _summary(tmp_path, "s", name="a.json")
    b = _summary(tmp_path, "s", value=2.0, name="b.json")
    with pytest.raises(ReportError):
        merge_summaries([a, b])
    assert main(["report", a, b, "--out-dir", str(tmp_path)]) == 2


def test_report_version_mismatch(tmp_path):
    with pytest.raises(ReportError):
        merge_summaries([_summary(tmp_path, "s", version=0)])


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "wavecross", "list"], capture_output=True, text=True)
    assert out.returncode == 0 and "acceptance_c10" in out.stdout
