import json
import subprocess
import sys

import pytest

from isac_scaling.cli import main
from isac_scaling.config import ConfigError, ExperimentConfig, load_config, parse_config_text

SMALL = ["--n", "1e4,2e4,4e4", "--gamma", "0,0.3", "--replicates", "2"]


def run(tmp_path, *argv):
    return main([*argv, "--output", str(tmp_path)])


def test_config_file_and_overrides(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nn = 1e4, 4e4\nfading = nakagami\nnakagami-m = 3\nseed = 7\n")
    cfg = load_config(str(p), {"seed": "9"})
    assert cfg.n == [1e4, 4e4] and cfg.fading == "nakagami" and cfg.nakagami_m == 3.0 and cfg.seed == 9
    assert parse_config_text("a = b # c") == {"a": "b"}


@pytest.mark.parametrize("bad", [{"alpha_c": "2"}, {"M": "2"}, {"gamma": "2.0"}, {"replicates": "0"},
                                 {"fading": "lognormal"}, {"bogus": "1"}, {"kappa": "abc"}])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        load_config(None, bad)


def test_default_config_is_valid():
    assert ExperimentConfig().validate().mode == "sweep"


def test_bad_config_exit_code(tmp_path, capsys):
    assert run(tmp_path, "simulate", "--alpha-c", "1.5") == 1
    assert "alpha_c" in capsys.readouterr().err
    (tmp_path / "x.cfg").write_text("no equals sign\n")
    assert run(tmp_path, "simulate", "--config", str(tmp_path / "x.cfg")) == 1


def test_corrupted_schedule_exit_code(tmp_path, capsys):
    code = run(tmp_path, "verify", "--n", "1e4", "--gamma", "0", "--inject-schedule-m", "2")
    assert code == 2
    out = capsys.readouterr().out
    assert "FAIL  schedule_validity" in out
    ledger = json.loads((tmp_path / "verify.json").read_text())
    assert ledger["checks"]["schedule_validity"]["status"] == "fail"


def test_runtime_failure_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["analytic", "--output", str(blocker / "sub")]) == 3


def test_analytic_writes_curves(tmp_path):
    assert run(tmp_path, "analytic") == 0
    for name in ("curves_ac3_as2.csv", "curves_ac4_as2.csv", "curves_ac3_as3.csv"):
        lines = (tmp_path / name).read_text().splitlines()
        assert lines[0] == "scheme,n,gamma,alpha_c,alpha_s,lambda_order,d_order"
        assert len(lines) == 1 + 2 * 24
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["command"] == "analytic" and m["status"] == "ok"


def test_sweep_outputs_deterministic_across_runs_and_workers(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["sweep", *SMALL, "--output", str(a)]) == 0
    assert main(["sweep", *SMALL, "--output", str(b)]) == 0
    assert main(["sweep", *SMALL, "--workers", "2", "--output", str(c)]) == 0
    for name in ("metrics.csv", "slopes.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()
    rows = (a / "metrics.csv").read_text().splitlines()
    assert len(rows) == 1 + 3 * 2 * 2 * 3
    assert json.loads((a / "manifest.json").read_text())["status"] == "ok"


def test_manifest_round_trip(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--n", "1e4", "--gamma", "0.5", "--replicates", "2", "--seed", "5",
                 "--output", str(a)]) == 0
    assert main(["simulate", "--manifest", str(a / "manifest.json"), "--output", str(b)]) == 0
    assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()
    rep = json.loads((a / "report.json").read_text())
    phases = rep["instances"][0]["phases"]
    assert set(phases) == {"draining", "highway", "delivering"}
    assert all(v is not None for ph in phases.values() for v in ph.values())


def test_unroutable_ceiling_warning(tmp_path):
    assert run(tmp_path, "simulate", "--n", "1e4", "--gamma", "0", "--replicates", "1",
               "--unroutable-ceiling", "-1") == 0
    assert json.loads((tmp_path / "manifest.json").read_text())["status"] == "warning"


def test_export_files(tmp_path):
    assert run(tmp_path, "export", "--n", "1e4", "--gamma", "0.3") == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"instance_n10000_g0.3_r0.json", "lattice_n10000_g0.3_r0.json", "routes_n10000_g0.3_r0.json"} <= names
    inst = json.loads((tmp_path / "instance_n10000_g0.3_r0.json").read_text())
    routes = json.loads((tmp_path / "routes_n10000_g0.3_r0.json").read_text())
    assert len(routes["dest"]) == len(inst["nodes"])


def test_verify_default_config_passes(tmp_path, capsys):
    assert run(tmp_path, "verify") == 0
    out = capsys.readouterr().out
    assert all(line.endswith("(soft)") for line in out.splitlines() if line.startswith("FAIL"))
    ledger = json.loads((tmp_path / "verify.json").read_text())
    assert ledger["ok"]


def test_verify_near_two_path_loss(tmp_path):
    assert run(tmp_path, "verify", "--alpha-c", "2.01", "--M", "3", "--n", "1e4", "--gamma", "0") == 0
    ledger = json.loads((tmp_path / "verify.json").read_text())
    assert ledger["checks"]["interference_layer_series_finite"]["status"] == "pass"


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "isac_scaling", "analytic", "--output", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    res = subprocess.run([sys.executable, "-m", "isac_scaling", "sweep", "--M", "1"], capture_output=True, text=True)
    assert res.returncode == 1
