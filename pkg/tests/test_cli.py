import json
import os

import pytest

from vtolctl.cli import main
from vtolctl.config import cruise_config, hover_config, write_config


@pytest.fixture
def hover_cfg(tmp_path):
    path = str(tmp_path / "hover.json")
    write_config(hover_config(duration=1.0), path)
    return path


class TestSimRun:
    def test_run_writes_log_and_metrics(self, hover_cfg, tmp_path, capsys):
        out = str(tmp_path / "log.csv")
        rc = main(["sim", "run", "--config", hover_cfg, "--out", out])
        assert rc == 0
        assert os.path.exists(out)
        mets = json.load(open(out + ".metrics.json"))
        assert mets["success"] is True

    def test_seed_override(self, tmp_path):
        cfg = cruise_config(duration=0.5)
        cfg["pitot_noise"] = 0.2
        cfg_path = str(tmp_path / "c.json")
        write_config(cfg, cfg_path)
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        main(["sim", "run", "--config", cfg_path, "--out", a, "--seed", "5"])
        main(["sim", "run", "--config", cfg_path, "--out", b, "--seed", "5"])
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_bad_config_exit_code(self, tmp_path):
        path = str(tmp_path / "bad.json")
        with open(path, "w") as fh:
            fh.write('{"mission": {"kind": "nope"}}')
        assert main(["sim", "run", "--config", path, "--out", str(tmp_path / "x.csv")]) == 2

    def test_figures_rendered(self, hover_cfg, tmp_path):
        out = str(tmp_path / "log.csv")
        figs = str(tmp_path / "figs")
        rc = main(["sim", "run", "--config", hover_cfg, "--out", out, "--figures", figs])
        assert rc == 0
        pngs = [f for f in os.listdir(figs) if f.endswith(".png")]
        assert len(pngs) >= 4


class TestSimBatch:
    def test_batch_runs_directory(self, tmp_path):
        cfg_dir = tmp_path / "cfgs"
        cfg_dir.mkdir()
        write_config(hover_config(duration=0.5), str(cfg_dir / "one.json"))
        write_config(hover_config(duration=0.5), str(cfg_dir / "two.json"))
        out_dir = str(tmp_path / "results")
        rc = main(["sim", "batch", "--dir", str(cfg_dir), "--out-dir", out_dir])
        assert rc == 0
        assert sorted(os.listdir(out_dir)) == [
            "one.csv", "one.metrics.json", "two.csv", "two.metrics.json",
        ]

    def test_empty_dir(self, tmp_path):
        assert main(["sim", "batch", "--dir", str(tmp_path), "--out-dir",
                     str(tmp_path / "o")]) == 2


class TestAllocSolve:
    def test_hover_solution(self, capsys):
        rc = main(["alloc", "solve", "--thrust", "9.81", "--tilt", "0",
                   "--torque", "0,0,0", "--airspeed", "0"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["saturated"] == []
        assert out["achieved"]["thrust"] == pytest.approx(9.81)
        assert out["lambda_bar"] == 1.0

    def test_infeasible_exit_code(self, capsys):
        rc = main(["alloc", "solve", "--thrust", "9.81", "--tilt", "0",
                   "--torque", "0,2,0", "--airspeed", "0"])
        assert rc == 2
        err = json.loads(capsys.readouterr().err)
        assert "error" in err


class TestVerifyProp1:
    def test_small_verification(self, tmp_path, capsys):
        report_path = str(tmp_path / "prop1.json")
        rc = main(["verify", "prop1", "--trials", "20", "--seed", "3",
                   "--horizon", "3.0", "--report", report_path])
        assert rc == 0
        rep = json.load(open(report_path))
        assert rep["all_passed"] is True
        assert rep["trials"] == 20


class TestReport:
    def test_report_from_log(self, hover_cfg, tmp_path):
        out = str(tmp_path / "log.csv")
        main(["sim", "run", "--config", hover_cfg, "--out", out])
        figs = str(tmp_path / "figs")
        rc = main(["report", "--log", out, "--out-dir", figs])
        assert rc == 0
        files = os.listdir(figs)
        assert any(f.endswith("_metrics.json") for f in files)
        assert sum(f.endswith(".png") for f in files) >= 4
        mets = json.load(open(os.path.join(figs, "log_metrics.json")))
        assert mets["n_records"] > 0
