import json

import pytest

from katofsi import sweep
from katofsi.cli import main
from katofsi.config import from_dict
from katofsi.io import read_report, read_summary

FAST = {"mode": "sweep", "grid": {"n": 32, "L": 4.0}, "fluid": {"nu_list": [0.05, 0.04]},
        "time": {"T": 0.1, "sample_stride": 5}, "kato": {"c": 25.0}}


def fast_cfg(tmp_path, **over):
    raw = json.loads(json.dumps(FAST))
    raw["output"] = {"dir": str(tmp_path / "out")}
    for k, v in over.items():
        sec, key = k.split("__")
        raw.setdefault(sec, {})[key] = v
    return from_dict(raw)


def test_single_nu_sweep_has_no_exponents(tmp_path):
    res = sweep.run_sweep(fast_cfg(tmp_path, fluid__nu_list=[0.05]))
    assert len(res.rows) == 1 and res.report is None
    summ = read_summary(res.out_dir / "summary.json")
    assert "note" in summ and "exponents" not in summ
    assert read_report(res.out_dir / "report.csv")[0].status == "ok"


def test_failed_run_keeps_its_row(tmp_path, monkeypatch):
    real = sweep.simulate

    def flaky(cfg, nu, out=None, ref=None, **kw):
        if nu == 0.04:
            raise FloatingPointError("blew up")
        return real(cfg, nu, out, ref, **kw)

    monkeypatch.setattr(sweep, "simulate", flaky)
    res = sweep.run_sweep(fast_cfg(tmp_path))
    assert [r.status for r in res.rows] == ["ok", "failed: FloatingPointError: blew up"]
    rows = read_report(res.out_dir / "report.csv")
    assert rows[1].status.startswith("failed")


def test_resume_reuses_finished_rows(tmp_path, monkeypatch):
    cfg = fast_cfg(tmp_path)
    first = sweep.run_sweep(cfg)

    def boom(*a, **k):
        raise AssertionError("should not rerun")

    monkeypatch.setattr(sweep, "simulate", boom)
    again = sweep.run_sweep(cfg)
    assert [r.strip_deform for r in again.rows] == [r.strip_deform for r in first.rows]


def test_diagnose_existing_matches(tmp_path):
    cfg = fast_cfg(tmp_path)
    first = sweep.run_sweep(cfg)
    redo = sweep.diagnose_existing(cfg)
    assert [r.status for r in redo.rows] == ["ok", "ok"]
    assert redo.rows[0].total_deform == pytest.approx(first.rows[0].total_deform, rel=1e-12)


def test_cli_identities(tmp_path, capsys):
    assert main(["identities", "--n-fields", "2", "--grids", "32,64", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "identities.csv").read_text().startswith("kind,n,max_gap")
    assert "order" in capsys.readouterr().out


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("grid: {n: 64}\nfluid: {nu_list: [0.01, 0.02]}\n")
    assert main(["sweep", "--config", str(bad)]) == 2
    assert "strictly decreasing" in capsys.readouterr().err


def test_cli_simulate(tmp_path, capsys):
    import yaml

    raw = dict(FAST, mode="ns", output={"dir": str(tmp_path / "sim")})
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump(raw))
    assert main(["simulate", "--config", str(cfg), "--set", "time.T=0.05"]) == 0
    assert (tmp_path / "sim" / "nu_0.05" / "final.kfsi").exists()
    assert "KE=" in capsys.readouterr().out
