import json

import numpy as np
import pytest

import safeadp as sa
from safeadp.cli import main, write_csv
from safeadp.config import parse_config


def _run(tmp_path, *extra):
    out = tmp_path / "traj.csv"
    summary = tmp_path / "summary.json"
    code = main(["run", "--t-final", "0.5", "--out", str(out),
                 "--summary", str(summary), *extra])
    return code, out, summary


class TestRun:
    def test_ok_exit_and_outputs(self, tmp_path, capsys):
        code, out, summary = _run(tmp_path)
        assert code == 0
        assert out.exists() and summary.exists()
        assert "status=OK" in capsys.readouterr().out

    def test_csv_header(self, tmp_path):
        _code, out, _ = _run(tmp_path)
        header = out.read_text().splitlines()[0].split(",")
        assert header == ["t", "x1", "x2", "u1", "u2", "h", "B", "Vhat",
                          "delta", "Wc1", "Wc2", "Wc3", "Wa1", "Wa2", "Wa3",
                          "minEigGamma", "c1", "J", "status"]

    def test_rows_and_line_endings(self, tmp_path):
        _code, out, _ = _run(tmp_path)
        raw = out.read_bytes()
        assert b"\r" not in raw
        lines = raw.decode().splitlines()
        assert len(lines) == 1 + 51  # header + rows at dt_out = 0.01
        assert lines[-1].endswith(",OK")

    def test_value_round_trip(self, tmp_path, adp_record):
        # 17 significant digits reproduce the double exactly
        path = tmp_path / "rt.csv"
        write_csv(adp_record, path)
        lines = path.read_text().splitlines()[1:]
        for i in (0, 100, len(lines) - 1):
            vals = lines[i].split(",")
            assert float(vals[1]) == adp_record.x[i, 0]
            assert float(vals[2]) == adp_record.x[i, 1]
            assert float(vals[18 - 1]) == adp_record.J[i]

    def test_byte_identical_across_runs(self, tmp_path):
        _c1, out1, _ = _run(tmp_path)
        data1 = out1.read_bytes()
        out2 = tmp_path / "traj2.csv"
        main(["run", "--t-final", "0.5", "--out", str(out2),
              "--summary", str(tmp_path / "s2.json")])
        assert data1 == out2.read_bytes()

    def test_summary_matches_csv(self, tmp_path):
        _code, out, summary = _run(tmp_path)
        d = json.loads(summary.read_text())
        rows = [ln.split(",") for ln in out.read_text().splitlines()[1:]]
        h_col = np.array([float(r[5]) for r in rows])
        assert d["min_h"] == pytest.approx(h_col.min(), abs=1e-15)
        assert d["status"] == "OK"
        assert d["controller"] == "adp"


class TestConfig:
    def test_parse_defaults_file(self):
        values = parse_config("default.cfg")
        assert values["sim.controller"] in ("adp", "qp")
        assert values["gains.kc2"] == 0.75

    def test_unknown_key_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("no.such.key = 1\n")
        code = main(["run", "--config", str(cfg)])
        assert code == 4
        err = capsys.readouterr().err
        assert "bad.cfg" in err and ":1" in err

    def test_bad_value_reports_line(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("# comment\ngains.kc1 = not_a_number\n")
        code = main(["run", "--config", str(cfg)])
        assert code == 4
        assert ":2" in capsys.readouterr().err

    def test_config_overrides_apply(self, tmp_path):
        cfg = tmp_path / "ok.cfg"
        cfg.write_text("sim.t_final = 0.2\nsim.controller = qp\n")
        out = tmp_path / "t.csv"
        code = main(["run", "--config", str(cfg), "--out", str(out),
                     "--summary", str(tmp_path / "s.json")])
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 21
        assert "nan" in lines[1]  # learner columns empty for the QP baseline


class TestCompare:
    def test_outputs(self, tmp_path, capsys):
        stem = tmp_path / "cmp.csv"
        code = main(["compare", "--t-final", "0.5", "--out", str(stem),
                     "--summary", str(tmp_path / "cmp.json")])
        assert code == 0
        for ctrl in ("adp", "qp"):
            assert (tmp_path / f"cmp_{ctrl}.csv").exists()
            for panel in ("xnorm", "h", "uinf"):
                assert (tmp_path / f"cmp_{ctrl}_panel_{panel}.dat").exists()
        joint = json.loads((tmp_path / "cmp.json").read_text())
        assert set(joint) >= {"adp", "qp", "adp_converges_better"}
        out = capsys.readouterr().out
        assert "adp:" in out and "qp:" in out


class TestSweep:
    def test_sweep_runs_each_value(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SAFEADP_THREADS", "2")
        stem = tmp_path / "sw.csv"
        code = main(["sweep", "--t-final", "0.3", "--out", str(stem),
                     "--sweep-key", "gains.seed", "--sweep-values", "0;1;2"])
        assert code == 0
        for i in range(3):
            assert (tmp_path / f"sw_{i:03d}.csv").exists()
            d = json.loads((tmp_path / f"sw_{i:03d}_summary.json").read_text())
            assert d["sweep_value"] == i

    def test_unknown_sweep_key(self, tmp_path):
        code = main(["sweep", "--sweep-key", "nope.nope", "--sweep-values", "1",
                     "--out", str(tmp_path / "x.csv")])
        assert code == 4


class TestSelftest:
    def test_selftest_passes(self, capsys):
        code = main(["selftest"])
        assert code == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert out.count("[PASS]") >= 6
