"""Config parsing, dispatch, exit codes and on-disk artifacts."""

import json
import subprocess
import sys
from fractions import Fraction

import pytest

from qdnls.cli import main, parse_config
from qdnls.errors import ConfigError


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestParse:
    def test_types(self):
        cfg = parse_config("alpha = 1/2\nK = 4, 8\nT = 1/4\np = inf\n# comment\n", "resonance-scan")
        assert cfg.alpha == Fraction(1, 2)
        assert cfg.K == (4, 8)
        assert cfg.T == 0.25
        assert cfg.p == float("inf")

    @pytest.mark.parametrize("text", ["nokey\n", "bogus = 1\n", "alpha = one\n", "d = 2.5\n"])
    def test_bad_lines(self, text):
        with pytest.raises(ConfigError):
            parse_config(text, "simulate")

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError):
            parse_config("", "fly")

    @pytest.mark.parametrize("exp,text", [
        ("bilinear", "case = HHL\nH = 8\nL = 4\n"),
        ("bilinear", "sigma1 = 1\nsigma2 = -1\n"),
        ("strichartz", "N = 3\n"),
        ("trilinear", "sigmas = 1,1,-1\n"),
        ("trilinear", "N3 = 1,1,1\n"),
        ("trilinear", "T = 7\n"),
        ("simulate", "K = 4, 8\n"),
    ])
    def test_preconditions_before_dispatch(self, exp, text):
        with pytest.raises(ConfigError):
            parse_config(text, exp)

    def test_rational_echo_is_exact(self):
        cfg = parse_config("beta = 2/6\n", "resonance-scan")
        assert cfg.echo()["beta"] == "1/3"


class TestRun:
    def test_resonance_scan(self, tmp_path):
        cfg = write(tmp_path, "alpha = 1\nbeta = 1\ngamma = -1\nd = 2\nK = 2\n")
        assert main(["resonance-scan", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        lines = (tmp_path / "o" / "resonance.csv").read_text().splitlines()
        assert lines[1] == "sigma1,sigma2,sigma3,K,d,min_ratio_num,min_ratio_den,witness"
        assert lines[2] == '1,1,-1,2,2,0,1,"((1,0),(0,1),(-1,-1))"'

    def test_simulate_zero_data(self, tmp_path):
        cfg = write(tmp_path, "data = zero\nK = 4\nT = 0.01\ndt = 1e-3\n")
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        rows = (tmp_path / "o" / "conservation.csv").read_text().splitlines()[2:]
        assert len(rows) == 11
        assert all(r.split(",")[2:] == ["0.0", "0.0", "0.0"] for r in rows)
        assert (tmp_path / "o" / "final_u.snap").exists()

    def test_picard_large_data(self, tmp_path):
        cfg = write(tmp_path, "size = 50\nK = 6\nd = 1\nT = 1\ndt = 1e-2\n")
        assert main(["picard", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
        man = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert man["exit_code"] == 3 and man["status"].startswith("non-convergence")
        assert "picard.csv" in man["outputs"]
        assert (tmp_path / "o" / "picard.csv").exists()

    def test_blow_up_exit(self, tmp_path):
        cfg = write(tmp_path, "K = 4\nT = 0.05\ndt = 1e-2\nguard = 0.5\n")
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 4

    def test_cost_guard_exit(self, tmp_path):
        cfg = write(tmp_path, "d = 4\nK = 12\n")
        assert main(["resonance-scan", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 5

    def test_config_error_exit(self, tmp_path, capsys):
        cfg = write(tmp_path, "alpha = sqrt(2)\n")
        assert main(["simulate", "--config", str(cfg)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.cfg")]) == 2

    def test_seed_override_and_manifest(self, tmp_path):
        cfg = write(tmp_path, "trials = 5\nseed = 1\n")
        assert main(["vnorm-selftest", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "9"]) == 0
        man = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert man["seed"] == 9
        assert set(man["versions"]) == {"qdnls", "python", "numpy", "scipy"}
        assert float(man["info"]["max_abs_diff"]) < 1e-12

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = write(tmp_path, "N = 2, 4\nd = 2\np = 4\ntrials = 3\n")
        for out in ("a", "b"):
            assert main(["strichartz", "--config", str(cfg), "--out", str(tmp_path / out)]) == 0
        for name in ("strichartz.csv", "strichartz_sup.csv", "strichartz_loglog.dat"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_trilinear_and_plot(self, tmp_path, capsys):
        cfg = write(tmp_path, "N3 = 4,4,2\nd = 2\ntrials = 2\n")
        assert main(["trilinear", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        table = tmp_path / "o" / "trilinear.csv"
        assert main(["plot", "--table", str(table), "--x", "trial", "--y", "weighted"]) == 0
        assert len(capsys.readouterr().out.splitlines()) == 2

    def test_plot_missing_column(self, tmp_path):
        t = tmp_path / "t.csv"
        t.write_text("# provenance: x\na,b\n1,2\n")
        assert main(["plot", "--table", str(t), "--x", "a", "--y", "c"]) == 2

    def test_module_entry_point(self, tmp_path):
        cfg = write(tmp_path, "K = 2\nd = 1\n")
        r = subprocess.run([sys.executable, "-m", "qdnls", "resonance-scan", "--config", str(cfg),
                            "--out", str(tmp_path / "o")], capture_output=True)
        assert r.returncode == 0
