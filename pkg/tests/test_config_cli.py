"""Config parsing, sweeps, and the command-line interface."""

import subprocess
import sys

import numpy as np
import pytest

from mimo_sim.cli import main
from mimo_sim.config import ExperimentConfig, apply_overrides, load_config, parse_length
from mimo_sim.errors import InvalidArgumentError


class TestConfig:
    def test_defaults_are_reference_values(self):
        cfg = ExperimentConfig()
        assert cfg.carrier_frequency == 2.5e9
        assert cfg.wavelength == pytest.approx(0.12, abs=1e-3)
        assert cfg.P == 100 and cfg.K == 10
        assert cfg.snr_ut_db == 15.0
        assert cfg.z0 == 50.0 and cfg.zl == 50.0
        assert cfg.sigma_shadow_db == 8.0
        assert cfg.l_resist == 10.0 and (cfg.l_min, cfg.l_max) == (10.0, 150.0)
        assert cfg.pathloss_v == 3.8
        assert cfg.snr_th_db == -3.0
        assert cfg.M_min == 2
        assert cfg.radius_min() == cfg.wavelength
        assert cfg.coupling_params().dipole_length_l == pytest.approx(cfg.wavelength / 2)

    def test_lambda_suffix(self):
        cfg = ExperimentConfig()
        assert parse_length("3lam", cfg.wavelength) == pytest.approx(3 * cfg.wavelength)
        assert parse_length("0.5λ", cfg.wavelength) == pytest.approx(0.5 * cfg.wavelength)
        assert parse_length("0.36", cfg.wavelength) == 0.36

    def test_file_and_overrides(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text("seed = 99\nR = 2lam\nK = 4\nz0 = 73+42.5j\n")
        cfg = load_config(path, {"trials": "500"})
        assert cfg.seed == 99
        assert cfg.R == pytest.approx(2 * cfg.wavelength)
        assert cfg.K == 4
        assert cfg.z0 == 73 + 42.5j
        assert cfg.trials == 500

    def test_digest_stability(self):
        a, b = ExperimentConfig(), ExperimentConfig()
        assert a.digest() == b.digest()
        c = apply_overrides(a, {"seed": "3"})
        assert c.digest() != a.digest()

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("bogus = 1\n")
        with pytest.raises(InvalidArgumentError):
            load_config(path)

    def test_validation(self):
        with pytest.raises(InvalidArgumentError):
            load_config(None, {"l_resist": "200"})


class TestCli:
    def test_dump_layout_roundtrip(self, tmp_path):
        out = tmp_path / "layout.csv"
        imp = tmp_path / "zc.csv"
        rc = main(
            [
                "dump-layout",
                "--set",
                "M=12",
                "--set",
                "seed=5",
                "--out",
                str(out),
                "--impedance",
                str(imp),
            ]
        )
        assert rc == 0
        from mimo_sim.array_geometry import read_layout_csv

        lay = read_layout_csv(out)
        assert lay.M == 12
        assert imp.read_text().splitlines()[0] == "# Z_C M=12"

    def test_run_rate_schema_and_determinism(self, tmp_path):
        args = [
            "run",
            "rate",
            "--set",
            "trials=200",
            "--set",
            "K=2",
            "--set",
            "P=40",
            "--M",
            "10,14",
            "--out",
            str(tmp_path / "a"),
        ]
        assert main(args) == 0
        args[-1] = str(tmp_path / "b")
        assert main(args) == 0
        a = (tmp_path / "a" / "rate.csv").read_text()
        b = (tmp_path / "b" / "rate.csv").read_text()
        assert a == b
        lines = a.splitlines()
        assert lines[1] == "M,R,zeta,rate_lb,rate_mc,rate_mc_se,rate_asym"
        cells = lines[2].split(",")
        assert int(cells[0]) == 10
        assert all(np.isfinite(float(c)) for c in cells[1:])

    def test_run_eigen_hist(self, tmp_path):
        rc = main(
            [
                "run",
                "eigen-hist",
                "--set",
                "P=40",
                "--layouts",
                "150",
                "--out",
                str(tmp_path),
            ]
        )
        assert rc == 0
        lines = (tmp_path / "eigen_hist.csv").read_text().splitlines()
        assert lines[0].startswith("# eigen-hist")
        assert lines[1] == "bin_left,bin_right,count"
        assert sum(int(l.split(",")[2]) for l in lines[2:]) == 300

    def test_usage_errors(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["run", "bogus-sweep"])
        assert exc.value.code == 2
        assert main(["run", "rate", "--set", "nonsense=1"]) == 2
        assert main(["run", "rate", "--M", "bad:spec:x:y"]) == 2

    def test_axis_parsing(self):
        from mimo_sim.cli import _parse_axis

        assert _parse_axis("10:40:10", 0.12, as_int=True) == [10, 20, 30, 40]
        assert _parse_axis("1,2,5", 0.12, as_int=True) == [1, 2, 5]
        vals = _parse_axis("0.5lam:5lam", 0.12)
        assert len(vals) == 10
        assert vals[0] == pytest.approx(0.06)
        assert vals[-1] == pytest.approx(0.6)

    def test_validate_subset_and_sabotage(self, tmp_path, monkeypatch):
        report_path = tmp_path / "report.txt"
        rc = main(["validate", "--criteria", "1", "--set", "seed=7", "--out", str(report_path)])
        assert rc == 0
        text = report_path.read_text()
        assert "seed: 7" in text
        assert "config digest:" in text
        assert "[PASS] check 1" in text
        monkeypatch.setenv("MIMO_SIM_SABOTAGE", "1")
        rc = main(["validate", "--criteria", "1", "--set", "seed=7"])
        assert rc == 1

    def test_validate_cli_byte_identical(self, tmp_path):
        cmd = [
            sys.executable,
            "-m",
            "mimo_sim.cli",
            "validate",
            "--criteria",
            "1,3,12",
            "--set",
            "seed=11",
        ]
        r1 = subprocess.run(cmd, capture_output=True, text=True)
        r2 = subprocess.run(cmd, capture_output=True, text=True)
        assert r1.returncode == 0 and r2.returncode == 0
        assert r1.stdout == r2.stdout


class TestSweepSchemas:
    def test_ser_and_outage_schemas(self, tmp_path):
        for sweep, fname, head in (
            (
                "ser",
                "ser.csv",
                "SNR_UT_dB,M,R,ser_cf,ser_mc,ser_mc_se,ser_zf_mc,ser_zf_mc_se,ser_asym",
            ),
            (
                "outage",
                "outage.csv",
                "SNR_UT_dB,M,R,outage_cf,outage_mc,outage_mc_se,outage_zf_mc,outage_zf_mc_se",
            ),
        ):
            rc = main(
                [
                    "run",
                    sweep,
                    "--set",
                    "trials=200",
                    "--set",
                    "P=40",
                    "--M",
                    "10",
                    "--snr",
                    "0:6:3",
                    "--out",
                    str(tmp_path),
                ]
            )
            assert rc == 0
            lines = (tmp_path / fname).read_text().splitlines()
            assert lines[1] == head
            assert len(lines) == 2 + 3
            for line in lines[2:]:
                assert all(np.isfinite(float(c)) for c in line.split(","))

    def test_eta_sweep(self, tmp_path):
        rc = main(
            [
                "run",
                "eta",
                "--set",
                "P=30",
                "--set",
                "M=20",
                "--R",
                "1lam,2lam",
                "--zeta",
                "0,1.5",
                "--layouts",
                "5",
                "--out",
                str(tmp_path),
            ]
        )
        assert rc == 0
        lines = (tmp_path / "eta.csv").read_text().splitlines()
        assert lines[1] == "M,R_over_lambda,zeta,eta_mean,eta_se,layouts"
        assert len(lines) == 2 + 4
