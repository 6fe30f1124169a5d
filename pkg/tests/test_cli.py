"""CLI harness: CSV output, config layering, exit codes, reproducibility."""
import csv
import json

import pytest

from pmtcount.cli import (EXIT_BREAKDOWN, EXIT_INVALID_CONFIG, EXIT_OK, main)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestPmfCommand:
    def test_normalized_output(self, tmp_path):
        out = tmp_path / "pmf.csv"
        assert main(["pmf", "--lambda", "10", "--tau", "0.01",
                     "-o", str(out)]) == EXIT_OK
        rows = _read_csv(out)
        assert rows[0] == ["n", "probability"]
        total = sum(float(r[1]) for r in rows[1:])
        assert abs(total - 1.0) <= 1e-6

    def test_breakdown_exit_code(self, tmp_path):
        out = tmp_path / "pmf.csv"
        assert main(["pmf", "--lambda", "80", "--tau", "0.01",
                     "-o", str(out)]) == EXIT_BREAKDOWN
        assert not out.exists()


class TestMomentsCommand:
    def test_all_models_reported(self, tmp_path):
        out = tmp_path / "m.csv"
        assert main(["moments", "--lambda", "10", "--T", "0.01",
                     "--tau", "0.02", "--xi", "0.3", "--sigma", "0.2",
                     "--sigma0", "0.02", "-o", str(out)]) == EXIT_OK
        rows = _read_csv(out)
        assert [r[0] for r in rows[1:]] == ["exact_noiseless",
                                            "approx_noiseless", "shot",
                                            "full"]


class TestFitCommand:
    def test_round_trip(self, tmp_path):
        import math
        lam, tau = 10.0, 0.015
        mean = lam * math.exp(-lam * tau)
        var = mean - 2.0 * tau * mean * mean
        # Two-point histogram with the requested mean and variance.
        import numpy as np
        from pmtcount import subpoisson_pmf
        dist = subpoisson_pmf(lam, tau)
        hist_path = tmp_path / "hist.csv"
        with open(hist_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "count"])
            for n, p in enumerate(dist.pmf):
                if p > 0:
                    w.writerow([n, p * 1e9])
        out = tmp_path / "fit.csv"
        assert main(["fit", "--input", str(hist_path),
                     "-o", str(out)]) == EXIT_OK
        row = dict(zip(*_read_csv(out)))
        assert float(row["lambda_fit"]) == pytest.approx(lam, rel=0.05)
        assert float(row["tau_fit"]) == pytest.approx(tau, rel=0.05)

    def test_missing_input_is_config_error(self, tmp_path):
        assert main(["fit", "--input", str(tmp_path / "nope.csv")]) == \
            EXIT_INVALID_CONFIG


class TestConfigLayering:
    def test_flags_override_config_file(self, tmp_path):
        cfg = tmp_path / "params.cfg"
        cfg.write_text("tau = 0.02\nlambda0 = 1\nlambda1 = 12\n"
                       "T = 0.01\nxi = 0.3\n")
        out1 = tmp_path / "a.csv"
        assert main(["pmf", "--config", str(cfg), "--lambda", "10",
                     "-o", str(out1)]) == EXIT_OK
        out2 = tmp_path / "b.csv"
        assert main(["pmf", "--config", str(cfg), "--lambda", "10",
                     "--tau", "0.01", "-o", str(out2)]) == EXIT_OK
        # flag tau=0.01 gives a longer support than config tau=0.02
        assert len(_read_csv(out2)) > len(_read_csv(out1))

    def test_preset_supplies_defaults(self, tmp_path):
        out = tmp_path / "d.csv"
        assert main(["design", "--preset", "fig11", "-o", str(out)]) == \
            EXIT_OK
        rows = _read_csv(out)
        assert rows[0][0] == "xi_star"

    def test_unknown_preset_rejected(self):
        assert main(["pmf", "--preset", "fig99", "--lambda", "10",
                     "--tau", "0.01"]) == EXIT_INVALID_CONFIG

    def test_missing_params_rejected(self):
        assert main(["moments", "--lambda", "10"]) == EXIT_INVALID_CONFIG

    def test_invalid_receiver_rejected(self):
        assert main(["moments", "--lambda", "10", "--T", "0.013",
                     "--tau", "0.02", "--xi", "0.3"]) == EXIT_INVALID_CONFIG


class TestReproducibility:
    BER_ARGS = ["ber", "--lambda0", "1", "--lambda1", "12", "--T", "0.01",
                "--tau", "0.01", "--xi", "0.3", "--sigma", "0.2",
                "--sigma0", "0.02", "--trials", "20000", "--seed", "5"]

    def test_worker_count_does_not_change_csv(self, tmp_path):
        out1 = tmp_path / "w1.csv"
        out4 = tmp_path / "w4.csv"
        assert main(self.BER_ARGS + ["--workers", "1",
                                     "-o", str(out1)]) == EXIT_OK
        assert main(self.BER_ARGS + ["--workers", "4",
                                     "-o", str(out4)]) == EXIT_OK
        assert out1.read_bytes() == out4.read_bytes()

    def test_manifest_written(self, tmp_path):
        out = tmp_path / "run.csv"
        assert main(self.BER_ARGS + ["-o", str(out)]) == EXIT_OK
        manifest = json.loads((tmp_path / "run.csv.manifest.json")
                              .read_text())
        assert manifest["command"] == "ber"
        assert manifest["params"]["seed"] == 5
        assert "version" in manifest and "wall_time_s" in manifest

    def test_fixed_significant_digits(self, tmp_path):
        out = tmp_path / "run.csv"
        assert main(self.BER_ARGS + ["-o", str(out)]) == EXIT_OK
        for value in _read_csv(out)[1]:
            digits = value.replace(".", "").replace("-", "").lstrip("0")
            assert len(digits.split("e")[0]) <= 9
