import csv
import json
from pathlib import Path

import numpy as np
import pytest

from levyts.cli import main

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "levyts" / "data"


def run_cli(*argv):
    return main(list(argv))


class TestSimulate:
    def test_writes_series_and_manifest(self, tmp_path):
        rc = run_cli("simulate", "--scenario", "A", "--beta", "1.1",
                     "--replicates", "3", "--length", "420", "--seed", "7",
                     "--output-dir", str(tmp_path))
        assert rc == 0
        files = sorted(p.name for p in tmp_path.glob("series_*.txt"))
        assert files == ["series_000.txt", "series_001.txt", "series_002.txt"]
        manifest = json.loads((tmp_path / "truth.json").read_text())
        assert manifest["scenario"] == "A"
        assert len(manifest["series"]) == 3
        truth2 = manifest["series"][0]["theta2"]
        assert truth2["b_cl"] < 0.1
        assert truth2["a_wh_mm"] == 1.6

    def test_same_seed_identical_outputs(self, tmp_path):
        for sub in ("one", "two"):
            run_cli("simulate", "--replicates", "2", "--length", "400",
                    "--seed", "11", "--output-dir", str(tmp_path / sub))
        a = (tmp_path / "one" / "series_001.txt").read_text()
        b = (tmp_path / "two" / "series_001.txt").read_text()
        assert a == b

    def test_replicate_count_validated(self, tmp_path, capsys):
        rc = run_cli("simulate", "--replicates", "0",
                     "--output-dir", str(tmp_path))
        assert rc == 1
        assert "replicate" in capsys.readouterr().err


class TestConfigFile:
    def test_config_supplies_defaults_flags_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# campaign\nscenario = C\nreplicates = 2\nlength = 400\n")
        out = tmp_path / "out"
        rc = run_cli("simulate", "--config", str(cfg), "--seed", "3",
                     "--scenario", "B", "--output-dir", str(out))
        assert rc == 0
        manifest = json.loads((out / "truth.json").read_text())
        assert manifest["scenario"] == "B"  # flag wins
        assert len(manifest["series"]) == 2  # config wins over default

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("wibble = 3\n")
        rc = run_cli("simulate", "--config", str(cfg),
                     "--output-dir", str(tmp_path))
        assert rc == 1
        assert "unknown config key" in capsys.readouterr().err

    def test_malformed_line_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("scenario A\n")
        rc = run_cli("simulate", "--config", str(cfg),
                     "--output-dir", str(tmp_path))
        assert rc == 1
        assert "key = value" in capsys.readouterr().err


class TestOracleCheck:
    def test_default_grid_csv(self, tmp_path):
        rc = run_cli("oracle-check", "--output-dir", str(tmp_path))
        assert rc == 0
        with open(tmp_path / "oracle_check.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 9
        kinds = {r["kind"] for r in rows}
        assert kinds == {"trend", "seasonal", "offsets"}
        for row in rows:
            assert float(row["rel_err_exact_var"]) < 1e-10

    def test_trend_variance_quadratic_growth(self, tmp_path):
        rc = run_cli("oracle-check", "--lengths", "20000,40000",
                     "--output-dir", str(tmp_path))
        assert rc == 0
        with open(tmp_path / "oracle_check.csv") as fh:
            rows = [r for r in csv.DictReader(fh) if r["kind"] == "trend"]
        v = [float(r["exact_var"]) for r in rows]
        assert 3.6 <= v[1] / v[0] <= 4.4

    def test_seasonal_rows_bounded(self, tmp_path):
        run_cli("oracle-check", "--lengths", "1000,100000",
                "--output-dir", str(tmp_path))
        with open(tmp_path / "oracle_check.csv") as fh:
            rows = [r for r in csv.DictReader(fh) if r["kind"] == "seasonal"]
        v = [float(r["exact_var"]) for r in rows]
        assert abs(v[1] - v[0]) < 0.01 * v[0] + 1e-6


class TestErrors:
    def test_missing_input_nonzero_exit(self, tmp_path, capsys):
        rc = run_cli("classify", "--input", str(tmp_path / "nope*.txt"),
                     "--output-dir", str(tmp_path))
        assert rc == 1
        assert "no input" in capsys.readouterr().err

    def test_bad_steps_rejected(self, tmp_path, capsys):
        rc = run_cli("classify", "--input", str(DATA_DIR / "sample_station.txt"),
                     "--steps", "0,2.5", "--output-dir", str(tmp_path))
        assert rc == 1
        assert "step fractions" in capsys.readouterr().err


@pytest.mark.slow
class TestPipelines:
    def test_fit_on_bundled_sample(self, tmp_path):
        rc = run_cli("fit", "--input", str(DATA_DIR / "sample_station.txt"),
                     "--offsets", str(DATA_DIR / "sample_offsets.txt"),
                     "--output-dir", str(tmp_path))
        assert rc == 0
        payload = json.loads((tmp_path / "sample_station.fit.json").read_text())
        assert payload["theta2"]["a_wh"] > 0
        assert len(payload["theta1"]["offsets_mm"]) == 1
        # the injected 4 mm offset should be recovered roughly
        assert payload["theta1"]["offsets_mm"][0] == pytest.approx(4.0, abs=1.0)

    def test_classify_ensemble_and_report(self, tmp_path):
        sim_dir = tmp_path / "sim"
        run_cli("simulate", "--scenario", "A", "--beta", "1.1",
                "--replicates", "2", "--length", "1100", "--seed", "5",
                "--output-dir", str(sim_dir))
        out = tmp_path / "cls"
        rc = run_cli("classify", "--input", str(sim_dir), "--jobs", "2",
                     "--output-dir", str(out))
        assert rc == 0
        reports = sorted(out.glob("*.report.json"))
        assert len(reports) == 2
        with open(out / "variations.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert [r["step_offset_yr"] for r in rows] == ["0", "0.3", "0.5", "0.7", "0.8", "1"]
        assert float(rows[0]["functional_pct_mean"]) == 0.0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["n_series"] == 2

        # aggregating stored reports reproduces the CSV
        rep_out = tmp_path / "agg"
        rc = run_cli("report", "--input", str(out), "--output-dir", str(rep_out))
        assert rc == 0
        assert (rep_out / "variations.csv").read_text() == (out / "variations.csv").read_text()

    def test_classify_deterministic_artifacts(self, tmp_path):
        sim_dir = tmp_path / "sim"
        run_cli("simulate", "--replicates", "1", "--length", "1100",
                "--seed", "9", "--output-dir", str(sim_dir))
        outs = []
        for sub in ("r1", "r2"):
            out = tmp_path / sub
            run_cli("classify", "--input", str(sim_dir / "series_000.txt"),
                    "--output-dir", str(out))
            outs.append((out / "series_000.report.json").read_text())
        assert outs[0] == outs[1]

    def test_bundled_sample_classifies(self, tmp_path):
        rc = run_cli("classify", "--input", str(DATA_DIR / "sample_station.txt"),
                     "--offsets", str(DATA_DIR / "sample_offsets.txt"),
                     "--output-dir", str(tmp_path))
        assert rc == 0
        payload = json.loads((tmp_path / "sample_station.report.json").read_text())
        assert payload["levy_class"] in ("GaussianLevy", "FractionalLevy", "StableLevy")
        assert payload["series_meta"]["n_gaps"] == 12
