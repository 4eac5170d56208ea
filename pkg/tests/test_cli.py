import csv
import json
import subprocess
import sys
from importlib import resources

import pytest

from cvtec import __version__
from cvtec.cli import main
from cvtec.network import NetworkSpec, paper_network

jsonschema = pytest.importorskip("jsonschema")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestVerify:
    def test_default_passes(self, capsys):
        code, out, err = run(capsys, "verify")
        assert code == 0 and err == ""
        assert out.count("PASS") == 6

    def test_tiny_tolerance_fails_loudly(self, capsys):
        code, out, err = run(capsys, "verify", "--tolerance", "1e-16")
        assert code == 1
        failures = [json.loads(line) for line in err.splitlines()]
        assert {"unitarity", "decomposition"} <= {f["check"] for f in failures}
        assert all(f["tolerance"] == 1e-16 for f in failures)
        assert "FAIL" in out

    def test_dump_network(self, capsys, tmp_path):
        path = tmp_path / "net.json"
        code, _, _ = run(capsys, "verify", "--dump-network", str(path))
        assert code == 0
        assert NetworkSpec.from_json(path.read_text()) == paper_network()

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "verify", "--format", "json", "--r-grid", "0,2.0")
        data = json.loads(out)
        assert code == 0 and data["version"] == __version__
        assert all(c["pass"] for c in data["checks"])


class TestTables:
    def test_default_zero_mismatches(self, capsys):
        code, out, err = run(capsys, "tables")
        assert code == 0 and err == ""
        assert "31 cases, 0 mismatches" in out

    def test_other_pair_skips_golden(self, capsys):
        code, out, err = run(capsys, "tables", "--protected", "1,2")
        assert code == 0
        assert "golden diff skipped" in err
        assert out.startswith("protected p1-p2")

    def test_sign_blind_skips_golden(self, capsys):
        code, _, err = run(capsys, "tables", "--sign-blind")
        assert code == 0 and "skipped" in err

    def test_json_schema_valid(self, capsys):
        code, out, _ = run(capsys, "tables", "--format", "json")
        schema = json.loads(resources.files("cvtec").joinpath("data/decoder_table.schema.json").read_text())
        data = json.loads(out)
        jsonschema.validate(data, schema)
        assert code == 0 and data["golden"]["mismatches"] == []
        assert data["actions"]["0-00"]["index"] == 2

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "tables", "--format", "csv")
        rows = list(csv.DictReader(out.splitlines()))
        assert code == 0 and len(rows) == 81
        row = next(r for r in rows if r["signature"] == "-00+")
        assert (row["kind"], row["w3"], row["w4"], row["predicted_pattern"]) == ("combined", "-1", "-1", "2,4,5")

    def test_bad_pair(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["tables", "--protected", "1,3"])
        assert exc.value.code == 2


class TestSweeps:
    def test_squeezing_single_row(self, capsys):
        code, out, _ = run(capsys, "sweep-squeezing", "--db-max", "0")
        assert code == 0
        assert out == "squeezing_db,snl,no_error,uncorrected,corrected\n0.0,0.5,0.5,0.815,0.5\n"

    def test_squeezing_file(self, capsys, tmp_path):
        path = tmp_path / "sub" / "fig3.csv"
        code, _, _ = run(capsys, "sweep-squeezing", "--db-max", "10", "--error-var", "0.315", "--out", str(path))
        raw = path.read_bytes()
        assert code == 0 and b"\r" not in raw
        rows = list(csv.DictReader(raw.decode().splitlines()))
        assert len(rows) == 101
        for r in rows:
            assert float(r["corrected"]) == pytest.approx(float(r["no_error"]), abs=1e-12)
            assert float(r["uncorrected"]) == pytest.approx(float(r["no_error"]) + 0.315, abs=1e-12)

    def test_rates(self, capsys):
        code, out, _ = run(capsys, "sweep-rates")
        rows = list(csv.DictReader(out.splitlines()))
        assert code == 0 and len(rows) == 101
        assert all(float(r["P3"]) <= float(r["P2"]) for r in rows)

    def test_rates_invalid(self, capsys):
        code, _, _ = run(capsys, "sweep-rates", "--p-max", "2")
        assert code == 2

    def test_output_dir_env(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("CVTEC_OUTPUT_DIR", str(tmp_path))
        code, out, _ = run(capsys, "sweep-rates", "--points", "3")
        assert code == 0 and out == ""
        assert (tmp_path / "sweep_rates.csv").read_text().startswith("p,P1,P2,P3\n")


class TestMonteCarlo:
    def test_headline(self, capsys):
        code, out, _ = run(capsys, "montecarlo", "--p", "0.1", "--trials", "1000000", "--seed", "42")
        data = json.loads(out)
        assert code == 0 and abs(data["z_score"]) < 3
        assert set(data) >= {"estimate", "std_error", "analytic", "z_score"}

    def test_p_zero(self, capsys):
        _, out, _ = run(capsys, "montecarlo", "--p", "0", "--trials", "1000", "--seed", "1")
        assert json.loads(out)["estimate"] == 0

    def test_byte_identical(self, capsys):
        argv = ["montecarlo", "--p", "0.2", "--trials", "20000", "--seed", "9", "--sign-blind"]
        _, a, _ = run(capsys, *argv)
        _, b, _ = run(capsys, *argv)
        assert a == b and "timestamp" not in a

    def test_seed_required(self, capsys):
        with pytest.raises(SystemExit):
            main(["montecarlo", "--p", "0.1", "--trials", "10"])

    def test_invalid_p(self, capsys):
        code, _, err = run(capsys, "montecarlo", "--p", "2", "--trials", "10", "--seed", "0")
        assert code == 2 and json.loads(err)["check"] == "montecarlo"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cvtec", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
