import json
import subprocess
import sys

import pytest

from noonsim.cli import main
from noonsim.records import ScanRecord


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bound(capsys):
    assert run(capsys, "bound", "--n", "3")[:2] == (0, "0.1\n")
    assert run(capsys, "bound", "--n", "2")[1] == "0.333333333333\n"
    assert run(capsys, "bound", "--n", "0")[0] == 2


def test_validate(capsys, tmp_path):
    code, out, _ = run(capsys, "validate", "--out", str(tmp_path))
    assert code == 0 and "10/10 checks passed" in out
    report = json.loads((tmp_path / "validation.json").read_text())
    assert report["passed"] is True
    assert {c["name"] for c in report["checks"]} >= {"eq1_coefficients", "eq4_shape"}


def test_validation_failure_exit_code(capsys, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[elements]\nchain = [\n"
                   "  { kind = 'HWP', path = 'src', angle_deg = 22.5 },\n"
                   "  { kind = 'PPBS', path = 'src', path_refl = '1', path_trans = '2', r_v = 0.5 },\n]\n")
    before = cfg.read_text()
    code, _, err = run(capsys, "validate", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert code == 1 and "FAILED eq1_coefficients" in err
    assert cfg.read_text() == before


def test_config_error_exit_code(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[detectors]\nefficiency = 2\n")
    code, _, err = run(capsys, "scan-spatial", "--config", str(cfg), "--out", str(tmp_path))
    assert code == 2 and "[detectors].efficiency" in err
    assert not list(tmp_path.glob("*.csv"))
    code, _, err = run(capsys, "validate", "--config", str(tmp_path / "missing.toml"))
    assert code == 2 and "cannot read" in err


def test_bad_arguments(capsys):
    assert run(capsys, "explode")[0] == 2
    assert run(capsys, "fit")[0] == 2
    assert run(capsys, "bound", "--seed", "-1")[0] == 2


def test_scan_spatial_is_byte_identical(capsys, tmp_path):
    for d in ("a", "b"):
        assert run(capsys, "scan-spatial", "--seed", "7", "--out", str(tmp_path / d), "-q")[0] == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert {"spatial_N1.csv", "spatial_N3.csv", "spatial_scan.csv", "spatial_summary.json"} <= set(files)
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    header = (tmp_path / "a" / "spatial_scan.csv").read_text().splitlines()[0]
    assert header == "x_um,rate_N1,rate_N3,profile_N1,profile_N3"


def test_seed_changes_counts(capsys, tmp_path):
    run(capsys, "scan-spatial", "--seed", "1", "--out", str(tmp_path / "a"), "-q")
    run(capsys, "scan-spatial", "--seed", "2", "--out", str(tmp_path / "b"), "-q")
    assert (tmp_path / "a" / "spatial_N3.csv").read_bytes() != (tmp_path / "b" / "spatial_N3.csv").read_bytes()


def test_scan_temporal_and_profile(capsys, tmp_path):
    code, out, _ = run(capsys, "scan-temporal", "--out", str(tmp_path))
    assert code == 0 and len(out.splitlines()) == 4
    for panel in ("single_2fold", "threefold", "fourfold_raw", "fourfold_subtracted"):
        assert len(ScanRecord.read_csv(tmp_path / f"temporal_{panel}.csv")) == 73
    code, out, _ = run(capsys, "profile", "--out", str(tmp_path))
    assert code == 0 and "2w0" in out
    summary = json.loads((tmp_path / "profile_summary.json").read_text())
    assert summary["width_ratio"] == pytest.approx(3 ** -0.5, rel=0.1)


def test_fit_and_sample(capsys, tmp_path):
    run(capsys, "scan-spatial", "--out", str(tmp_path), "-q")
    code, out, _ = run(capsys, "fit", "--input", str(tmp_path / "spatial_N3.csv"), "--n", "3",
                       "--expected", "--out", str(tmp_path))
    assert code == 0 and "V = 0.4900" in out and "above" in out
    report = json.loads((tmp_path / "fit_spatial_N3.json").read_text())
    assert report["bound"]["verdict"] == "above"
    code, out, _ = run(capsys, "sample", "--input", str(tmp_path / "spatial_N1.csv"), "--seed", "3",
                       "--out", str(tmp_path))
    assert code == 0
    new = ScanRecord.read_csv(tmp_path / "spatial_N1_seed3.csv")
    assert len(new) == 73
    run(capsys, "profile", "--out", str(tmp_path), "-q")
    code, out, _ = run(capsys, "fit", "--input", str(tmp_path / "profile_N1.csv"), "--model", "profile",
                       "--out", str(tmp_path))
    assert code == 0 and "2w0" in out


def test_bad_input_file(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("foo,bar\n1,2\n")
    code, _, err = run(capsys, "fit", "--input", str(bad))
    assert code == 2 and "header" in err


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "noonsim.cli", "bound", "--n", "3"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "0.1"
