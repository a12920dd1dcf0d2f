import json
import subprocess
import sys

import numpy as np
import pytest

from mandelbrot_area import cli
from mandelbrot_area.area import accumulate
from mandelbrot_area.engine import EXACT, FLOAT, compute_stream
from mandelbrot_area.oracle import run_suite


def _run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_compute_float_csv(tmp_path, capsys):
    out = tmp_path / "b.csv"
    ckpt = tmp_path / "run.ckpt"
    code, _, _ = _run(capsys, "compute", "--m-target", 3000, "--width", 4, "--threshold", 2,
                      "--checkpoint", ckpt, "--out", out)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "m,b_m" and len(lines) == 3001
    assert lines[1] == "0,-0.5" and lines[5] == "4,0"
    stream = cli.read_coefficients(out)
    _, ref = compute_stream(3000, FLOAT)
    assert np.array_equal(stream.floats().view(np.int64), ref.floats().view(np.int64))
    code, text, _ = _run(capsys, "checkpoint-info", "--checkpoint", ckpt)
    assert json.loads(text)["m_done"] == 3000


def test_compute_resumes_from_checkpoint(tmp_path, capsys):
    ckpt = tmp_path / "run.ckpt"
    _run(capsys, "compute", "--m-target", 500, "--checkpoint", ckpt, "--out", tmp_path / "a.csv")
    _run(capsys, "compute", "--m-target", 900, "--checkpoint", ckpt, "--out", tmp_path / "b.csv")
    _run(capsys, "compute", "--m-target", 900, "--out", tmp_path / "c.csv")
    assert (tmp_path / "b.csv").read_bytes() == (tmp_path / "c.csv").read_bytes()


def test_compute_exact(tmp_path, capsys):
    out = tmp_path / "e.csv"
    assert _run(capsys, "compute", "--m-target", 16, "--mode", "exact", "--out", out)[0] == 0
    lines = out.read_text().splitlines()
    assert lines[1:6] == ["0,-1/2^1", "1,1/2^3", "2,-1/2^2", "3,15/2^7", "4,0/2^0"]
    stream = cli.read_coefficients(out)
    assert stream.mode == EXACT and list(stream) == list(compute_stream(16, EXACT)[1])


def test_bad_plan_rejected(tmp_path, capsys):
    code, _, err = _run(capsys, "compute", "--m-target", 100, "--width", 8, "--threshold", 2, "--out", tmp_path / "x")
    assert code == 2 and "width 8" in err


def test_exact_cap_flag(tmp_path, capsys):
    code, _, err = _run(capsys, "compute", "--m-target", 5000, "--mode", "exact", "--out", tmp_path / "x")
    assert code == 2 and "capped" in err


def test_area_from_csv_equals_in_process(tmp_path, capsys):
    coeffs = tmp_path / "b.csv"
    _run(capsys, "compute", "--m-target", 2001, "--out", coeffs)
    out = tmp_path / "a.csv"
    code, text, _ = _run(capsys, "area", "--input", coeffs, "--sample-points", "3,1000,2000", "--out", out)
    assert code == 0
    summary = json.loads(text)
    _, stream = compute_stream(2001, FLOAT)
    series = accumulate(stream, [3, 1000, 2000])
    assert summary["area_upper_bound"] == series.samples[-1][1]
    assert summary["max_abs_bm_tail"] == series.max_abs_bm_tail
    rows = out.read_text().splitlines()
    assert rows == ["N,A_N"] + [f"{n},{a:.10g}" for n, a in series.samples]


def test_area_live_run(capsys):
    code, text, _ = _run(capsys, "area", "--sample-points", "3", "--mode", "exact")
    assert code == 0 and json.loads(text)["N"] == 3


def test_area_beyond_stream(tmp_path, capsys):
    coeffs = tmp_path / "b.csv"
    _run(capsys, "compute", "--m-target", 50, "--out", coeffs)
    code, _, err = _run(capsys, "area", "--input", coeffs, "--sample-points", "80")
    assert code == 2 and "b_80" in err


def test_validate_live(tmp_path, capsys):
    report = tmp_path / "r.json"
    code, text, _ = _run(capsys, "validate", "--limit", 200, "--out", report)
    assert code == 0
    assert all(line.startswith("[PASS]") for line in text.splitlines())
    assert json.loads(report.read_text())["verdict"] == "pass"


def test_validate_zeros_only_to_4096(capsys):
    code, text, _ = _run(capsys, "validate", "--limit", 4096, "--checks", "zeros", "--mode", "float")
    assert code == 0 and "known_zeros" in text


def test_validate_csv_pipeline_equals_in_process(tmp_path, capsys):
    coeffs = tmp_path / "e.csv"
    _run(capsys, "compute", "--m-target", 301, "--mode", "exact", "--out", coeffs)
    code, text, _ = _run(capsys, "validate", "--input", coeffs, "--limit", 300)
    assert code == 0
    _, stream = compute_stream(301, EXACT)
    expected = [r.line() for r in run_suite(limit=300, stream=stream).records]
    assert text.splitlines() == expected


def test_validate_corrupted_csv(tmp_path, capsys):
    coeffs = tmp_path / "e.csv"
    _run(capsys, "compute", "--m-target", 101, "--mode", "exact", "--out", coeffs)
    lines = coeffs.read_text().splitlines()
    lines[10] = "9,1/2^40"
    coeffs.write_text("\n".join(lines) + "\n")
    code, text, _ = _run(capsys, "validate", "--input", coeffs, "--limit", 100)
    assert code == 1
    assert "[FAIL] valuations_b" in text


def test_malformed_csv(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("m,b_m\n0,-0.5\n2,0.125\n")
    code, _, err = _run(capsys, "area", "--input", bad, "--sample-points", "1")
    assert code == 2 and "index" in err
    bad.write_text("index,value\n0,-0.5\n")
    assert _run(capsys, "area", "--input", bad, "--sample-points", "0")[0] == 2


def test_pixel(tmp_path, capsys):
    out = tmp_path / "p.json"
    code, text, _ = _run(capsys, "pixel", "--resolution", "64", "--max-iter", 0, "--out", out)
    assert code == 0
    doc = json.loads(text)
    assert doc["estimate"] == 6.25 and doc["resolution"] == [64, 64]
    assert json.loads(out.read_text()) == doc
    code, text, _ = _run(capsys, "pixel", "--resolution", "128,64", "--max-iter", 500, "--bounds=-2,0.5,-1.25,1.25")
    assert json.loads(text)["resolution"] == [128, 64]


def test_parse_points():
    assert cli.parse_points("reference")[0] == 500_000
    assert cli.parse_points("3, 10,") == [3, 10]


def test_module_entry_point(tmp_path):
    out = tmp_path / "b.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "mandelbrot_area", "compute", "--m-target", "10", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().splitlines()[4] == "3,0.1171875"


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        cli.main([])
