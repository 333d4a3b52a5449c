import csv
import io
import json

import pytest

from ffspline.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--no-clock")
    return code, json.loads(out)


def test_cube_test_pass_and_fail(capsys):
    code, d = run_json(capsys, "cube-test", "--field", "3", "--dim", "3", "--poly", "x1 + x2", "--m", "2")
    assert code == 0 and d["passed"]
    code, d = run_json(capsys, "cube-test", "--field", "2", "--dim", "4", "--poly", "x1*x2", "--m", "2")
    assert code == 2 and d["results"]["cube_test"]["epsilon"] == pytest.approx(0.375)
    code, d = run_json(capsys, "cube-test", "--field", "2", "--dim", "4", "--poly", "x1*x2", "--m", "2",
                       "--tol", "0.4")
    assert code == 0


def test_correct_then_check_the_table(capsys, tmp_path):
    table = tmp_path / "h.tbl"
    code, d = run_json(capsys, "correct", "--field", "3", "--dim", "4", "--poly", "x1 + 2*x3", "--m", "2",
                       "--noise", "0.02", "--votes", "60", "--table-out", str(table))
    assert code == 0 and d["results"]["corrupted"] == 2
    assert d["results"]["spline"]["vote_convention"]
    code, d = run_json(capsys, "cube-test", "--fun", str(table), "--m", "2")
    assert code == 0 and d["results"]["cube_test"]["bad"] == 0


def test_extend_from_hyperplane_is_a_failed_verdict(capsys):
    code, d = run_json(capsys, "extend", "--field", "2", "--dim", "4", "--eq", "x1", "--poly", "0", "--m", "2",
                       "--votes", "10")
    assert code == 2 and d["results"]["aborted"] and len(d["results"]["problems"]) == 8


def test_input_errors_exit_one(capsys, tmp_path):
    code, _, err = run(capsys, "cube-test", "--field", "3", "--dim", "2", "--poly", "x1 +* x2", "--m", "2")
    assert code == 1 and "input error" in err
    code, _, err = run(capsys, "cube-test", "--fun", str(tmp_path / "missing"), "--m", "2")
    assert code == 1 and "cannot read" in err
    code, _, err = run(capsys, "cube-test", "--field", "3", "--dim", "2", "--poly", "x1", "--m", "2",
                       "--format", "csv")
    assert code == 1 and "CSV" in err
    code, _, err = run(capsys, "correct", "--field", "2", "--dim", "4", "--eq", "x1", "--poly", "0", "--m", "2",
                       "--votes", "5", "--budget", "1")
    assert code == 1


def test_lines_and_projective(capsys):
    code, d = run_json(capsys, "lines", "--field", "3", "--dim", "4", "--eq", "x1*x2 + x3*x4")
    assert code == 0
    assert d["results"]["lines"]["count"] == 32
    assert d["results"]["projective"]["projective_zeros"] == 16


def test_lines_with_anchors(capsys):
    code, d = run_json(capsys, "lines", "--field", "3", "--dim", "4", "--eq", "x1*x2 + x3*x4",
                       "--anchor", "1,0,0,0", "--anchor", "0,0,1,0")
    assert code == 0 and "anchored" in d["results"]


def test_csc(capsys, tmp_path):
    code, d = run_json(capsys, "csc", "--cube", "2", "--m", "2")
    assert code == 0 and d["results"]["summary"] == "complexity 2 <= m=2: pass"
    code, _ = run_json(capsys, "csc", "--almost-cube", "3", "--m", "1")
    assert code == 2
    sysfile = tmp_path / "ap.txt"
    sysfile.write_text("x\nx + h\nx + 2*h\n")
    code, d = run_json(capsys, "csc", "--system", str(sysfile), "--at", "1")
    assert code == 0 and d["results"]["complexity_at"]["d"] == 2


def test_gowers_uniformity_count_rank(capsys):
    code, d = run_json(capsys, "gowers", "--field", "2", "--dim", "4", "--poly", "x1*x2", "--m", "2")
    assert code == 0 and d["results"]["gowers"]["value"] == pytest.approx(2**-0.5)
    code, _ = run_json(capsys, "gowers", "--field", "2", "--dim", "4", "--poly", "x1*x2", "--m", "2",
                       "--max", "0.5")
    assert code == 2
    code, d = run_json(capsys, "uniformity", "--field", "2", "--dim", "6", "--eq", "x1*x2 + x3*x4 + x5*x6",
                       "--m", "2", "--epsilon", "0.2")
    assert code == 0 and d["results"]["uniformity"]["eta"] == pytest.approx(63**0.25 / 16)
    code, _ = run_json(capsys, "count", "--field", "2", "--dim", "6", "--density", "0.5", "--cube", "2",
                       "--m", "2")
    assert code == 0
    code, _ = run_json(capsys, "rank", "--field", "2", "--dim", "6", "--poly", "x1*x2 + x3*x4 + x5*x6",
                       "--min-rank", "3")
    assert code == 0


def test_subspace(capsys):
    code, d = run_json(capsys, "subspace", "--field", "2", "--dim", "4", "--poly", "x1 + x3", "--m", "2",
                       "--exhaustive")
    assert code == 0 and d["results"]["subspace"]["l"] == 2
    code, _ = run_json(capsys, "subspace", "--field", "2", "--dim", "4", "--poly", "x1*x2", "--m", "2",
                       "--exhaustive")
    assert code == 2


def test_sweep_csv(capsys, tmp_path):
    out = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep", "--field", "3", "--dim", "3", "--poly", "x1", "--m", "2", "--votes", "30",
                     "--rho", "0,0.01,0.02,0.05,0.1", "--format", "csv", "--out", str(out))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 5
    code, text, _ = run(capsys, "sweep", "--field", "3", "--dim", "3", "--poly", "x1", "--m", "2",
                        "--rho", "", "--format", "csv")
    assert text.count("\n") == 1 and text.startswith("rho,")


def test_report_bytes_do_not_depend_on_workers(capsys):
    args = ["correct", "--field", "3", "--dim", "4", "--poly", "x2 + x4", "--m", "2", "--noise", "0.05",
            "--votes", "40", "--seed", "9", "--no-clock"]
    _, one, _ = run(capsys, *args, "--workers", "1")
    _, eight, _ = run(capsys, *args, "--workers", "8")
    one = json.loads(one)
    eight = json.loads(eight)
    one["config"].pop("workers")
    eight["config"].pop("workers")
    assert one == eight
