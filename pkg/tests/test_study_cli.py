import csv
import json
import math

import pytest

from sgipdg.cli import main, parse_levels
from sgipdg.multiwavelet import ParameterError
from sgipdg.study import CSV_HEADER, StudyConfig, StudyRow, read_csv, run_study


def test_parse_levels():
    assert parse_levels("2..5") == (2, 3, 4, 5)
    assert parse_levels("3") == (3,)


def test_study_config_validation():
    with pytest.raises(ParameterError):
        StudyConfig(2, 1, ())
    with pytest.raises(ParameterError):
        StudyConfig(2, 1, (3, 2))
    with pytest.raises(ParameterError):
        StudyConfig(2, 1, (2,), method="all")


def test_smallest_study():
    rows = run_study(StudyConfig(2, 1, (0,), method="modified"))
    assert len(rows) == 1 and rows[0].ok and rows[0].dof == 4


def test_row_o_s_invariant():
    row = StudyRow("modified", 2, 1, 3, dof=80, nnz=2656)
    assert abs(row.o_s - math.log(2656) / math.log(80)) < 1e-12


def test_study_table_k1(tmp_path):
    out = tmp_path / "k1.csv"
    rows = run_study(StudyConfig(2, 1, (2, 3, 4), out=str(out)))
    table = read_csv(out)
    assert list(table[0].keys()) == list(CSV_HEADER)
    assert [r["method"] for r in table] == ["modified"] * 3 + ["original"] * 3
    assert table[0]["l2_order"] == "" and table[0]["h1_order"] == ""
    assert float(table[1]["l2_order"]) == pytest.approx(1.92, abs=0.01)
    mod = {r.N: r for r in rows if r.method == "modified"}
    org = {r.N: r for r in rows if r.method == "original"}
    for N in (3, 4):
        assert mod[N].o_s < org[N].o_s
        assert mod[N].l2_error == pytest.approx(org[N].l2_error, rel=1e-3)
    for row in rows:
        assert 0 < row.nnz_numerical <= row.nnz
    # exact cancellations make the numerical count strictly smaller here
    assert org[4].nnz_numerical < org[4].nnz


def _strip_timing(text):
    return [line.rsplit(",", 2)[0] for line in text.splitlines()]


def test_csv_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        run_study(StudyConfig(2, 2, (1, 2), out=str(path)))
    assert _strip_timing(a.read_text()) == _strip_timing(b.read_text())


def test_failed_row_recorded(tmp_path):
    rows = run_study(StudyConfig(2, 1, (2,), method="modified", sigma=1e-3))
    assert not rows[0].ok and "Definiteness" in rows[0].error


def test_cli_flags_and_outputs(tmp_path, capsys):
    out = tmp_path / "r.csv"
    rc = main([
        "--dim", "2", "--degree", "1", "--levels", "1..2", "--method", "original",
        "--out", str(out), "--emit-matrix", str(tmp_path / "A.mtx"),
        "--emit-pattern", str(tmp_path / "P.txt"), "--kappa2", "off", "--solver", "cg",
    ])
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 2 and rows[1]["kappa2"] == ""
    assert (tmp_path / "A_original_N2.mtx").exists()
    assert len((tmp_path / "P_original_N2.txt").read_text().splitlines()) == int(rows[1]["nnz"])


def test_cli_config_file_flags_win(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dim": 2, "degree": 2, "levels": "1..2", "method": "original"}))
    assert main(["--config", str(cfg), "--method", "modified"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 3 and all(l.startswith("modified,2,2,") for l in lines[1:])


def test_cli_missing_required(capsys):
    assert main(["--degree", "1", "--levels", "2"]) == 2


def test_cli_exit_code_on_failure(tmp_path):
    rc = main(["--dim", "2", "--degree", "1", "--levels", "2", "--method", "modified",
               "--sigma", "0.001", "--out", str(tmp_path / "x.csv")])
    assert rc == 1
