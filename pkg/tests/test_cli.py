import csv
import io
import json

import pytest

from ltbsm.cli import RESULT_COLUMNS, main, parse_range, UsageError
from ltbsm.estimate import exact_success


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ltbsm-csv/1")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_range_syntax():
    assert parse_range("0.5:1.0:0.05")[-1] == 1.0 and len(parse_range("0.5:1.0:0.05")) == 11
    assert parse_range("0.3") == [0.3]
    for bad in ("a", "1:2", "1:0:0.1", "0:1:0"):
        with pytest.raises(UsageError):
            parse_range(bad)


def test_exact_single_block(capsys):
    code, out, _ = run(capsys, "exact", "--protocol", "adaptive-qpc-sqm", "--code",
                       "qpc2var:1/inner=rep:1", "--model", "zz-det", "--eta", "1")
    assert code == 0
    (row,) = rows(out)
    assert float(row["mean"]) == 0.5 and row["method"] == "exact"
    assert out.splitlines()[1] == ",".join(RESULT_COLUMNS)


def test_exact_matches_library(capsys):
    _, out, _ = run(capsys, "exact", "--protocol", "static", "--code", "surface:3", "--model",
                    "random-basis", "--eta", "1")
    lib = exact_success("static", "surface:3", "random-basis", 1.0, 1.0).mean
    assert float(rows(out)[0]["mean"]) == lib


def test_capacity_exit(capsys):
    code, _, err = run(capsys, "exact", "--protocol", "decode", "--code", "rep:30", "--eta", "0.9")
    assert code != 0 and "enumeration cap" in err


def test_usage_errors(capsys):
    for argv in (["exact", "--code", "nope:3", "--eta", "1"],
                 ["exact", "--code", "rep:3", "--model", "bogus", "--eta", "1"],
                 ["mc", "--code", "rep:3", "--eta", "1"],
                 ["exact", "--code", "rep:3", "--eta", "0:1"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2


def test_mc_sweep_and_determinism(capsys, tmp_path):
    argv = ["mc", "--protocol", "static", "--code", "qpc:2,2", "--model", "random-basis",
            "--eta", "0.5:1.0:0.05", "--trials", "500", "--seed", "3"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv, "--threads", "4")
    assert first == second and len(rows(first)) == 11
    assert all(r["seed"] == "3" and r["method"] == "monte-carlo" for r in rows(first))
    out = tmp_path / "o.csv"
    run(capsys, *argv, "--out", str(out))
    assert out.read_text() == first


def test_mc_loss_product(capsys):
    common = ["mc", "--protocol", "adaptive-bsm", "--code", "qpc:2,2", "--trials", "20000",
              "--seed", "9"]
    _, a, _ = run(capsys, *common, "--eta-a", "0.9", "--eta-b", "0.8")
    _, b, _ = run(capsys, *common, "--eta-a", "0.72", "--eta-b", "1.0")
    ra, rb = rows(a)[0], rows(b)[0]
    assert float(ra["ci_low"]) <= float(rb["ci_high"]) and float(rb["ci_low"]) <= float(ra["ci_high"])


def test_json_mirror(capsys):
    _, out, _ = run(capsys, "exact", "--code", "rep:3", "--protocol", "measure-z", "--eta",
                    "0.5", "--format", "json")
    data = json.loads(out)
    assert data["columns"] == list(RESULT_COLUMNS)
    assert data["rows"][0]["mean"] == 0.875


def test_threshold_command(capsys):
    _, out, _ = run(capsys, "threshold", "--family", "rep:{s}", "--sizes", "2,4,8",
                    "--protocol", "decode")
    r = rows(out)
    assert [x["size"] for x in r] == ["2", "4", "8", "extrapolated"]
    assert all(float(x["epsilon_star"]) < 0.3 for x in r)
    assert "flag" in r[0]


def test_threshold_too_weak(capsys):
    _, out, _ = run(capsys, "threshold", "--family", "rep:{s}", "--sizes", "1,2",
                    "--protocol", "static", "--model", "zz-det", "--target", "0.9")
    summary = rows(out)[-1]
    assert summary["epsilon_star"] == "NA" and summary["flag"] == "too-weak"


def test_bounds_and_repeater(capsys):
    _, out, _ = run(capsys, "bounds", "--table")
    vals = {(r["regime"], r["protocol_class"]): float(r["threshold"]) for r in rows(out)}
    assert vals[("lobsm p=0.5", "adaptive-bsm-sqm")] == 0.5
    _, out, _ = run(capsys, "repeater", "--eta-b", "0.9", "--eta-d", "0.8889")
    r = {x["regime"]: x["L_km"] for x in rows(out)}
    assert r["static"] == "infeasible" and 2 <= float(r["adaptive-bsm"]) <= 3
    _, out, _ = run(capsys, "repeater", "--product", "0.5:1.0:0.1")
    assert len(rows(out)) == 6 * 3
