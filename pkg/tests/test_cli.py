import csv
import json
import subprocess
import sys

import pytest

from optprice import ParseError, example_path
from optprice.cli import EXIT_INVALID, EXIT_MATH, EXIT_OK, main, parse_text, round_sig

SWAPPED = """
[mode]
transport
[x]
labels 0 1 2
[y]
labels 0 1 2
[cost]
expr product
[mu]
0 1/2 1/2
[nu]
0 1/2 1/2
[frozen]
1 2
2 1
"""

LIPSCHITZ = """
[mode]
lipschitz
[x]
points 0 1 2 3
[metric]
expr absdiff
[frozen]
0 1
[fixed]
0 0
"""

TWO_BY_TWO = """
[mode]
transport
[x]
labels a b
[y]
labels u v
[cost]
2 1
1 2
[mu]
uniform
[nu]
0.5 0.5
"""


@pytest.fixture
def write(tmp_path):
    def _write(text, name="p.problem"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return _write


def run_json(capsys, *argv):
    code = main([*argv, "--json"])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


@pytest.mark.parametrize("text, where", [
    ("", None),
    ("[mode]\ntransport\n[bogus]\n", (3, 1)),
    ("[mode]\ntransport\n[x]\nlabels a b\n[y]\nlabels u\n[cost]\n1\nzz\n[mu]\nuniform\n[nu]\nuniform\n", (9, 1)),
    ("mode transport\n", (1, 1)),
])
def test_parse_errors_carry_position(text, where):
    with pytest.raises(ParseError) as info:
        parse_text(text)
    if where is not None:
        assert f"line {where[0]}" in str(info.value)


def test_unknown_label_in_frozen(write, capsys):
    path = write(SWAPPED.replace("2 1\n", "2 9\n"))
    assert main(["check-monotone", path]) == EXIT_INVALID
    assert "9" in capsys.readouterr().err


def test_bad_marginals_exit_1(write, capsys):
    assert main(["solve", write(TWO_BY_TWO.replace("0.5 0.5", "0.5 0.4"))]) == EXIT_INVALID
    assert "InfeasibleMarginals" in capsys.readouterr().err


def test_missing_file_and_bad_command(capsys):
    assert main(["solve", "/nonexistent/problem"]) == EXIT_INVALID
    with pytest.raises(SystemExit) as info:
        main(["frobnicate", "x"])
    assert info.value.code == EXIT_INVALID


def test_solve_and_duals(write, capsys):
    path = write(TWO_BY_TWO)
    code, rep = run_json(capsys, "solve", path)
    assert code == EXIT_OK and rep["primal_value"] == 1.0
    assert sorted(map(tuple, ([r["x"], r["y"]] for r in rep["plan"]))) == [("a", "v"), ("b", "u")]
    code, rep = run_json(capsys, "duals", path)
    assert code == EXIT_OK and rep["gap"] == 0.0 and rep["feasibility_violations"] == 0


def test_check_monotone_swapped_exits_2(write, capsys):
    code, rep = run_json(capsys, "check-monotone", write(SWAPPED), "--witness")
    assert code == EXIT_MATH and not rep["monotone"] and rep["cycle_sum"] == -1.0
    assert sorted(map(tuple, rep["witness"])) == [("1", "2"), ("2", "1")]


def test_check_monotone_support_and_verify(write, capsys):
    path = write(SWAPPED.split("[frozen]")[0])
    code, rep = run_json(capsys, "check-monotone", path)
    assert code == EXIT_OK and rep["monotone"]
    code, rep = run_json(capsys, "verify", path)
    assert code == EXIT_OK and rep["ok"] and rep["support_monotone"]


def test_price_bounds_example2_csv(tmp_path, capsys):
    out = tmp_path / "corridor.csv"
    code, rep = run_json(capsys, "price-bounds", str(example_path()), "--csv", str(out))
    assert code == EXIT_OK and rep["primal_value"] == -1.25 and rep["width"] == 4.0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["label", "alpha", "gamma", "fixed"]
    assert len(rows) == 200
    for row in rows:
        x, a, g = float(row["label"]), float(row["alpha"]), float(row["gamma"])
        if x < 0:
            assert a == pytest.approx(-x - 2, abs=1e-10) and g == pytest.approx(-x + 2, abs=1e-10)
            assert row["fixed"] == ""
        else:
            assert a == pytest.approx(x, abs=1e-10) and g == pytest.approx(x, abs=1e-10)
            assert float(row["fixed"]) == pytest.approx(x, abs=1e-10)


def test_csv_rejected_for_other_commands(write, tmp_path, capsys):
    assert main(["solve", write(TWO_BY_TWO), "--csv", str(tmp_path / "x.csv")]) == EXIT_INVALID


def test_lipschitz_extend_and_verify(write, capsys):
    path = write(LIPSCHITZ)
    code, rep = run_json(capsys, "lipschitz-extend", path)
    assert code == EXIT_OK
    assert [r["alpha"] for r in rep["extension"]] == [0.0, 1.0, 0.0, -1.0]
    assert [r["gamma"] for r in rep["extension"]] == [0.0, 1.0, 2.0, 3.0]
    code, rep = run_json(capsys, "verify", path)
    assert code == EXIT_OK and rep["ok"]


def test_lipschitz_not_lipschitz_on_s(write, capsys):
    path = write(LIPSCHITZ.replace("0 1\n[fixed]\n0 0", "0 1\n2 2\n[fixed]\n0 0\n2 5"))
    assert main(["lipschitz-extend", path]) == EXIT_MATH
    assert "NotLipschitzOnS" in capsys.readouterr().err


def test_verify_pricing_candidate(write, capsys):
    base = example_path().read_text()
    code, rep = run_json(capsys, "verify", write(base + "\n[candidate]\nrange -1.5 1.5 abs\n"))
    assert code == EXIT_OK and rep["ok"]
    bad = base + "\n[candidate]\nrange -1.5 -1 neg\nrange 1 1.5 abs\n[sell]\n-1 0\n1 5\n"
    code, rep = run_json(capsys, "verify", write(bad, "bad.problem"))
    assert code == EXIT_MATH and not rep["ok"]


def test_quiet_and_text_output(write, capsys):
    path = write(TWO_BY_TWO)
    assert main(["solve", path, "--quiet"]) == EXIT_OK
    assert capsys.readouterr().out == ""
    assert main(["solve", path]) == EXIT_OK
    assert "primal_value: 1" in capsys.readouterr().out


def test_round_sig():
    assert round_sig(1 / 3) == 0.333333333333
    assert round_sig(float("inf")) == "inf"
    assert round_sig(0.0) == 0.0


def test_output_is_deterministic(write):
    path = write(SWAPPED.split("[frozen]")[0])
    cmd = [sys.executable, "-m", "optprice.cli", "duals", path, "--json"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == second and json.loads(first)["command"] == "duals"


def test_console_entry_point_exit_code(write):
    proc = subprocess.run([sys.executable, "-m", "optprice.cli", "check-monotone", write(SWAPPED), "--witness"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_MATH
    assert "(2, 1)" in proc.stdout + proc.stderr
