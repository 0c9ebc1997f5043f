import csv

import pytest

from transient_bor.cli import main

SMALL = """
[scenario]
name = small_sphere
[geometry]
kind = sphere
radius = 0.1
[pulse]
kind = gaussian_video
tau = 1e-9
[incidence]
type = axial_nose_on
[solver]
h_max = 0.02
floor_db = -40
[output]
formats = csv,svg
"""


@pytest.fixture
def scen(tmp_path):
    p = tmp_path / "small.ini"
    p.write_text(SMALL)
    return p


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    assert "fig1_a" in out and "fig4_eps4" in out


def test_validate_properties(capsys):
    assert main(["validate", "--suite", "properties"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 4 and all(ln.startswith("PASS") for ln in lines)


def test_bad_scenario_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text(SMALL.replace("kind = sphere", "kind = torus"))
    assert main(["run", "--scenario", str(p)]) == 2
    assert "[geometry] kind" in capsys.readouterr().err
    assert main(["run", "--scenario", "no_such_thing"]) == 2


def test_td_on_coated_body_is_rejected(tmp_path):
    assert main(["--cache-dir", str(tmp_path / "c"), "run", "--scenario", "fig4_eps2",
                 "--backend", "td", "--out", str(tmp_path / "o")]) == 1


def test_run_writes_outputs_and_reuses_cache(scen, tmp_path, capsys):
    cache = tmp_path / "cache"
    out = tmp_path / "out"
    args = ["--cache-dir", str(cache), "run", "--scenario", str(scen), "--out", str(out)]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert "solver_invocations=0" not in first
    for name in ("transient.csv", "response.txt", "events.csv", "transient.svg"):
        assert (out / name).is_file()
    rows = [r for r in csv.reader(open(out / "transient.csv")) if not r[0].startswith("#")]
    assert len(rows) >= 16 and len(rows) & (len(rows) - 1) == 0
    assert main(args) == 0
    assert "solver_invocations=0" in capsys.readouterr().out
    assert main(["--cache-dir", str(cache), "cache", "stats"]) == 0
    assert '"families": 1' in capsys.readouterr().out
    assert main(["--cache-dir", str(cache), "cache", "clear"]) == 0
    assert main(args + ["--no-cache"]) == 0
    assert "solver_invocations=0" not in capsys.readouterr().out
