import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from hemicontact.cli import EXIT_HYPOTHESIS, EXIT_OK, EXIT_PARSE, EXIT_SOLVER, main
from hemicontact.output import read_snapshot

GOLDEN = Path(__file__).parent / "golden"

SMALL = """\
[scenario]
name = small

[mesh]
rectangle = 3 3

[time]
T = 0.5
n_steps = 4

[material]
viscosity = 1.0 0.5
elasticity = 1.0 0.5

[laws.normal]
family = damped_response
stiffness = 0.05

[laws.tangential]
{tangential}

[loads.f1]
x = 0.5 * y
y = -0.2 * x
{extra}
"""

MILD = "family = slip_weakening\nstatic = 0.2\nkinetic = 0.1\nslip_scale = 0.5"
STEEP = "family = piecewise\nbreakpoints = -1 1\npiece0 = 20\npiece1 = 0 -20\npiece2 = -20"


def scenario(tmp_path, tangential=MILD, extra=""):
    p = tmp_path / "small.scn"
    p.write_text(SMALL.format(tangential=tangential, extra=extra))
    return str(p)


def margins(text):
    out = {}
    for line in text.splitlines():
        parts = line.split(",")
        if len(parts) == 6 and parts[0] != "condition":
            out[parts[0]] = float(parts[3])
    return out


def test_run_rest_writes_zero_trajectories(tmp_path, capsys):
    assert main(["run", "rest.scn", "--out", str(tmp_path / "out")]) == EXIT_OK
    snaps = sorted((tmp_path / "out" / "snapshots").glob("step_*.txt"))
    assert len(snaps) == 5
    for s in snaps:
        assert np.all(read_snapshot(s).values == 0.0)
    assert "converged in 1 coupling iterations" in capsys.readouterr().out


def test_check_smallness_matches_golden(capsys):
    assert main(["check-smallness", "benchmark.scn"]) == EXIT_OK
    got = margins(capsys.readouterr().out)
    want = margins((GOLDEN / "benchmark_smallness.txt").read_text())
    assert set(got) == set(want) and len(want) == 4
    for k in want:
        assert got[k] == pytest.approx(want[k], abs=1e-9)


def test_check_hypotheses_passes(capsys):
    assert main(["check-hypotheses", "benchmark.scn", "--samples", "1000"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "viscosity.strong_monotonicity" in out and ",no" not in out


@pytest.mark.parametrize("argv", [
    ["run", "does_not_exist.scn"],
    ["check-smallness", "bad"],
])
def test_parse_failures_exit_2(tmp_path, argv):
    if argv[1] == "bad":
        p = tmp_path / "bad.scn"
        p.write_text("[time]\nT = 1\n")
        argv = [argv[0], str(p)]
    assert main(argv) == EXIT_PARSE


def test_bad_key_exit_2(tmp_path, capsys):
    path = scenario(tmp_path, extra="\n[initial]\ntheta0 = q\n")
    assert main(["check-smallness", path]) == EXIT_PARSE
    assert "initial.theta0" in capsys.readouterr().err


def test_smallness_failure_exit_3(tmp_path, capsys):
    path = scenario(tmp_path, tangential=STEEP)
    assert main(["check-smallness", path]) == EXIT_HYPOTHESIS
    assert main(["run", path, "--out", str(tmp_path / "o")]) == EXIT_HYPOTHESIS
    assert not (tmp_path / "o").exists()


def test_solver_failure_exit_4(tmp_path, capsys):
    path = scenario(tmp_path, extra="\n[solver]\nnewton_max_iter = 0\n")
    assert main(["run", path, "--out", str(tmp_path / "o")]) == EXIT_SOLVER
    assert "mechanical" in capsys.readouterr().err


def test_fixed_point_exhaustion_exit_4(tmp_path, capsys):
    path = scenario(tmp_path, extra="\n[solver]\nfixed_point_max_iter = 1\n")
    assert main(["run", path, "--out", str(tmp_path / "o")]) == EXIT_SOLVER
    assert "no convergence" in capsys.readouterr().err


def test_force_and_overrides(tmp_path, capsys):
    path = scenario(tmp_path)
    out = tmp_path / "o"
    assert main(["run", path, "--out", str(out), "--dt-override", "0.25", "--epsilon-floor", "1e-7", "--seed", "9"]) == EXIT_OK
    prov = json.loads((out / "provenance.json").read_text())
    assert prov["time"]["n_steps"] == 2 and prov["seed"] == 9
    assert len(list((out / "snapshots").glob("*.txt"))) == 3


def test_contraction_study_table(tmp_path, capsys):
    path = scenario(tmp_path)
    assert main(["contraction-study", path, "--param", "laws.tangential.static", "--values", "0.2", "0.3",
                 "--out", str(tmp_path / "o")]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# rho = ")
    assert lines[1].startswith("param,value,smallness,min_margin,iterations,max_ratio")
    rows = [line.split(",") for line in lines[2:]]
    assert [r[1] for r in rows] == ["0.2", "0.3"] and all(r[-1] == "yes" for r in rows)
    assert (tmp_path / "o" / "contraction.csv").read_text().splitlines() == lines[1:]


def test_contraction_study_bad_param(tmp_path):
    assert main(["contraction-study", scenario(tmp_path), "--param", "nosuch.key", "--values", "1"]) == EXIT_PARSE


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hemicontact", "check-smallness", "rest.scn"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "viscous_monotonicity_vs_contact" in proc.stdout
