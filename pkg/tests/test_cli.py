import csv
import os

import numpy as np
import pytest

from fokkerlab import cli

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SCEN = os.path.join(ROOT, "scenarios")


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_list_experiments(capsys):
    assert cli.main(["list-experiments"]) == cli.EXIT_OK
    names = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
    assert names == list(cli.EXPERIMENTS)
    assert "proper-time-fix" in names


def test_validate_shipped_scenarios(capsys):
    paths = sorted(os.path.join(SCEN, f) for f in os.listdir(SCEN) if f.endswith(".ini"))
    assert cli.main(["validate"] + paths) == cli.EXIT_OK
    assert capsys.readouterr().out.count(": ok (") == len(paths)


@pytest.mark.parametrize("body", [
    "[scenario]\nexperiment = no-such-thing\n",
    "[scenario]\nexperiment = action-eval\nK = two\n",
    "[scenario]\nexperiment = action-eval\n[particle1]\nmass = 1\n",
])
def test_malformed_scenario_exits_2(tmp_path, capsys, body):
    path = tmp_path / "bad.ini"
    path.write_text(body)
    assert cli.main(["validate", str(path)]) == cli.EXIT_CONFIG
    assert cli.main(["run", str(path), "--out", str(tmp_path / "out")]) == cli.EXIT_CONFIG
    assert capsys.readouterr().err


def test_free_action_equals_mass_times_length(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", os.path.join(SCEN, "free_action.ini"), "--out", str(out)]) == 0
    row = _rows(out / "free_action" / "action.csv")[0]
    L1 = 10.0
    L2 = np.sqrt(100.0 - 4.0)
    assert float(row["total"]) == pytest.approx(1.0 * L1 + 2.0 * L2, rel=1e-12)
    assert float(row["interaction_cross"]) == 0.0
    manifest = _rows(out / "manifest.csv")
    assert manifest[0]["scenario"] == "free_action" and manifest[0]["status"] == "ok"


def test_perturbation_without_charges_is_zero(tmp_path):
    out = tmp_path / "out"
    code = cli.main(["run", os.path.join(SCEN, "perturbation_free.ini"), "--out", str(out)])
    assert code == cli.EXIT_OK
    for row in _rows(out / "perturbation_free" / "perturbation.csv"):
        assert float(row["order1_norm"]) == 0.0
        # sliced free product against the closed form: round-off only
        assert float(row["error_norm"]) < 1e-12


def test_numerical_failure_exits_3(tmp_path, capsys):
    src = open(os.path.join(SCEN, "proper_time.ini")).read()
    # an antisymmetric shift leaves a net change of P_eps after the pulse
    path = tmp_path / "no_return.ini"
    path.write_text(src.replace("eps_mode = 1", "eps_mode = 2"))
    out = tmp_path / "out"
    assert cli.main(["run", str(path), "--out", str(out)]) == cli.EXIT_NUMERIC
    assert "NoShellReturn" in capsys.readouterr().err
    assert _rows(out / "manifest.csv")[0]["status"] == "failed:NoShellReturn"
