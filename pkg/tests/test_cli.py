import io
import json
import subprocess
import sys

import pytest

from qbplan.cli import main, read_regions_csv
from qbplan.plan import Plan

PRIOR = ["--r", "1", "--tau0", "0.25", "--mu-lo", "-5", "--mu-hi", "5"]


def run(*argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def plan09(tmp_path_factory):
    path = tmp_path_factory.mktemp("plans") / "p09.json"
    assert main(["plan", *PRIOR, "--c", "0.09", "-o", str(path)], out=io.StringIO()) == 0
    return path


@pytest.fixture(scope="module")
def plan05(tmp_path_factory):
    path = tmp_path_factory.mktemp("plans") / "p05.json"
    assert main(["plan", *PRIOR, "--c", "0.05", "-o", str(path)], out=io.StringIO()) == 0
    return path


class TestPlan:
    def test_closed_form(self, plan09):
        data = json.loads(plan09.read_text())
        assert data["schema"] == 1 and data["sweeps"] == 0
        assert {lvl["provenance"] for lvl in data["levels"]} == {"closed_form"}

    def test_iterated_records_sweeps(self):
        code, text = run("plan", *PRIOR, "--c", "0.03", "--grid-points", "801")
        assert code == 0
        data = json.loads(text)
        assert data["sweeps"] >= 1 and data["solver"]["grid_points"] == 801

    def test_summary_line(self, tmp_path):
        code, text = run("plan", *PRIOR, "--c", "0.09", "-o", str(tmp_path / "p.json"))
        assert code == 0 and text.startswith("closed_form plan, 0 sweeps")

    def test_missing_cost(self, capsys):
        code, _ = run("plan", *PRIOR)
        assert code == 1
        assert "usage" in capsys.readouterr().err

    @pytest.mark.parametrize("bad", ["1e-2", "abc", "0x10", "inf"])
    def test_plain_decimals_only(self, bad):
        assert run("plan", *PRIOR, "--c", bad)[0] == 1

    def test_invalid_config(self):
        assert run("plan", "--r", "1", "--c", "0.1", "--tau0", "0.25",
                   "--mu-lo", "5", "--mu-hi", "-5")[0] == 1

    def test_non_convergence_exit(self):
        assert run("plan", *PRIOR, "--c", "0.03", "--max-sweeps", "1")[0] == 2

    def test_env_sweep_cap(self, monkeypatch):
        monkeypatch.setenv("QBPLAN_MAX_SWEEPS", "1")
        assert run("plan", *PRIOR, "--c", "0.03")[0] == 2
        # the flag still wins over the environment
        assert run("plan", *PRIOR, "--c", "0.03", "--max-sweeps", "5")[0] == 0

    def test_round_trip_bit_exact(self, plan05):
        plan = Plan.from_dict(json.loads(plan05.read_text()))
        assert json.loads(json.dumps(plan.to_dict())) == json.loads(plan05.read_text())
        again = Plan.from_dict(plan.to_dict())
        assert again == plan


class TestThreshold:
    def test_paper(self):
        code, text = run("threshold", "--r", "1", "--tau0", "0.25", "--delta", "10")
        assert code == 0 and 0.076 <= float(text) <= 0.086
        assert text.strip() == "0.08093"  # four significant figures

    def test_from_bounds(self):
        a = run("threshold", "--r", "1", "--tau0", "0.25", "--delta", "10")[1]
        b = run("threshold", "--r", "1", "--tau0", "0.25", "--mu-lo", "-5", "--mu-hi", "5")[1]
        assert a == b

    def test_wider_set_not_cheaper(self):
        a = float(run("threshold", "--r", "1", "--tau0", "0.25", "--delta", "10")[1])
        b = float(run("threshold", "--r", "1", "--tau0", "0.25", "--delta", "20")[1])
        assert b <= a

    def test_negative_delta(self):
        assert run("threshold", "--r", "1", "--tau0", "0.25", "--delta", "-1")[0] == 1

    def test_needs_delta(self):
        assert run("threshold", "--r", "1", "--tau0", "0.25")[0] == 1


class TestRun:
    def test_stdin_stop1(self, plan09, monkeypatch):
        code, text = run("run", "--plan", str(plan09), stdin="2.0\n", monkeypatch=monkeypatch)
        assert code == 0
        last = text.strip().splitlines()[-1]
        assert "tau=1.25" in last and "interval=[0.6, 2.6]" in last
        assert "action=Stop1" in last and "robust=no" in last

    def test_obs_flag(self, plan09):
        code, text = run("run", "--plan", str(plan09), "--obs", "2.0")
        assert code == 0 and "action=Stop1" in text

    def test_exhausted(self, plan09, monkeypatch):
        code, text = run("run", "--plan", str(plan09), stdin="", monkeypatch=monkeypatch)
        assert code == 3
        assert text.strip().endswith("recommendation Continue")

    def test_stops_without_data(self, tmp_path):
        path = tmp_path / "far.json"
        run("plan", "--r", "1", "--c", "0.09", "--tau0", "0.25", "--mu-lo", "8",
            "--mu-hi", "10", "-o", str(path))
        code, text = run("run", "--plan", str(path), "--obs", "")
        assert code == 0
        assert text.splitlines()[-1].startswith("prior") and "action=Stop1" in text

    def test_off_ladder_precision(self, plan09):
        assert run("run", "--plan", str(plan09), "--obs", "1.0",
                   "--obs-precision", "0.5")[0] == 2

    def test_bad_observation(self, plan09):
        assert run("run", "--plan", str(plan09), "--obs", "1.0,x")[0] == 1

    def test_missing_plan(self, tmp_path):
        assert run("run", "--plan", str(tmp_path / "nope.json"), "--obs", "1")[0] == 1


class TestClassify:
    def test_report(self, plan09):
        code, text = run("classify", "--plan", str(plan09), "--tau", "1.25",
                         "--mu-lo", "0.6", "--mu-hi", "2.6")
        data = json.loads(text)
        assert code == 0 and data["admissible"] == ["Stop1"] and not data["robust"]


class TestExport:
    def test_first_row(self, plan09):
        code, text = run("export-regions", "--plan", str(plan09))
        lines = text.splitlines()
        assert code == 0 and lines[0] == "tau,b_continue,b_stop,provenance"
        tau, bc, bs, prov = lines[1].split(",")
        assert tau == "0.25" and prov == "closed_form"
        assert float(bc) == pytest.approx(2.24074053302, abs=1e-10)
        assert float(bs) == pytest.approx(2.61096130306, abs=1e-10)

    def test_rows_match_ladder_and_round_trip(self, plan05):
        plan = Plan.from_dict(json.loads(plan05.read_text()))
        rows = read_regions_csv(run("export-regions", "--plan", str(plan05))[1])
        assert len(rows) == len(plan.levels)
        assert rows == [(l.tau_level, l.b_continue, l.b_stop, l.provenance) for l in plan.levels]

    def test_digits(self, plan09):
        text = run("export-regions", "--plan", str(plan09), "--digits", "12")[1]
        assert text.splitlines()[1].startswith("0.25,2.24074053302,")

    def test_unreadable(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run("export-regions", "--plan", str(bad))[0] == 1


class TestSimulate:
    def test_deterministic(self, plan05):
        argv = ("simulate", "--plan", str(plan05), "--theta", "3", "--n", "300", "--seed", "7")
        a, b = run(*argv), run(*argv)
        assert a == b and a[0] == 0
        assert json.loads(a[1])["decision_frequency"]["Stop1"] >= 0.95

    def test_without_plan(self):
        assert run("simulate", "--theta", "3")[0] == 1

    def test_trace(self, plan05, tmp_path):
        trace = tmp_path / "t.csv"
        run("simulate", "--plan", str(plan05), "--n", "5", "--trace", str(trace))
        assert trace.read_text().startswith("step,tau,mu_lo,mu_hi,action,robust,admissible,x")

    def test_uniform_theta(self, plan05):
        code, text = run("simulate", "--plan", str(plan05), "--theta-uniform", "-1", "1",
                         "--n", "50")
        assert code == 0 and json.loads(text)["episodes"] == 50


class TestBank:
    def test_small_bank(self, tmp_path):
        code, text = run("bank", *PRIOR, "--costs", "0.05,0.09", "--out-dir", str(tmp_path))
        assert code == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        modes = {p["cost"]: p["mode"] for p in manifest["plans"]}
        assert modes == {0.05: "iterated", 0.09: "closed_form"}
        for p in manifest["plans"]:
            assert (tmp_path / p["file"]).exists()

    def test_failure_exit(self, tmp_path):
        code, _ = run("bank", *PRIOR, "--costs", "0.02", "--out-dir", str(tmp_path),
                      "--max-sweeps", "1", "--k-max", "20")
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert code == 2 and manifest["plans"][0]["error"]

    def test_bad_range(self, tmp_path):
        assert run("bank", *PRIOR, "--costs", "0.1:0.01:0.01", "--out-dir", str(tmp_path))[0] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qbplan", "threshold", "--r", "1",
                           "--tau0", "0.25", "--delta", "10"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "0.08093"
