import csv
import json

import pytest

from hyperssg.equilibrium import BudgetError
from hyperssg.harness import ExperimentPlan, recount, run_cases, run_plan, run_robustness
from hyperssg.instances import fixture


def _read(path):
    return path.read_bytes()


def test_case1_csv_is_deterministic(tmp_path):
    plan = ExperimentPlan("case1", axis="K", values=[2, 3], fixed=1, instances=6, base_seed=3)
    rows, verdicts = run_cases(plan, tmp_path / "a")
    run_cases(plan, tmp_path / "b", workers=2)
    assert _read(tmp_path / "a" / "case1.csv") == _read(tmp_path / "b" / "case1.csv")
    text = (tmp_path / "a" / "case1.csv").read_text()
    assert "\r" not in text
    lines = text.splitlines()
    assert lines[0].startswith("case,axis,value")
    # single-follower instances are always certified
    assert all(r.ratio == 1.0 for r in rows)
    log = json.loads((tmp_path / "a" / "case1.verdicts.json").read_text())
    assert recount("case1", log) == [(r.numerator, r.denominator) for r in rows]
    assert len(log["verdicts"]) == 12


def test_case2_and_undefined_ratio(tmp_path):
    plan = ExperimentPlan("case2", axis="n", values=[1], fixed=2, instances=3)
    rows, _ = run_cases(plan, tmp_path)
    assert rows[0].denominator >= rows[0].numerator
    plan = ExperimentPlan("case1", axis="K", values=[2], fixed=2, instances=0)
    rows, _ = run_cases(plan, tmp_path)
    assert rows[0].ratio is None
    assert "undefined" in (tmp_path / "case1.csv").read_text()


def test_case3_small(tmp_path):
    plan = ExperimentPlan("case3", axis="K", values=[1, 2], fixed=1, instances=3)
    rows, verdicts = run_cases(plan, tmp_path)
    assert all(v["status"] == "ok" for v in verdicts)
    assert rows[0].ratio == 1.0


def test_budget_refusal():
    plan = ExperimentPlan("case1", axis="n", values=[7], fixed=6, instances=1)
    with pytest.raises(BudgetError):
        run_cases(plan)
    ok = ExperimentPlan("case1", axis="n", values=[7], fixed=6, instances=1, use_milp=True)
    ok.check_budget()
    with pytest.raises(BudgetError):
        ExperimentPlan("case3", axis="n", values=[7], fixed=6, use_milp=True).check_budget()


def test_plan_round_trip():
    plan = ExperimentPlan("case4", axis="n", values=[1, 2], fixed=2, instances=4, base_seed=9)
    assert ExperimentPlan.from_dict(json.loads(json.dumps(plan.to_dict()))) == plan
    with pytest.raises(ValueError):
        ExperimentPlan.from_dict({"case": "case1", "bogus": 1})
    with pytest.raises(ValueError):
        ExperimentPlan("case9")


def _table(header, rows):
    return [dict(zip(header, r)) for r in rows]


def test_counterterrorism_robustness_rows(tmp_path):
    plan = ExperimentPlan("robustness-msse", fixture="counterterrorism")
    header, rows, rep = run_plan(plan, tmp_path)
    tab = _table(header, rows)
    inside = [r for r in tab if r["inside_empirical"] == "1"]
    assert inside
    cols = [h for h in header if h.startswith("follower_")]
    first = [inside[0][c] for c in cols]
    assert all([r[c] for c in cols] == first for r in inside)
    assert rep.delta_msse < rep.empirical_msse
    assert all(r["inside_empirical"] == "1" for r in tab if r["inside_delta"] == "1")
    with open(tmp_path / "robustness-msse.csv", newline="") as fh:
        assert next(csv.reader(fh)) == header


@pytest.mark.parametrize("dmax", [1.0, 2.0, 3.0])
def test_cps_deception_never_pays_inside_region(dmax):
    g, _ = fixture("cps", dmax=dmax)
    header, rows, rep = run_robustness(g, ExperimentPlan("robustness-dsse"))
    for r in _table(header, rows):
        if r["inside_empirical"] == "1":
            assert float(r["leader_value"]) <= float(r["sse_value"]) + 1e-9
    assert rep.delta_dsse < rep.empirical_dsse
