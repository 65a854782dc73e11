import numpy as np
import pytest

from epivar import scenarios
from epivar.scenarios import Check, Scenario, ScenarioError, build_report, jsonable


def _passing(ctx, budget, rng):
    return True, {"seed": ctx["seed"], "draw": float(rng.random())}


def _failing(ctx, budget, rng):
    return False, {"verdict": "fails"}


def _crashing(ctx, budget, rng):
    raise RuntimeError("boom")


@pytest.fixture
def toy(monkeypatch):
    sc = Scenario("toy", "runner smoke test", lambda: {"pair": None}, [
        Check("passes", "trivial", _passing),
        Check("crashes", "derived", _crashing),
        Check("fails", "published", _failing),
    ])
    monkeypatch.setitem(scenarios.SCENARIOS, "toy", sc)
    return sc


def test_untagged_check_refused():
    with pytest.raises(ScenarioError, match="no provenance tag"):
        Check("orphan", None, _passing)


def test_catalog_is_fully_tagged():
    assert len(scenarios.SCENARIOS) == 15
    for sc in scenarios.SCENARIOS.values():
        assert sc.checks
        for check in sc.checks:
            assert check.provenance in scenarios.PROVENANCE


def test_unknown_scenario():
    with pytest.raises(ScenarioError, match="unknown scenario"):
        scenarios.get("no-such-scenario")
    with pytest.raises(ScenarioError):
        scenarios.run_many(["no-such-scenario"])


def test_crash_is_isolated(toy):
    out = scenarios.run_scenario("toy", seed=7)
    statuses = {c["name"]: c["status"] for c in out["checks"]}
    assert statuses == {"passes": "pass", "crashes": "error", "fails": "fail"}
    assert out["status"] == "fail"
    assert "boom" in out["checks"][1]["detail"]["error"]
    assert set(out["timing"]["checks"]) == {"passes", "crashes", "fails"}
    assert out["seed"] == 7


def test_seed_defaults_to_config(toy):
    out = scenarios.run_scenario("toy", quick=True)
    assert out["seed"] == 42
    assert out["budget"] == "quick"


def test_checks_draw_reproducibly(toy):
    a = scenarios.run_scenario("toy", seed=3)["checks"][0]["detail"]["draw"]
    b = scenarios.run_scenario("toy", seed=3)["checks"][0]["detail"]["draw"]
    c = scenarios.run_scenario("toy", seed=4)["checks"][0]["detail"]["draw"]
    assert a == b
    assert a != c


def test_build_failure_reported(monkeypatch):
    def broken():
        raise ValueError("no pair")

    monkeypatch.setitem(scenarios.SCENARIOS, "broken",
                        Scenario("broken", "bad build", broken, [Check("x", "trivial", _passing)]))
    out = scenarios.run_scenario("broken", seed=1)
    assert out["status"] == "error"
    assert "no pair" in out["error"]
    assert out["checks"] == []


def test_run_many_keeps_order(toy):
    results = scenarios.run_many(["toy", "toy"], seed=1)
    assert [r["scenario"] for r in results] == ["toy", "toy"]


def test_jsonable():
    out = jsonable({"a": np.array([1.0, np.inf]), "b": np.bool_(True), "c": float("nan"),
                    "d": (np.int64(3), -np.inf), 4: 0.1})
    assert out == {"a": [1.0, "inf"], "b": True, "c": None, "d": [3, "-inf"], "4": 0.1}


def test_build_report(toy):
    rep = build_report([scenarios.run_scenario("toy", seed=5)])
    assert rep["schema"] == scenarios.SCHEMA
    assert rep["seed"] == 5
    assert rep["passed"] is False
    assert rep["scenarios"][0]["checks"][0]["status"] == "pass"


def test_worker_count_bounded():
    assert 1 <= scenarios._worker_count(3) <= 3
    assert scenarios._worker_count(1) == 1


def test_counterexample_refusal_check():
    ctx = scenarios.get("counterexample").build()
    ok, detail = scenarios.check_counter_refused(ctx, scenarios.BUDGETS["quick"], None)
    assert ok
    assert detail["refused"] == "usotp-not-established"


def test_saddle_scenario_strict_saddle_check(rng):
    ctx = scenarios.get("saddle-demo").build()
    ok, detail = scenarios.check_strict_saddle(ctx, scenarios.BUDGETS["quick"], rng)
    assert ok
    assert detail["min_eigenvalue"] == pytest.approx(-2.0)


def test_euclid_prox_value_check(rng):
    ctx = scenarios.get("euclid-norm").build()
    check = scenarios.prox_value_check(1.0, [3.0, 4.0], [2.4, 3.2])
    ok, detail = check(ctx, scenarios.BUDGETS["quick"], rng)
    assert ok
    assert detail["error"] <= 1e-8
