import json

import numpy as np
import pytest

from epivar import cli, config

L1_INSTANCE = {
    "support_set": {"kind": "box", "lo": [-1.0, -1.0], "hi": [1.0, 1.0]},
    "map": {"name": "identity", "dim": 2},
    "basepoint": [0.0, 0.0],
    "lam": [1.0, 0.0],
}


@pytest.fixture
def instance(tmp_path):
    path = tmp_path / "l1.json"
    path.write_text(json.dumps(L1_INSTANCE), encoding="utf-8")
    return str(path)


def test_list_names_every_scenario(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    for name in ("counterexample", "saddle-demo", "kyfan-case2"):
        assert name in out


def test_run_needs_a_target():
    assert cli.main(["run"]) == 2


def test_run_unknown_scenario():
    assert cli.main(["run", "no-such-scenario"]) == 2


def test_config_set_and_reset():
    assert cli.main(["config", "seed", "7"]) == 0
    assert config.get("seed") == 7
    assert cli.main(["config", "seed", ""]) == 0
    assert config.get("seed") == 42


def test_config_unknown_key():
    assert cli.main(["config", "colour", "1"]) == 2


def test_prox_command(instance, capsys):
    assert cli.main(["prox", instance, "--z", "3,0.2", "--tau", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    np.testing.assert_allclose(out["p"], [2.0, 0.0])
    np.testing.assert_allclose(out["lam"], [1.0, 0.2], atol=1e-8)


def test_prox_jac_command_at_kink(instance, capsys):
    assert cli.main(["prox-jac", instance, "--z", "1,0.2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["differentiable"] is False


def test_certify_cq_command(instance, capsys):
    assert cli.main(["certify-cq", instance]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["strict"]["verdict"] == "holds"
    assert out["ri_multiplier"] is False


def test_estimate_command(instance, capsys):
    assert cli.main(["estimate", instance, "--h", "0,1", "--v", "1,0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["kind"] == "d2"
    assert out["verdict"] == "divergent"
    assert out["formula"] == "inf"


def test_estimate_first_order(instance, capsys):
    assert cli.main(["estimate", instance, "--kind", "d", "--direction", "1,-2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["kind"] == "d"
    assert out["verdict"] == "finite"
    assert out["value"] == pytest.approx(3.0, abs=1e-3)
    assert out["formula"] == pytest.approx(3.0)


def test_estimate_second_order_finite(instance, capsys):
    config.set_value("perturbations", 4)
    assert cli.main(["estimate", instance, "--kind", "d2", "--direction", "1,0",
                     "--v", "1,0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["kind"] == "d2"
    assert out["verdict"] == "finite"
    assert out["value"] == 0.0
    assert out["formula"] == 0.0


def test_estimate_strict_kind(tmp_path, capsys):
    path = tmp_path / "edge.json"
    path.write_text(json.dumps({
        "support_set": {"kind": "box", "lo": [1.0, -1.0], "hi": [1.0, 1.0]},
        "map": {"name": "identity", "dim": 2, "basepoint": [1.0, 0.0]},
        "basepoint": [1.0, 0.0],
        "offset": 1.0,
    }), encoding="utf-8")
    config.set_value("sampler_radii", [1e-2])
    config.set_value("sampler_count", 3)
    config.set_value("perturbations", 2)
    assert cli.main(["estimate", str(path), "--kind", "d2s", "--direction", "1,0",
                     "--v", "1,0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["kind"] == "d2s"
    assert out["verdict"] == "finite"
    assert out["value"] == pytest.approx(0.0, abs=1e-9)
    assert "samples" not in out
    assert out["formula"] == 0.0


def test_estimate_rejects_unknown_kind(instance):
    with pytest.raises(SystemExit) as exc:
        cli.main(["estimate", instance, "--kind", "d3", "--direction", "1,0"])
    assert exc.value.code == 2


def test_missing_instance_file(tmp_path):
    assert cli.main(["prox", str(tmp_path / "absent.json"), "--z", "1,1"]) == 2


def test_bad_vector_is_a_usage_error(instance):
    with pytest.raises(SystemExit) as exc:
        cli.main(["prox", instance, "--z", "a,b"])
    assert exc.value.code == 2
