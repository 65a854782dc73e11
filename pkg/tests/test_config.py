import json

import numpy as np
import pytest

from epivar import config
from epivar.cones import ConvergenceError, dykstra
from epivar.supportsets import Box, MatrixInterval


def test_defaults_without_file(isolated_config):
    assert not isolated_config.exists()
    assert config.get("seed") == 42
    assert config.settings()["sampler_radii"] == [1e-2, 1e-3, 1e-4]
    assert config.config_path() == str(isolated_config)


def test_set_value_persists_and_resets(isolated_config):
    assert config.set_value("seed", 7) == 7
    assert json.loads(isolated_config.read_text())["seed"] == 7
    assert config.get("seed") == 7
    assert config.set_value("seed", "") == 42
    assert "seed" not in json.loads(isolated_config.read_text())


def test_unknown_keys_are_rejected_and_ignored(isolated_config):
    with pytest.raises(KeyError, match="unknown setting"):
        config.get("colour")
    with pytest.raises(KeyError):
        config.set_value("colour", 1)
    isolated_config.write_text(json.dumps({"colour": "gold", "perturbations": 4}))
    cfg = config.settings()
    assert "colour" not in cfg
    assert cfg["perturbations"] == 4


def test_corrupt_file_falls_back_to_defaults(isolated_config):
    isolated_config.write_text("{not json")
    assert config.get("t_per_decade") == 4


def test_t_grid_default_has_four_points_per_decade():
    grid = config.t_grid()
    assert grid.size == 21
    assert grid[0] == pytest.approx(1e-1)
    assert grid[-1] == pytest.approx(1e-6)
    assert np.all(np.diff(grid) < 0)
    np.testing.assert_allclose(grid[::4], np.logspace(-1, -6, 6))


def test_membership_and_margin_settings_reach_the_sets():
    box = Box([0.0], [1.0])
    assert not box.contains([1.0 + 1e-6])
    assert box.ri_membership([0.25])
    config.set_value("membership_tol", 1e-5)
    assert box.contains([1.0 + 1e-6])
    config.set_value("ri_margin", 0.5)
    assert not box.ri_membership([0.25])
    assert box.ri_membership([0.5])


def test_dykstra_settings_reach_the_solver():
    def halfspace(x):
        return x - max(x.sum() - 1.0, 0.0) * np.ones(2) / 2.0

    dykstra([lambda x: np.clip(x, 0.0, 1.0), halfspace], [2.0, 2.0])
    config.set_value("dykstra_max_iter", 1)
    with pytest.raises(ConvergenceError, match="in 1 iterations"):
        dykstra([lambda x: np.clip(x, 0.0, 1.0), halfspace], [2.0, 2.0])
    interval = MatrixInterval(np.zeros((2, 2)), np.eye(2))
    with pytest.raises(ConvergenceError):
        interval.dykstra_project([3.0, 1.0, -2.0])
