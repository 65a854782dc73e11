import numpy as np
import pytest


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Every test reads and writes its own config file."""
    path = tmp_path / "config.json"
    monkeypatch.setenv("EPIVAR_CONFIG", str(path))
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(42)
