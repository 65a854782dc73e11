"""User settings for epivar - numeric defaults and their on-disk overrides.

Stored as JSON in the user's home (``~/.epivar/config.json``; the EPIVAR_CONFIG
environment variable points elsewhere, which the tests use). Only keys that
differ from DEFAULTS are written. Precedence is: CLI flag > config file > default.

Public API:
    DEFAULTS           the built-in values
    settings()         DEFAULTS overlaid with the file
    get(key)           one resolved value
    set_value(k, v)    persist an override (None / "" resets to the default)
    config_path()      the file in use
"""

import os
import json

DEFAULTS = {
    "seed": 42,
    "membership_tol": 1e-9,
    "ri_margin": 1e-7,
    "t_max": 1e-1,            # quotient grid, geometric, top ...
    "t_min": 1e-6,            # ... bottom
    "t_per_decade": 4,
    "perturbations": 16,      # random h + t*u per grid point
    "sampler_radii": [1e-2, 1e-3, 1e-4],
    "sampler_count": 32,
    "dykstra_max_iter": 20000,
    "dykstra_tol": 1e-10,
    "prox_max_iter": 5000,
    "prox_tol": 1e-10,
    "face_max_iter": 500,     # multiplier optimization over spectral faces
    "face_tol": 1e-9,
}


def config_path():
    env = os.environ.get("EPIVAR_CONFIG")
    if env:
        return env
    return os.path.join(os.path.expanduser("~"), ".epivar", "config.json")


_cache = {}


def _load():
    # reread only when the file changes
    path = config_path()
    try:
        stamp = os.stat(path).st_mtime_ns
    except OSError:
        return {}
    if _cache.get("key") != (path, stamp):
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, ValueError):
            data = {}
        _cache.update(key=(path, stamp), data=data if isinstance(data, dict) else {})
    return dict(_cache["data"])


def _save(cfg):
    path = config_path()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(cfg, f, indent=2)
    _cache.clear()


def settings():
    out = dict(DEFAULTS)
    out.update({k: v for k, v in _load().items() if k in DEFAULTS})
    return out


def get(key):
    if key not in DEFAULTS:
        raise KeyError(f"unknown setting: {key}")
    return settings()[key]


def set_value(key, value):
    """Persist `key`; an empty value drops the override. Returns the resolved value."""
    if key not in DEFAULTS:
        raise KeyError(f"unknown setting: {key}")
    cfg = _load()
    if value is None or value == "":
        cfg.pop(key, None)
    else:
        cfg[key] = value
    _save(cfg)
    return get(key)


def t_grid(cfg=None):
    """The geometric quotient grid, largest t first."""
    import numpy as np
    cfg = cfg or settings()
    decades = np.log10(cfg["t_max"] / cfg["t_min"])
    n = int(round(decades * cfg["t_per_decade"])) + 1
    return np.geomspace(cfg["t_max"], cfg["t_min"], n)
