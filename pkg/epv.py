#!/usr/bin/env python3
"""
epivar - second-order variational checks for decomposable functions.

This is the launcher: run `python epv.py <command>`. It bootstraps any missing
Python packages (so a fresh checkout runs with nothing but Python installed),
then hands off to the `epivar` package, which is organized as:

    epivar/ui.py          terminal output and logging setup
    epivar/cli.py         the argparse front-end
    epivar/config.py      ~/.epivar/config.json overrides of numeric defaults
    epivar/linalg.py      svec/smat, Jacobi eigh, subspace helpers
    epivar/smoothmap.py   the inner C2 map F and its derivatives
    epivar/cones.py       cones, polars, Dykstra, the cone-sum certificate
    epivar/supportsets.py support sets Q and their faces / normal cones
    epivar/decomp.py      decomposable pairs, CQs, second subderivatives
    epivar/prox.py        proximal maps, envelopes, the equivalence suite
    epivar/epiquot.py     difference-quotient estimators
    epivar/reduction.py   reduction charts and uniform tangent paths
    epivar/scenarios.py   the scenario catalog and runner
"""

import importlib.util
import subprocess
import sys

# import name -> pip name; rich only changes how output looks
REQUIRED = {"numpy": "numpy", "scipy": "scipy", "psutil": "psutil"}
OPTIONAL = {"rich": "rich"}


def _absent(table):
    return [pip for mod, pip in table.items() if importlib.util.find_spec(mod) is None]


def _pip(packages):
    cmd = [sys.executable, "-m", "pip", "install", *packages]
    try:
        return subprocess.run(cmd, check=False).returncode == 0
    except OSError:
        return False


def _ensure_dependencies():
    """Offer to pip-install whatever epivar imports but the interpreter lacks."""
    if getattr(sys, "frozen", False):
        return
    needed, nice = _absent(REQUIRED), _absent(OPTIONAL)
    if not needed and not nice:
        return
    print(f"epivar is missing: {', '.join(needed + nice)}")
    try:
        reply = input("Run pip install for them now? [Y/n]: ").strip().lower()
    except EOFError:
        reply = ""
    hint = f"pip install {' '.join(needed)}"
    if reply not in ("", "y", "yes"):
        if needed:
            sys.exit(f"epivar cannot start without {', '.join(needed)}; try: {hint}")
        return
    if needed and not (_pip(needed) and not _absent(REQUIRED)):
        sys.exit(f"Installing {', '.join(needed)} failed; try: {hint}")
    if nice and not _pip(nice):
        print(f"({', '.join(nice)} not installed; output stays plain)")


if __name__ == "__main__":
    _ensure_dependencies()
    from epivar import cli
    sys.exit(cli.main(sys.argv[1:]))
