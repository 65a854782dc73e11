"""Command-line front-end (``epivar`` console script, or ``python epv.py``).

    epivar run <scenario> | --all [--seed N] [--parallel] [--quick] [--out report.json]
    epivar list
    epivar estimate     INSTANCE --direction 1,0 [--kind d|d2|d2s] [--v ...]
    epivar certify-cq   INSTANCE [--lam ...]
    epivar prox         INSTANCE --z 3,4 [--tau T]
    epivar prox-jac     INSTANCE --z 3,4 [--tau T]
    epivar equivalence  INSTANCE [--lam ...] [--tau T]
    epivar reduce       INSTANCE [--lam ...]
    epivar config [KEY [VALUE]]

INSTANCE is a JSON file holding a decomposable pair ({"support_set", "map",
"basepoint", "offset", "rho"}) and optionally "lam". Vectors on the command line
are comma-separated. Exit code 0 iff every executed check passed.
"""

import argparse
import json
import sys

import numpy as np

from . import config, decomp, epiquot, prox, reduction, scenarios, ui
from .cones import ConeError
from .decomp import DecompError, DecomposablePair
from .epiquot import QuotientError
from .prox import ProxError
from .reduction import ReductionError
from .scenarios import ScenarioError, jsonable
from .smoothmap import SmoothMapError

EXPECTED_ERRORS = (ScenarioError, DecompError, ProxError, ReductionError, ConeError,
                   SmoothMapError, QuotientError, OSError, ValueError, KeyError)


def _vector(text):
    try:
        return np.array([float(s) for s in text.split(",") if s.strip()])
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated vector: {text!r}") from None


def _load_instance(path):
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    return DecomposablePair.from_json(data), data.get("lam")


def _multiplier(pair, lam, data_lam):
    if lam is not None:
        return lam
    if data_lam is not None:
        return np.asarray(data_lam, dtype=float)
    return decomp.multipliers(pair, pair.xbar, np.zeros(pair.n))


def _emit(payload):
    print(json.dumps(jsonable(payload), indent=2))


# --- commands ------------------------------------------------------------------------
def cmd_run(args):
    if args.all:
        names = list(scenarios.SCENARIOS)
    elif args.scenario:
        names = [args.scenario]
    else:
        ui.err("name a scenario or pass --all (see `epivar list`)")
        return 2
    results = scenarios.run_many(names, args.seed, args.quick, args.parallel)
    for res in results:
        rows = [(c["name"], c["status"], _summary(c)) for c in res["checks"]]
        if res["status"] == "error":
            rows.append(("build", "error", res.get("error", "")))
        ui.check_table(f"{res['scenario']}  ({res['timing']['total']:.1f}s)", rows)
    ui.rule()
    report = scenarios.build_report(results)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2)
        ui.info(f"Report written to {args.out}")
    failed = [r["scenario"] for r in results if r["status"] != "pass"]
    if failed:
        ui.err(f"{len(failed)} of {len(results)} scenario(s) failed: {', '.join(failed)}")
        return 1
    ui.ok(f"All {len(results)} scenario(s) passed.")
    return 0


def _summary(check):
    detail = check["detail"]
    if check["status"] == "error":
        return detail.get("error", "")
    keys = [k for k in ("verdict", "mismatches", "violation", "max_error", "disagreements", "error")
            if k in detail]
    return ", ".join(f"{k}={detail[k]}" for k in keys[:2])


def cmd_list(args):
    for name, sc in scenarios.SCENARIOS.items():
        ui.info(f"  {name:<26} {sc.summary}")
    return 0


def _first_order(pair, h, seed):
    value = epiquot.subderivative_estimate(pair, pair.xbar, h, seed=seed)
    if np.isnan(value):
        verdict = "inconclusive"
    else:
        verdict = "divergent" if value == float("inf") else "finite"
    return {"kind": "d", "direction": h, "verdict": verdict, "value": value,
            "formula": epiquot.subderivative_formula(pair, h)}


def cmd_estimate(args):
    pair, _ = _load_instance(args.instance)
    if args.kind == "d":
        _emit(_first_order(pair, args.h, args.seed))
        return 0
    v = args.v if args.v is not None else np.zeros(pair.n)
    if args.kind == "d2s":
        est = epiquot.strict_second_subderivative_estimate(pair, v, args.h, seed=args.seed)
        est.pop("samples")
    else:
        est = epiquot.basic_second_subderivative_estimate(pair, v, args.h, seed=args.seed)
    try:
        est["formula"] = decomp.second_subderivative(pair, v, args.h)
    except DecompError as e:
        est["formula"] = None
        ui.warn(f"closed form unavailable: {e}")
    _emit(est)
    return 0


def cmd_certify(args):
    pair, data_lam = _load_instance(args.instance)
    lam = _multiplier(pair, args.lam, data_lam)
    rep = decomp.cq_report(pair, lam)
    _emit(rep)
    return 0 if rep["strict"]["verdict"] == "holds" else 1


def cmd_prox(args):
    pair, _ = _load_instance(args.instance)
    _emit(prox.prox(pair, args.tau or prox.default_tau(pair), args.z, verify=True))
    return 0


def cmd_prox_jac(args):
    pair, _ = _load_instance(args.instance)
    rep = prox.prox_jacobian_fd(pair, args.tau or prox.default_tau(pair), args.z)
    _emit(rep)
    return 0 if rep["violation"] == 0 else 1


def cmd_equivalence(args):
    pair, data_lam = _load_instance(args.instance)
    lam = _multiplier(pair, args.lam, data_lam)
    rep = prox.equivalence_suite(pair, lam, args.tau)
    _emit(rep)
    return 0 if rep["consistent"] else 1


def cmd_reduce(args):
    pair, data_lam = _load_instance(args.instance)
    lam = pair.q.require_member(_multiplier(pair, args.lam, data_lam))
    out = {"usotp": reduction.verify_usotp(pair.q, lam)}
    chart = reduction.chart_for(pair.q, lam)
    if chart is not None:
        out["chart"] = {"name": chart.name, "meta": chart.meta, "dim_k": chart.k.dim,
                        **reduction.chart_soundness(chart)}
    _emit(out)
    ok = out["usotp"]["verdict"] == "holds" and (chart is None or out["chart"]["disagreements"] == 0)
    return 0 if ok else 1


def cmd_config(args):
    if args.key is None:
        for k, v in config.settings().items():
            ui.info(f"  {k:<18} {v}")
        ui.info(f"  (file: {config.config_path()})")
        return 0
    if args.value is None:
        ui.info(f"{args.key} = {config.get(args.key)}")
        return 0
    value = json.loads(args.value) if args.value.strip() else None
    config.set_value(args.key, value)
    ui.ok(f"{args.key} = {config.get(args.key)}")
    return 0


# --- parser --------------------------------------------------------------------------
def build_parser():
    p = argparse.ArgumentParser(prog="epivar", description="Second-order variational checks "
                                "for decomposable functions.")
    p.add_argument("--log", choices=sorted(ui.LOG_LEVELS), help="log level (overrides EPIVAR_LOG)")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run registered scenarios")
    run.add_argument("scenario", nargs="?")
    run.add_argument("--all", action="store_true")
    run.add_argument("--seed", type=int)
    run.add_argument("--parallel", action="store_true", help="one worker process per scenario")
    run.add_argument("--quick", action="store_true", help="reduced sample counts")
    run.add_argument("--out", help="write the JSON report here")
    run.set_defaults(func=cmd_run)

    sub.add_parser("list", help="list scenarios").set_defaults(func=cmd_list)

    def instance_cmd(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("instance", help="JSON instance file")
        sp.set_defaults(func=func)
        return sp

    est = instance_cmd("estimate", cmd_estimate, "epi-quotient estimate along a direction")
    est.add_argument("--kind", choices=("d", "d2", "d2s"), default="d2",
                     help="subderivative, second subderivative or its strict version")
    est.add_argument("--direction", "--h", dest="h", type=_vector, required=True)
    est.add_argument("--v", type=_vector, help="subgradient (second-order kinds; default 0)")
    est.add_argument("--seed", type=int)

    cq = instance_cmd("certify-cq", cmd_certify, "Robinson / strict / nondegeneracy certificates")
    cq.add_argument("--lam", type=_vector)

    for name, func in (("prox", cmd_prox), ("prox-jac", cmd_prox_jac)):
        sp = instance_cmd(name, func, "proximal point" if name == "prox" else "FD prox Jacobian")
        sp.add_argument("--z", type=_vector, required=True)
        sp.add_argument("--tau", type=float)

    eq = instance_cmd("equivalence", cmd_equivalence, "strict complementarity equivalence suite")
    eq.add_argument("--lam", type=_vector)
    eq.add_argument("--tau", type=float)

    red = instance_cmd("reduce", cmd_reduce, "reduction chart and uniform tangent paths")
    red.add_argument("--lam", type=_vector)

    cfg = sub.add_parser("config", help="show or change settings")
    cfg.add_argument("key", nargs="?")
    cfg.add_argument("value", nargs="?", help="JSON value; empty string resets")
    cfg.set_defaults(func=cmd_config)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    ui.setup_logging(args.log)
    if args.command == "run":
        ui.banner()
    try:
        return args.func(args)
    except EXPECTED_ERRORS as e:
        ui.err(f"{type(e).__name__}: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
