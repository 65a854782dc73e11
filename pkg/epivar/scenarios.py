"""Scenario catalog and runner.

A Scenario builds one decomposable pair (plus multiplier, prox parameter and
anything else its checks need) and runs a list of Checks against it. Every
Check carries a provenance tag:

    published  a result stated in the literature for the worked example
    trivial    follows directly from the definitions
    derived    an independent oracle (closed form, rank check, sampling)

Checks are isolated: a crash becomes {"status": "error"} and the next check
still runs. Sample counts come from a budget ("full" or "quick"); the quick
budget keeps the same code paths with fewer directions and samples.

Public API:
    SCENARIOS                 name -> Scenario
    get(name)                 lookup, ScenarioError for unknown names
    run_scenario(name, ...)   one scenario report
    run_many(names, ...)      several, optionally in worker processes
    build_report(results)     the versioned report document
"""

import logging
import time
import traceback
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import psutil

from . import config, decomp, epiquot, linalg, prox, reduction
from .cones import INF
from .decomp import DecomposablePair
from .smoothmap import identity, norm_lift, saddle_demo
from .supportsets import (Box, EuclideanBall, Fantope, KyFanBall, MatrixInterval, PowerEpigraph,
                          SocSlice)

log = logging.getLogger(__name__)

SCHEMA = "epivar-report/1"
PROVENANCE = ("published", "trivial", "derived")

BUDGETS = {
    "full": {"directions": 12, "strict_count": 8, "radii": (1e-2, 1e-3, 1e-4), "perturbations": 16,
             "prox_points": 20, "moreau_points": 50, "chart_points": 200, "path_samples": 500,
             "usotp_samples": 8, "net_count": 4, "off_directions": 4},
    "quick": {"directions": 4, "strict_count": 3, "radii": (1e-2, 1e-3, 1e-4), "perturbations": 6,
              "prox_points": 4, "moreau_points": 5, "chart_points": 40, "path_samples": 60,
              "usotp_samples": 4, "net_count": 2, "off_directions": 2},
}


class ScenarioError(Exception):
    pass


class Check:
    def __init__(self, name, provenance, run):
        if provenance not in PROVENANCE:
            raise ScenarioError(f"check {name!r} has no provenance tag (got {provenance!r})")
        self.name = name
        self.provenance = provenance
        self.run = run


class Scenario:
    def __init__(self, name, summary, build, checks):
        self.name = name
        self.summary = summary
        self.build = build
        self.checks = checks

    def __repr__(self):
        return f"<Scenario {self.name} ({len(self.checks)} checks)>"


# --- shared helpers ------------------------------------------------------------------
def _tol(value):
    return max(1e-3, 1e-2 * abs(value))


def _ctx(pair, lam, tau=None, **extra):
    lam = pair.q.require_member(lam)
    vbar = pair.fmap.jacobian(pair.xbar).T @ lam
    tau = tau or prox.default_tau(pair)
    return {"pair": pair, "lam": lam, "vbar": vbar, "tau": tau,
            "zbar": pair.xbar + tau * vbar, **extra}


def _directions(n, count, rng):
    eye = np.eye(n)
    dirs = [eye[j] for j in range(n)] + [-eye[j] for j in range(n)]
    while len(dirs) < count:
        d = rng.standard_normal(n)
        dirs.append(d / np.linalg.norm(d))
    return dirs[:max(count, 1)]


def _strict_kw(ctx, budget):
    return {"radii": budget["radii"], "count": budget["strict_count"],
            "perturbations": budget["perturbations"], "seed": ctx["seed"],
            "kinds": ctx.get("kinds", ("face", "prox"))}


def _matches(formula, est):
    if formula == INF:
        return est["verdict"] == "divergent"
    return est["verdict"] == "finite" and abs(est["value"] - formula) <= _tol(formula)


# --- reusable checks -----------------------------------------------------------------
def check_cq(ctx, budget, rng):
    rep = decomp.cq_report(ctx["pair"], ctx["lam"])
    verdicts = {k: rep[k]["verdict"] for k in ("robinson", "strict", "nondegeneracy")}
    ok = rep["strict"]["verdict"] == "holds" and rep["consistent"]
    return ok, {**verdicts, "ri_multiplier": rep["ri_multiplier"]}


def check_basic_formula(ctx, budget, rng):
    """Closed-form d2 phi against the quotient estimator; classification must match exactly."""
    pair, rows = ctx["pair"], []
    for h in _directions(pair.n, budget["directions"], rng):
        formula = decomp.second_subderivative(pair, ctx["vbar"], h)
        est = epiquot.basic_second_subderivative_estimate(
            pair, ctx["vbar"], h, perturbations=budget["perturbations"], seed=ctx["seed"])
        rows.append({"h": h, "formula": formula, "verdict": est["verdict"], "value": est["value"],
                     "match": _matches(formula, est)})
    bad = sum(not r["match"] for r in rows)
    return bad == 0, {"directions": len(rows), "mismatches": bad, "rows": rows}


def check_strict_formula(ctx, budget, rng):
    """Strict estimator equals <lam, D2F[h,h]> on aff C and diverges off it."""
    pair, lam = ctx["pair"], ctx["lam"]
    aff = decomp.critical_affine_hull(pair, lam)
    inside = [aff[:, j] for j in range(min(aff.shape[1], 3))]
    outside = []
    if aff.shape[1] < pair.n:
        perp = linalg.complement(aff, pair.n)
        while len(outside) < budget["off_directions"]:
            d = perp @ rng.standard_normal(perp.shape[1])
            outside.append(d / np.linalg.norm(d))
    rows = []
    for h in inside + outside:
        formula = decomp.strict_second_subderivative_formula(pair, lam, h)
        est = epiquot.strict_second_subderivative_estimate(pair, ctx["vbar"], h, **_strict_kw(ctx, budget))
        rows.append({"h": h, "formula": formula, "verdict": est["verdict"], "value": est["value"],
                     "match": _matches(formula, est)})
    bad = sum(not r["match"] for r in rows)
    return bad == 0, {"inside": len(inside), "outside": len(outside), "mismatches": bad, "rows": rows}


def check_prox_bounds(ctx, budget, rng):
    pair, worst, eig_range = ctx["pair"], 0.0, [INF, -INF]
    for _ in range(budget["prox_points"]):
        z = ctx["zbar"] + rng.standard_normal(pair.n)
        rep = prox.prox_jacobian_fd(pair, ctx["tau"], z)
        worst = max(worst, rep["violation"])
        eig_range = [min(eig_range[0], rep["eigenvalues"][0]), max(eig_range[1], rep["eigenvalues"][-1])]
    return worst == 0.0, {"points": budget["prox_points"], "violation": worst,
                          "eigenvalue_range": eig_range}


def check_moreau_gradient(ctx, budget, rng):
    pair = ctx["pair"]
    errs = [prox.moreau_gradient_check(pair, ctx["tau"], ctx["zbar"] + rng.standard_normal(pair.n))
            for _ in range(budget["moreau_points"])]
    return max(errs) <= 1e-6, {"points": len(errs), "max_error": max(errs)}


def equivalence_check(expected):
    def run(ctx, budget, rng):
        pair = ctx["pair"]
        dirs = _directions(pair.n, min(budget["directions"], 2 * pair.n), rng)
        kw = {"basic": {"perturbations": budget["perturbations"], "seed": ctx["seed"]},
              "strict": _strict_kw(ctx, budget)}
        suite = prox.equivalence_suite(pair, ctx["lam"], ctx["tau"], directions=dirs,
                                       net_count=budget["net_count"], estimate_kw=kw, rng=rng)
        tested = {k: v["value"] for k, v in suite["items"].items() if v["value"] is not None}
        ok = suite["consistent"] and all(bool(v) == expected for v in tested.values())
        return ok, {"items": tested, "expected": expected}
    return run


def check_chart(ctx, budget, rng):
    chart = reduction.chart_for(ctx["pair"].q, ctx["lam"])
    rep = reduction.chart_soundness(chart, count=budget["chart_points"], rng=rng)
    ok = rep["disagreements"] == 0 and rep["rank_margin"] > 1e-8
    return ok, {"chart": chart.name, **rep, "meta": chart.meta}


def check_usotp(ctx, budget, rng):
    rep = reduction.verify_usotp(ctx["pair"].q, ctx["lam"], radii=budget["radii"],
                                 samples=budget["usotp_samples"], rng=rng)
    return rep["verdict"] == "holds" and rep["uniform"], {
        k: rep[k] for k in ("verdict", "method", "delta", "M", "per_radius", "uniform")}


def check_cone_indicator(ctx, budget, rng):
    q = ctx["pair"].q
    rep = epiquot.strict_subderivative_of_support_is_cone_indicator(
        q, ctx["lam"], radii=budget["radii"], count=budget["strict_count"],
        perturbations=budget["perturbations"], seed=ctx["seed"])
    classes = [r["class"] for r in rep["rows"]]
    return rep["ok"] and "inconclusive" not in classes, {"classes": classes}


def check_path_inequality(ctx, budget, rng):
    rep = epiquot.path_inequality_sweep(ctx["pair"].q, ctx["lam"], count=budget["path_samples"],
                                        rng=rng)
    return rep["violations"] == 0 and rep["samples"] > 0, rep


def _convex_suite(basic=True):
    checks = [Check("cq", "derived", check_cq)]
    if basic:
        checks.append(Check("basic-formula", "derived", check_basic_formula))
    return checks + [Check("prox-jacobian-bounds", "published", check_prox_bounds),
                     Check("moreau-gradient", "published", check_moreau_gradient)]


def _chart_suite():
    return [Check("chart-soundness", "derived", check_chart),
            Check("usotp", "derived", check_usotp),
            Check("strict-formula", "published", check_strict_formula)]


# --- scenario-specific checks --------------------------------------------------------
COUNTER_KS = (10, 100, 1000, 10000)


def check_counter_sequence(ctx, budget, rng):
    rep = epiquot.counterexample_sequence_report(ks=(1, 10, 100, 1000, 20001))
    closed = all(abs(r["hessian_norm"] - r["closed_form"]) <= 1e-9 * r["closed_form"] for r in rep["rows"])
    last = rep["rows"][-1]["hessian_norm"]
    return rep["monotone"] and closed and last < 1e-4, {
        "norms": [r["hessian_norm"] for r in rep["rows"]], "closed_form_match": closed,
        "upper_bound": rep["upper_bound"]}


def check_counter_strict(ctx, budget, rng):
    """Strict estimate 0 in every direction once the admitted sequence joins the sampled points."""
    pair, q = ctx["pair"], ctx["pair"].q
    xs = [np.array([float(k) ** -3, -1.0 / k]) for k in COUNTER_KS]
    points = epiquot.admit_sequence(pair, xs, [q.support_gradient(x) for x in xs])
    count = max(8, budget["directions"] - 4)
    angles = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
    values = []
    for a in angles:
        est = epiquot.strict_second_subderivative_estimate(
            pair, ctx["vbar"], np.array([np.cos(a), np.sin(a)]), points=points, **_strict_kw(ctx, budget))
        values.append(est["value"] if est["verdict"] == "finite" else est["verdict"])
    ok = all(not isinstance(v, str) and abs(v) <= 1e-3 for v in values)
    return ok, {"directions": count, "values": values}


def check_counter_refused(ctx, budget, rng):
    try:
        decomp.strict_second_subderivative_formula(ctx["pair"], ctx["lam"], np.array([1.0, 0.0]))
    except decomp.UsotpNotEstablished as e:
        return True, {"refused": str(e)}
    return False, {"refused": None}


def check_counter_witness(ctx, budget, rng):
    rep = reduction.verify_usotp(ctx["pair"].q, ctx["lam"], radii=budget["radii"],
                                 samples=budget["usotp_samples"], rng=rng)
    wit = rep["witness"]
    ok = rep["verdict"] == "fails" and wit is not None and abs(wit["direction"][0]) >= 0.9
    return ok, {"verdict": rep["verdict"], "per_radius": rep["per_radius"],
                "direction": wit["direction"] if wit else None}


def check_strict_saddle(ctx, budget, rng):
    rep = decomp.is_strict_saddle(ctx["pair"])
    wit = rep["witness"]
    ok = (rep["verdict"] == "strict-saddle" and abs(rep["min_eigenvalue"] + 2.0) <= 1e-6
          and abs(wit @ np.array([0.0, 1.0])) >= 1 - 1e-6)
    return ok, {"verdict": rep["verdict"], "min_eigenvalue": rep["min_eigenvalue"], "witness": wit}


def smr_check(verdict, mu):
    def run(ctx, budget, rng):
        rep = decomp.strong_metric_regularity_certificate(ctx["pair"], ctx["lam"],
                                                          growth_samples=budget["strict_count"],
                                                          seed=ctx["seed"])
        ok = rep["verdict"] == verdict and abs(rep["mu"] - mu) <= 1e-6
        if verdict == "SMR" and rep["growth_modulus"] is not None:
            ok = ok and rep["growth_modulus"] > 0
        return ok, rep
    return run


def check_jacobian_limit(ctx, budget, rng):
    rep = prox.jacobian_limit_formula(ctx["pair"], ctx["lam"], ctx["tau"])
    return rep["differentiable"] and rep["error"] <= 1e-4, rep


def prox_value_check(tau, z, expected):
    def run(ctx, budget, rng):
        p = prox.prox_point(ctx["pair"], tau, z)
        err = float(np.abs(p - np.asarray(expected, dtype=float)).max())
        return err <= 1e-8, {"p": p, "error": err}
    return run


def check_envelope_probe(ctx, budget, rng):
    grid = np.linspace(-2.0, 2.0, 9)
    tau = ctx["tau"]
    quad = [lambda y, k=k: k * float(y @ y) for k in (1.0, 10.0, 100.0)]
    to_point = prox.envelope_convergence_probe(quad, None, tau, grid,
                                               limit_envelope=lambda x: float(x @ x) / (2 * tau))
    to_abs = prox.envelope_convergence_probe(
        [lambda y, k=k: float(np.abs(y).sum() + (y @ y) / k) for k in (1.0, 10.0, 100.0)],
        lambda y: float(np.abs(y).sum()), tau, grid)
    ok = to_point["verdict"] == "converging" and to_abs["verdict"] == "converging"
    return ok, {"indicator_limit": to_point["gaps"], "abs_limit": to_abs["gaps"]}


def check_conjugate_identity(ctx, budget, rng):
    rep = prox.conjugate_envelope_check(ctx["pair"], ctx["tau"], [-2.0, -0.5, 0.3, 1.5])
    return rep["ok"], rep


# --- builders ------------------------------------------------------------------------
def _counterexample():
    pair = DecomposablePair(PowerEpigraph(), identity(2), np.zeros(2), name="counterexample")
    return _ctx(pair, np.zeros(2), kinds=("prox",))


def _saddle():
    pair = DecomposablePair(Box([1.0, -1.0], [1.0, 1.0]), saddle_demo(), np.zeros(2), rho=2.0,
                            name="saddle-demo")
    return _ctx(pair, [1.0, 0.0], tau=0.25)


def _l1_interior():
    xbar = np.array([1.0, 0.0])
    pair = DecomposablePair(Box([1.0, -1.0], [1.0, 1.0]), identity(2, xbar), xbar, offset=1.0,
                            name="l1-interior")
    return _ctx(pair, [1.0, 0.0])


def _l1_boundary():
    pair = DecomposablePair(Box([-1.0, -1.0], [1.0, 1.0]), identity(2), np.zeros(2), name="l1-boundary")
    return _ctx(pair, [1.0, 0.0])


def _euclid():
    pair = DecomposablePair(EuclideanBall(np.zeros(2), 1.0), identity(2), np.zeros(2), name="euclid-norm")
    return _ctx(pair, [0.5, 0.0])


def _soc(a, b, lam, name):
    def build():
        pair = DecomposablePair(SocSlice(a, b), identity(4), np.zeros(4), name=name)
        return _ctx(pair, lam)
    return build


def _interval(diag, name):
    def build():
        q = MatrixInterval(np.zeros((3, 3)), np.eye(3))
        pair = DecomposablePair(q, identity(q.dim), np.zeros(q.dim), name=name)
        return _ctx(pair, linalg.svec(np.diag(diag)))
    return build


def _kyfan_case1():
    q = Fantope(3, 1)
    pair = DecomposablePair(q, identity(q.dim), np.zeros(q.dim), name="kyfan-case1")
    return _ctx(pair, linalg.svec(np.diag([1.0, 0.0, 0.0])))


def _kyfan_case2():
    q = KyFanBall(3, 3, 2)
    pair = DecomposablePair(q, identity(q.dim), np.zeros(q.dim), name="kyfan-case2")
    return _ctx(pair, np.diag([1.0, 1.0, 0.0]).ravel())


def _envelope():
    pair = DecomposablePair(Box([-1.0], [1.0]), identity(1), np.zeros(1), name="envelope-probe")
    return _ctx(pair, [0.0], tau=1.0)


def _smr_composite():
    pair = DecomposablePair(Box([-1.0, -1.0, 1.0], [1.0, 1.0, 1.0]), norm_lift(2), np.zeros(2),
                            name="smr-composite")
    return _ctx(pair, [1.0, 1.0, 1.0])


_FACE = [Check("usotp", "trivial", check_usotp), Check("strict-formula", "published", check_strict_formula)]

SCENARIOS = {s.name: s for s in [
    Scenario("counterexample", "sigma_C with C = {x2 >= (2/3)|x1|^(3/2)}: no uniform tangent paths",
             _counterexample, [
                 Check("sequence-hessian-decay", "derived", check_counter_sequence),
                 Check("strict-estimate-zero", "published", check_counter_strict),
                 Check("strict-formula-refused", "published", check_counter_refused),
                 Check("usotp-counter-witness", "published", check_counter_witness)]),
    Scenario("saddle-demo", "sigma_Q(x1^2 - x2^2, x1), Q = {1} x [-1, 1]: strict saddle at 0",
             _saddle, _convex_suite() + _FACE + [
                 Check("strict-saddle", "derived", check_strict_saddle),
                 Check("smr", "derived", smr_check("not SMR", -2.0)),
                 Check("jacobian-limit", "derived", check_jacobian_limit),
                 Check("equivalence", "published", equivalence_check(True))]),
    Scenario("l1-interior", "|x|_1 at (1, 0) with v = (1, 0): strict complementarity",
             _l1_interior, _convex_suite() + _FACE + [
                 Check("cone-indicator", "published", check_cone_indicator),
                 Check("equivalence", "published", equivalence_check(True))]),
    Scenario("l1-boundary", "|x|_1 at 0 with v = (1, 0): complementarity fails",
             _l1_boundary, _convex_suite() + _FACE + [
                 Check("cone-indicator", "published", check_cone_indicator),
                 Check("path-inequality", "derived", check_path_inequality),
                 Check("equivalence", "trivial", equivalence_check(False))]),
    Scenario("euclid-norm", "|x|_2 at 0 with v = (1/2, 0)",
             _euclid, _convex_suite() + _chart_suite() + [
                 Check("cone-indicator", "derived", check_cone_indicator),
                 Check("prox-value", "trivial", prox_value_check(1.0, [3.0, 4.0], [2.4, 3.2])),
                 Check("equivalence", "published", equivalence_check(True))]),
    Scenario("soc-slice-interior", "SOC slice {x0 = 1}, multiplier on the axis",
             _soc([[1.0, 0.0, 0.0, 0.0]], [1.0], [1.0, 0.0, 0.0, 0.0], "soc-slice-interior"),
             _convex_suite() + _chart_suite()),
    Scenario("soc-slice-boundary", "SOC slice {x0 = 1}, multiplier on the cone boundary",
             _soc([[1.0, 0.0, 0.0, 0.0]], [1.0], [1.0, 1.0, 0.0, 0.0], "soc-slice-boundary"),
             _convex_suite() + _chart_suite()),
    Scenario("soc-slice-apex", "SOC slice {x1 = 0} through the interior, multiplier at the apex",
             _soc([[0.0, 1.0, 0.0, 0.0]], [0.0], [0.0, 0.0, 0.0, 0.0], "soc-slice-apex"),
             _convex_suite() + _chart_suite()),
    Scenario("matrix-interval-interior", "[0, I] in S^3 at I/2",
             _interval([0.5, 0.5, 0.5], "matrix-interval-interior"), _convex_suite() + _chart_suite()),
    Scenario("matrix-interval-face", "[0, I] in S^3 at diag(1/2, 1/2, 0)",
             _interval([0.5, 0.5, 0.0], "matrix-interval-face"), _convex_suite() + _chart_suite() + [
                 Check("path-inequality", "derived", check_path_inequality)]),
    Scenario("matrix-interval-corner", "[0, I] in S^3 at diag(1, 0, 0)",
             _interval([1.0, 0.0, 0.0], "matrix-interval-corner"), _convex_suite() + _chart_suite()),
    Scenario("kyfan-case1", "Fantope {0 <= B <= I, tr B = 1} in S^3 at diag(1, 0, 0)",
             _kyfan_case1, _convex_suite() + _chart_suite()),
    Scenario("kyfan-case2", "Ky Fan 2-norm ball in R^(3x3) at diag(1, 1, 0)",
             _kyfan_case2, _convex_suite() + _chart_suite() + [
                 Check("prox-value", "derived", prox_value_check(
                     1.0, np.diag([3.0, 2.0, 1.0]).ravel(), np.diag([2.0, 1.0, 1.0]).ravel()))]),
    Scenario("envelope-probe", "envelope convergence and the conjugate identity for |x|",
             _envelope, [
                 Check("envelope-convergence", "published", check_envelope_probe),
                 Check("conjugate-identity", "published", check_conjugate_identity),
                 Check("moreau-gradient", "published", check_moreau_gradient)]),
    Scenario("smr-composite", "|x1| + |x2| + |x|^2 at 0 with v = (1, 1): strongly metrically regular",
             _smr_composite, [
                 Check("cq", "derived", check_cq),
                 Check("smr", "derived", smr_check("SMR", 2.0))] + _FACE),
]}


def get(name):
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ScenarioError(f"unknown scenario: {name!r} (known: {', '.join(SCENARIOS)})") from None


# --- runner --------------------------------------------------------------------------
def run_scenario(name, seed=None, quick=False):
    """Run every check of one scenario; crashes are recorded per check."""
    scenario = get(name)
    seed = config.get("seed") if seed is None else int(seed)
    budget = BUDGETS["quick" if quick else "full"]
    started = time.perf_counter()
    out = {"scenario": name, "summary": scenario.summary, "seed": seed,
           "budget": "quick" if quick else "full", "checks": []}
    try:
        ctx = scenario.build()
    except Exception as e:
        log.debug("building %s failed:\n%s", name, traceback.format_exc())
        out.update(status="error", error=f"{type(e).__name__}: {e}",
                   timing={"total": time.perf_counter() - started})
        return out
    ctx["seed"] = seed
    timing = {}
    for i, check in enumerate(scenario.checks):
        rng = np.random.default_rng([seed, i])
        t0 = time.perf_counter()
        try:
            ok, detail = check.run(ctx, budget, rng)
            status = "pass" if ok else "fail"
        except Exception as e:
            status, detail = "error", {"error": f"{type(e).__name__}: {e}"}
            log.debug("%s/%s crashed:\n%s", name, check.name, traceback.format_exc())
        timing[check.name] = time.perf_counter() - t0
        log.info("%s / %s: %s", name, check.name, status)
        out["checks"].append({"name": check.name, "provenance": check.provenance,
                              "status": status, "detail": detail})
    out["status"] = "pass" if all(c["status"] == "pass" for c in out["checks"]) else "fail"
    out["timing"] = {"checks": timing, "total": time.perf_counter() - started}
    return out


def _worker_count(jobs):
    cores = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
    return max(1, min(cores, jobs))


def run_many(names, seed=None, quick=False, parallel=False):
    """Reports in the order of ``names``; parallel runs use one process per scenario."""
    names = list(names)
    for n in names:
        get(n)
    if not parallel or len(names) < 2:
        return [run_scenario(n, seed, quick) for n in names]
    with ProcessPoolExecutor(max_workers=_worker_count(len(names))) as pool:
        return list(pool.map(run_scenario, names, [seed] * len(names), [quick] * len(names)))


def jsonable(obj):
    """Plain JSON types: arrays become lists, inf becomes "inf", nan becomes null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if np.isnan(x):
            return None
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.17g}")
    return obj


def build_report(results):
    seeds = sorted({r["seed"] for r in results})
    return jsonable({"schema": SCHEMA, "seed": seeds[0] if len(seeds) == 1 else seeds,
                     "passed": all(r["status"] == "pass" for r in results),
                     "scenarios": results})
