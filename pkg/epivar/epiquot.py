"""Difference quotients and the liminf estimators built on them.

    first_quotient / second_quotient         the raw quotients at one t
    classify_trend(values, per_decade)       finite / divergent / inconclusive
    subderivative_estimate                   d phi(x)(h)
    basic_second_subderivative_estimate      d2 phi(xbar|vbar)(h)
    strict_second_subderivative_estimate     d2_s phi(xbar|vbar)(h)
    graph_sampler                            graph points of the subdifferential near (xbar, vbar)

A quotient curve holds, for every t of the grid, the minimum over the
perturbation net {h} u {h + t u_i}; the curve is then classified:

    finite(value)  spread over the two smallest decades <= max(1e-3, 1e-2 |value|)
    finite(0)      nonnegative values shrinking >= 5x per decade over the last 3 decades
    divergent      values growing >= 5x per decade over the last 3 decades (+inf counts)
    inconclusive   anything else

Estimates are dicts carrying the grid, the curve and the minimizing sample.
"""

import logging

import numpy as np
from scipy.optimize import least_squares

from . import config
from .cones import INF, UnsupportedVariant
from .decomp import DecompError, DecomposablePair, evaluate, graph_point, multipliers
from .prox import ProxError, default_tau, prox
from .smoothmap import identity
from .supportsets import PowerEpigraph

log = logging.getLogger(__name__)

GROWTH = 5.0
TREND_DECADES = 3
STRICT_DECADES = 3


class QuotientError(Exception):
    pass


class HypothesisError(QuotientError):
    pass


# --- quotients -----------------------------------------------------------------------
def first_quotient(pair, x, h, t, base=None):
    base = evaluate(pair, x) if base is None else base
    if not np.isfinite(base):
        raise QuotientError("phi(x) is +inf")
    return (evaluate(pair, np.asarray(x) + t * np.asarray(h)) - base) / t


def second_quotient(pair, x, v, h, t, base=None):
    """(phi(x + t h) - phi(x) - t <v, h>) / (t^2 / 2)."""
    if not t > 0:
        raise QuotientError(f"t must be positive, got {t}")
    x, v, h = (np.asarray(a, dtype=float).ravel() for a in (x, v, h))
    base = evaluate(pair, x) if base is None else base
    if not np.isfinite(base):
        raise QuotientError("phi(x) is +inf")
    return (evaluate(pair, x + t * h) - base - t * (v @ h)) / (0.5 * t * t)


def perturbation_units(n, count, rng):
    """count points uniform in the unit ball of R^n."""
    g = rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.uniform(0, 1, (count, 1)) ** (1.0 / n)


def quotient_curve(quotient, h, grid, units):
    """Per-t minimum of quotient(h', t) over h' in {h} u {h + t u}; returns (curve, argmins)."""
    curve, argmins = [], []
    for t in grid:
        best, arg = INF, h
        for hp in [h] + [h + t * u for u in units]:
            val = quotient(hp, t)
            if val < best:
                best, arg = val, hp
        curve.append(best)
        argmins.append(arg)
    return np.array(curve), argmins


def _marks(values, per_decade, decades):
    step = int(per_decade)
    idx = [len(values) - 1 - k * step for k in range(decades, -1, -1)]
    if idx[0] < 0:
        return None
    return values[idx]


def classify_trend(values, per_decade):
    """(verdict, value) for a quotient curve ordered from large to small t."""
    values = np.asarray(values, dtype=float)
    tail = values[-(2 * int(per_decade) + 1):]
    if np.all(np.isfinite(tail)):
        value = float(tail.min())
        if tail.max() - value <= max(1e-3, 1e-2 * abs(value)):
            return "finite", value
    marks = _marks(values, per_decade, TREND_DECADES)
    if marks is None:
        return "inconclusive", None
    pairs = list(zip(marks[:-1], marks[1:]))
    if all(b == INF or (a > 0 and b >= GROWTH * a) for a, b in pairs):
        return "divergent", INF
    if np.all(np.isfinite(marks)) and np.all(marks >= 0) and all(a >= GROWTH * b for a, b in pairs):
        return "finite", 0.0
    return "inconclusive", None


def _units(n, count, seed):
    return perturbation_units(n, count, np.random.default_rng(seed))


def _settings(perturbations, seed):
    cfg = config.settings()
    return (cfg["perturbations"] if perturbations is None else perturbations,
            cfg["seed"] if seed is None else seed, cfg)


def subderivative_estimate(pair, x, h, grid=None, perturbations=None, seed=None):
    """liminf of (phi(x + t h') - phi(x)) / t; +inf for a divergent trend, nan if inconclusive."""
    perturbations, seed, cfg = _settings(perturbations, seed)
    grid = config.t_grid(cfg) if grid is None else np.asarray(grid)
    x = np.asarray(x, dtype=float).ravel()
    h = np.asarray(h, dtype=float).ravel()
    base = evaluate(pair, x)
    curve, _ = quotient_curve(lambda hp, t: first_quotient(pair, x, hp, t, base), h, grid,
                              _units(pair.n, perturbations, seed))
    verdict, value = classify_trend(curve, cfg["t_per_decade"])
    if verdict == "inconclusive":
        log.warning("subderivative trend inconclusive along %s", h)
        return float("nan")
    return value


def subderivative_formula(pair, h):
    """d phi(xbar)(h) = sigma_Q(DF(xbar) h)."""
    return pair.q.support(pair.fmap.jacobian(pair.xbar) @ np.asarray(h, dtype=float))


def _estimate_at(pair, x, v, h, grid, units, per_decade):
    base = evaluate(pair, x)
    curve, argmins = quotient_curve(lambda hp, t: second_quotient(pair, x, v, hp, t, base),
                                    h, grid, units)
    verdict, value = classify_trend(curve, per_decade)
    i = int(np.argmin(curve))
    return {"direction": h, "grid": np.asarray(grid), "curve": curve, "verdict": verdict,
            "value": value, "argmin": {"t": float(grid[i]), "h": argmins[i]}}


def basic_second_subderivative_estimate(pair, vbar, h, x=None, grid=None, perturbations=None,
                                        seed=None):
    perturbations, seed, cfg = _settings(perturbations, seed)
    grid = config.t_grid(cfg) if grid is None else np.asarray(grid)
    x = pair.xbar if x is None else np.asarray(x, dtype=float).ravel()
    h = np.asarray(h, dtype=float).ravel()
    est = _estimate_at(pair, x, np.asarray(vbar, dtype=float).ravel(), h, grid,
                       _units(pair.n, perturbations, seed), cfg["t_per_decade"])
    est["kind"] = "d2"
    est["net"] = perturbations
    return est


# --- graph samplers ------------------------------------------------------------------
def _solve_value(fmap, w, xbar, radius, rng):
    """x near xbar with F(x) = w, or None."""
    if fmap.shift is not None:
        return fmap.shift + w
    start = xbar + 0.1 * radius * rng.standard_normal(fmap.n)
    res = least_squares(lambda x: fmap.value(x) - w, start, jac=fmap.jacobian,
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
    if np.linalg.norm(fmap.value(res.x) - w) > 1e-10 or np.linalg.norm(res.x - xbar) > 10 * radius:
        return None
    return res.x


def _face_points(pair, vbar, radius, count, rng):
    """Points with F(x) in ri N_Q(lam), lam the multiplier at (xbar, vbar); then v = DF(x)^T lam."""
    lam = multipliers(pair, pair.xbar, vbar)
    normal = pair.q.normal_cone(lam)
    out = []
    for _ in range(count):
        try:
            w = sum(normal.project(rng.standard_normal(pair.m)) for _ in range(2 * pair.m))
        except UnsupportedVariant as e:
            log.debug("face sampler unavailable (%s); prox sampler only", e)
            return out
        size = np.linalg.norm(w)
        if size <= 1e-14:
            break
        w *= radius * rng.uniform(0.5, 1.0) / size
        x = _solve_value(pair.fmap, w, pair.xbar, radius, rng)
        if x is None:
            continue
        try:
            out.append(graph_point(pair, x, pair.fmap.jacobian(x).T @ lam, lam))
        except DecompError as e:
            log.debug("face sample rejected: %s", e)
    return out


def _prox_points(pair, vbar, radius, count, rng):
    tau = default_tau(pair)
    zbar = pair.xbar + tau * np.asarray(vbar, dtype=float)
    out = []
    for _ in range(count):
        u = rng.standard_normal(pair.n)
        z = zbar + radius * rng.uniform(0.1, 1.0) * u / np.linalg.norm(u)
        try:
            res = prox(pair, tau, z)
            out.append(graph_point(pair, res["p"], res["v"]))
        except (DecompError, ProxError) as e:
            log.debug("prox sample rejected: %s", e)
    return out


def graph_sampler(pair, vbar, radius, count, rng=None, kinds=("face", "prox")):
    """Graph points (x, v, lam) of the subdifferential near (xbar, vbar), up to count per sampler."""
    rng = rng or np.random.default_rng(config.get("seed"))
    points = []
    if "face" in kinds:
        points += _face_points(pair, vbar, radius, count, rng)
    if "prox" in kinds:
        points += _prox_points(pair, vbar, radius, count, rng)
    log.debug("graph sampler at radius %.1e: %d points", radius, len(points))
    return points


def admit_sequence(pair, xs, vs, lams=None):
    """Validate a user-supplied graph sequence; each entry becomes a graph point dict."""
    lams = lams if lams is not None else [None] * len(xs)
    return [graph_point(pair, x, v, lam) for x, v, lam in zip(xs, vs, lams)]


# --- strict estimator ----------------------------------------------------------------
def _blows_up(minima):
    if len(minima) < 2 or not minima[0] > 0:
        return False
    return all(b == INF or b >= GROWTH * a for a, b in zip(minima, minima[1:]))


def strict_second_subderivative_estimate(pair, vbar, h, radii=None, count=None, kinds=("face", "prox"),
                                         perturbations=None, seed=None, points=None):
    """liminf of second quotients over graph points approaching (xbar, vbar).

    Every sample at nominal radius r is classified on the grid r * [1e-1, 1e-4];
    ``points`` may supply extra graph points (e.g. an admitted sequence); a finite
    value along them overrides a blow-up of the sampled radius minima. Samples do not
    enforce phi(x) -> phi(xbar); the report names that assumption under ``assumes``.
    """
    perturbations, seed, cfg = _settings(perturbations, seed)
    radii = cfg["sampler_radii"] if radii is None else radii
    count = cfg["sampler_count"] if count is None else count
    per = cfg["t_per_decade"]
    vbar = np.asarray(vbar, dtype=float).ravel()
    h = np.asarray(h, dtype=float).ravel()
    base = basic_second_subderivative_estimate(pair, vbar, h, perturbations=perturbations, seed=seed)
    units = _units(pair.n, perturbations, seed)
    unit_grid = np.geomspace(1e-1, 10.0 ** -(1 + STRICT_DECADES), STRICT_DECADES * per + 1)
    rng = np.random.default_rng(seed)
    finite = [base["value"]] if base["verdict"] == "finite" else []
    supplied = []
    verdicts = {base["verdict"]}
    samples, minima = [], []
    batches = [(r, graph_sampler(pair, vbar, r, count, rng, kinds)) for r in radii]
    if points:
        batches.append((None, list(points)))
    for r, pts in batches:
        best = INF
        for pt in pts:
            scale = r if r is not None else max(np.linalg.norm(pt["x"] - pair.xbar), 1e-12)
            est = _estimate_at(pair, pt["x"], pt["v"], h, scale * unit_grid, units, per)
            verdicts.add(est["verdict"])
            samples.append({"radius": r, "x": pt["x"], "v": pt["v"], "verdict": est["verdict"],
                            "value": est["value"]})
            if est["verdict"] == "finite":
                finite.append(est["value"])
                best = min(best, est["value"])
                if r is None:
                    supplied.append(est["value"])
        if r is not None:
            minima.append(best)
    if not finite:
        verdict = "divergent" if "divergent" in verdicts else "inconclusive"
        value = INF if verdict == "divergent" else None
    elif base["verdict"] != "finite" and not supplied and _blows_up(minima):
        verdict, value = "divergent", INF
    else:
        verdict, value = "finite", float(min(finite))
    return {"kind": "d2s", "direction": h, "verdict": verdict, "value": value, "basic": base,
            "radius_minima": minima, "samples": samples, "net": perturbations,
            "assumes": "subdifferential-continuity"}


# --- support-function checks ---------------------------------------------------------
def support_quotient_lower_bound_check(q, x, lam, w, v, delta, m_const, t, tol=1e-9):
    """Second quotient of sigma_Q at x for lam along w against <v,w> min{delta/t, <v,w>/(M|x+tw|)}."""
    x, lam, w, v = (np.asarray(a, dtype=float).ravel() for a in (x, lam, w, v))
    vw = float(v @ w)
    if not vw > 0:
        raise HypothesisError("need <v, w> > 0")
    if abs(v @ x) > 1e-10 * (1 + np.linalg.norm(x)):
        raise HypothesisError("need <v, x> = 0")
    level = q.support(x)
    if not q.contains(lam, 1e-9) or abs(level - lam @ x) > 1e-9 * (1 + abs(level)):
        raise HypothesisError("lam is not in the face of Q at x")
    if not (t > 0 and delta > 0 and m_const >= 0):
        raise HypothesisError("need t > 0, delta > 0, M >= 0")
    quotient = (q.support(x + t * w) - level - t * (lam @ w)) / (0.5 * t * t)
    reach = np.linalg.norm(x + t * w)
    second = INF if m_const == 0 or reach == 0 else vw / (m_const * reach)
    bound = vw * min(delta / t, second)
    return bool(quotient >= bound - tol * (1 + abs(bound)))


def path_inequality_sweep(q, lbar, count=500, radius=1e-2, rng=None):
    """Sample (x, lam, w, t) near lbar and count violations of the support-quotient lower bound.

    lam = Pi_Q(lbar + r u), x in N_Q(lam), v in the path subspace at lam (made orthogonal
    to x), w random with <v, w> > 0, t in delta * [1e-3, 1]; delta and M come from
    verify_usotp.
    """
    from .reduction import _lin_tangent, chart_for, usotp_subspace, verify_usotp

    rng = rng or np.random.default_rng(config.get("seed"))
    report = verify_usotp(q, lbar, rng=rng)
    if report["verdict"] != "holds":
        raise HypothesisError(f"no uniform tangent paths at {lbar}")
    delta, m_const = min(report["delta"], 1.0), report["M"]
    chart = chart_for(q, lbar) if report["method"] == "chart" else None
    fixed = _lin_tangent(q, lbar) if report["method"] == "face" else None
    ts = delta * np.geomspace(1.0, 1e-3, 4)
    done = violations = skipped = 0
    while done < count and skipped < 10 * count:
        u = rng.standard_normal(q.dim)
        lam = q.project(lbar + radius * rng.uniform(0.1, 1.0) * u / np.linalg.norm(u))
        if chart is not None:
            basis = usotp_subspace(chart, lam)
        elif fixed is not None:
            basis = fixed
        else:
            basis = _lin_tangent(q, lam)
        x = q.normal_cone(lam).project(rng.standard_normal(q.dim))
        if not basis.shape[1]:
            skipped += 1
            continue
        v = basis @ rng.standard_normal(basis.shape[1])
        if x @ x > 0:
            v -= (v @ x) / (x @ x) * x
        w = rng.standard_normal(q.dim)
        if np.linalg.norm(v) < 1e-12 or abs(v @ w) < 1e-8:
            skipped += 1
            continue
        v /= np.linalg.norm(v)
        if v @ w < 0:
            v = -v
        t = float(rng.choice(ts))
        try:
            ok = support_quotient_lower_bound_check(q, x, lam, w, v, delta, m_const, t)
        except HypothesisError as e:
            log.debug("path inequality sample skipped: %s", e)
            skipped += 1
            continue
        done += 1
        violations += not ok
    return {"samples": done, "violations": int(violations), "skipped": skipped,
            "delta": delta, "M": m_const, "method": report["method"]}


def strict_subderivative_of_support_is_cone_indicator(q, lam, directions=None, zero_tol=1e-3,
                                                      **estimate_kw):
    """Classify d2_s sigma_Q(0|lam)(w) on a direction net: each must be ~0 or divergent."""
    lam = q.require_member(lam)
    pair = DecomposablePair(q, identity(q.dim), np.zeros(q.dim), name=f"sigma/{q.kind}")
    if directions is None:
        eye = np.eye(q.dim)
        directions = [eye[j] for j in range(q.dim)] + [-eye[j] for j in range(q.dim)]
    rows, ok = [], True
    for w in directions:
        w = np.asarray(w, dtype=float)
        est = strict_second_subderivative_estimate(pair, lam, w, **estimate_kw)
        if est["verdict"] == "divergent":
            cls = "divergent"
        elif est["verdict"] == "finite" and abs(est["value"]) <= zero_tol:
            cls = "zero"
        elif est["verdict"] == "finite":
            cls = "nonzero"
            ok = False
        else:
            cls = "inconclusive"
        row = {"w": w, "class": cls, "value": est["value"]}
        if cls == "zero":
            doubled = strict_second_subderivative_estimate(pair, lam, 2 * w, **estimate_kw)
            row["homogeneous"] = doubled["verdict"] == "finite" and abs(doubled["value"]) <= 4 * zero_tol
        rows.append(row)
    return {"lam": lam, "rows": rows, "ok": ok}


def counterexample_sequence_report(ks=(1, 10, 100, 1000), w=(1.0, 1.0)):
    """Hessian norms of sigma_C along x_k = (1/k^3, -1/k), C = {x2 >= (2/3)|x1|^(3/2)}.

    Multipliers lam_k = grad sigma_C(x_k) = (1/k^4, 2/(3 k^6)) tend to 0 while
    |Hess(x_k)| = (2/k)(1 + k^-4) -> 0, so <w, Hess(x_k) w> brackets d2_s at (0|0) from above by 0.
    """
    q = PowerEpigraph()
    w = np.asarray(w, dtype=float)
    rows = []
    for k in ks:
        x = np.array([float(k) ** -3, -1.0 / k])
        hess = q.support_hessian(x)
        rows.append({"k": int(k), "x": x, "lam": q.support_gradient(x),
                     "hessian_norm": float(np.linalg.norm(hess, 2)),
                     "closed_form": (2.0 / k) * (1 + float(k) ** -4),
                     "curvature": float(w @ hess @ w)})
    norms = [r["hessian_norm"] for r in rows]
    return {"rows": rows, "monotone": all(b < a for a, b in zip(norms, norms[1:])),
            "upper_bound": rows[-1]["curvature"]}
