"""Proximity operators and Moreau envelopes of decomposable functions.

    prox(pair, tau, z)                 ProxResult dict
    prox_jacobian_fd(pair, tau, z)     one-sided / central difference Jacobian report
    equivalence_suite(pair, lam, tau)  the six-way differentiability report
    envelope_convergence_probe(...)    sup-gaps of envelopes along a sequence
    conjugate_envelope_check(...)      env = |x|^2/(2 tau) - (phi + |.|^2/(2 tau))^*(x/tau)
    jacobian_limit_formula(...)        P_S (I + tau Q)^{-1} P_S against finite differences

When F(x) = x - xbar the Moreau decomposition gives the closed form
prox_{tau sigma_Q}(y) = y - tau Pi_Q(y / tau). Otherwise a prox-linear loop
linearizes F at the current iterate and solves the convex model through its
dual over Q with accelerated projected gradient, backtracking on the model step.
"""

import logging

import numpy as np
from scipy.optimize import minimize

from . import config, linalg
from .cones import INF, UnsupportedVariant
from .decomp import (CqNotCertified, NotSubgradientError, critical_affine_hull, evaluate,
                     multipliers, strict_cq)
from .smoothmap import FD_STEP_1

log = logging.getLogger(__name__)

MISMATCH_TOL = 1e-3
SPECTRUM_SLACK = 1e-6
CONTINUITY_FLOOR = 1e-3


class ProxError(Exception):
    pass


class ProxRefused(ProxError):
    pass


def _check_tau(pair, tau):
    if not tau > 0:
        raise ProxError(f"tau must be positive, got {tau}")
    if tau * pair.rho >= 1:
        raise ProxRefused(f"tau * rho = {tau * pair.rho:.3g} >= 1: prox not single-valued")


def default_tau(pair):
    return 1.0 if pair.rho < 1 else 0.5 / pair.rho


def support_prox(q, tau, y):
    y = np.asarray(y, dtype=float)
    return y - tau * q.project(y / tau)


def _dual_model(q, b, jac, a, s, lam, max_iter, tol):
    """argmin_x sigma_Q(b + J x) + |x - a|^2 / (2 s) via FISTA on the dual over Q."""
    lip = s * np.linalg.norm(jac, 2) ** 2
    if lip == 0:
        return a.copy(), lam
    step = 1.0 / lip
    c = b + jac @ a
    lam = q.project(lam)
    w, theta = lam, 1.0
    for _ in range(max_iter):
        nxt = q.project(w + step * (c - s * jac @ (jac.T @ w)))
        if np.linalg.norm(nxt - lam) <= tol * (1 + np.linalg.norm(nxt)):
            lam = nxt
            break
        theta_next = 0.5 * (1 + np.sqrt(1 + 4 * theta * theta))
        w = nxt + ((theta - 1) / theta_next) * (nxt - lam)
        lam, theta = nxt, theta_next
    return a - s * jac.T @ lam, lam


def _prox_linear(pair, tau, z, max_iter, tol):
    q, fmap = pair.q, pair.fmap
    y = z.copy()
    lam = np.zeros(pair.m)
    eta = 1.0
    for it in range(1, max_iter + 1):
        fy, jac = fmap.value(y), fmap.jacobian(y)
        while True:
            s = 1.0 / (1.0 / tau + 1.0 / eta)
            a = s * (z / tau + y / eta)
            x, lam = _dual_model(q, fy - jac @ y, jac, a, s, lam, max_iter, 1e-12)
            d = x - y
            model = q.support(fy + jac @ d) + 0.5 * (x - z) @ (x - z) / tau + 0.5 * d @ d / eta
            actual = q.support(fmap.value(x)) + 0.5 * (x - z) @ (x - z) / tau
            if actual <= model + 1e-12 * (1 + abs(model)):
                break
            eta *= 0.5
            if eta < 1e-14:
                raise ProxError("prox-linear backtracking collapsed")
        y = x
        if np.linalg.norm(d) <= tol * (1 + np.linalg.norm(y)):
            log.debug("prox-linear converged in %d iterations (eta %.2e)", it, eta)
            return y, it
        eta = min(1.0, 2.0 * eta)
    raise ProxError(f"inner prox solver did not converge in {max_iter} iterations")


def prox(pair, tau, z, verify=False, max_iter=None, tol=None):
    """prox_{tau phi}(z) with envelope value and the recovered subgradient v = (z - p) / tau."""
    _check_tau(pair, tau)
    cfg = config.settings()
    max_iter = max_iter or cfg["prox_max_iter"]
    tol = tol or cfg["prox_tol"]
    z = np.asarray(z, dtype=float).ravel()
    shift = pair.fmap.shift
    if shift is not None:
        p = shift + support_prox(pair.q, tau, z - shift)
        iters, method = 0, "moreau"
    else:
        p, iters = _prox_linear(pair, tau, z, max_iter, tol)
        method = "prox-linear"
    v = (z - p) / tau
    out = {"z": z, "tau": float(tau), "p": p, "v": v,
           "envelope": evaluate(pair, p) + 0.5 * (p - z) @ (p - z) / tau,
           "iterations": iters, "method": method}
    if verify:
        out["lam"] = multipliers(pair, p, v, tol=1e-6)
    return out


def prox_point(pair, tau, z):
    return prox(pair, tau, z)["p"]


# --- derivatives of the prox ---------------------------------------------------------
def prox_jacobian_fd(pair, tau, z, step=None):
    """Central-difference Jacobian of the prox with a one-sided mismatch test per coordinate."""
    _check_tau(pair, tau)
    z = np.asarray(z, dtype=float).ravel()
    eps = step or FD_STEP_1 * (1 + np.linalg.norm(z))
    base = prox_point(pair, tau, z)
    n = z.size
    jac = np.empty((n, n))
    worst, slopes = 0.0, None
    for j in range(n):
        e = np.zeros(n)
        e[j] = eps
        right = (prox_point(pair, tau, z + e) - base) / eps
        left = (base - prox_point(pair, tau, z - e)) / eps
        jac[:, j] = 0.5 * (right + left)
        gap = np.linalg.norm(right - left) / max(1.0, np.linalg.norm(right), np.linalg.norm(left))
        if gap > worst:
            worst, slopes = float(gap), (left, right)
    eig = np.linalg.eigvalsh(linalg.sym(jac))
    bound = 1.0 / (1.0 - tau * pair.rho)
    violation = max(0.0, -SPECTRUM_SLACK - eig[0], eig[-1] - bound - SPECTRUM_SLACK)
    differentiable = worst <= MISMATCH_TOL
    if not differentiable:
        log.info("prox not differentiable at %s (one-sided mismatch %.3g)", z, worst)
    return {"jacobian": jac, "differentiable": differentiable, "mismatch": worst,
            "slopes": slopes if not differentiable else None, "eigenvalues": eig,
            "bound": bound, "violation": float(violation)}


def moreau_gradient_check(pair, tau, z):
    """|FD gradient of the envelope - (z - prox(z)) / tau|."""
    z = np.asarray(z, dtype=float).ravel()
    eps = FD_STEP_1 * (1 + np.linalg.norm(z))
    grad = np.empty(z.size)
    for j in range(z.size):
        e = np.zeros(z.size)
        e[j] = eps
        grad[j] = (prox(pair, tau, z + e)["envelope"] - prox(pair, tau, z - e)["envelope"]) / (2 * eps)
    return float(np.linalg.norm(grad - prox(pair, tau, z)["v"]))


def prox_lipschitz_ratio(pair, tau, center, radius=1e-2, count=16, rng=None):
    """Largest sampled |prox(z1) - prox(z2)| / |z1 - z2| near center."""
    rng = rng or np.random.default_rng(config.get("seed"))
    center = np.asarray(center, dtype=float).ravel()
    pts = [center + radius * rng.uniform(-1, 1, center.size) for _ in range(count)]
    images = [prox_point(pair, tau, p) for p in pts]
    worst = 0.0
    for i in range(count):
        for j in range(i + 1, count):
            den = np.linalg.norm(pts[i] - pts[j])
            if den > 0:
                worst = max(worst, float(np.linalg.norm(images[i] - images[j]) / den))
    return worst


# --- differentiability / strict complementarity ------------------------------------
def _relative_interior_of_subdifferential(pair, vbar, eps=1e-6):
    """vbar in ri(DF(xbar)^T Q), tested by admitting vbar +- eps d along span DF^T par(Q)."""
    jt = pair.fmap.jacobian(pair.xbar).T
    dirs = linalg.orth(jt @ pair.q.parallel_subspace())
    for j in range(dirs.shape[1]):
        for sign in (1.0, -1.0):
            try:
                multipliers(pair, pair.xbar, vbar + sign * eps * dirs[:, j], tol=1e-7)
            except NotSubgradientError:
                return False
    return True


def _jacobian_continuity(pair, tau, zbar, radii, count, rng):
    deviations = []
    for r in radii:
        jacs = []
        for _ in range(count):
            rep = prox_jacobian_fd(pair, tau, zbar + r * rng.uniform(-1, 1, zbar.size))
            if not rep["differentiable"]:
                return {"value": False, "deviations": deviations, "reason": "kink in the net"}
            jacs.append(rep["jacobian"])
        deviations.append(max((float(np.abs(a - b).max()) for i, a in enumerate(jacs)
                                for b in jacs[i + 1:]), default=0.0))
    flat = all(d <= CONTINUITY_FLOOR for d in deviations)
    shrinking = all(b <= 0.5 * a for a, b in zip(deviations, deviations[1:]))
    return {"value": bool(flat or shrinking), "deviations": deviations, "reason": None}


def _estimator_agreement(pair, vbar, directions, estimate_kw):
    from .epiquot import (basic_second_subderivative_estimate,
                          strict_second_subderivative_estimate)
    rows, agree = [], True
    for h in directions:
        basic = basic_second_subderivative_estimate(pair, vbar, h, **estimate_kw.get("basic", {}))
        strict = strict_second_subderivative_estimate(pair, vbar, h, **estimate_kw.get("strict", {}))
        same = basic["verdict"] == strict["verdict"]
        if same and basic["verdict"] == "finite":
            same = abs(basic["value"] - strict["value"]) <= max(1e-3, 1e-2 * abs(basic["value"]))
        agree = agree and same
        rows.append({"h": h, "basic": basic["verdict"], "strict": strict["verdict"], "agree": same})
    return {"value": agree, "proxy": True, "directions": rows}


def equivalence_suite(pair, lam, tau=None, directions=None, radii=(1e-2, 1e-3, 1e-4),
                      net_count=4, estimate_kw=None, rng=None):
    """Evaluate the equivalent conditions at (xbar, DF^T lam).

    (i)   strict twice epi-differentiability, by strict-vs-basic estimator agreement (a proxy)
    (ii)  the same on a neighborhood of graph points (not tested)
    (iii) vbar in ri of the subdifferential
    (iv)  lam in ri Q
    (v)   prox Jacobian continuous around zbar (deviation over shrinking nets)
    (vi)  prox differentiable at zbar
    """
    lam = pair.q.require_member(lam)
    cert = strict_cq(pair, lam)
    if cert["verdict"] != "holds":
        raise CqNotCertified(f"strict CQ {cert['verdict']}")
    tau = tau or default_tau(pair)
    _check_tau(pair, tau)
    rng = rng or np.random.default_rng(config.get("seed"))
    vbar = pair.fmap.jacobian(pair.xbar).T @ lam
    zbar = pair.xbar + tau * vbar
    if directions is None:
        eye = np.eye(pair.n)
        directions = [eye[j] for j in range(pair.n)] + [-eye[j] for j in range(pair.n)]
        directions += [d / np.linalg.norm(d) for d in rng.standard_normal((2, pair.n))]
    try:
        interior = bool(pair.q.ri_membership(lam))
    except UnsupportedVariant:
        interior = None
    jac = prox_jacobian_fd(pair, tau, zbar)
    items = {
        "i": _estimator_agreement(pair, vbar, directions, estimate_kw or {}),
        "ii": {"value": None, "tested": False},
        "iii": {"value": _relative_interior_of_subdifferential(pair, vbar)},
        "iv": {"value": interior},
        "v": _jacobian_continuity(pair, tau, zbar, radii, net_count, rng),
        "vi": {"value": jac["differentiable"], "mismatch": jac["mismatch"]},
    }
    tested = {k: v["value"] for k, v in items.items() if v["value"] is not None}
    consistent = len(set(tested.values())) <= 1
    if not consistent:
        log.warning("%s: equivalence items disagree: %s", pair.name, tested)
    return {"lam": lam, "tau": tau, "zbar": zbar, "items": items, "consistent": consistent}


# --- envelopes ---------------------------------------------------------------------
def moreau_envelope(f, tau, x, starts=None):
    """min_y f(y) + |y - x|^2 / (2 tau) by Nelder-Mead from x and the given starts."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    best = INF
    for y0 in [x] + list(starts or []):
        res = minimize(lambda y: f(y) + 0.5 * (y - x) @ (y - x) / tau, np.atleast_1d(y0),
                       method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-13, "maxiter": 20000})
        best = min(best, float(res.fun))
    return best


def envelope_convergence_probe(f_sequence, f_limit, tau, grid, limit_envelope=None):
    """Sup over the grid of |env f_k - env f| for each k, and a monotone-trend verdict.

    ``limit_envelope`` replaces the numerical envelope of ``f_limit`` (needed when
    the limit is an indicator).
    """
    grid = [np.atleast_1d(np.asarray(g, dtype=float)) for g in grid]
    if limit_envelope is None:
        target = [moreau_envelope(f_limit, tau, g) for g in grid]
    else:
        target = [float(limit_envelope(g)) for g in grid]
    gaps = []
    for f in f_sequence:
        gaps.append(max(abs(moreau_envelope(f, tau, g) - t) for g, t in zip(grid, target)))
    monotone = all(b <= a + 1e-6 for a, b in zip(gaps, gaps[1:]))
    verdict = "converging" if monotone and (not gaps or gaps[-1] <= gaps[0]) else "not-converging"
    return {"gaps": gaps, "monotone": monotone, "verdict": verdict}


def conjugate_envelope_check(pair, tau, points, radius=3.0, per_dim=41):
    """Largest gap between the prox envelope and |x|^2/(2 tau) - h^*(x / tau), h = phi + |.|^2/(2 tau).

    h^* is evaluated by brute force: a grid (n <= 2) or a seeded cloud, refined by Nelder-Mead.
    """
    n = pair.n

    def h(y):
        return evaluate(pair, y) + 0.5 * (y @ y) / tau

    if n <= 2:
        axes = [np.linspace(-radius, radius, per_dim)] * n
        cloud = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    else:
        cloud = np.random.default_rng(0).uniform(-radius, radius, (2000, n))
    cloud = cloud + pair.xbar
    hvals = np.array([h(y) for y in cloud])
    worst = 0.0
    for x in points:
        x = np.asarray(x, dtype=float).ravel()
        s = x / tau
        scores = cloud @ s - hvals
        y0 = cloud[int(np.argmax(scores))]
        res = minimize(lambda y: h(y) - s @ y, y0, method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-13, "maxiter": 20000})
        conj = max(float(scores.max()), -float(res.fun))
        env = 0.5 * (x @ x) / tau - conj
        worst = max(worst, abs(env - prox(pair, tau, x)["envelope"]))
    return {"max_gap": float(worst), "ok": worst <= 1e-6}


def jacobian_limit_formula(pair, lam, tau=None):
    """P_S (I + tau Q_S)^{-1} P_S with S = aff C and Q_S the reduced Hessian, against FD at zbar."""
    lam = pair.q.require_member(lam)
    tau = tau or default_tau(pair)
    basis = critical_affine_hull(pair, lam)
    vbar = pair.fmap.jacobian(pair.xbar).T @ lam
    zbar = pair.xbar + tau * vbar
    if basis.shape[1]:
        form = linalg.sym(basis.T @ pair.fmap.weighted_hessian(pair.xbar, lam) @ basis)
        formula = basis @ np.linalg.solve(np.eye(basis.shape[1]) + tau * form, basis.T)
    else:
        formula = np.zeros((pair.n, pair.n))
    fd = prox_jacobian_fd(pair, tau, zbar)
    return {"formula": formula, "fd": fd["jacobian"], "differentiable": fd["differentiable"],
            "error": float(np.abs(formula - fd["jacobian"]).max())}
