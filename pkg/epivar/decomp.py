"""Decomposable-function core.

A DecomposablePair (Q, F, xbar, offset) stands for

    phi(x) = offset + sigma_Q(F(x))      near xbar, with F(xbar) = 0.

This module evaluates phi, computes the subdifferential DF(x)^T face_Q(F(x)),
recovers multipliers, certifies the Robinson / strict / nondegeneracy
constraint qualifications, builds critical cones, and evaluates the closed-form
second subderivative, the strict formula (gated on uSOTP), the strict-saddle
test and the strong-metric-regularity certificate.

Multiplier recovery: Lambda(x, v) = face_Q(F(x)) n {lam : DF(x)^T lam = v};
when DF(x)^T is injective the solve is direct, otherwise the minimum-norm element
is found by Dykstra (projecting 0 onto the intersection). Maximizing over a
non-singleton Lambda uses an LP for polyhedral faces and projected gradient
ascent otherwise (config `face_max_iter`, `face_tol`). Away from x̄ the face
exposed by F(x) replaces Q, both for the multipliers and the critical cone.

Certificates are dicts: {"which", "verdict": holds|fails|inconclusive,
"witness", "method"}.
"""

import logging

import numpy as np
from scipy.optimize import linprog

from . import cones, config, linalg, smoothmap
from .cones import INF, Cone, Product, Subspace, UnsupportedVariant, cone_sum_certificate
from .supportsets import Box, Polyhedron, Singleton

log = logging.getLogger(__name__)

ADMISSION_TOL = 1e-8     # residual of DF(x)^T lam = v
NORMALIZATION_TOL = 1e-10


class DecompError(Exception):
    pass


class NotSubgradientError(DecompError):
    """v is not a subgradient (the face system is infeasible)."""


class UsotpNotEstablished(DecompError):
    def __init__(self, msg="usotp-not-established"):
        super().__init__(msg)


class CqNotCertified(DecompError):
    pass


class DecomposablePair:
    def __init__(self, support_set, fmap, basepoint, offset=0.0, rho=0.0, name=None):
        if fmap.m != support_set.dim:
            raise DecompError(f"F maps into R^{fmap.m} but Q lives in R^{support_set.dim}")
        self.q = support_set
        self.fmap = fmap
        self.xbar = np.asarray(basepoint, dtype=float).ravel()
        if self.xbar.size != fmap.n:
            raise DecompError(f"basepoint has {self.xbar.size} entries, F needs {fmap.n}")
        self.offset = float(offset)
        self.rho = float(rho)
        self.name = name or f"{support_set.kind}/{fmap.name}"
        if np.linalg.norm(fmap.value(self.xbar)) > NORMALIZATION_TOL:
            raise DecompError("F(xbar) must vanish (normalize F by its value at xbar)")
        self._robinson = None

    def __repr__(self):
        return f"<DecomposablePair {self.name}>"

    @property
    def n(self):
        return self.fmap.n

    @property
    def m(self):
        return self.fmap.m

    @property
    def robinson(self):
        """Robinson certificate, computed on first use; a failing pair is flagged, not rejected."""
        if self._robinson is None:
            self._robinson = robinson_cq(self)
            if self._robinson["verdict"] != "holds":
                log.warning("%s: Robinson CQ %s", self.name, self._robinson["verdict"])
        return self._robinson

    def to_json(self):
        return {"support_set": self.q.to_json(), "map": smoothmap.map_to_json(self.fmap),
                "basepoint": self.xbar.tolist(), "offset": self.offset, "rho": self.rho}

    @classmethod
    def from_json(cls, data):
        return cls(cones.from_json(data["support_set"]), smoothmap.map_from_json(data["map"]),
                   data["basepoint"], data.get("offset", 0.0), data.get("rho", 0.0),
                   data.get("name"))


def evaluate(pair, x):
    return pair.offset + pair.q.support(pair.fmap.value(x))


# --- subdifferential and multipliers -----------------------------------------------
class Subdifferential:
    """DF(x)^T applied to the face argmax_Q <., F(x)>."""

    def __init__(self, pair, x):
        self.pair = pair
        self.x = np.asarray(x, dtype=float).ravel()
        self.face = pair.q.face(pair.fmap.value(self.x))
        self.jacobian = pair.fmap.jacobian(self.x)

    def image(self, lam):
        return self.jacobian.T @ np.asarray(lam, dtype=float)

    def contains(self, v, tol=ADMISSION_TOL):
        try:
            multipliers(self.pair, self.x, v, tol=tol, _sub=self)
        except NotSubgradientError:
            return False
        return True


def subdifferential(pair, x):
    return Subdifferential(pair, x)


def _affine_projector(jt, v):
    pinv = np.linalg.pinv(jt, rcond=1e-10)

    def proj(lam):
        return lam - pinv @ (jt @ lam - v)
    return proj


def multipliers(pair, x, v, tol=ADMISSION_TOL, _sub=None):
    """Minimum-norm lam in the face with DF(x)^T lam = v; raises NotSubgradientError."""
    sub = _sub or Subdifferential(pair, x)
    v = np.asarray(v, dtype=float).ravel()
    jt = sub.jacobian.T
    face = sub.face
    scale = 1 + np.linalg.norm(v)
    if isinstance(face, Singleton):
        lam = face.point.copy()
    elif np.linalg.matrix_rank(jt, tol=1e-10 * max(1.0, np.abs(jt).max(initial=0.0))) == pair.m:
        lam = np.linalg.lstsq(jt, v, rcond=None)[0]
    else:
        affine = _affine_projector(jt, v)
        if np.linalg.norm(jt @ affine(np.zeros(pair.m)) - v) > tol * scale:
            raise NotSubgradientError("v not a subgradient: outside the range of DF(x)^T")
        try:
            lam, _ = cones.dykstra([face.project, affine], np.zeros(pair.m),
                                   max_iter=20000, tol=1e-13)
        except cones.ConvergenceError:
            raise NotSubgradientError("v not a subgradient: face system infeasible") from None
        except UnsupportedVariant as e:
            raise DecompError(f"multiplier recovery needs inner solver: {e}") from None
    residual = float(np.linalg.norm(jt @ lam - v))
    if residual > tol * scale or not face.contains(lam, 1e-7 * (1 + np.linalg.norm(lam))):
        raise NotSubgradientError(f"v not a subgradient (residual {residual:.2e})")
    return lam


def graph_point(pair, x, v, lam=None):
    """Validated {"x", "v", "lam", "residual"} with v in the subdifferential at x."""
    x = np.asarray(x, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if lam is None:
        lam = multipliers(pair, x, v)
    lam = np.asarray(lam, dtype=float).ravel()
    fx = pair.fmap.value(x)
    residual = float(np.linalg.norm(pair.fmap.jacobian(x).T @ lam - v))
    gap = abs(pair.q.support(fx) - lam @ fx)
    if residual > ADMISSION_TOL * (1 + np.linalg.norm(v)) or gap > 1e-8 * (1 + np.linalg.norm(fx)):
        raise NotSubgradientError(f"not a graph point (residual {residual:.2e}, gap {gap:.2e})")
    if not pair.q.contains(lam, 1e-7):
        raise NotSubgradientError("multiplier outside Q")
    return {"x": x, "v": v, "lam": lam, "residual": residual}


# --- constraint qualifications -------------------------------------------------------
def _cert(which, cert):
    return {"which": which, **cert}


def robinson_cq(pair, x=None):
    """ker DF(x)^T meets rec(Q) only at 0."""
    x = pair.xbar if x is None else x
    try:
        rec = pair.q.recession_cone()
        cert = cone_sum_certificate(pair.fmap.jacobian(x), rec.polar())
    except UnsupportedVariant as e:
        cert = {"verdict": "inconclusive", "witness": None, "residual": None,
                "method": f"unsupported: {e}"}
    return _cert("robinson", cert)


def strict_cq(pair, lam, x=None):
    """R(DF(x)) - N_Q(lam) = R^m."""
    x = pair.xbar if x is None else x
    lam = pair.q.require_member(lam)
    try:
        cert = cone_sum_certificate(pair.fmap.jacobian(x), pair.q.normal_cone(lam))
    except UnsupportedVariant as e:
        cert = {"verdict": "inconclusive", "witness": None, "residual": None,
                "method": f"unsupported: {e}"}
    return _cert("strict", cert)


def nondegeneracy_cq(pair, x=None):
    """DF(x) R^n + lin N_Q(lam) = R^m, i.e. ker DF(x)^T n par(Q) = {0}."""
    x = pair.xbar if x is None else x
    z = linalg.nullspace(pair.fmap.jacobian(x).T)
    par = pair.q.parallel_subspace()
    inter = linalg.nullspace(np.vstack([np.eye(pair.m) - z @ z.T,
                                        np.eye(pair.m) - linalg.projector(par, pair.m)]))
    if inter.shape[1]:
        return {"which": "nondegeneracy", "verdict": "fails", "witness": inter[:, 0],
                "residual": 0.0, "method": "subspace"}
    return {"which": "nondegeneracy", "verdict": "holds", "witness": None,
            "residual": None, "method": "subspace"}


def cq_report(pair, lam):
    """All three certificates at (xbar, lam); with lam in ri Q strict and nondegenerate must agree."""
    report = {"robinson": robinson_cq(pair), "strict": strict_cq(pair, lam)}
    try:
        report["nondegeneracy"] = nondegeneracy_cq(pair)
    except UnsupportedVariant as e:
        report["nondegeneracy"] = {"which": "nondegeneracy", "verdict": "inconclusive",
                                   "witness": None, "residual": None,
                                   "method": f"unsupported: {e}"}
    try:
        interior = pair.q.ri_membership(lam)
    except UnsupportedVariant:
        interior = None
    report["ri_multiplier"] = interior
    report["consistent"] = not (interior and report["strict"]["verdict"] != "inconclusive"
                                and report["strict"]["verdict"] != report["nondegeneracy"]["verdict"])
    return report


# --- critical cone -------------------------------------------------------------------
class PreimageCone(Cone):
    """{h : A h in N} for a matrix A and a cone N."""

    kind = "preimage"

    def __init__(self, a, cone):
        self.a = np.asarray(a, dtype=float).reshape(cone.dim, -1)
        self.cone = cone
        super().__init__(self.a.shape[1])

    def contains(self, h, tol=None):
        h = np.asarray(h, dtype=float).ravel()
        tol = cones.membership_tol(tol)
        return self.cone.contains(self.a @ h, tol * (1 + np.linalg.norm(h)))

    def distance(self, p):
        raise UnsupportedVariant("preimage cone: projection needs inner solver")

    def affine_hull(self):
        """A^{-1} aff(N); equals aff(A^{-1} N) whenever R(A) - N = R^m."""
        proj = linalg.projector(self.cone.affine_hull(), self.cone.dim)
        return linalg.nullspace((np.eye(self.cone.dim) - proj) @ self.a)

    def hrep(self):
        h = self.cone.hrep()
        return None if h is None else h @ self.a

    def sampled_affine_hull(self, count=None, seed=0):
        """span(A^{-1} N) from LP vertices of A^{-1} N n [-1, 1]^n under random objectives.

        Needs N polyhedral (an H- or V-description) or a subspace.
        """
        n = self.dim
        if isinstance(self.cone, Subspace):
            return self.affine_hull()
        rng = np.random.default_rng(seed)
        count = count or 4 * n + 8
        h = self.cone.hrep()
        g = None if h is not None else self.cone.vrep()
        if h is None and g is None:
            raise UnsupportedVariant(f"{self.cone.kind}: preimage span needs a polyhedral cone")
        pts = []
        for _ in range(count):
            c = rng.standard_normal(n)
            if h is not None:
                res = linprog(-c, A_ub=h @ self.a if h.shape[0] else None,
                              b_ub=np.zeros(h.shape[0]) if h.shape[0] else None,
                              bounds=[(-1, 1)] * n, method="highs")
                x = res.x if res.status == 0 else None
            else:
                k = g.shape[1]
                a_eq = np.hstack([self.a, -g])
                res = linprog(np.concatenate([-c, np.zeros(k)]), A_eq=a_eq,
                              b_eq=np.zeros(self.cone.dim),
                              bounds=[(-1, 1)] * n + [(0, None)] * k, method="highs")
                x = res.x[:n] if res.status == 0 else None
            if x is not None:
                pts.append(x)
        if not pts:
            return np.zeros((n, 0))
        return linalg.orth(np.array(pts).T, rtol=1e-7)


def _normal_cone_at(pair, lam, x):
    """Normal cone to face_Q(F(x)) at lam; the face is Q itself at the basepoint."""
    fx = pair.fmap.value(x)
    if np.linalg.norm(fx) <= NORMALIZATION_TOL:
        return pair.q.normal_cone(lam)
    try:
        return pair.q.face(fx).normal_cone(lam)
    except UnsupportedVariant:
        log.debug("%s: face at F(x) has no normal cone; using N_Q(lam)", pair.name)
        return pair.q.normal_cone(lam)


def critical_cone(pair, lam=None, v=None, x=None):
    """C = DF(x)^{-1} N(lam), N the normal cone to face_Q(F(x)); a Subspace when N is one."""
    x = pair.xbar if x is None else np.asarray(x, dtype=float)
    if lam is None:
        lam = multipliers(pair, x, np.zeros(pair.n) if v is None else v)
    lam = pair.q.require_member(lam)
    jac = pair.fmap.jacobian(x)
    normal = _normal_cone_at(pair, lam, x)
    if isinstance(normal, Subspace):
        proj = linalg.projector(normal.basis, pair.m)
        return Subspace(linalg.nullspace((np.eye(pair.m) - proj) @ jac), pair.n)
    return PreimageCone(jac, normal)


def affine_hull_preimage_check(a, cone, tol=1e-8):
    """aff(A^{-1} K) == A^{-1} aff(K) for a polyhedral cone K; needs R(A) - K = R^m."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    cert = cone_sum_certificate(a, cone)
    if cert["verdict"] != "holds":
        raise CqNotCertified(f"R(A) - K = R^m not certified ({cert['verdict']})")
    pre = PreimageCone(a, cone)
    return linalg.same_subspace(pre.sampled_affine_hull(), pre.affine_hull(), tol, dim=pre.dim)


# --- second order --------------------------------------------------------------------
def _lp_data(q):
    """(A_ub, b_ub, bounds) describing a polyhedral Q, or None."""
    if isinstance(q, Box):
        return np.zeros((0, q.dim)), np.zeros(0), [
            (None if np.isinf(lo) else lo, None if np.isinf(hi) else hi)
            for lo, hi in zip(q.lo, q.hi)]
    if isinstance(q, Singleton):
        return np.zeros((0, q.dim)), np.zeros(0), [(p, p) for p in q.point]
    if isinstance(q, Polyhedron):
        return q.a, q.b, [(None, None)] * q.dim
    if isinstance(q, Product):
        parts = [_lp_data(p) for p in q.parts]
        if any(p is None for p in parts):
            return None
        return (cones.block_diag([p[0] for p in parts]), np.concatenate([p[1] for p in parts]),
                [b for p in parts for b in p[2]])
    return None


def _maximize_over_multipliers(pair, sub, v, w, lam0):
    """sup of <lam, w> over face_Q(F(x)) n {DF(x)^T lam = v}."""
    jt = sub.jacobian.T
    data = _lp_data(pair.q)
    if data is not None:
        a_ub, b_ub, bounds = data
        a_eq, b_eq = jt, v
        fx = pair.fmap.value(sub.x)
        scale = np.linalg.norm(fx)
        if scale > NORMALIZATION_TOL:
            # the face exposed by F(x): <lam, F(x)> = sigma_Q(F(x))
            a_eq = np.vstack([jt, fx / scale])
            b_eq = np.append(v, pair.q.support(fx) / scale)
        res = linprog(-w, A_ub=a_ub if a_ub.shape[0] else None, b_ub=b_ub if b_ub.size else None,
                      A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if res.status == 3:
            return INF
        if res.status != 0:
            raise DecompError(f"multiplier LP failed: {res.message}")
        return float(-res.fun)
    cfg = config.settings()
    affine = _affine_projector(jt, v)
    lam = lam0
    for _ in range(int(cfg["face_max_iter"])):
        nxt, _ = cones.dykstra([sub.face.project, affine], lam + w)
        if np.linalg.norm(nxt) > 1e8:
            return INF
        if np.linalg.norm(nxt - lam) < cfg["face_tol"]:
            lam = nxt
            break
        lam = nxt
    return float(lam @ w)


def second_subderivative(pair, v, h, x=None):
    """d2 phi(x|v)(h) = max over Lambda(x, v) of <lam, D2F(x)[h,h]> on C, +inf off C."""
    x = pair.xbar if x is None else np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float).ravel()
    h = np.asarray(h, dtype=float).ravel()
    sub = Subdifferential(pair, x)
    lam = multipliers(pair, x, v, _sub=sub)
    if not critical_cone(pair, lam, x=x).contains(h, 1e-8):
        return INF
    w = pair.fmap.second_directional(x, h)
    fx = pair.fmap.value(x)
    rows = [sub.jacobian.T, np.eye(pair.m) - linalg.projector(pair.q.parallel_subspace(), pair.m)]
    if np.linalg.norm(fx) > NORMALIZATION_TOL:
        rows.append(fx.reshape(1, -1))
    if not linalg.nullspace(np.vstack(rows)).shape[1]:
        return float(lam @ w)
    return _maximize_over_multipliers(pair, sub, v, w, lam)


def _require_strict(pair, lam):
    cert = strict_cq(pair, lam)
    if cert["verdict"] != "holds":
        raise CqNotCertified(f"strict CQ {cert['verdict']} at {pair.name}")
    return cert


def critical_affine_hull(pair, lam, x=None):
    """aff C = DF(x)^{-1} aff N_Q(lam)."""
    x = pair.xbar if x is None else x
    return smoothmap.preimage_of_subspace(pair.fmap, x, pair.q.normal_cone(lam).affine_hull())


def strict_second_subderivative_formula(pair, lam, h):
    """<lam, D2F[h,h]> on aff C and +inf off it; needs strict CQ and uSOTP."""
    lam = pair.q.require_member(lam)
    if not pair.q.usotp:
        raise UsotpNotEstablished()
    _require_strict(pair, lam)
    h = np.asarray(h, dtype=float).ravel()
    aff = critical_affine_hull(pair, lam)
    if np.linalg.norm(h - aff @ (aff.T @ h)) > 1e-8 * (1 + np.linalg.norm(h)):
        return INF
    return float(lam @ pair.fmap.second_directional(pair.xbar, h))


def strict_chain_lower_bound_check(pair, lam, h, estimate):
    """Compare an estimator verdict for d2_s phi(xbar|v)(h) with the chain-rule value.

    The bound is <lam, D2F[h,h]> plus the strict second subderivative of sigma_Q,
    which is 0 on aff C and (under uSOTP) +inf off it. ``estimate`` is a dict
    from ``epiquot.strict_second_subderivative_estimate``.
    """
    lam = pair.q.require_member(lam)
    h = np.asarray(h, dtype=float).ravel()
    aff = critical_affine_hull(pair, lam)
    inside = bool(np.linalg.norm(h - aff @ (aff.T @ h)) <= 1e-8 * (1 + np.linalg.norm(h)))
    curvature = float(lam @ pair.fmap.second_directional(pair.xbar, h))
    rhs = curvature if inside or not pair.q.usotp else INF
    value = INF if estimate["verdict"] == "divergent" else estimate.get("value")
    tol = max(1e-3, 1e-2 * abs(rhs)) if np.isfinite(rhs) else 0.0
    report = {"h": h, "in_affine_hull": inside, "rhs": rhs, "estimate": value,
              "verdict": estimate["verdict"], "violation": False, "equality": None}
    if value is None:
        return report
    if np.isfinite(rhs):
        report["violation"] = bool(value < rhs - tol)
        if inside and pair.q.usotp:
            report["equality"] = bool(np.isfinite(value) and abs(value - rhs) <= tol)
    else:
        report["violation"] = bool(np.isfinite(value))
        report["equality"] = not report["violation"]
    return report


def _reduced_form(pair, lam, basis):
    hess = pair.fmap.weighted_hessian(pair.xbar, lam)
    return linalg.sym(basis.T @ hess @ basis)


def is_strict_saddle(pair, tol=1e-8):
    """At a stationary xbar (0 in the subdifferential) with lam in ri Q: strict saddle or not."""
    lam = multipliers(pair, pair.xbar, np.zeros(pair.n))
    try:
        interior = pair.q.ri_membership(lam)
    except UnsupportedVariant:
        interior = False
    if not interior:
        return {"verdict": "not-applicable", "reason": "strict complementarity fails",
                "lam": lam, "min_eigenvalue": None, "witness": None}
    basis = critical_affine_hull(pair, lam)
    if not basis.shape[1]:
        return {"verdict": "local-min-candidate", "reason": "trivial critical subspace",
                "lam": lam, "min_eigenvalue": None, "witness": None}
    w, vecs = linalg.eigh(_reduced_form(pair, lam, basis))
    witness = basis @ vecs[:, 0]
    witness /= np.linalg.norm(witness)
    if witness[np.argmax(np.abs(witness))] < 0:
        witness = -witness
    verdict = "strict-saddle" if w[0] < -tol else "local-min-candidate"
    log.info("%s: reduced Hessian min eigenvalue %.6g -> %s", pair.name, w[0], verdict)
    return {"verdict": verdict, "reason": None, "lam": lam, "min_eigenvalue": float(w[0]),
            "witness": witness}


def strong_metric_regularity_certificate(pair, lam, growth_samples=16, radius=1e-2, seed=0):
    """SMR of the subdifferential at (xbar, DF^T lam) from positive definiteness on aff C.

    The sampled growth modulus min 2(phi(x') - phi(x) - <v, x'-x>) / |x'-x|^2 over
    graph points (x, v) near the reference point corroborates the verdict.
    """
    lam = pair.q.require_member(lam)
    if not pair.q.usotp:
        raise UsotpNotEstablished()
    _require_strict(pair, lam)
    basis = critical_affine_hull(pair, lam)
    if not basis.shape[1]:
        return {"verdict": "SMR", "mu": None, "growth_modulus": None,
                "reason": "trivial critical subspace"}
    form = _reduced_form(pair, lam, basis)
    mu = float(linalg.eigh(form)[0][0])
    tol = 1e-8 * max(1.0, float(np.linalg.norm(form)))
    verdict = "SMR" if mu > tol else "not SMR"
    growth = None
    if growth_samples:
        from .epiquot import graph_sampler
        vbar = pair.fmap.jacobian(pair.xbar).T @ lam
        rng = np.random.default_rng(seed)
        ratios = []
        for pt in graph_sampler(pair, vbar, radius, growth_samples, rng):
            step = radius * rng.standard_normal(pair.n)
            x2 = pt["x"] + step
            gap = evaluate(pair, x2) - evaluate(pair, pt["x"]) - pt["v"] @ step
            ratios.append(2 * gap / (step @ step))
        growth = float(min(ratios)) if ratios else None
    return {"verdict": verdict, "mu": mu, "growth_modulus": growth, "reason": None}


def multiplier_lipschitz_ratio(pair, lam, points):
    """max |lam_k - lam| / (|x_k - xbar| + |v_k - vbar|) over graph points."""
    vbar = pair.fmap.jacobian(pair.xbar).T @ lam
    worst = 0.0
    for pt in points:
        den = np.linalg.norm(pt["x"] - pair.xbar) + np.linalg.norm(pt["v"] - vbar)
        if den > 0:
            worst = max(worst, float(np.linalg.norm(pt["lam"] - lam) / den))
    return worst


def prox_regularity_check(pair, lam, x=None, count=32, radius=1e-2, seed=0):
    """Largest violation of phi(x') >= phi(x) + <v, x'-x> - rho/2 |x'-x|^2 near x."""
    x = pair.xbar if x is None else np.asarray(x, dtype=float)
    v = pair.fmap.jacobian(x).T @ lam
    rng = np.random.default_rng(seed)
    base = evaluate(pair, x)
    worst = 0.0
    for _ in range(count):
        step = radius * rng.standard_normal(pair.n)
        lower = base + v @ step - 0.5 * pair.rho * (step @ step)
        worst = max(worst, lower - evaluate(pair, x + step))
    return float(worst)
