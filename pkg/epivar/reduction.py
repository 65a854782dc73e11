"""C2-cone reduction charts and uniform second-order tangent paths.

A ReductionPair (G, K, sbar) describes a support set S near sbar as
{s : G(s) in K} with G(sbar) = 0 and DG(sbar) surjective. Charts:

    build_reduction_psd             kernel block of the PSD cone
    build_reduction_soc_slice       interior / boundary / apex / ray / point cases
    build_reduction_matrix_interval congruence to [0, I], then both eigen-clusters
    build_reduction_kyfan_support   Fantope (symmetric case) or the Ky Fan ball

Spectral charts compress by frames Q(X) = GramSchmidt(P(X) E), with P(X) the
eigenprojection of the cluster and E its frame at the base point. Clusters group
eigenvalues within 1e-6 (1 + |mu|) of the base value.

verify_usotp samples points near lam, selects S(lam) (ker DG from a chart, else
lin T from face or normal-cone structure), follows paths
xi(t) = Pi_S(lam + t v + t^2/2 q) and fits the constant M of the path bound.
"""

import logging

import numpy as np

from . import config, linalg
from .cones import (INF, Cone, ConeError, GeneratedCone, IntersectionCone, Product, PsdCone,
                    RestrictedCone, SecondOrderCone, Subspace, UnsupportedVariant)
from .smoothmap import SmoothMap
from .supportsets import (Box, EuclideanBall, Fantope, KyFanBall, MatrixInterval, Polyhedron,
                          Singleton, SocSlice)

log = logging.getLogger(__name__)

CLUSTER_BAND = 1e-6
SURJECTIVITY_RTOL = 1e-8
M_SAFETY = 1.5
BLOWUP = 2.0


class ReductionError(Exception):
    pass


class ChartError(ReductionError):
    pass


def _surjective(jac):
    jac = np.atleast_2d(jac)
    if jac.shape[0] == 0:
        return True, INF
    if jac.shape[0] > jac.shape[1]:
        return False, 0.0
    s = np.linalg.svd(jac, compute_uv=False)
    margin = float(s[-1] / s[0]) if s[0] > 0 else 0.0
    return margin > SURJECTIVITY_RTOL, margin


class ReductionPair:
    def __init__(self, g, k, sbar, radius=1e-2, support_set=None, name="chart", meta=None,
                 pointed=True):
        if g.m != k.dim:
            raise ReductionError(f"G maps into R^{g.m}, K lives in R^{k.dim}")
        if pointed:
            try:
                g, k = normalize_pointed(g, k)
            except UnsupportedVariant:
                log.debug("%s: lineality of K unknown, chart left as given", name)
        self.g = g
        self.k = k
        self.sbar = np.asarray(sbar, dtype=float).ravel()
        self.radius = float(radius)
        self.support_set = support_set
        self.name = name
        self.meta = meta or {}
        if np.linalg.norm(g.value(self.sbar)) > 1e-10:
            raise ChartError(f"{name}: G(sbar) = {g.value(self.sbar)} is not 0")
        ok, margin = _surjective(g.jacobian(self.sbar))
        self.rank_margin = margin
        if not ok:
            raise ChartError(f"{name}: DG(sbar) not surjective (margin {margin:.2e})")
        self.base_rank = g.m

    def __repr__(self):
        return f"<ReductionPair {self.name} R^{self.g.n} -> R^{self.g.m}>"

    def contains(self, s, tol=1e-8):
        return self.k.contains(self.g.value(s), tol)


# --- frames ----------------------------------------------------------------------
def _cluster_split(w, mu):
    band = CLUSTER_BAND * (1 + abs(mu))
    idx = np.flatnonzero(np.abs(w - mu) <= band)
    if idx.size and np.max(np.abs(w[idx] - mu)) > 1e-10:
        raise ChartError("eigen-cluster separation below 1e-6 at the base point")
    return idx


def _frame(y, base, mu):
    """GramSchmidt(P(y) base) for the cluster of eigenvalues of y nearest mu."""
    q = base.shape[1]
    if not q:
        return base
    w, v = linalg.eigh(y)
    near = v[:, np.argsort(np.abs(w - mu))[:q]]
    qf, r = np.linalg.qr(near @ (near.T @ base))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return qf * signs


def _psd_block(order):
    return PsdCone(order) if order else None


def _product(blocks):
    parts = [b for b in blocks if b is not None and b.dim]
    if not parts:
        return Subspace.zero(0)
    return parts[0] if len(parts) == 1 else Product(parts)


def _map(n, m, value, name, params=None):
    return SmoothMap(n, m, value, name=name, params=params or {})


# --- PSD cone and matrix intervals -------------------------------------------------
def build_reduction_psd(order, xbar):
    """Chart of S^n_+ at xbar: X -> Q0(X)^T X Q0(X) with K = S^q_+, q = dim ker xbar."""
    xm = linalg.smat(np.asarray(xbar, dtype=float))
    if xm.shape[0] != order:
        raise ReductionError("xbar has the wrong order")
    w, v = linalg.eigh(xm)
    if w[0] < -1e-10:
        raise ChartError("xbar is not positive semidefinite")
    e0 = v[:, _cluster_split(w, 0.0)]
    q0 = e0.shape[1]

    def value(s):
        x = linalg.smat(s)
        f = _frame(x, e0, 0.0)
        return linalg.svec(f.T @ x @ f) if q0 else np.zeros(0)

    g = _map(linalg.svec_dim(order), linalg.svec_dim(q0), value, "psd-chart")
    return ReductionPair(g, _product([_psd_block(q0)]), linalg.svec(xm), name="psd",
                         support_set=PsdCone(order), meta={"kernel": q0})


def build_reduction_matrix_interval(lower, upper, xbar):
    """Chart of [L, U] at xbar.

    With D = U - L = R diag R^T (range frame R, kernel frame N) and
    Y(X) = M R^T (X - L) R M, M = (R^T D R)^{-1/2}, the components are
    N^T (X-L) N and R^T (X-L) N (pinned to 0), Q0^T Y Q0 (>= 0) and Q1^T (I - Y) Q1 (>= 0).
    """
    mi = MatrixInterval(lower, upper)
    xm = linalg.smat(np.asarray(xbar, dtype=float))
    if not mi.contains(linalg.svec(xm), 1e-9):
        raise ChartError("xbar is not in the interval")
    lo, n = mi.lower, mi.order
    w, v = linalg.eigh(mi.upper - lo)
    keep = w > 1e-12 * max(1.0, w.max(initial=0.0))
    rf, nf = v[:, keep], v[:, ~keep]
    scale = (rf * (1 / np.sqrt(w[keep]))) if rf.shape[1] else rf
    rho, nk = rf.shape[1], nf.shape[1]

    def ymat(x):
        return linalg.sym(scale.T @ (x - lo) @ scale)

    ybar = ymat(xm)
    wy, vy = linalg.eigh(ybar) if rho else (np.zeros(0), np.zeros((0, 0)))
    e0 = vy[:, _cluster_split(wy, 0.0)] if rho else np.zeros((0, 0))
    e1 = vy[:, _cluster_split(wy, 1.0)] if rho else np.zeros((0, 0))
    q0, q1 = e0.shape[1], e1.shape[1]
    n_eq = linalg.svec_dim(nk) + rho * nk

    def value(s):
        x = linalg.smat(s)
        parts = []
        if nk:
            parts += [linalg.svec(nf.T @ (x - lo) @ nf), (rf.T @ (x - lo) @ nf).ravel()]
        if rho:
            y = ymat(x)
            if q0:
                f0 = _frame(y, e0, 0.0)
                parts.append(linalg.svec(f0.T @ y @ f0))
            if q1:
                f1 = _frame(y, e1, 1.0)
                parts.append(linalg.svec(f1.T @ (np.eye(rho) - y) @ f1))
        return np.concatenate(parts) if parts else np.zeros(0)

    m = n_eq + linalg.svec_dim(q0) + linalg.svec_dim(q1)
    k = _product([Subspace.zero(n_eq) if n_eq else None, _psd_block(q0), _psd_block(q1)])
    g = _map(linalg.svec_dim(n), m, value, "matrix-interval-chart")
    case = {"lower_active": q0, "upper_active": q1, "pinned": n_eq, "middle": rho - q0 - q1}
    log.debug("matrix-interval chart: %s", case)
    return ReductionPair(g, k, linalg.svec(xm), support_set=mi, name="matrix-interval", meta=case)


# --- Ky Fan support sets -------------------------------------------------------------
class NuclearCouplingCone(Cone):
    """{(Y, Z, s) : Y >= 0, |Z|_* <= tr Y + s} with Y in svec(S^a), Z in R^(p x r), s optional."""

    kind = "nuclear-coupling"

    def __init__(self, a, p, r, with_slack):
        self.a, self.p, self.r, self.with_slack = int(a), int(p), int(r), bool(with_slack)
        self._cuts = np.cumsum([0, linalg.svec_dim(self.a), self.p * self.r, int(with_slack)])
        super().__init__(int(self._cuts[-1]))

    def _parts(self, y):
        y = np.asarray(y, dtype=float).ravel()
        c = self._cuts
        return (linalg.smat(y[c[0]:c[1]]) if self.a else np.zeros((0, 0)),
                y[c[1]:c[2]].reshape(self.p, self.r), y[c[2]:c[3]])

    def contains(self, y, tol=1e-9):
        ym, z, s = self._parts(y)
        trace = 0.0
        if self.a:
            w = np.linalg.eigvalsh(ym)
            if w[0] < -tol:
                return False
            trace = float(w.sum())
        nuc = float(np.linalg.svd(z, compute_uv=False).sum()) if z.size else 0.0
        return nuc <= trace + (float(s[0]) if s.size else 0.0) + tol

    def distance(self, p):
        raise UnsupportedVariant("nuclear coupling cone: projection needs inner solver")

    def lineality(self):
        return np.zeros((self.dim, 0))

    def affine_hull(self):
        return np.eye(self.dim)


def _fantope_chart(order, k, bbar):
    bm = linalg.smat(np.asarray(bbar, dtype=float))
    fan = Fantope(order, k)
    if not fan.contains(linalg.svec(bm), 1e-9):
        raise ChartError("point is not in the Fantope")
    w, v = linalg.eigh(bm)
    e0, e1 = v[:, _cluster_split(w, 0.0)], v[:, _cluster_split(w, 1.0)]
    q0, q1 = e0.shape[1], e1.shape[1]
    middle = order - q0 - q1
    eye_svec = [linalg.svec(np.eye(q)) for q in (q0, q1)]

    def value(s):
        b = linalg.smat(s)
        parts = []
        if q0:
            f0 = _frame(b, e0, 0.0)
            parts.append(linalg.svec(f0.T @ b @ f0))
        if q1:
            f1 = _frame(b, e1, 1.0)
            parts.append(linalg.svec(f1.T @ (np.eye(order) - b) @ f1))
        if middle:
            parts.append([np.trace(b) - fan.k])
        return np.concatenate(parts) if parts else np.zeros(0)

    d0, d1 = linalg.svec_dim(q0), linalg.svec_dim(q1)
    blocks = _product([_psd_block(q0), _psd_block(q1), Subspace.zero(1) if middle else None])
    if middle or not (q0 or q1):
        k_cone = blocks
    else:
        # no free eigenvalue: tr B = k becomes tr Xi0 = tr Xi1
        row = np.concatenate([eye_svec[0], -eye_svec[1]])
        k_cone = IntersectionCone([blocks, Subspace(linalg.nullspace(row[None, :]), d0 + d1)])
    g = _map(linalg.svec_dim(order), d0 + d1 + (1 if middle else 0), value, "fantope-chart")
    meta = {"case": 1, "mu1_active": q1, "mu0_active": q0, "middle": middle,
            "trace_coupled": not middle and bool(q0 or q1)}
    return ReductionPair(g, k_cone, linalg.svec(bm), support_set=fan, name="kyfan-case1", meta=meta)


def _kyfan_ball_chart(m, n, k, bbar):
    ball = KyFanBall(m, n, k)
    bvec = np.asarray(bbar, dtype=float).ravel()
    if not ball.contains(bvec, 1e-9):
        raise ChartError("point is not in the Ky Fan ball")
    bm = ball.mat(bvec)
    u, s, v = linalg.svd(bm)
    one = _cluster_split(s, 1.0)
    zero = _cluster_split(s, 0.0)
    a, rpos = one.size, int(np.sum(s > CLUSTER_BAND))
    mid = np.setdiff1d(np.arange(rpos), one)
    nuclear_active = abs(s.sum() - ball.k) <= 1e-9 * (1 + ball.k)
    lu1, rv1 = u[:, one], v[:, one]
    lu0, rv0 = u[:, rpos:], v[:, rpos:]
    if nuclear_active and not a and not mid.size and ball.k > 0:
        raise ChartError("degenerate Ky Fan point")

    def value(x):
        xm = x.reshape(m, n)
        gram_l, gram_r = xm @ xm.T, xm.T @ xm
        parts = []
        if a:
            wmat = _frame(gram_l, lu1, 1.0).T @ xm @ _frame(gram_r, rv1, 1.0)
            ew, ev = np.linalg.eigh(linalg.sym(wmat.T @ wmat))
            root = (ev * np.sqrt(np.maximum(ew, 0.0))) @ ev.T
            parts.append(linalg.svec(np.eye(a) - root))
        if nuclear_active:
            if lu0.shape[1] and rv0.shape[1]:
                parts.append((_frame(gram_l, lu0, 0.0).T @ xm @ _frame(gram_r, rv0, 0.0)).ravel())
            if mid.size:
                sv = np.linalg.svd(xm, compute_uv=False)
                parts.append([ball.k - a - sv[mid].sum()])
        return np.concatenate(parts) if parts else np.zeros(0)

    if nuclear_active:
        zp, zr = (lu0.shape[1], rv0.shape[1]) if lu0.shape[1] and rv0.shape[1] else (0, 0)
        k_cone = NuclearCouplingCone(a, zp, zr, bool(mid.size))
    else:
        k_cone = _product([_psd_block(a)])
    g = _map(m * n, k_cone.dim, value, "kyfan-chart")
    meta = {"case": 2, "spectral_active": a, "nuclear_active": bool(nuclear_active),
            "middle": int(mid.size), "zero_block": (lu0.shape[1], rv0.shape[1])}
    return ReductionPair(g, k_cone, bvec, support_set=ball, name="kyfan-case2", meta=meta)


def build_reduction_kyfan_support(m, n, k, bbar, symmetric=False):
    """Case 1 (symmetric=True): Fantope of order m with trace k. Case 2: {|B|_* <= k, |B|_2 <= 1}."""
    if symmetric:
        if m != n:
            raise ReductionError("the symmetric case needs m == n")
        return _fantope_chart(m, k, bbar)
    return _kyfan_ball_chart(m, n, k, bbar)


# --- SOC slices and balls ----------------------------------------------------------
def _apex_shape(kernel):
    """ker A n SOC as ("cone", E, d), ("ray", axis) or ("point",).

    For a cone, x = kernel @ u lies in SOC iff d * (E^T u) lies in SOC(p+1); E is
    orthogonal with the axis direction first.
    """
    if not kernel.shape[1]:
        return ("point",)
    form = kernel.T @ np.diag(np.r_[1.0, -np.ones(kernel.shape[0] - 1)]) @ kernel
    w, v = linalg.eigh(form)
    axis = kernel @ v[:, -1]
    if axis[0] < 0:
        axis, v[:, -1] = -axis, -v[:, -1]
    if kernel.shape[1] >= 2 and w[-1] > 1e-9 and w[-2] < -1e-9:
        order = np.r_[w.size - 1, np.arange(w.size - 1)]
        return ("cone", v[:, order], np.sqrt(np.abs(w[order])))
    if w[-1] >= -1e-9 and axis[0] - np.linalg.norm(axis[1:]) >= -1e-9:
        return ("ray", axis)
    return ("point",)


def build_reduction_soc_slice(a, b, xbar):
    """Chart of {x in SOC : A x = b} at xbar (first coordinate is the cone axis)."""
    sl = SocSlice(a, b)
    x = np.asarray(xbar, dtype=float).ravel()
    dim = sl.dim
    if not sl.contains(x, 1e-9):
        raise ChartError("xbar is not in the slice")
    normals = linalg.orth(sl.rows.T)
    kernel = linalg.complement(normals, dim)
    m = normals.shape[1]
    gap = x[0] - np.linalg.norm(x[1:])

    def chart(value, k, case, **meta):
        return ReductionPair(_map(dim, k.dim, value, f"soc-slice-{case}"), k, x, support_set=sl,
                             name=f"soc-slice-{case}", meta={"case": case, "rows": m, **meta})

    if np.linalg.norm(x) <= 1e-12:
        shape = _apex_shape(kernel)
        if shape[0] == "cone":
            # orthogonal P = [(kernel E)^T; normals^T], diagonal D; G = D P
            _, e, d = shape
            frame = kernel @ e
            k = _product([SecondOrderCone(d.size), Subspace.zero(m)])
            return chart(lambda y: np.concatenate([d * (frame.T @ y), normals.T @ y]), k, "apex",
                         weights=d.tolist())
        if shape[0] == "ray":
            axis = shape[1]
            perp = linalg.complement(axis[:, None], dim)
            k = _product([Subspace.zero(dim - 1), GeneratedCone([[1.0]])])
            return chart(lambda y: np.concatenate([perp.T @ y, [axis @ y]]), k, "ray")
        return chart(lambda y: y, Subspace.zero(dim), "point")
    if gap > 1e-9:
        return chart(lambda y: normals.T @ (y - x), Subspace.zero(m), "interior")
    # F1(s) = s0 - |s_1:| read along ker A; needs Q grad F1 != 0
    grad = np.concatenate([[1.0], -x[1:] / np.linalg.norm(x[1:])])
    proj = kernel @ kernel.T
    if np.linalg.norm(proj @ grad) > 1e-9:
        def boundary(y):
            s = x + proj @ (y - x)
            return np.concatenate([normals.T @ (y - x), [s[0] - np.linalg.norm(s[1:])]])

        k = _product([Subspace.zero(m), GeneratedCone([[1.0]])])
        return chart(boundary, k, "boundary")
    # ker A misses the interior: the slice is the ray through xbar (b = 0) or xbar alone
    if np.linalg.norm(sl.rhs) <= 1e-12:
        perp = linalg.complement(x[:, None], dim)
        return chart(lambda y: perp.T @ y, Subspace.zero(perp.shape[1]), "ray")
    return chart(lambda y: y - x, Subspace.zero(dim), "point")


def build_reduction_ball(center, radius, xbar):
    ball = EuclideanBall(center, radius)
    x = np.asarray(xbar, dtype=float).ravel()
    c, r = ball.center, ball.radius
    if np.linalg.norm(x - c) < r - 1e-9:
        g = _map(x.size, 0, lambda y: np.zeros(0), "ball-interior")
        return ReductionPair(g, Subspace.zero(0), x, support_set=ball, name="ball-interior")
    g = _map(x.size, 1, lambda y: np.array([(y - c) @ (y - c) - r * r]), "ball-boundary")
    return ReductionPair(g, GeneratedCone([[-1.0]]), x, support_set=ball, name="ball-boundary")


def chart_for(q, lam):
    """Registered chart of the support set q at lam, or None."""
    if isinstance(q, SocSlice):
        return build_reduction_soc_slice(q.rows, q.rhs, lam)
    if isinstance(q, MatrixInterval):
        return build_reduction_matrix_interval(q.lower, q.upper, lam)
    if isinstance(q, Fantope):
        return build_reduction_kyfan_support(q.order, q.order, q.k, lam, symmetric=True)
    if isinstance(q, KyFanBall):
        return build_reduction_kyfan_support(q.m, q.n, q.k, lam)
    if isinstance(q, PsdCone):
        return build_reduction_psd(q.order, lam)
    if isinstance(q, EuclideanBall):
        return build_reduction_ball(q.center, q.radius, lam)
    return None


# --- pointedness, subspaces and paths ----------------------------------------------
def normalize_pointed(g, k):
    """(W^T G, {y : W y in K}) with W an orthonormal basis of lin(K)^perp."""
    lin = k.lineality()
    if not lin.shape[1]:
        return g, k
    w = linalg.complement(lin, k.dim)
    g2 = SmoothMap(g.n, w.shape[1], lambda s: w.T @ g.value(s), lambda s: w.T @ g.jacobian(s),
                   lambda s, h: w.T @ g.second_directional(s, h), name=f"{g.name}-pointed",
                   params=g.params)
    return g2, RestrictedCone(k, w)


def usotp_subspace(pair, s):
    """Orthonormal basis of ker DG(s); leaving the chart (rank drop) raises ChartError."""
    jac = pair.g.jacobian(s)
    ok, margin = _surjective(jac)
    if not ok:
        raise ChartError(f"{pair.name}: DG(s) lost rank (margin {margin:.2e})")
    return linalg.nullspace(jac) if jac.shape[0] else np.eye(pair.g.n)


class TangentPath:
    """xi(t) = project(s + t v + t^2/2 q) with the fitted bound |xi(t) - s - t v| <= M t^2 / 2."""

    def __init__(self, base, direction, correction, delta, project=None):
        self.base = np.asarray(base, dtype=float)
        self.direction = np.asarray(direction, dtype=float)
        self.correction = np.asarray(correction, dtype=float)
        self.delta = float(delta)
        self.project = project
        self.m_const = None
        self.sup_ratio = None

    def __call__(self, t):
        raw = self.base + t * self.direction + 0.5 * t * t * self.correction
        return self.project(raw) if self.project is not None else raw

    def residual(self, t):
        return float(np.linalg.norm(self(t) - self.base - t * self.direction))

    def fit(self, ts):
        """M = 1.5 x least-squares slope of the residual against t^2/2; also the largest ratio."""
        ts = np.asarray(ts, dtype=float)
        res = np.array([self.residual(t) for t in ts])
        half = 0.5 * ts * ts
        self.m_const = M_SAFETY * float(half @ res / (half @ half))
        self.sup_ratio = float(np.max(res / half))
        return self


def _path_grid(delta, scale):
    return min(delta, scale) * np.geomspace(1.0, 1e-1, 5)


def tangent_path(pair, s, v, project=None, ts=None):
    s = np.asarray(s, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    v = v / np.linalg.norm(v)
    jac = pair.g.jacobian(s)
    if jac.shape[0] and np.linalg.norm(jac @ v) > 1e-6 * max(1.0, np.linalg.norm(jac)):
        raise ReductionError("direction is not in ker DG(s)")
    q = -np.linalg.pinv(jac) @ pair.g.second_directional(s, v) if jac.shape[0] else np.zeros_like(s)
    if project is None and pair.support_set is not None:
        project = pair.support_set.project
    path = TangentPath(s, v, q, 0.5 * pair.radius, project)
    try:
        return path.fit(_path_grid(path.delta, path.delta) if ts is None else ts)
    except ConeError as e:
        raise ReductionError(f"projection failed along the path: {e}") from None


def chart_soundness(pair, count=200, radius=1e-3, rng=None, tol=1e-8):
    """Disagreements of s in S versus G(s) in K on points near sbar (half of them projected into S)."""
    rng = rng or np.random.default_rng(config.get("seed"))
    q = pair.support_set
    bad = 0
    for i in range(count):
        u = rng.standard_normal(pair.g.n)
        s = pair.sbar + radius * rng.uniform(0.1, 1.0) * u / np.linalg.norm(u)
        if i % 2:
            s = q.project(s)
        in_s, in_k = q.contains(s, tol), pair.contains(s, tol)
        if in_s != in_k and q.contains(s, 1e-6) != pair.contains(s, 1e-6):
            bad += 1
            log.debug("chart %s disagrees at %s (set %s, chart %s)", pair.name, s, in_s, in_k)
    return {"samples": count, "disagreements": bad, "rank_margin": pair.rank_margin}


def _face_structured(q):
    if isinstance(q, Product):
        return all(_face_structured(p) for p in q.parts)
    return isinstance(q, (Box, Polyhedron, Singleton))


def _face_delta(q, lam):
    if isinstance(q, Product):
        return min(_face_delta(p, c) for p, c in zip(q.parts, q.split(lam)))
    if isinstance(q, Box):
        slack = np.concatenate([q.hi - lam, lam - q.lo])
    elif isinstance(q, Polyhedron):
        slack = q.b - q.a @ lam
    else:
        return INF
    slack = slack[slack > 1e-8]
    return float(0.5 * slack.min()) if slack.size else INF


def _lin_tangent(q, lam):
    return linalg.complement(q.normal_cone(lam).affine_hull(), q.dim)


def verify_usotp(q, lam, radii=None, samples=8, directions=2, rng=None):
    """Fit uniform path constants near lam, or report where the path curvature blows up.

    Statistic per radius: median over sampled points of the largest residual ratio
    |xi(t) - s - t v| / (t^2/2), t in [r/10, r]. A median growing >= 2x per radius
    decade is a counter-witness. Without chart or face structure, samples landing in the
    interior are replaced by their reflection through lam.
    """
    lam = q.require_member(lam)
    rng = rng or np.random.default_rng(config.get("seed"))
    radii = config.get("sampler_radii") if radii is None else radii
    chart = None
    if _face_structured(q):
        method, delta = "face", min(1.0, _face_delta(q, lam))
        fixed = _lin_tangent(q, lam)
    else:
        chart = chart_for(q, lam)
        method = "chart" if chart is not None else "tangent"
        delta = 0.5 * chart.radius if chart is not None else 0.5 * max(radii)
        try:
            if chart is None:
                _lin_tangent(q, lam)
        except UnsupportedVariant:
            raise ReductionError(f"unsupported set: {q.kind} has no chart and no face structure") from None
    medians, worst, continuity = [], None, []
    for r in radii:
        ratios = []
        for _ in range(samples):
            u = rng.standard_normal(q.dim)
            u /= np.linalg.norm(u)
            s = q.project(lam + r * u)
            if method == "tangent" and np.linalg.norm(s - lam - r * u) <= 1e-12:
                s = q.project(lam - r * u)
            if method == "face":
                basis = fixed
            elif method == "chart":
                basis = usotp_subspace(chart, s)
                continuity.append((r, linalg.subspace_distance(basis, usotp_subspace(chart, lam), q.dim)))
            else:
                basis = _lin_tangent(q, s)
            best = 0.0
            for _ in range(directions if basis.shape[1] else 0):
                v = basis @ rng.standard_normal(basis.shape[1])
                v /= np.linalg.norm(v)
                if method == "chart":
                    path = tangent_path(chart, s, v, q.project, _path_grid(delta, r))
                else:
                    path = TangentPath(s, v, np.zeros(q.dim), delta, q.project).fit(_path_grid(delta, r))
                if path.sup_ratio > best:
                    best = path.sup_ratio
                if worst is None or path.sup_ratio > worst["ratio"]:
                    worst = {"ratio": path.sup_ratio, "lam": s, "direction": v, "radius": r}
            ratios.append(best)
        medians.append(float(np.median(ratios)) if ratios else 0.0)
    blowup = medians[0] > 1e-6 and all(b >= BLOWUP * a for a, b in zip(medians, medians[1:]))
    positive = [m for m in medians if m > 1e-9]
    uniform = not positive or max(positive) < 3 * min(positive)
    report = {"verdict": "fails" if blowup else "holds", "method": method, "delta": delta,
              "M": M_SAFETY * max(medians) if not blowup else INF, "per_radius": medians,
              "uniform": uniform, "witness": worst if blowup else None, "estimate": True}
    if continuity:
        report["subspace_drift"] = continuity
    log.info("uSOTP for %s at %s: %s (%s)", q.kind, lam, report["verdict"], method)
    return report
