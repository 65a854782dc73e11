"""Support sets Q (phi_d = sigma_Q): the non-cone variants and their geometry.

The cone variants (Subspace, SecondOrderCone, PsdCone, NegativePsdCone) and
Product live in cones.py and are support sets as well; everything here follows
the same ConvexSet interface:

    support(x)            sigma_Q(x), +inf allowed
    project(z)            Euclidean projection
    contains(p, tol)
    normal_cone(lam)      N_Q(lam) as a cone object (lam must lie in Q)
    tangent_cone(lam)     T_Q(lam) = N_Q(lam)°
    ri_membership(lam, margin)
    parallel_subspace()   basis of aff(Q) - aff(Q)
    recession_cone()
    face(x)               argmax_Q <., x>, i.e. the subdifferential of sigma_Q at x

`usotp` names what backs the uniform second-order tangent path property: "face"
for polyhedral sets (straight paths), "chart" where reduction.py has a C2
cone-reduction chart, None when nothing is known (PowerEpigraph fails it).

Matrix variants: MatrixInterval and Fantope act on svec coordinates; KyFanBall
acts on m x n matrices flattened row-major.
"""

import logging

import numpy as np
from scipy import linalg as sla
from scipy.optimize import brentq, linprog, minimize, minimize_scalar

from . import linalg
from .cones import (
    ACTIVE_TOL, INF, ConeError,
    ConvergenceError, ConvexSet, GeneratedCone, IntersectionCone, NotInSetError,
    PolyhedralCone, Product, PsdFaceCone, Ray, SecondOrderCone, StructuralCone, Subspace, SumCone,
    UnsupportedVariant, _check_margin, _frame_span, _vec, decode_array, dykstra, dykstra_limits,
    encode_array, from_json, membership_tol, negate, register_kind,
)

log = logging.getLogger(__name__)


def capped_simplex(y, k, equality=False, tol=1e-12):
    """Project y onto {0 <= s <= 1, sum(s) <= k} (or == k) by bisection on the multiplier."""
    y = np.asarray(y, dtype=float)
    if not equality:
        p = np.clip(y, 0.0, 1.0)
        if p.sum() <= k:
            return p
    lo, hi = y.min() - 1.0, y.max()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.clip(y - mid, 0.0, 1.0).sum() > k:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return np.clip(y - 0.5 * (lo + hi), 0.0, 1.0)


def capped_sum(s, k):
    """max <w, s> over 0 <= w <= 1, sum(w) <= k, for s sorted descending and >= 0."""
    s = np.asarray(s, dtype=float)
    whole = int(np.floor(k))
    total = s[:whole].sum()
    if whole < s.size:
        total += (k - whole) * s[whole]
    return float(total)


class FaceSet(ConvexSet):
    """{q in Q : <q, x> = sigma_Q(x)} for variants without a closed-form face."""

    kind = "face"

    def __init__(self, base, x):
        super().__init__(base.dim)
        self.base = base
        self.x = _vec(x, base.dim)
        self.level = base.support(self.x)
        if self.level == INF:
            raise NotInSetError("support function is +inf here; empty face")

    def contains(self, p, tol=None):
        tol = membership_tol(tol)
        p = _vec(p, self.dim)
        return (self.base.contains(p, tol)
                and p @ self.x >= self.level - tol * (1 + np.linalg.norm(self.x)))

    def project(self, z):
        nx2 = self.x @ self.x
        if nx2 == 0:
            return self.base.project(z)

        def half(p):
            gap = self.level - p @ self.x
            return p + max(gap, 0.0) * self.x / nx2

        p, _ = dykstra([self.base.project, half], z)
        return p


class Singleton(ConvexSet):
    kind = "singleton"
    usotp = "face"

    def __init__(self, point):
        self.point = _vec(point)
        super().__init__(self.point.size)

    def project(self, z):
        _vec(z, self.dim)
        return self.point.copy()

    def support(self, x):
        return float(self.point @ _vec(x, self.dim))

    def normal_cone(self, lam):
        self.require_member(lam)
        return Subspace.full(self.dim)

    def tangent_cone(self, lam):
        self.require_member(lam)
        return Subspace.zero(self.dim)

    def ri_membership(self, lam, margin=None):
        margin = _check_margin(margin)
        self.require_member(lam)
        return True

    def parallel_subspace(self):
        return np.zeros((self.dim, 0))

    def recession_cone(self):
        return Subspace.zero(self.dim)

    def face(self, x):
        return self

    def to_json(self):
        return {"kind": "singleton", "point": encode_array(self.point)}


@register_kind("singleton")
def _singleton_from_json(d):
    return Singleton(decode_array(d["point"]))


class Box(ConvexSet):
    """{q : lo <= q <= hi}; bounds may be infinite."""

    kind = "box"
    usotp = "face"

    def __init__(self, lo, hi):
        self.lo = _vec(lo)
        self.hi = _vec(hi, self.lo.size)
        if np.any(self.lo > self.hi):
            raise ConeError("empty box: lo > hi")
        super().__init__(self.lo.size)

    def project(self, z):
        return np.clip(_vec(z, self.dim), self.lo, self.hi)

    def contains(self, p, tol=None):
        tol = membership_tol(tol)
        p = _vec(p, self.dim)
        return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))

    def support(self, x):
        x = _vec(x, self.dim)
        total = 0.0
        for xi, lo, hi in zip(x, self.lo, self.hi):
            if xi > 0:
                total += xi * hi
            elif xi < 0:
                total += xi * lo
        return float(total)

    def _active(self, lam):
        lam = self.require_member(lam)
        return lam >= self.hi - ACTIVE_TOL, lam <= self.lo + ACTIVE_TOL

    def _rows(self, up, low):
        eye = np.eye(self.dim)
        return np.vstack([eye[up], -eye[low]])

    def normal_cone(self, lam):
        rows = self._rows(*self._active(lam))
        return GeneratedCone(rows.T, self.dim) if rows.shape[0] else Subspace.zero(self.dim)

    def tangent_cone(self, lam):
        rows = self._rows(*self._active(lam))
        return PolyhedralCone(rows, self.dim) if rows.shape[0] else Subspace.full(self.dim)

    def ri_membership(self, lam, margin=None):
        margin = _check_margin(margin)
        lam = self.require_member(lam)
        free = self.lo < self.hi
        return bool(np.all(lam[free] - self.lo[free] >= margin)
                    and np.all(self.hi[free] - lam[free] >= margin))

    def parallel_subspace(self):
        return np.eye(self.dim)[:, self.lo < self.hi]

    def recession_cone(self):
        eye = np.eye(self.dim)
        gens = [eye[i] for i in range(self.dim) if self.hi[i] == INF]
        gens += [-eye[i] for i in range(self.dim) if self.lo[i] == -INF]
        return GeneratedCone(np.array(gens).T, self.dim) if gens else Subspace.zero(self.dim)

    def face(self, x):
        x = _vec(x, self.dim)
        lo = np.where(x > 0, self.hi, self.lo)
        hi = np.where(x < 0, self.lo, self.hi)
        if np.any(np.isinf(lo[x != 0])) or np.any(np.isinf(hi[x != 0])):
            raise NotInSetError("support function is +inf here; empty face")
        return Box(lo, hi)

    def sample(self, rng, count, scale=1.0):
        lo = np.where(np.isinf(self.lo), -scale, self.lo)
        hi = np.where(np.isinf(self.hi), scale, self.hi)
        hi = np.maximum(hi, lo)
        return [lo + (hi - lo) * rng.random(self.dim) for _ in range(count)]

    def to_json(self):
        return {"kind": "box", "lo": encode_array(self.lo), "hi": encode_array(self.hi)}


@register_kind("box")
def _box_from_json(d):
    return Box(decode_array(d["lo"]), decode_array(d["hi"]))


class EuclideanBall(ConvexSet):
    kind = "ball"
    usotp = "chart"

    def __init__(self, center, radius=1.0):
        self.center = _vec(center)
        self.radius = float(radius)
        if self.radius < 0:
            raise ConeError("negative radius")
        super().__init__(self.center.size)

    def project(self, z):
        d = _vec(z, self.dim) - self.center
        nd = np.linalg.norm(d)
        if nd <= self.radius:
            return self.center + d
        return self.center + self.radius * d / nd

    def support(self, x):
        x = _vec(x, self.dim)
        return float(self.center @ x + self.radius * np.linalg.norm(x))

    def _offset(self, lam):
        d = self.require_member(lam) - self.center
        on_sphere = np.linalg.norm(d) >= self.radius - ACTIVE_TOL * (1 + self.radius)
        return d, on_sphere

    def normal_cone(self, lam):
        d, on_sphere = self._offset(lam)
        if self.radius == 0:
            return Subspace.full(self.dim)
        return Ray(d) if on_sphere else Subspace.zero(self.dim)

    def tangent_cone(self, lam):
        d, on_sphere = self._offset(lam)
        if self.radius == 0:
            return Subspace.zero(self.dim)
        return PolyhedralCone(d.reshape(1, -1)) if on_sphere else Subspace.full(self.dim)

    def ri_membership(self, lam, margin=None):
        margin = _check_margin(margin)
        lam = self.require_member(lam)
        if self.radius == 0:
            return True
        return np.linalg.norm(lam - self.center) <= self.radius - margin

    def parallel_subspace(self):
        return np.eye(self.dim) if self.radius > 0 else np.zeros((self.dim, 0))

    def recession_cone(self):
        return Subspace.zero(self.dim)

    def face(self, x):
        x = _vec(x, self.dim)
        nx = np.linalg.norm(x)
        if nx == 0:
            return self
        return Singleton(self.center + self.radius * x / nx)

    def to_json(self):
        return {"kind": "ball", "center": encode_array(self.center), "radius": self.radius}


@register_kind("ball")
def _ball_from_json(d):
    return EuclideanBall(decode_array(d["center"]), float(d["radius"]))


class Polyhedron(ConvexSet):
    """{q : A q <= b}."""

    kind = "polyhedron"
    usotp = "face"

    def __init__(self, a, b):
        self.b = _vec(b)
        a = np.asarray(a, dtype=float)
        super().__init__(a.shape[-1])
        self.a = a.reshape(self.b.size, self.dim)

    def support(self, x):
        x = _vec(x, self.dim)
        res = linprog(-x, A_ub=self.a, b_ub=self.b, bounds=[(None, None)] * self.dim,
                      method="highs")
        if res.status == 3:
            return INF
        if res.status == 2:
            raise ConeError("empty polyhedron")
        return float(-res.fun)

    def contains(self, p, tol=None):
        tol = membership_tol(tol)
        p = _vec(p, self.dim)
        if not self.a.shape[0] or np.max(self.a @ p - self.b) <= 0:
            return True
        return self.distance(p) <= tol

    def project(self, z):
        z = _vec(z, self.dim)
        if not self.a.shape[0] or np.max(self.a @ z - self.b) <= 0:
            return z.copy()
        res = minimize(lambda q: 0.5 * np.sum((q - z) ** 2), z, jac=lambda q: q - z,
                       constraints=[{"type": "ineq", "fun": lambda q: self.b - self.a @ q,
                                     "jac": lambda q: -self.a}],
                       method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
        q = res.x
        act = self.a @ q - self.b >= -1e-7
        if np.any(act):
            ai = self.a[act]
            mu = np.linalg.lstsq(ai @ ai.T, ai @ z - self.b[act], rcond=None)[0]
            polished = z - ai.T @ mu
            if np.max(self.a @ polished - self.b) <= 1e-10 and mu.min() >= -1e-10:
                q = polished
        if np.max(self.a @ q - self.b) > 1e-7:
            raise ConvergenceError(f"polyhedral projection failed: {res.message}")
        return q

    def _active_rows(self, lam):
        lam = self.require_member(lam)
        return self.a[self.a @ lam - self.b >= -ACTIVE_TOL * (1 + np.abs(self.b))]

    def normal_cone(self, lam):
        rows = self._active_rows(lam)
        return GeneratedCone(rows.T, self.dim) if rows.shape[0] else Subspace.zero(self.dim)

    def tangent_cone(self, lam):
        rows = self._active_rows(lam)
        return PolyhedralCone(rows, self.dim) if rows.shape[0] else Subspace.full(self.dim)

    def implicit_equalities(self):
        return np.array([self.support(ai) <= bi + 1e-9 * (1 + abs(bi))
                         for ai, bi in zip(self.a, self.b)], dtype=bool)

    def parallel_subspace(self):
        eq = self.implicit_equalities() if self.a.shape[0] else np.zeros(0, dtype=bool)
        return linalg.nullspace(self.a[eq]) if np.any(eq) else np.eye(self.dim)

    def ri_membership(self, lam, margin=None):
        margin = _check_margin(margin)
        lam = self.require_member(lam)
        if not self.a.shape[0]:
            return True
        eq = self.implicit_equalities()
        par = linalg.projector(self.parallel_subspace(), self.dim)
        slack = self.b - self.a @ lam
        reach = np.linalg.norm(self.a @ par, axis=1)
        return bool(np.all(slack[~eq] >= margin * reach[~eq]))

    def recession_cone(self):
        return PolyhedralCone(self.a, self.dim) if self.a.shape[0] else Subspace.full(self.dim)

    def face(self, x):
        x = _vec(x, self.dim)
        level = self.support(x)
        if level == INF:
            raise NotInSetError("support function is +inf here; empty face")
        return Polyhedron(np.vstack([self.a, -x]), np.append(self.b, -level))

    def to_json(self):
        return {"kind": "polyhedron", "A": encode_array(self.a), "b": encode_array(self.b)}


@register_kind("polyhedron")
def _poly_from_json(d):
    return Polyhedron(decode_array(d["A"]), decode_array(d["b"]))


def _kernel_frame(s, scale=None):
    """Orthonormal basis of the (numerical) kernel of a psd matrix."""
    w, v = linalg.eigh(s)
    scale = scale if scale is not None else max(1.0, np.abs(w).max(initial=0.0))
    return v[:, w <= ACTIVE_TOL * scale]


class MatrixInterval(ConvexSet):
    """{X symmetric : L <= X <= U} in svec coordinates."""

    kind = "matrix-interval"
    usotp = "chart"

    def __init__(self, lower, upper):
        self.lower = linalg.sym(lower)
        self.upper = linalg.sym(upper)
        self.order = self.lower.shape[0]
        super().__init__(linalg.svec_dim(self.order))
        w, v = linalg.eigh(self.upper - self.lower)
        if w.size and w[0] < -1e-10 * max(1.0, np.abs(w).max()):
            raise ConeError("empty matrix interval: U - L is not psd")
        w = np.maximum(w, 0.0)
        self._dhalf = (v * np.sqrt(w)) @ v.T
        self._range = v[:, w > 1e-12 * max(1.0, w.max(initial=0.0))]
        self._scalar = None
        eye = np.eye(self.order)
        lo, hi = self.lower[0, 0], self.upper[0, 0]
        if np.array_equal(self.lower, lo * eye) and np.array_equal(self.upper, hi * eye):
            self._scalar = (lo, hi)

    def support(self, x):
        xm = linalg.smat(_vec(x, self.dim))
        y = self._dhalf @ xm @ self._dhalf
        w = linalg.eigh(y)[0]
        return float(np.sum(self.lower * xm) + w[w > 0].sum())

    def contains(self, p, tol=None):
        tol = membership_tol(tol)
        pm = linalg.smat(_vec(p, self.dim))
        return (linalg.eigh(pm - self.lower)[0][0] >= -tol
                and linalg.eigh(self.upper - pm)[0][0] >= -tol)

    def project(self, z):
        if self._scalar is not None:
            w, v = linalg.eigh(linalg.smat(_vec(z, self.dim)))
            w = np.clip(w, *self._scalar)
            return linalg.svec((v * w) @ v.T)
        return self.dykstra_project(z)

    def dykstra_project(self, z, max_iter=None, tol=None):
        """Alternate between {X >= L} and {X <= U}; valid for non-commuting data."""
        def above(p):
            return linalg.svec(self.lower + linalg.psd_part(linalg.smat(p) - self.lower))

        def below(p):
            return linalg.svec(self.upper - linalg.psd_part(self.upper - linalg.smat(p)))

        p, iters = dykstra([above, below], _vec(z, self.dim), max_iter, tol)
        log.debug("matrix-interval Dykstra: %d iterations", iters)
        return p

    def _frames(self, lam):
        lm = linalg.smat(self.require_member(lam))
        scale = max(1.0, np.abs(self.upper).max(), np.abs(self.lower).max())
        return _kernel_frame(lm - self.lower, scale), _kernel_frame(self.upper - lm, scale)

    def normal_cone(self, lam):
        at_lower, at_upper = self._frames(lam)
        parts = []
        if at_lower.shape[1]:
            parts.append(PsdFaceCone(at_lower, self.order, -1.0))
        if at_upper.shape[1]:
            parts.append(PsdFaceCone(at_upper, self.order, 1.0))
        if not parts:
            return Subspace.zero(self.dim)
        return parts[0] if len(parts) == 1 else SumCone(parts)

    def ri_membership(self, lam, margin=None):
        margin = _check_margin(margin)
        lm = linalg.smat(self.require_member(lam))
        r = self._range
        if not r.shape[1]:
            return True
        return (linalg.eigh(r.T @ (lm - self.lower) @ r)[0][0] >= margin
                and linalg.eigh(r.T @ (self.upper - lm) @ r)[0][0] >= margin)

    def parallel_subspace(self):
        return _frame_span(self._range, self.order)

    def recession_cone(self):
        return Subspace.zero(self.dim)

    def face(self, x):
        xm = linalg.smat(_vec(x, self.dim))
        w, v = linalg.eigh(self._dhalf @ xm @ self._dhalf)
        tol = 1e-9 * max(1.0, np.abs(w).max(initial=0.0))
        pos, zero = v[:, w > tol], v[:, np.abs(w) <= tol]
        base = self.lower + self._dhalf @ pos @ pos.T @ self._dhalf
        k = self._dhalf @ zero
        return MatrixInterval(base, base + k @ k.T)

    def to_json(self):
        return {"kind": "matrix-interval", "L": encode_array(self.lower),
                "U": encode_array(self.upper)}


@register_kind("matrix-interval")
def _mi_from_json(d):
    return MatrixInterval(decode_array(d["L"]), decode_array(d["U"]))


def _pair_span(u, v, symmetric):
    """Basis (flattened m x n) of {U S V^T}: S symmetric (square blocks) or arbitrary."""
    cols = []
    if symmetric:
        for i in range(u.shape[1]):
            for j in range(i, u.shape[1]):
                cols.append((np.outer(u[:, i], v[:, j]) + np.outer(u[:, j], v[:, i])).ravel())
    else:
        for i in range(u.shape[1]):
            for j in range(v.shape[1]):
                cols.append(np.outer(u[:, i], v[:, j]).ravel())
    return cols


class KyFanBall(ConvexSet):
    """{B in R^{m x n} : ||B||_2 <= 1, ||B||_* <= k}; sigma_Q is the Ky Fan k-norm."""

    kind = "kyfan-ball"
    usotp = "chart"

    def __init__(self, m, n, k):
        self.m, self.n, self.k = int(m), int(n), float(k)
        if self.k <= 0:
            raise ConeError("Ky Fan ball needs k > 0")
        super().__init__(self.m * self.n)
        self.rank = min(self.m, self.n)

    def mat(self, p):
        return _vec(p, self.dim).reshape(self.m, self.n)

    def support(self, x):
        return capped_sum(linalg.svd(self.mat(x))[1], self.k)

    def contains(self, p, tol=None):
        tol = membership_tol(tol)
        s = linalg.svd(self.mat(p))[1]
        return s.max(initial=0.0) <= 1 + tol and s.sum() <= self.k + tol

    def project(self, z):
        u, s, v = linalg.svd(self.mat(z))
        s = capped_simplex(s, self.k)
        r = s.size
        return ((u[:, :r] * s) @ v[:, :r].T).ravel()

    def _blocks(self, lam):
        u, s, v = linalg.svd(self.mat(self.require_member(lam)))
        r = self.rank
        a = np.flatnonzero(s >= 1 - ACTIVE_TOL)
        c = np.flatnonzero(s <= ACTIVE_TOL)
        b = np.setdiff1d(np.arange(r), np.union1d(a, c))
        nuclear = s.sum() >= self.k - ACTIVE_TOL * (1 + self.k)
        uc = np.hstack([u[:, c], u[:, r:]])
        vc = np.hstack([v[:, c], v[:, r:]])
        return (u[:, a], v[:, a]), (u[:, b], v[:, b]), (uc, vc), nuclear

    def normal_cone(self, lam):
        lam = _vec(lam, self.dim)
        (ua, va), (ub, vb), (uc, vc), nuclear = self._blocks(lam)
        cols = _pair_span(ua, va, True)
        if nuclear:
            if ub.shape[1]:
                cols.append((ub @ vb.T).ravel())
            cols += _pair_span(uc, vc, False)
        aff = linalg.orth(np.array(cols).T) if cols else np.zeros((self.dim, 0))

        def member(x, tol):
            return self.support(x) - lam @ x <= tol * (1 + np.linalg.norm(x))

        def tangent_member(h, tol):
            hm = self.mat(h)
            slack = tol * (1 + np.linalg.norm(h))
            if ua.shape[1] and linalg.eigh(linalg.sym(ua.T @ hm @ va))[0][-1] > slack:
                return False
            if nuclear:
                lead = np.trace(ua.T @ hm @ va) + np.trace(ub.T @ hm @ vb)
                tail = linalg.svd(uc.T @ hm @ vc)[1].sum() if uc.shape[1] and vc.shape[1] else 0.0
                if lead + tail > slack:
                    return False
            return True

        lin_n = np.zeros((self.dim, 0))
        normal = []

        def tangent():
            return StructuralCone(self.dim, "kyfan-tangent", tangent_member, np.eye(self.dim),
                                  linalg.complement(aff, self.dim), lambda: normal[0])

        normal.append(StructuralCone(self.dim, "kyfan-normal", member, aff, lin_n, tangent))
        return normal[0]

    def ri_membership(self, lam, margin=None):
        margin = _check_margin(margin)
        s = linalg.svd(self.mat(self.require_member(lam)))[1]
        ok = s.max(initial=0.0) + margin <= 1
        if self.k < self.rank:
            ok = ok and s.sum() + margin * np.sqrt(self.rank) <= self.k
        return bool(ok)

    def parallel_subspace(self):
        return np.eye(self.dim)

    def recession_cone(self):
        return Subspace.zero(self.dim)

    def to_json(self):
        return {"kind": "kyfan-ball", "m": self.m, "n": self.n, "k": self.k}


@register_kind("kyfan-ball")
def _kyfan_from_json(d):
    return KyFanBall(int(d["m"]), int(d["n"]), float(d["k"]))


class Fantope(ConvexSet):
    """{B symmetric r x r : 0 <= B <= I, tr B = k}; sigma_Q sums the k largest eigenvalues."""

    kind = "fantope"
    usotp = "chart"

    def __init__(self, order, k):
        self.order, self.k = int(order), int(k)
        if not 0 <= self.k <= self.order:
            raise ConeError("Fantope needs 0 <= k <= order")
        super().__init__(linalg.svec_dim(self.order))
        self._trace = linalg.svec(np.eye(self.order)) / np.sqrt(self.order)

    def support(self, x):
        w = linalg.eigh(linalg.smat(_vec(x, self.dim)))[0]
        return float(w[::-1][:self.k].sum())

    def contains(self, p, tol=None):
        tol = membership_tol(tol)
        pm = linalg.smat(_vec(p, self.dim))
        w = linalg.eigh(pm)[0]
        return w[0] >= -tol and w[-1] <= 1 + tol and abs(np.trace(pm) - self.k) <= tol

    def project(self, z):
        w, v = linalg.eigh(linalg.smat(_vec(z, self.dim)))
        mu = capped_simplex(w, self.k, equality=True)
        return linalg.svec((v * mu) @ v.T)

    def _blocks(self, lam):
        w, v = linalg.eigh(linalg.smat(self.require_member(lam)))
        return v[:, w >= 1 - ACTIVE_TOL], v[:, w <= ACTIVE_TOL]

    def normal_cone(self, lam):
        lam = _vec(lam, self.dim)
        ua, uc = self._blocks(lam)
        aff = linalg.orth(np.hstack([self._trace.reshape(-1, 1),
                                     _frame_span(ua, self.order), _frame_span(uc, self.order)]))
        lin = self._trace.reshape(-1, 1)

        def member(x, tol):
            return self.support(x) - lam @ x <= tol * (1 + np.linalg.norm(x))

        def tangent_member(h, tol):
            hm = linalg.smat(h)
            slack = tol * (1 + np.linalg.norm(h))
            if abs(np.trace(hm)) > slack:
                return False
            if ua.shape[1] and linalg.eigh(ua.T @ hm @ ua)[0][-1] > slack:
                return False
            if uc.shape[1] and linalg.eigh(uc.T @ hm @ uc)[0][0] < -slack:
                return False
            return True

        normal = []

        def tangent():
            return StructuralCone(self.dim, "fantope-tangent", tangent_member,
                                  linalg.complement(lin, self.dim),
                                  linalg.complement(aff, self.dim), lambda: normal[0])

        normal.append(StructuralCone(self.dim, "fantope-normal", member, aff, lin, tangent))
        return normal[0]

    def ri_membership(self, lam, margin=None):
        margin = _check_margin(margin)
        w = linalg.eigh(linalg.smat(self.require_member(lam)))[0]
        if self.k in (0, self.order):
            return True
        reach = margin * np.sqrt((self.order - 1) / self.order)
        return bool(w[0] >= reach and 1 - w[-1] >= reach)

    def parallel_subspace(self):
        if self.k in (0, self.order):
            return np.zeros((self.dim, 0))
        return linalg.complement(self._trace, self.dim)

    def recession_cone(self):
        return Subspace.zero(self.dim)

    def to_json(self):
        return {"kind": "fantope", "order": self.order, "k": self.k}


@register_kind("fantope")
def _fantope_from_json(d):
    return Fantope(int(d["order"]), int(d["k"]))


class AffinePreimage(ConvexSet):
    """{p : A p + b in inner}; membership and projection only (ADMM inner solver)."""

    kind = "affine-preimage"

    def __init__(self, inner, a, b=None):
        self.inner = inner
        a = np.asarray(a, dtype=float)
        self.a = a.reshape(inner.dim, -1)
        super().__init__(self.a.shape[1])
        self.b = np.zeros(inner.dim) if b is None else _vec(b, inner.dim)
        self._chol = sla.cho_factor(np.eye(self.dim) + self.a.T @ self.a)

    def contains(self, p, tol=None):
        tol = membership_tol(tol)
        return self.inner.contains(self.a @ _vec(p, self.dim) + self.b, tol)

    def project(self, z, max_iter=None, tol=1e-12):
        max_iter = dykstra_limits(max_iter)[0]
        z = _vec(z, self.dim)
        p = z.copy()
        y = self.inner.project(self.a @ p + self.b)
        u = np.zeros(self.inner.dim)
        for it in range(1, max_iter + 1):
            p = sla.cho_solve(self._chol, z + self.a.T @ (y - self.b - u))
            ap = self.a @ p + self.b
            y_new = self.inner.project(ap + u)
            u += ap - y_new
            primal = np.linalg.norm(ap - y_new)
            dual = np.linalg.norm(self.a.T @ (y_new - y))
            y = y_new
            if primal < tol and dual < tol:
                log.debug("affine-preimage ADMM: %d iterations", it)
                return p
        raise ConvergenceError(f"ADMM projection did not converge in {max_iter} iterations")

    def parallel_subspace(self):
        par = linalg.projector(self.inner.parallel_subspace(), self.inner.dim)
        return linalg.nullspace((np.eye(self.inner.dim) - par) @ self.a)

    def to_json(self):
        return {"kind": "affine-preimage", "inner": self.inner.to_json(),
                "A": encode_array(self.a), "b": encode_array(self.b)}


@register_kind("affine-preimage")
def _ap_from_json(d):
    return AffinePreimage(from_json(d["inner"]), decode_array(d["A"]), decode_array(d["b"]))


class SocSlice(AffinePreimage):
    """{x in SOC(n+1) : A x = b}; A has one row per linear constraint."""

    kind = "soc-slice"
    usotp = "chart"

    def __init__(self, a, b):
        self.rows = np.atleast_2d(np.asarray(a, dtype=float))
        self.rhs = np.atleast_1d(np.asarray(b, dtype=float)).ravel()
        if self.rhs.size != self.rows.shape[0]:
            raise ConeError(f"slice has {self.rows.shape[0]} rows but {self.rhs.size} right-hand sides")
        dim = self.rows.shape[1]
        super().__init__(Product([Singleton(self.rhs), SecondOrderCone(dim)]),
                         np.vstack([self.rows, np.eye(dim)]))
        self._soc = SecondOrderCone(dim)

    def _dual_interval(self, y):
        """{eta : eta a - y in SOC} as (lo, hi) for the single row a; None when empty."""
        row = self.rows[0]
        a0, abar, y0, ybar = row[0], row[1:], y[0], y[1:]

        def gap(eta):
            return (eta * a0 - y0) - np.linalg.norm(eta * abar - ybar)

        coef = [a0 ** 2 - abar @ abar, -2 * (a0 * y0 - abar @ ybar), y0 ** 2 - ybar @ ybar]
        cands = []
        if np.any(np.abs(coef) > 0):
            cands += [r.real for r in np.roots(coef) if abs(r.imag) <= 1e-12 * (1 + abs(r))]
        if a0 != 0:
            cands.append(y0 / a0)
        cands = sorted(set(cands)) or [0.0]
        reach = 1.0 + 10.0 * max(abs(c) for c in cands)
        probes = [cands[0] - reach] + cands + [0.5 * (p + q) for p, q in zip(cands, cands[1:])]
        probes.append(cands[-1] + reach)
        slack = 1e-12 * (1 + np.linalg.norm(y))
        feasible = sorted(e for e in probes if gap(e) >= -slack * (1 + abs(e)))
        if not feasible:
            return None
        lo = -INF if feasible[0] == probes[0] else feasible[0]
        hi = INF if feasible[-1] == probes[-1] else feasible[-1]
        return lo, hi

    def _dual_support(self, y):
        """inf {<b, eta> : A^T eta - y in SOC} by SLSQP, for two or more rows."""
        a, b = self.rows, self.rhs

        def cone_gap(eta):
            u = a.T @ eta - y
            return np.array([u[0], u[0] ** 2 - u[1:] @ u[1:]])

        axis = np.zeros(self.dim)
        axis[0] = 1.0 + np.linalg.norm(y)
        start = np.linalg.lstsq(a.T, y + axis, rcond=None)[0]
        res = minimize(lambda eta: b @ eta, start, jac=lambda eta: b, method="SLSQP",
                       constraints=[{"type": "ineq", "fun": cone_gap}],
                       options={"maxiter": 500, "ftol": 1e-13})
        u = a.T @ res.x - y
        if u[0] - np.linalg.norm(u[1:]) < -1e-7 * (1 + np.linalg.norm(y)):
            return INF
        if res.fun < -1e12:
            raise ConeError("slice is empty (dual unbounded)")
        return float(res.fun)

    def support(self, x):
        y = _vec(x, self.dim)
        if self.rows.shape[0] > 1:
            return self._dual_support(y)
        beta = self.rhs[0]
        span = self._dual_interval(y)
        if span is None:
            return INF
        if beta == 0:
            return 0.0
        end = span[0] if beta > 0 else span[1]
        if np.isinf(end):
            raise ConeError("slice is empty (dual unbounded)")
        return float(beta * end)

    def _case(self, lam):
        lam = self.require_member(lam, 1e-7)
        if np.linalg.norm(lam) <= ACTIVE_TOL:
            return "apex", lam
        if lam[0] - np.linalg.norm(lam[1:]) > ACTIVE_TOL * (1 + lam[0]):
            return "interior", lam
        return "boundary", lam

    def normal_cone(self, lam):
        case, lam = self._case(lam)
        rowspace = self.rows.T
        if case == "interior":
            return Subspace(rowspace, self.dim)
        if case == "boundary":
            ray = np.concatenate([[-1.0], lam[1:] / np.linalg.norm(lam[1:])])
            return GeneratedCone(np.hstack([rowspace, -rowspace, ray.reshape(-1, 1)]), self.dim)
        return SumCone([Subspace(rowspace, self.dim), negate(self._soc)])

    def tangent_cone(self, lam):
        case, lam = self._case(lam)
        if case == "apex":
            return IntersectionCone([Subspace(linalg.nullspace(self.rows), self.dim), self._soc])
        return self.normal_cone(lam).polar()

    def ri_membership(self, lam, margin=None):
        margin = _check_margin(margin)
        lam = self.require_member(lam, 1e-7)
        return (lam[0] - np.linalg.norm(lam[1:])) / np.sqrt(2.0) >= margin

    def parallel_subspace(self):
        return linalg.nullspace(self.rows)

    def recession_cone(self):
        return IntersectionCone([Subspace(self.parallel_subspace(), self.dim), self._soc])

    def face(self, x):
        if not np.any(_vec(x, self.dim)):
            return self
        return FaceSet(self, x)

    def to_json(self):
        return {"kind": "soc-slice", "A": encode_array(self.rows), "b": encode_array(self.rhs)}


@register_kind("soc-slice")
def _slice_from_json(d):
    return SocSlice(decode_array(d["A"]), decode_array(d["b"]))


class PowerEpigraph(ConvexSet):
    """{x in R^2 : x2 >= c |x1|^p}, p > 1.

    With c = 2/3, p = 3/2 the support function is |y1|^3 / (3 y2^2) on y2 < 0, 0 at
    the origin and +inf elsewhere; in general K |y1|^q (-y2)^(1-q) with q = p/(p-1).
    """

    kind = "power-epigraph"

    def __init__(self, c=2.0 / 3.0, p=1.5):
        super().__init__(2)
        self.c, self.p = float(c), float(p)
        if self.c <= 0 or self.p <= 1:
            raise ConeError("power epigraph needs c > 0 and p > 1")
        self.q = self.p / (self.p - 1)
        self.const = (self.c * self.p) ** (1 - self.q) / self.q

    def _height(self, s):
        return self.c * abs(s) ** self.p

    def support(self, x):
        y1, y2 = _vec(x, 2)
        if y2 < 0:
            return float(self.const * abs(y1) ** self.q * (-y2) ** (1 - self.q))
        if y1 == 0 and y2 == 0:
            return 0.0
        return INF

    def support_gradient(self, x):
        y1, y2 = _vec(x, 2)
        if not y2 < 0:
            raise ConeError("support function is smooth only on y2 < 0")
        a, b, k, q = abs(y1), -y2, self.const, self.q
        return np.array([k * q * a ** (q - 1) * np.sign(y1) * b ** (1 - q),
                         k * (q - 1) * a ** q * b ** (-q)])

    def support_hessian(self, x):
        y1, y2 = _vec(x, 2)
        if not y2 < 0:
            raise ConeError("support function is smooth only on y2 < 0")
        a, b, kq = abs(y1), -y2, self.const * self.q * (self.q - 1)
        h11 = kq * a ** (self.q - 2) * b ** (1 - self.q) if a > 0 or self.q >= 2 else INF
        h12 = kq * np.sign(y1) * a ** (self.q - 1) * b ** (-self.q)
        h22 = kq * a ** self.q * b ** (-self.q - 1)
        return np.array([[h11, h12], [h12, h22]])

    def contains(self, p, tol=None):
        tol = membership_tol(tol)
        x1, x2 = _vec(p, 2)
        return x2 >= self._height(x1) - tol or self.distance(p) <= tol

    def project(self, z):
        z1, z2 = _vec(z, 2)
        if z2 >= self._height(z1):
            return np.array([z1, z2])
        a = abs(z1)
        if a == 0:
            return np.zeros(2)
        cp = self.c * self.p

        def stationarity(s):
            return (s - a) + (self.c * s ** self.p - z2) * cp * s ** (self.p - 1)

        s = brentq(stationarity, 0.0, a, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        return np.array([np.sign(z1) * s, self._height(s)])

    def normal_cone(self, lam):
        x1, x2 = self.require_member(lam)
        if x2 - self._height(x1) > ACTIVE_TOL:
            return Subspace.zero(2)
        if abs(x1) <= ACTIVE_TOL and abs(x2) <= ACTIVE_TOL:
            return Ray([0.0, -1.0])
        return Ray([self.c * self.p * abs(x1) ** (self.p - 1) * np.sign(x1), -1.0])

    def ri_membership(self, lam, margin=None):
        margin = _check_margin(margin)
        x1, x2 = self.require_member(lam)
        vertical = x2 - self._height(x1)
        if vertical < margin:
            return False
        res = minimize_scalar(lambda s: np.hypot(s - x1, self._height(s) - x2),
                              bounds=(x1 - vertical, x1 + vertical), method="bounded",
                              options={"xatol": 1e-12})
        return bool(min(res.fun, vertical) >= margin)

    def parallel_subspace(self):
        return np.eye(2)

    def recession_cone(self):
        return Ray([0.0, 1.0])

    def face(self, x):
        y1, y2 = _vec(x, 2)
        if y2 < 0:
            s = (abs(y1) / (self.c * self.p * -y2)) ** (self.q - 1)
            return Singleton([np.sign(y1) * s, self._height(s)])
        if y1 == 0 and y2 == 0:
            return self
        raise NotInSetError("support function is +inf here; empty face")

    def to_json(self):
        return {"kind": "power-epigraph", "c": self.c, "p": self.p}


@register_kind("power-epigraph")
def _power_from_json(d):
    return PowerEpigraph(float(d["c"]), float(d["p"]))
