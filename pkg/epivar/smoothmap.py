"""The inner C2 map F of a decomposable function.

A SmoothMap wraps callbacks for the value, the Jacobian (m x n) and the second
directional derivative D2F(x)[h, h]. Missing derivatives fall back to central
differences (first order with step 1e-5 * (1 + ||x||), second order with step
1e-3 * (1 + ||x||)); such maps report analytic=False.

Built-in maps are registered by name for instance files and the CLI:

    identity         F(x) = x - xbar            (params: dim, basepoint)
    soc-slice        identity on R^(n+1)       (params: dim, basepoint)
    matrix-interval  identity on svec(S^n)     (params: order, basepoint)
    kyfan            identity on R^(m*n)       (params: m, n, basepoint)
    counterexample   identity on R^2
    saddle-demo      F(x) = (x1^2 - x2^2, x1)
    norm-lift        F(x) = (x, ||x||^2)        (params: dim)
    linear           F(x) = A x + b            (params: A, b)
"""

import numpy as np

from . import linalg

FD_STEP_1 = 1e-5
FD_STEP_2 = 1e-3


class SmoothMapError(Exception):
    pass


class SmoothMap:
    def __init__(self, n, m, value, jacobian=None, second=None, bilinear=None,
                 name="custom", params=None):
        self.n, self.m = int(n), int(m)
        self.name = name
        self.params = params or {}
        self._value = value
        self._jacobian = jacobian
        self._second = second
        self._bilinear = bilinear
        self.analytic = jacobian is not None and second is not None
        self.shift = None      # xbar when F(x) = x - xbar

    def __repr__(self):
        return f"<SmoothMap {self.name} R^{self.n} -> R^{self.m}>"

    def _x(self, x):
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n:
            raise SmoothMapError(f"{self.name}: expected a point of R^{self.n}, got {x.size} entries")
        return x

    def value(self, x):
        return np.asarray(self._value(self._x(x)), dtype=float).ravel()

    def __call__(self, x):
        return self.value(x)

    def jacobian(self, x):
        x = self._x(x)
        if self._jacobian is not None:
            return np.asarray(self._jacobian(x), dtype=float).reshape(self.m, self.n)
        return fd_jacobian(self.value, x, self.m)

    def second_directional(self, x, h):
        x, h = self._x(x), self._x(h)
        if self._second is not None:
            return np.asarray(self._second(x, h), dtype=float).ravel()
        return fd_second(self.value, x, h)

    def second_bilinear(self, x, h1, h2):
        if self._bilinear is not None:
            return np.asarray(self._bilinear(self._x(x), self._x(h1), self._x(h2)), dtype=float)
        h1, h2 = self._x(h1), self._x(h2)
        return 0.25 * (self.second_directional(x, h1 + h2) - self.second_directional(x, h1 - h2))

    def weighted_hessian(self, x, lam):
        """Matrix of the quadratic form h -> <lam, D2F(x)[h, h]>."""
        lam = np.asarray(lam, dtype=float).ravel()
        eye = np.eye(self.n)
        out = np.empty((self.n, self.n))
        for j in range(self.n):
            for k in range(j, self.n):
                out[j, k] = out[k, j] = lam @ self.second_bilinear(x, eye[j], eye[k])
        return out

    def derivative_report(self, x, h):
        """Max deviation of the derivatives from finite differences at x along h."""
        x, h = self._x(x), self._x(h)
        jac_err = float(np.max(np.abs(self.jacobian(x) - fd_jacobian(self.value, x, self.m)),
                               initial=0.0))
        exact = self.second_directional(x, h)
        approx = fd_second(self.value, x, h)
        sec_err = float(np.linalg.norm(exact - approx) / max(1.0, np.linalg.norm(exact)))
        return {"jacobian_error": jac_err, "second_error": sec_err}


def fd_jacobian(f, x, m):
    step = FD_STEP_1 * (1 + np.linalg.norm(x))
    out = np.empty((m, x.size))
    for j in range(x.size):
        e = np.zeros(x.size)
        e[j] = step
        out[:, j] = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * step)
    return out


def fd_second(f, x, h):
    nh = np.linalg.norm(h)
    if nh == 0:
        return np.zeros(np.asarray(f(x)).size)
    eps = FD_STEP_2 * (1 + np.linalg.norm(x)) / nh
    return (np.asarray(f(x + eps * h)) - 2 * np.asarray(f(x)) + np.asarray(f(x - eps * h))) / eps ** 2


def taylor_residual(fmap, x, h, t):
    """(F(x+th) - F(x) - t DF(x)h - t^2/2 D2F(x)[h,h]) / t^2."""
    if not t > 0:
        raise SmoothMapError("taylor_residual needs t > 0")
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    lin = fmap.jacobian(x) @ h
    quad = fmap.second_directional(x, h)
    return (fmap.value(x + t * h) - fmap.value(x) - t * lin - 0.5 * t * t * quad) / (t * t)


def preimage_of_subspace(fmap, x, basis):
    """Orthonormal basis of DF(x)^{-1} span(basis)."""
    jac = fmap.jacobian(x)
    proj = linalg.projector(basis, fmap.m)
    return linalg.nullspace((np.eye(fmap.m) - proj) @ jac)


# --- built-in maps -------------------------------------------------------------------
def linear(a, b=None, name="linear"):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    m, n = a.shape
    b = np.zeros(m) if b is None else np.asarray(b, dtype=float).ravel()
    return SmoothMap(n, m, lambda x: a @ x + b, lambda x: a, lambda x, h: np.zeros(m),
                     lambda x, h1, h2: np.zeros(m), name=name,
                     params={"A": a.tolist(), "b": b.tolist()})


def identity(dim, basepoint=None, name="identity"):
    xbar = np.zeros(dim) if basepoint is None else np.asarray(basepoint, dtype=float).ravel()
    fmap = linear(np.eye(dim), -xbar, name=name)
    fmap.shift = xbar
    fmap.params = {"dim": int(dim), "basepoint": xbar.tolist()}
    return fmap


def saddle_demo():
    def value(x):
        return np.array([x[0] ** 2 - x[1] ** 2, x[0]])

    def jacobian(x):
        return np.array([[2 * x[0], -2 * x[1]], [1.0, 0.0]])

    def second(x, h):
        return np.array([2 * h[0] ** 2 - 2 * h[1] ** 2, 0.0])

    def bilinear(x, h1, h2):
        return np.array([2 * h1[0] * h2[0] - 2 * h1[1] * h2[1], 0.0])

    return SmoothMap(2, 2, value, jacobian, second, bilinear, name="saddle-demo")


def norm_lift(dim):
    def value(x):
        return np.append(x, x @ x)

    def jacobian(x):
        return np.vstack([np.eye(dim), 2 * x])

    def second(x, h):
        return np.append(np.zeros(dim), 2 * h @ h)

    def bilinear(x, h1, h2):
        return np.append(np.zeros(dim), 2 * h1 @ h2)

    return SmoothMap(dim, dim + 1, value, jacobian, second, bilinear, name="norm-lift",
                     params={"dim": int(dim)})


def _shifted(name, dim_of):
    def build(basepoint=None, **params):
        fmap = identity(dim_of(**params), basepoint, name=name)
        fmap.params = {"basepoint": fmap.params["basepoint"], **params}
        return fmap
    return build


MAPS = {
    "identity": lambda dim, basepoint=None: identity(dim, basepoint),
    "soc-slice": _shifted("soc-slice", lambda dim: int(dim)),
    "matrix-interval": _shifted("matrix-interval", lambda order: linalg.svec_dim(int(order))),
    "kyfan": _shifted("kyfan", lambda m, n: int(m) * int(n)),
    "counterexample": _shifted("counterexample", lambda: 2),
    "saddle-demo": saddle_demo,
    "norm-lift": norm_lift,
    "linear": lambda A, b=None: linear(A, b),
}


def build_map(name, **params):
    try:
        builder = MAPS[name]
    except KeyError:
        raise SmoothMapError(f"unknown map: {name!r} (known: {', '.join(sorted(MAPS))})") from None
    try:
        return builder(**params)
    except TypeError as e:
        raise SmoothMapError(f"bad parameters for map {name!r}: {e}") from None


def map_to_json(fmap):
    if fmap.name not in MAPS:
        raise SmoothMapError(f"map {fmap.name!r} is not registered; cannot encode it")
    return {"name": fmap.name, **fmap.params}


def map_from_json(data):
    if isinstance(data, str):
        return build_map(data)
    data = dict(data)
    return build_map(data.pop("name"), **data)
