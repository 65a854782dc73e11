"""Dense linear-algebra kernel shared by the set, map and chart modules.

Symmetric matrices are vectorized as the scaled upper triangle (off-diagonal
entries times sqrt(2)), so the trace inner product equals the plain dot product
of the vectors. Symmetric eigendecompositions of order <= JACOBI_MAX_ORDER use a
cyclic Jacobi sweep to an off-diagonal norm of 1e-12 * ||A||; singular value
decompositions come from the symmetric dilation [[0, X], [X^T, 0]].

Public API:
    svec(S) / smat(s) / svec_dim(n) / svec_order(d)
    sym(A)
    eigh(A)                  ascending eigenvalues, orthonormal eigenvectors
    svd(X)                   full U, singular values (descending), full V
    nullspace(A) / orth(A)   orthonormal bases (possibly with zero columns)
    complement(B, dim)       orthonormal basis of span(B)^perp
    projector(B)             orthogonal projector onto span(B)
    subspace_distance(B1, B2), same_subspace(B1, B2)
    psd_part(S, sign)        projection onto {sign * X >= 0}
"""

import logging

import numpy as np
from scipy import linalg as sla

log = logging.getLogger(__name__)

JACOBI_MAX_ORDER = 32
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 60
RANK_RTOL = 1e-8          # singular values below RANK_RTOL * sigma_max count as zero

_SQRT2 = np.sqrt(2.0)


class LinalgError(Exception):
    pass


# --- symmetric vectorization ------------------------------------------------
def svec_dim(n):
    return n * (n + 1) // 2


def svec_order(d):
    n = int(round((np.sqrt(8 * d + 1) - 1) / 2))
    if svec_dim(n) != d:
        raise LinalgError(f"{d} is not a triangular number")
    return n


def sym(a):
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


def svec(s):
    s = np.asarray(s, dtype=float)
    iu = np.triu_indices(s.shape[0])
    scale = np.where(iu[0] == iu[1], 1.0, _SQRT2)
    return s[iu] * scale


def smat(v):
    v = np.asarray(v, dtype=float)
    n = svec_order(v.size)
    iu = np.triu_indices(n)
    scale = np.where(iu[0] == iu[1], 1.0, 1.0 / _SQRT2)
    out = np.zeros((n, n))
    out[iu] = v * scale
    return out + np.triu(out, 1).T


# --- eigen / singular decompositions -----------------------------------------
def _jacobi(a):
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    for sweep in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= JACOBI_TOL * scale:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 if theta == 0 else np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * ap - s * aq, s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :], a[q, :] = c * ap - s * aq, s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
    log.debug("jacobi: %d sweeps without reaching tolerance (order %d)", JACOBI_MAX_SWEEPS, n)
    return np.diag(a).copy(), v


def eigh(a):
    """Eigenvalues in ascending order and the matching orthonormal eigenvectors."""
    a = sym(a)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    if n > JACOBI_MAX_ORDER:
        return np.linalg.eigh(a)
    w, v = _jacobi(a.copy())
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def svd(x):
    """Full SVD X = U diag(s) V^T with s descending, length min(m, n)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m, n = x.shape
    k = min(m, n)
    if m + n > JACOBI_MAX_ORDER:
        u, s, vt = np.linalg.svd(x)
        return u, s, vt.T
    dil = np.zeros((m + n, m + n))
    dil[:m, m:] = x
    dil[m:, :m] = x.T
    w, vecs = eigh(dil)
    cutoff = 1e-13 * max(1.0, abs(w).max(initial=0.0))
    idx = [i for i in np.argsort(-w, kind="stable") if w[i] > cutoff][:k]
    s = np.zeros(k)
    us, vs = [], []
    for j, i in enumerate(idx):
        s[j] = w[i]
        u_i, v_i = vecs[:m, i] * _SQRT2, vecs[m:, i] * _SQRT2
        us.append(u_i / np.linalg.norm(u_i))
        vs.append(v_i / np.linalg.norm(v_i))
    u = _complete(np.array(us).T.reshape(m, len(us)), m)
    v = _complete(np.array(vs).T.reshape(n, len(vs)), n)
    return u, s, v


def _complete(b, dim):
    if b.shape[1] >= dim:
        return b
    return np.hstack([b, complement(b, dim)])


# --- subspaces ---------------------------------------------------------------
def nullspace(a, rtol=RANK_RTOL):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[1] == 0:
        return np.zeros((0, 0))
    if a.shape[0] == 0 or not np.any(a):
        return np.eye(a.shape[1])
    return sla.null_space(a, rcond=rtol)


def orth(a, rtol=RANK_RTOL):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0 or not np.any(a):
        return np.zeros((a.shape[0], 0))
    return sla.orth(a, rcond=rtol)


def complement(b, dim):
    b = np.asarray(b, dtype=float).reshape(dim, -1)
    if b.shape[1] == 0:
        return np.eye(dim)
    return nullspace(b.T)


def projector(b, dim=None):
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b.reshape(-1, 1)
    if b.shape[1] == 0:
        d = dim if dim is not None else b.shape[0]
        return np.zeros((d, d))
    q = orth(b)
    return q @ q.T


def subspace_distance(b1, b2, dim=None):
    """Spectral norm of the projector difference (= sine of the largest principal angle)."""
    dim = dim or (np.shape(b1)[0] if np.size(b1) else np.shape(b2)[0])
    diff = projector(b1, dim) - projector(b2, dim)
    return float(np.linalg.norm(diff, 2)) if diff.size else 0.0


def same_subspace(b1, b2, tol=1e-8, dim=None):
    return subspace_distance(b1, b2, dim) < tol


def psd_part(s, sign=1.0):
    """Nearest X with sign * X positive semidefinite."""
    w, v = eigh(s)
    w = np.maximum(w, 0.0) if sign > 0 else np.minimum(w, 0.0)
    return sym((v * w) @ v.T)
