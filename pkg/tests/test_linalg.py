import numpy as np
import pytest

from epivar import linalg


def _sym(rng, n):
    a = rng.standard_normal((n, n))
    return a + a.T


def test_svec_preserves_the_trace_inner_product(rng):
    a, b = _sym(rng, 4), _sym(rng, 4)
    assert linalg.svec(a) @ linalg.svec(b) == pytest.approx(np.trace(a @ b))
    np.testing.assert_allclose(linalg.smat(linalg.svec(a)), a, atol=1e-14)


def test_svec_order_rejects_non_triangular_sizes():
    assert linalg.svec_order(6) == 3
    with pytest.raises(linalg.LinalgError, match="triangular"):
        linalg.svec_order(5)


@pytest.mark.parametrize("n", [1, 3, 6])
def test_jacobi_eigh_matches_numpy(rng, n):
    a = _sym(rng, n)
    w, v = linalg.eigh(a)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(a), atol=1e-10)
    np.testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-10)
    np.testing.assert_allclose((v * w) @ v.T, a, atol=1e-10)


def test_eigh_keeps_repeated_eigenvalues_orthonormal():
    w, v = linalg.eigh(np.diag([1.0, 0.0, 1.0]))
    np.testing.assert_allclose(w, [0.0, 1.0, 1.0], atol=1e-14)
    np.testing.assert_allclose(v.T @ v, np.eye(3), atol=1e-12)


@pytest.mark.parametrize("shape", [(3, 3), (2, 4), (4, 2)])
def test_svd_reconstructs(rng, shape):
    x = rng.standard_normal(shape)
    u, s, v = linalg.svd(x)
    k = min(shape)
    np.testing.assert_allclose(s, np.linalg.svd(x, compute_uv=False), atol=1e-10)
    np.testing.assert_allclose(u[:, :k] * s @ v[:, :k].T, x, atol=1e-10)
    np.testing.assert_allclose(u.T @ u, np.eye(shape[0]), atol=1e-10)
    np.testing.assert_allclose(v.T @ v, np.eye(shape[1]), atol=1e-10)


def test_svd_of_rank_deficient_matrix_completes_the_frames():
    u, s, v = linalg.svd(np.diag([2.0, 0.0, 0.0]))
    np.testing.assert_allclose(s, [2.0, 0.0, 0.0], atol=1e-12)
    assert u.shape == (3, 3) and v.shape == (3, 3)
    np.testing.assert_allclose(u.T @ u, np.eye(3), atol=1e-10)


def test_nullspace_and_complement():
    a = np.array([[1.0, 1.0, 0.0]])
    z = linalg.nullspace(a)
    assert z.shape == (3, 2)
    np.testing.assert_allclose(a @ z, 0.0, atol=1e-14)
    c = linalg.complement(z, 3)
    assert c.shape == (3, 1)
    assert abs(c[:, 0] @ np.array([1.0, 1.0, 0.0])) == pytest.approx(np.sqrt(2))
    assert linalg.complement(np.zeros((3, 0)), 3).shape == (3, 3)


def test_subspace_distance_is_sine_of_largest_angle():
    e1 = np.array([[1.0], [0.0]])
    d = np.array([[np.cos(0.3)], [np.sin(0.3)]])
    assert linalg.subspace_distance(e1, d) == pytest.approx(np.sin(0.3))
    assert linalg.same_subspace(e1, 2 * e1)
    assert linalg.subspace_distance(np.zeros((2, 0)), np.zeros((2, 0)), 2) == 0.0


def test_psd_part_clips_eigenvalues():
    s = np.diag([2.0, -1.0])
    np.testing.assert_allclose(linalg.psd_part(s), np.diag([2.0, 0.0]), atol=1e-14)
    np.testing.assert_allclose(linalg.psd_part(s, sign=-1.0), np.diag([0.0, -1.0]), atol=1e-14)
