import numpy as np
import pytest

from epivar import linalg
from epivar.cones import ConeError, NotInSetError
from epivar.cones import from_json
from epivar.supportsets import (Box, EuclideanBall, Fantope, KyFanBall, MatrixInterval, PowerEpigraph,
                                SocSlice, capped_simplex, capped_sum)

INF = float("inf")


def test_power_epigraph_support_values():
    q = PowerEpigraph()
    assert q.support([1.0, -1.0]) == pytest.approx(1.0 / 3.0)
    assert q.support([0.0, 0.0]) == 0.0
    assert q.support([1.0, 0.0]) == INF
    assert q.support([0.0, 1.0]) == INF


def test_power_epigraph_gradient_matches_differences():
    q = PowerEpigraph()
    x = np.array([0.7, -1.3])
    eps = 1e-6
    fd = [(q.support(x + eps * e) - q.support(x - eps * e)) / (2 * eps) for e in np.eye(2)]
    np.testing.assert_allclose(q.support_gradient(x), fd, rtol=1e-6)


def test_power_epigraph_face_attains_support():
    q = PowerEpigraph()
    x = np.array([1.0, -1.0])
    face = q.face(x)
    np.testing.assert_allclose(face.point, [1.0, 2.0 / 3.0])
    assert face.point @ x == pytest.approx(q.support(x))
    with pytest.raises(NotInSetError):
        q.face([1.0, 1.0])


def test_power_epigraph_projection_lands_on_curve():
    q = PowerEpigraph()
    z = np.array([1.0, 0.0])
    p = q.project(z)
    assert p[1] == pytest.approx(2.0 / 3.0 * abs(p[0]) ** 1.5)
    assert np.linalg.norm(z - p) < np.linalg.norm(z - [1.0, 2.0 / 3.0])


def test_box_support_and_face():
    q = Box([-1.0, -1.0], [1.0, 1.0])
    assert q.support([2.0, -3.0]) == 5.0
    face = q.face([1.0, 0.0])
    np.testing.assert_allclose(face.lo, [1.0, -1.0])
    np.testing.assert_allclose(face.hi, [1.0, 1.0])
    assert q.normal_cone([1.0, 0.0]).contains([3.0, 0.0])
    assert not q.normal_cone([1.0, 0.0]).contains([0.0, 1.0])


def test_box_rejects_empty():
    with pytest.raises(ConeError, match="empty box"):
        Box([1.0], [0.0])


def test_unbounded_box_face_is_empty():
    q = Box([0.0], [INF])
    with pytest.raises(NotInSetError):
        q.face([1.0])


def test_ball_support_and_projection():
    q = EuclideanBall(np.zeros(2), 2.0)
    assert q.support([3.0, 4.0]) == pytest.approx(10.0)
    np.testing.assert_allclose(q.project([3.0, 4.0]), [1.2, 1.6])
    assert q.ri_membership([0.5, 0.0])
    assert not q.ri_membership([2.0, 0.0])


def test_capped_helpers():
    assert capped_sum([3.0, 2.0, 1.0], 2.5) == pytest.approx(5.5)
    np.testing.assert_allclose(capped_simplex([3.0, 2.0, 1.0], 2), [1.0, 1.0, 0.0], atol=1e-9)
    np.testing.assert_allclose(capped_simplex([0.2, 0.3], 2), [0.2, 0.3])


def test_kyfan_ball_support_and_projection():
    q = KyFanBall(3, 3, 2)
    z = np.diag([3.0, 2.0, 1.0]).ravel()
    assert q.support(z) == pytest.approx(5.0)
    np.testing.assert_allclose(q.project(z).reshape(3, 3), np.diag([1.0, 1.0, 0.0]), atol=1e-8)
    assert q.contains(np.diag([1.0, 0.5, 0.5]).ravel())
    assert not q.contains(np.diag([1.0, 1.0, 1.0]).ravel())


def test_fantope_support_and_projection():
    q = Fantope(3, 1)
    z = linalg.svec(np.diag([3.0, 2.0, 1.0]))
    assert q.support(z) == pytest.approx(3.0)
    np.testing.assert_allclose(linalg.smat(q.project(z)), np.diag([1.0, 0.0, 0.0]), atol=1e-8)
    with pytest.raises(ConeError):
        Fantope(2, 3)


def _random_symmetric(rng, order, scale=2.0):
    a = scale * rng.standard_normal((order, order))
    return linalg.svec((a + a.T) / 2.0)


def test_matrix_interval_dykstra_matches_eigenvalue_clipping(rng):
    interval = MatrixInterval(np.zeros((3, 3)), np.eye(3))
    for _ in range(20):
        z = _random_symmetric(rng, 3)
        np.testing.assert_allclose(interval.dykstra_project(z), interval.project(z), atol=1e-7)


def test_matrix_interval_projection_with_non_commuting_bounds(rng):
    lower = np.array([[0.0, 0.3, 0.0], [0.3, 0.0, 0.0], [0.0, 0.0, -1.0]])
    upper = np.diag([2.0, 1.0, 1.0])
    assert not np.allclose(lower @ upper, upper @ lower)
    interval = MatrixInterval(lower, upper)
    inside = [linalg.svec(lower), linalg.svec(upper), linalg.svec((lower + upper) / 2.0)]
    for _ in range(5):
        z = _random_symmetric(rng, 3)
        p = interval.project(z)
        assert interval.contains(p, 1e-7)
        for q in inside:
            assert (z - p) @ (q - p) <= 1e-7


def test_soc_slice_with_two_rows():
    # {x in SOC(4) : x0 = 1, x3 = 0} is the unit disc in (x1, x2)
    sl = SocSlice([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]], [1.0, 0.0])
    assert sl.contains([1.0, 0.6, 0.8, 0.0])
    assert not sl.contains([1.0, 0.6, 0.8, 0.1])
    assert sl.support([0.5, 3.0, 4.0, 7.0]) == pytest.approx(5.5, abs=1e-6)
    np.testing.assert_allclose(sl.project([1.0, 3.0, 4.0, 2.0]), [1.0, 0.6, 0.8, 0.0], atol=1e-8)
    back = from_json(sl.to_json())
    assert back.support([0.5, 3.0, 4.0, 7.0]) == pytest.approx(5.5, abs=1e-6)
    np.testing.assert_allclose(back.rows, sl.rows)


def test_soc_slice_single_row_support_is_closed_form():
    sl = SocSlice([1.0, 0.0, 0.0], 1.0)
    assert sl.rows.shape == (1, 3)
    assert sl.support([0.5, 3.0, 4.0]) == pytest.approx(5.5)


def test_soc_slice_rows_and_rhs_must_agree():
    with pytest.raises(ConeError, match="right-hand sides"):
        SocSlice([[1.0, 0.0, 0.0]], [1.0, 0.0])
