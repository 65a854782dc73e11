import numpy as np
import pytest

from epivar import linalg, reduction
from epivar.cones import GeneratedCone, PolyhedralCone, Subspace
from epivar.reduction import ChartError, ReductionError, ReductionPair
from epivar.smoothmap import SmoothMap
from epivar.supportsets import Box, EuclideanBall, PowerEpigraph

INF = float("inf")
RADII = (1e-2, 1e-3, 1e-4)


@pytest.fixture
def sphere_chart():
    return reduction.build_reduction_ball(np.zeros(2), 1.0, [1.0, 0.0])


def test_ball_charts_by_location(sphere_chart):
    assert sphere_chart.name == "ball-boundary"
    assert sphere_chart.k.dim == 1
    inside = reduction.build_reduction_ball(np.zeros(2), 1.0, [0.5, 0.0])
    assert inside.name == "ball-interior"
    assert inside.k.dim == 0


def test_sphere_kernel_is_tangent_line(sphere_chart):
    basis = reduction.usotp_subspace(sphere_chart, [1.0, 0.0])
    np.testing.assert_allclose(np.abs(basis[:, 0]), [0.0, 1.0], atol=1e-8)


def test_sphere_tangent_path_curvature(sphere_chart):
    path = reduction.tangent_path(sphere_chart, [1.0, 0.0], [0.0, 1.0])
    np.testing.assert_allclose(path.correction, [-1.0, 0.0], atol=1e-6)
    assert path.sup_ratio == pytest.approx(1.0, rel=1e-2)
    assert path.m_const == pytest.approx(1.5, rel=1e-2)
    assert EuclideanBall(np.zeros(2), 1.0).contains(path(1e-3))


def test_tangent_path_rejects_transversal_direction(sphere_chart):
    with pytest.raises(ReductionError, match="not in ker DG"):
        reduction.tangent_path(sphere_chart, [1.0, 0.0], [1.0, 0.0])


def test_ball_chart_is_sound(sphere_chart, rng):
    rep = reduction.chart_soundness(sphere_chart, count=100, rng=rng)
    assert rep["disagreements"] == 0
    assert rep["samples"] == 100
    assert rep["rank_margin"] > 0


def test_psd_chart_is_sound(rng):
    chart = reduction.build_reduction_psd(2, linalg.svec(np.diag([1.0, 0.0])))
    assert reduction.chart_soundness(chart, count=100, rng=rng)["disagreements"] == 0


def test_psd_chart_needs_psd_basepoint():
    with pytest.raises(ChartError, match="not positive semidefinite"):
        reduction.build_reduction_psd(2, linalg.svec(np.diag([-1.0, 1.0])))


def test_chart_registry():
    assert reduction.chart_for(Box([-1.0], [1.0]), [1.0]) is None
    assert reduction.chart_for(EuclideanBall(np.zeros(2), 1.0), [0.0, 1.0]).name == "ball-boundary"


def test_reduction_pair_validation():
    cone = GeneratedCone([[-1.0]])
    with pytest.raises(ReductionError, match="maps into"):
        ReductionPair(SmoothMap(2, 2, lambda s: s), cone, np.zeros(2))
    with pytest.raises(ChartError, match="is not 0"):
        ReductionPair(SmoothMap(2, 1, lambda s: [s[0] + 1.0]), cone, np.zeros(2))
    with pytest.raises(ChartError, match="not surjective"):
        ReductionPair(SmoothMap(2, 1, lambda s: [s[0] ** 2]), cone, np.zeros(2))


def test_box_has_straight_paths(rng):
    rep = reduction.verify_usotp(Box([-1.0, -1.0], [1.0, 1.0]), [1.0, 0.0], radii=RADII, rng=rng)
    assert rep["verdict"] == "holds"
    assert rep["method"] == "face"
    assert rep["delta"] == pytest.approx(0.5)
    assert rep["M"] == pytest.approx(0.0, abs=1e-9)
    assert rep["uniform"]


def test_ball_paths_via_chart(rng):
    rep = reduction.verify_usotp(EuclideanBall(np.zeros(2), 1.0), [1.0, 0.0], radii=RADII, rng=rng)
    assert rep["verdict"] == "holds"
    assert rep["method"] == "chart"
    assert np.isfinite(rep["M"])
    assert "subspace_drift" in rep


def test_power_epigraph_paths_blow_up(rng):
    rep = reduction.verify_usotp(PowerEpigraph(), [0.0, 0.0], radii=RADII, samples=8, rng=rng)
    assert rep["verdict"] == "fails"
    assert rep["method"] == "tangent"
    assert rep["M"] == INF
    assert rep["witness"] is not None
    assert rep["per_radius"][-1] > rep["per_radius"][0]


def test_unsupported_set_rejected():
    with pytest.raises(ReductionError, match="unsupported set"):
        reduction.verify_usotp(PolyhedralCone([[1.0, 0.0]]), [-1.0, 0.0])


def test_normalize_pointed_drops_lineality():
    g = SmoothMap(2, 2, lambda s: s)
    g2, k2 = reduction.normalize_pointed(g, Subspace(np.array([[1.0], [0.0]])))
    assert g2.m == 1
    assert abs(g2.value([3.0, 4.0])[0]) == pytest.approx(4.0)
    assert k2.contains([0.0])
    assert not k2.contains([1.0])
    cone = GeneratedCone([[-1.0]])
    assert reduction.normalize_pointed(g, cone)[1] is cone


@pytest.mark.parametrize("xbar, name, kdim", [
    ([1.0, 0.0, 0.0], "soc-slice-interior", 1),
    ([1.0, 1.0, 0.0], "soc-slice-boundary", 2),
])
def test_soc_slice_chart_by_location(xbar, name, kdim):
    chart = reduction.build_reduction_soc_slice([1.0, 0.0, 0.0], 1.0, xbar)
    assert chart.name == name
    assert chart.k.dim == kdim
    assert chart.contains(xbar)


def test_soc_slice_boundary_chart_excludes_outside_points():
    chart = reduction.build_reduction_soc_slice([1.0, 0.0, 0.0], 1.0, [1.0, 1.0, 0.0])
    assert not chart.contains([1.0, 2.0, 0.0])


@pytest.mark.parametrize("a, b, xbar, name, kdim", [
    ([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]], [1.0, 0.0], [1.0, 0.5, 0.0, 0.0],
     "soc-slice-interior", 2),
    ([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]], [1.0, 0.0], [1.0, 1.0, 0.0, 0.0],
     "soc-slice-boundary", 3),
], ids=["interior", "boundary"])
def test_soc_slice_chart_with_several_rows(a, b, xbar, name, kdim, rng):
    chart = reduction.build_reduction_soc_slice(a, b, xbar)
    assert chart.name == name
    assert chart.k.dim == kdim
    assert reduction.chart_soundness(chart, count=60, rng=rng)["disagreements"] == 0


def test_soc_slice_apex_chart_is_axis_weighted(rng):
    # x0 = 2 x1 cuts the cone through its interior; the cut is an elliptic cone
    chart = reduction.build_reduction_soc_slice([[1.0, -2.0, 0.0]], [0.0], np.zeros(3))
    assert chart.name == "soc-slice-apex"
    assert chart.k.dim == 3
    assert chart.meta["rows"] == 1
    weights = np.array(chart.meta["weights"])
    assert not np.allclose(weights, 1.0)
    assert chart.contains([2.0, 1.0, 1.5])
    assert not chart.contains([2.0, 1.0, 1.8])
    assert not chart.contains([2.0, 0.0, 0.0])
    np.testing.assert_allclose(np.linalg.svd(chart.g.jacobian(np.zeros(3)), compute_uv=False),
                               np.sort(np.r_[weights[:2], 1.0])[::-1], atol=1e-6)
    assert reduction.chart_soundness(chart, count=100, rng=rng)["disagreements"] == 0


def test_soc_slice_tangent_plane_leaves_a_ray():
    chart = reduction.build_reduction_soc_slice([[1.0, -1.0, 0.0]], [0.0], np.zeros(3))
    assert chart.name == "soc-slice-ray"
    assert chart.k.dim == 3
    assert chart.contains([1.0, 1.0, 0.0])
    assert not chart.contains([-1.0, -1.0, 0.0])
    assert not chart.contains([1.0, 1.0, 0.1])


def test_soc_slice_chart_rejects_points_off_the_slice():
    with pytest.raises(ChartError, match="not in the slice"):
        reduction.build_reduction_soc_slice([[1.0, 0.0, 0.0]], [1.0], [2.0, 0.0, 0.0])


def test_matrix_interval_chart_at_corner():
    chart = reduction.build_reduction_matrix_interval(np.zeros((2, 2)), np.eye(2),
                                                      linalg.svec(np.diag([0.0, 1.0])))
    assert chart.meta == {"lower_active": 1, "upper_active": 1, "pinned": 0, "middle": 0}
    assert chart.k.dim == 2


def test_kyfan_charts():
    fan = reduction.build_reduction_kyfan_support(3, 3, 1, linalg.svec(np.diag([1.0, 0.0, 0.0])),
                                                  symmetric=True)
    assert fan.name == "kyfan-case1"
    assert fan.meta["trace_coupled"]
    ball = reduction.build_reduction_kyfan_support(3, 3, 2, np.diag([1.0, 1.0, 0.0]).ravel())
    assert ball.name == "kyfan-case2"
    assert ball.meta["spectral_active"] == 2 and ball.meta["nuclear_active"]
    with pytest.raises(ReductionError, match="m == n"):
        reduction.build_reduction_kyfan_support(2, 3, 1, np.zeros(6), symmetric=True)
