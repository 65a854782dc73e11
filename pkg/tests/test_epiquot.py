import numpy as np
import pytest

from epivar import epiquot
from epivar.decomp import DecomposablePair
from epivar.epiquot import HypothesisError, QuotientError, classify_trend
from epivar.smoothmap import identity
from epivar.supportsets import Box, PowerEpigraph

INF = float("inf")
STEPS = np.arange(21) / 4.0


@pytest.fixture
def l1():
    return DecomposablePair(Box([-1.0, -1.0], [1.0, 1.0]), identity(2), np.zeros(2))


@pytest.fixture
def l1_interior():
    xbar = np.array([1.0, 0.0])
    return DecomposablePair(Box([1.0, -1.0], [1.0, 1.0]), identity(2, xbar), xbar, offset=1.0)


@pytest.mark.parametrize("values, verdict, value", [
    (np.full(21, 1.5), "finite", 1.5),
    (10.0 ** STEPS, "divergent", INF),
    (np.full(21, INF), "divergent", INF),
    (10.0 ** (1 - STEPS), "finite", 0.0),
    (np.where(np.arange(21) % 2, 2.0, 1.0), "inconclusive", None),
    (np.array([1.0, 5.0, 9.0]), "inconclusive", None),
], ids=["flat", "growing", "infinite", "shrinking", "oscillating", "short"])
def test_classify_trend(values, verdict, value):
    assert classify_trend(values, 4) == (verdict, value)


def test_second_quotient_needs_positive_t(l1):
    with pytest.raises(QuotientError, match="t must be positive"):
        epiquot.second_quotient(l1, [0.0, 0.0], [1.0, 0.0], [1.0, 0.0], 0.0)


def test_second_quotient_of_l1(l1):
    assert epiquot.second_quotient(l1, [0.0, 0.0], [1.0, 0.0], [1.0, 0.0], 1e-2) == 0.0
    assert epiquot.second_quotient(l1, [0.0, 0.0], [1.0, 0.0], [0.0, 1.0], 1e-2) == pytest.approx(200.0)


def test_subderivative_matches_support_of_jacobian(l1):
    h = np.array([1.0, -2.0])
    assert epiquot.subderivative_estimate(l1, [0.0, 0.0], h) == pytest.approx(3.0, abs=1e-3)
    assert epiquot.subderivative_formula(l1, h) == pytest.approx(3.0)


@pytest.mark.parametrize("h, verdict, value", [
    ([1.0, 0.0], "finite", 0.0),
    ([0.0, 1.0], "divergent", INF),
])
def test_basic_estimate_for_l1(l1, h, verdict, value):
    est = epiquot.basic_second_subderivative_estimate(l1, [1.0, 0.0], h, perturbations=4)
    assert est["verdict"] == verdict
    assert est["value"] == value
    assert est["kind"] == "d2"
    assert len(est["curve"]) == len(est["grid"])


def test_strict_estimate_on_affine_hull(l1_interior):
    est = epiquot.strict_second_subderivative_estimate(
        l1_interior, [1.0, 0.0], [1.0, 0.0], radii=(1e-2,), count=3, perturbations=2)
    assert est["verdict"] == "finite"
    assert est["value"] == pytest.approx(0.0, abs=1e-9)
    assert est["samples"]
    assert est["assumes"] == "subdifferential-continuity"


def test_graph_sampler_returns_valid_points(l1_interior, rng):
    pts = epiquot.graph_sampler(l1_interior, [1.0, 0.0], 1e-2, 4, rng)
    assert pts
    for pt in pts:
        assert np.linalg.norm(pt["x"] - l1_interior.xbar) <= 0.1
        assert pt["residual"] <= 1e-8


def test_admit_sequence_rejects_non_subgradients(l1):
    with pytest.raises(epiquot.DecompError):
        epiquot.admit_sequence(l1, [np.zeros(2)], [np.array([3.0, 0.0])])


def test_support_quotient_bound_on_box_edge():
    q = Box([-1.0, -1.0], [1.0, 1.0])
    x, lam, w, v = [1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]
    # quotient is 2/t, the bound delta/t
    assert epiquot.support_quotient_lower_bound_check(q, x, lam, w, v, 1.0, 0.0, 1e-2)
    assert not epiquot.support_quotient_lower_bound_check(q, x, lam, w, v, 3.0, 0.0, 1e-2)


@pytest.mark.parametrize("kwargs, message", [
    ({"w": [0.0, -1.0]}, "<v, w> > 0"),
    ({"x": [1.0, 1.0]}, "<v, x> = 0"),
    ({"lam": [-1.0, 0.0]}, "face of Q"),
    ({"t": 0.0}, "t > 0"),
])
def test_support_quotient_hypotheses(kwargs, message):
    args = {"q": Box([-1.0, -1.0], [1.0, 1.0]), "x": [1.0, 0.0], "lam": [1.0, 0.0],
            "w": [0.0, 1.0], "v": [0.0, 1.0], "delta": 1.0, "m_const": 0.0, "t": 1e-2}
    args.update(kwargs)
    with pytest.raises(HypothesisError, match=message):
        epiquot.support_quotient_lower_bound_check(**args)


def test_path_inequality_holds_on_box_edge(rng):
    rep = epiquot.path_inequality_sweep(Box([-1.0, -1.0], [1.0, 1.0]), [1.0, 0.0], count=40, rng=rng)
    assert rep["method"] == "face"
    assert rep["samples"] > 0
    assert rep["violations"] == 0


def test_path_inequality_needs_tangent_paths(rng):
    with pytest.raises(HypothesisError, match="no uniform tangent paths"):
        epiquot.path_inequality_sweep(PowerEpigraph(), [0.0, 0.0], count=5, rng=rng)


def test_counterexample_sequence_report():
    rep = epiquot.counterexample_sequence_report(ks=(1, 10, 100))
    norms = [r["hessian_norm"] for r in rep["rows"]]
    assert norms[0] == pytest.approx(4.0)
    for r in rep["rows"]:
        assert r["hessian_norm"] == pytest.approx(r["closed_form"], rel=1e-9)
    assert rep["monotone"]
    np.testing.assert_allclose(rep["rows"][0]["lam"], [1.0, 2.0 / 3.0])


def test_strict_subderivative_of_support_on_box_edge():
    rep = epiquot.strict_subderivative_of_support_is_cone_indicator(
        Box([1.0, -1.0], [1.0, 1.0]), [1.0, 0.0], directions=[[1.0, 0.0], [0.0, 1.0]],
        radii=(1e-2,), count=3, perturbations=2)
    assert rep["ok"]
    along, across = rep["rows"]
    assert along["class"] == "zero" and along["homogeneous"]
    assert across["class"] == "divergent"
