import numpy as np
import pytest

from epivar import decomp, epiquot
from epivar.cones import GeneratedCone, cone_sum_certificate
from epivar.decomp import (CqNotCertified, DecompError, DecomposablePair, NotSubgradientError,
                           UsotpNotEstablished)
from epivar.smoothmap import SmoothMap, identity, linear, norm_lift, saddle_demo
from epivar.supportsets import Box, PowerEpigraph

INF = float("inf")


@pytest.fixture
def saddle():
    return DecomposablePair(Box([1.0, -1.0], [1.0, 1.0]), saddle_demo(), np.zeros(2), rho=2.0)


@pytest.fixture
def l1_interior():
    xbar = np.array([1.0, 0.0])
    return DecomposablePair(Box([1.0, -1.0], [1.0, 1.0]), identity(2, xbar), xbar, offset=1.0)


@pytest.fixture
def l1_origin():
    return DecomposablePair(Box([-1.0, -1.0], [1.0, 1.0]), identity(2), np.zeros(2))


def test_pair_validation():
    with pytest.raises(DecompError, match="maps into"):
        DecomposablePair(Box([-1.0], [1.0]), identity(2), np.zeros(2))
    with pytest.raises(DecompError, match="must vanish"):
        DecomposablePair(Box([-1.0, -1.0], [1.0, 1.0]), identity(2), [1.0, 0.0])


def test_evaluate_is_l1_norm_near_basepoint(l1_interior):
    assert decomp.evaluate(l1_interior, [1.0, 0.0]) == pytest.approx(1.0)
    assert decomp.evaluate(l1_interior, [2.0, -3.0]) == pytest.approx(5.0)


def test_multipliers_and_graph_point(l1_interior):
    lam = decomp.multipliers(l1_interior, [1.0, 0.0], [1.0, 0.0])
    np.testing.assert_allclose(lam, [1.0, 0.0], atol=1e-10)
    pt = decomp.graph_point(l1_interior, [1.0, 0.0], [1.0, 0.5])
    np.testing.assert_allclose(pt["lam"], [1.0, 0.5], atol=1e-10)
    assert decomp.subdifferential(l1_interior, [1.0, 0.0]).contains([1.0, -1.0])


def test_non_subgradient_rejected(l1_origin):
    with pytest.raises(NotSubgradientError):
        decomp.multipliers(l1_origin, [0.0, 0.0], [2.0, 0.0])
    assert not decomp.subdifferential(l1_origin, [0.0, 0.0]).contains([2.0, 0.0])


def test_saddle_multiplier_via_face_intersection(saddle):
    lam = decomp.multipliers(saddle, [0.0, 0.0], [0.0, 0.0])
    np.testing.assert_allclose(lam, [1.0, 0.0], atol=1e-8)


def test_cq_report_holds_at_saddle(saddle):
    rep = decomp.cq_report(saddle, [1.0, 0.0])
    assert rep["robinson"]["verdict"] == "holds"
    assert rep["strict"]["verdict"] == "holds"
    assert rep["nondegeneracy"]["verdict"] == "holds"
    assert rep["ri_multiplier"]
    assert rep["consistent"]


def test_strict_cq_fails_with_witness():
    pair = DecomposablePair(Box([-1.0, -1.0], [1.0, 1.0]), linear([[1.0], [0.0]]), np.zeros(1))
    rep = decomp.cq_report(pair, [1.0, 1.0])
    assert rep["strict"]["verdict"] == "fails"
    np.testing.assert_allclose(np.abs(rep["strict"]["witness"]), [0.0, 1.0], atol=1e-9)
    assert rep["nondegeneracy"]["verdict"] == "fails"
    assert not rep["ri_multiplier"]
    assert rep["consistent"]


@pytest.mark.parametrize("h, expected", [
    ([1.0, 0.0], 0.0),
    ([2.0, 0.0], 0.0),
    ([0.0, 1.0], INF),
    ([-1.0, 0.0], INF),
])
def test_l1_second_subderivative(l1_origin, h, expected):
    assert decomp.second_subderivative(l1_origin, [1.0, 0.0], h) == expected


def test_saddle_second_subderivative_is_negative(saddle):
    assert decomp.second_subderivative(saddle, [0.0, 0.0], [0.0, 1.0]) == pytest.approx(-2.0)


def test_critical_cone_is_preimage_of_normal_cone(l1_origin):
    crit = decomp.critical_cone(l1_origin, [1.0, 0.0])
    assert crit.contains([2.0, 0.0])
    assert not crit.contains([-1.0, 0.0])
    assert not crit.contains([0.0, 1.0])
    np.testing.assert_allclose(np.abs(crit.affine_hull()[:, 0]), [1.0, 0.0], atol=1e-10)


def test_affine_hull_commutes_with_preimage():
    ray = GeneratedCone([[1.0], [0.0]])
    assert decomp.affine_hull_preimage_check(np.eye(2), ray)
    with pytest.raises(CqNotCertified):
        decomp.affine_hull_preimage_check([[0.0], [1.0]], ray)


@pytest.mark.parametrize("h, estimate, violation, equality", [
    ([1.0, 0.0], {"verdict": "finite", "value": 0.0}, False, True),
    ([0.0, 1.0], {"verdict": "divergent", "value": INF}, False, True),
    ([0.0, 1.0], {"verdict": "finite", "value": 0.5}, True, False),
    ([1.0, 0.0], {"verdict": "inconclusive", "value": None}, False, None),
])
def test_strict_chain_bound(l1_interior, h, estimate, violation, equality):
    rep = decomp.strict_chain_lower_bound_check(l1_interior, [1.0, 0.0], h, estimate)
    assert rep["violation"] is violation
    assert rep["equality"] is equality


def test_strict_formula_on_affine_hull(l1_interior):
    assert decomp.strict_second_subderivative_formula(l1_interior, [1.0, 0.0], [1.0, 0.0]) == 0.0
    assert decomp.strict_second_subderivative_formula(l1_interior, [1.0, 0.0], [0.0, 1.0]) == INF


def test_strict_formula_refused_without_tangent_paths():
    pair = DecomposablePair(PowerEpigraph(), identity(2), np.zeros(2))
    with pytest.raises(UsotpNotEstablished, match="usotp-not-established"):
        decomp.strict_second_subderivative_formula(pair, [0.0, 0.0], [1.0, 0.0])


def test_strict_saddle_detected(saddle):
    rep = decomp.is_strict_saddle(saddle)
    assert rep["verdict"] == "strict-saddle"
    assert rep["min_eigenvalue"] == pytest.approx(-2.0)
    np.testing.assert_allclose(rep["witness"], [0.0, 1.0], atol=1e-8)


def test_strict_saddle_not_applicable_on_boundary():
    pair = DecomposablePair(Box([0.0, -1.0], [1.0, 1.0]), identity(2), np.zeros(2))
    rep = decomp.is_strict_saddle(pair)
    assert rep["verdict"] == "not-applicable"


def test_smr_certificate():
    pair = DecomposablePair(Box([-1.0, -1.0, 1.0], [1.0, 1.0, 1.0]), norm_lift(2), np.zeros(2))
    rep = decomp.strong_metric_regularity_certificate(pair, [1.0, 1.0, 1.0], growth_samples=0)
    assert rep["verdict"] == "SMR"
    assert rep["mu"] == pytest.approx(2.0)


def test_saddle_is_not_smr(saddle):
    rep = decomp.strong_metric_regularity_certificate(saddle, [1.0, 0.0], growth_samples=0)
    assert rep["verdict"] == "not SMR"
    assert rep["mu"] == pytest.approx(-2.0)


def test_convex_function_is_prox_regular_with_zero_modulus(l1_origin):
    assert decomp.prox_regularity_check(l1_origin, np.array([1.0, 0.0])) <= 1e-12


def test_pair_json_round_trip(l1_interior):
    back = DecomposablePair.from_json(l1_interior.to_json())
    assert decomp.evaluate(back, [2.0, -3.0]) == pytest.approx(5.0)


def test_multiplier_lipschitz_ratio(l1_interior):
    pt = decomp.graph_point(l1_interior, [1.01, 0.0], [1.0, 0.1])
    ratio = decomp.multiplier_lipschitz_ratio(l1_interior, np.array([1.0, 0.0]), [pt])
    assert ratio == pytest.approx(0.1 / 0.11)
    assert decomp.multiplier_lipschitz_ratio(l1_interior, np.array([1.0, 0.0]), []) == 0.0


def test_affine_hull_lemma_on_random_polyhedral_instances(rng):
    certified = 0
    for i in range(50):
        m = 3
        n = m + 1 if i % 2 == 0 else m - 1
        a = rng.standard_normal((m, n))
        cone = GeneratedCone(rng.standard_normal((m, int(rng.integers(1, 4)))))
        if cone_sum_certificate(a, cone)["verdict"] == "holds":
            assert decomp.affine_hull_preimage_check(a, cone, tol=1e-6)
            certified += 1
        else:
            with pytest.raises(CqNotCertified):
                decomp.affine_hull_preimage_check(a, cone)
    assert certified >= 25


@pytest.mark.parametrize("alpha", [0.5, 2.0])
@pytest.mark.parametrize("h", [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], ids=["critical", "off", "mixed"])
def test_second_subderivative_is_degree_two_homogeneous(l1_origin, alpha, h):
    base = decomp.second_subderivative(l1_origin, [1.0, 0.0], h)
    scaled = decomp.second_subderivative(l1_origin, [1.0, 0.0], alpha * np.array(h))
    if np.isinf(base):
        assert scaled == INF
    else:
        assert scaled == pytest.approx(alpha ** 2 * base, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_saddle_value_and_estimate_scale_quadratically(saddle, alpha):
    h = alpha * np.array([0.0, 1.0])
    assert decomp.second_subderivative(saddle, [0.0, 0.0], h) == pytest.approx(-2.0 * alpha ** 2)
    est = epiquot.basic_second_subderivative_estimate(saddle, [0.0, 0.0], h, perturbations=4)
    assert est["verdict"] == "finite"
    assert est["value"] == pytest.approx(-2.0 * alpha ** 2, rel=1e-2)


def _bent_pair():
    # phi(x) = |x| + |x - x^2|, which is 2x - x^2 near x = 0.5
    def value(x):
        return np.array([x[0], x[0] - x[0] ** 2])

    def jacobian(x):
        return np.array([[1.0], [1.0 - 2 * x[0]]])

    def second(x, h):
        return np.array([0.0, -2 * h[0] ** 2])

    def bilinear(x, h1, h2):
        return np.array([0.0, -2 * h1[0] * h2[0]])

    fmap = SmoothMap(1, 2, value, jacobian, second, bilinear, name="bent")
    return DecomposablePair(Box([-1.0, -1.0], [1.0, 1.0]), fmap, np.zeros(1))


def test_second_subderivative_away_from_basepoint_uses_exposed_face():
    pair = _bent_pair()
    assert decomp.evaluate(pair, [0.5]) == pytest.approx(0.75)
    assert decomp.second_subderivative(pair, [1.0], [1.0], x=[0.5]) == pytest.approx(-2.0)
    assert decomp.second_subderivative(pair, [1.0], [2.0], x=[0.5]) == pytest.approx(-8.0)
    est = epiquot.basic_second_subderivative_estimate(pair, [1.0], [1.0], x=[0.5], perturbations=4)
    assert est["value"] == pytest.approx(-2.0, rel=1e-2)


def test_critical_cone_away_from_basepoint_follows_the_face():
    crit = decomp.critical_cone(_bent_pair(), [1.0, 1.0], x=[0.5])
    assert crit.contains([1.0])
    assert crit.contains([-1.0])
