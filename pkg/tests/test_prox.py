import numpy as np
import pytest

from epivar import prox
from epivar.decomp import DecomposablePair
from epivar.prox import ProxError, ProxRefused
from epivar.smoothmap import identity, saddle_demo
from epivar.supportsets import Box, EuclideanBall, KyFanBall


@pytest.fixture
def l1():
    return DecomposablePair(Box([-1.0, -1.0], [1.0, 1.0]), identity(2), np.zeros(2))


@pytest.fixture
def saddle():
    return DecomposablePair(Box([1.0, -1.0], [1.0, 1.0]), saddle_demo(), np.zeros(2), rho=2.0)


def test_soft_threshold(l1):
    out = prox.prox(l1, 1.0, [3.0, 0.2], verify=True)
    np.testing.assert_allclose(out["p"], [2.0, 0.0])
    np.testing.assert_allclose(out["v"], [1.0, 0.2])
    np.testing.assert_allclose(out["lam"], [1.0, 0.2], atol=1e-8)
    assert out["method"] == "moreau"
    assert out["envelope"] == pytest.approx(2.0 + 0.5 * (1.0 + 0.04))


def test_soft_threshold_jacobian(l1):
    rep = prox.prox_jacobian_fd(l1, 1.0, [3.0, 0.2])
    assert rep["differentiable"]
    np.testing.assert_allclose(rep["jacobian"], np.diag([1.0, 0.0]), atol=1e-6)
    assert rep["violation"] == 0.0


def test_prox_kink_is_not_differentiable(l1):
    rep = prox.prox_jacobian_fd(l1, 1.0, [1.0, 0.2])
    assert not rep["differentiable"]
    assert rep["mismatch"] == pytest.approx(1.0, abs=1e-6)
    left, right = rep["slopes"]
    assert left[0] == pytest.approx(0.0, abs=1e-6)
    assert right[0] == pytest.approx(1.0, abs=1e-6)


def test_euclidean_norm_prox():
    pair = DecomposablePair(EuclideanBall(np.zeros(2), 1.0), identity(2), np.zeros(2))
    np.testing.assert_allclose(prox.prox_point(pair, 1.0, [3.0, 4.0]), [2.4, 3.2])


def test_kyfan_norm_prox():
    q = KyFanBall(3, 3, 2)
    pair = DecomposablePair(q, identity(q.dim), np.zeros(q.dim))
    p = prox.prox_point(pair, 1.0, np.diag([3.0, 2.0, 1.0]).ravel())
    np.testing.assert_allclose(p.reshape(3, 3), np.diag([2.0, 1.0, 1.0]), atol=1e-8)


def test_tau_validation(saddle):
    with pytest.raises(ProxError, match="must be positive"):
        prox.prox(saddle, 0.0, [0.0, 0.0])
    with pytest.raises(ProxRefused, match="not single-valued"):
        prox.prox(saddle, 0.5, [0.0, 0.0])
    assert prox.default_tau(saddle) == pytest.approx(0.25)


def test_moreau_gradient_matches_prox(l1):
    assert prox.moreau_gradient_check(l1, 1.0, [3.0, 0.2]) <= 1e-6


def test_prox_is_nonexpansive_for_convex_phi(l1, rng):
    assert prox.prox_lipschitz_ratio(l1, 1.0, [1.0, 0.0], radius=0.5, count=12, rng=rng) <= 1 + 1e-9


def test_jacobian_limit_at_saddle(saddle):
    rep = prox.jacobian_limit_formula(saddle, [1.0, 0.0], 0.25)
    np.testing.assert_allclose(rep["formula"], np.diag([0.0, 2.0]), atol=1e-12)
    assert rep["differentiable"]
    assert rep["error"] <= 1e-4


def test_moreau_envelope_of_abs():
    env = prox.moreau_envelope(lambda y: float(np.abs(y).sum()), 1.0, [3.0])
    assert env == pytest.approx(2.5, abs=1e-8)


def test_moreau_envelopes_converge_to_abs():
    seq = [lambda y, k=k: float(np.abs(y).sum() + (y @ y) / k) for k in (1.0, 10.0, 100.0)]
    rep = prox.envelope_convergence_probe(seq, lambda y: float(np.abs(y).sum()), 1.0,
                                          np.linspace(-2.0, 2.0, 5))
    assert rep["monotone"]
    assert rep["verdict"] == "converging"
    assert rep["gaps"][-1] < rep["gaps"][0]


def test_conjugate_identity_for_abs():
    pair = DecomposablePair(Box([-1.0], [1.0]), identity(1), np.zeros(1))
    rep = prox.conjugate_envelope_check(pair, 1.0, [-2.0, 0.3, 1.5])
    assert rep["ok"]


def test_equivalence_suite_with_interior_multiplier():
    xbar = np.array([1.0, 0.0])
    pair = DecomposablePair(Box([1.0, -1.0], [1.0, 1.0]), identity(2, xbar), xbar, offset=1.0)
    kw = {"basic": {"perturbations": 2},
          "strict": {"radii": (1e-2,), "count": 3, "perturbations": 2}}
    rep = prox.equivalence_suite(pair, [1.0, 0.0], tau=1.0, directions=[np.array([1.0, 0.0])],
                                 radii=(1e-2, 1e-3), net_count=2, estimate_kw=kw)
    np.testing.assert_allclose(rep["zbar"], [2.0, 0.0])
    items = rep["items"]
    assert items["i"]["proxy"] and items["i"]["value"]
    assert items["ii"]["tested"] is False
    assert items["iii"]["value"] and items["iv"]["value"] and items["vi"]["value"]
    assert items["v"]["value"]
    assert rep["consistent"]
