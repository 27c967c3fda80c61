import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from vinerisk.copula import GAUSSIAN, FamilyId, PairCopula, cop_pdf, hfunc
from vinerisk.dependence import kendall_tau
from vinerisk.dvine import (DVineModel, VineFitError, cond_cdf, cond_density, cond_loglik,
                            cond_quantile, fit_dvine, simulate_dvine)

from conftest import gl_unit

IND = PairCopula.independence()


def gauss(r):
    return PairCopula.from_param(GAUSSIAN, r)


def make_model(arm, pred=None, order=None):
    q = len(arm)
    order = order or tuple(f"x{k}" for k in range(1, q + 1))
    pred = pred or {(i, k): IND for k in range(1, q + 1) for i in range(1, k)}
    return DVineModel(tuple(order), tuple(arm), pred, (), "y")


TRUE2 = make_model([gauss(0.6), PairCopula.from_param(FamilyId("clayton"), 1.5)],
                   {(1, 2): PairCopula.from_param(FamilyId("gumbel"), 1.6)})


def joint_density(model, v, u):
    """c(v, u_1..u_q) of a q <= 2 D-vine written out pair by pair."""
    if model.q == 0:
        return np.ones_like(v)
    a1 = model.arm[0]
    dens = a1.pdf(v, u[0])
    if model.q == 2:
        p12 = model.pred_edges[(1, 2)]
        a2 = model.arm[1]
        dens = dens * p12.pdf(u[0], u[1]) * a2.pdf(a1.hfunc1(v, u[0]), p12.hfunc2(u[0], u[1]))
    return dens


def brute_cond_cdf(model, v, u, n=200):
    x, w = gl_unit(n)
    num = v * np.sum(w * joint_density(model, v * x, [np.full(n, ui) for ui in u]))
    den = np.sum(w * joint_density(model, x, [np.full(n, ui) for ui in u]))
    return num / den


# --------------------------------------------------------------------------- evaluation

def test_independence_model_is_identity():
    m = make_model([IND, IND, IND])
    v = np.linspace(0.05, 0.95, 7)
    assert_allclose(cond_cdf(m, v, [0.2, 0.5, 0.9]), v)
    assert_allclose(cond_quantile(m, v, [0.2, 0.5, 0.9]), v)
    assert cond_loglik(m, v, np.tile([0.2, 0.5, 0.9], (7, 1))) == 0.0


def test_q0_identity():
    m = make_model([])
    assert cond_cdf(m, 0.3, []) == pytest.approx(0.3)
    assert cond_quantile(m, 0.7, []) == pytest.approx(0.7)


def test_q1_gaussian_equals_hfunc():
    m = make_model([gauss(0.6)])
    assert cond_cdf(m, 0.3, [0.8]) == pytest.approx(hfunc(GAUSSIAN, 0.6, 0.3, 0.8, "first"))
    v, u = np.random.default_rng(0).random((2, 50))
    assert cond_loglik(m, v, u[:, None]) == pytest.approx(np.sum(np.log(cop_pdf(GAUSSIAN, 0.6, v, u))))


def test_q2_matches_quadrature_oracle():
    rng = np.random.default_rng(1)
    for _ in range(30):
        v, u1, u2 = rng.uniform(0.03, 0.97, 3)
        assert cond_cdf(TRUE2, v, [u1, u2]) == pytest.approx(brute_cond_cdf(TRUE2, v, [u1, u2]),
                                                             abs=1e-3)


def test_cond_density_is_derivative():
    rng = np.random.default_rng(2)
    for _ in range(20):
        v, u1, u2 = rng.uniform(0.05, 0.95, 3)
        h = 1e-6
        fd = (cond_cdf(TRUE2, v + h, [u1, u2]) - cond_cdf(TRUE2, v - h, [u1, u2])) / (2 * h)
        assert cond_density(TRUE2, v, [u1, u2]) == pytest.approx(fd, rel=1e-4)


def test_cond_cdf_monotone_and_limits():
    u = [0.3, 0.8]
    g = np.linspace(0.01, 0.99, 99)
    c = cond_cdf(TRUE2, g, u)
    assert np.all(np.diff(c) > 0)
    assert np.all((c > 0) & (c < 1))
    assert cond_cdf(TRUE2, 1e-12, u) < 1e-4
    assert cond_cdf(TRUE2, 1 - 1e-12, u) > 1 - 1e-4


def test_quantile_roundtrip_and_no_crossing():
    rng = np.random.default_rng(3)
    alpha = rng.uniform(0.01, 0.99, 200)
    U = rng.uniform(0.02, 0.98, (200, 2))
    q = cond_quantile(TRUE2, alpha, U)
    assert_allclose(cond_cdf(TRUE2, q, U), alpha, atol=1e-7)
    grid = np.linspace(0.01, 0.99, 99)
    for u in rng.uniform(0.02, 0.98, (50, 2)):
        assert np.all(np.diff(cond_quantile(TRUE2, grid, u)) >= 0)


def test_quantile_domain():
    with pytest.raises(ValueError):
        cond_quantile(TRUE2, 1.0, [0.5, 0.5])


def test_length_mismatch():
    with pytest.raises(ValueError):
        cond_cdf(TRUE2, 0.5, [0.5])
    with pytest.raises(ValueError):
        cond_cdf(TRUE2, [0.1, 0.2, 0.3], np.full((2, 2), 0.5))


def test_named_conditioning():
    assert cond_cdf(TRUE2, 0.4, {"x2": 0.7, "x1": 0.2}) == cond_cdf(TRUE2, 0.4, [0.2, 0.7])
    with pytest.raises(KeyError):
        cond_cdf(TRUE2, 0.4, {"x1": 0.2})


# --------------------------------------------------------------------------- fitting

def test_structure_counts():
    rng = np.random.default_rng(4)
    preds = {f"p{i}": rng.random(200) for i in range(6)}
    y = rng.random(200)
    for q in range(6):
        m = fit_dvine(y, preds, max_p=q)
        assert len(m.pair_copulas) == (q + 1) * q // 2
        assert len(m.order) == q == len(m.cll_trace)
    assert len(m.pair_copulas) == 15
    # the response edge is first in every tree
    assert [len(t) for t in m.trees] == [5, 4, 3, 2, 1]


def test_recovery_single_predictor():
    truth = make_model([gauss(0.7), IND])
    hits, rhos = 0, []
    for seed in range(20):
        d = simulate_dvine(truth, 2000, seed=seed)
        m = fit_dvine(d["y"], {"x1": d["x1"], "x2": d["x2"]}, max_p=1)
        hits += m.order == ("x1",)
        rhos.append(m.arm[0].theta if m.arm[0].family == GAUSSIAN else np.nan)
    assert hits >= 19
    assert np.nanmax(np.abs(np.array(rhos) - 0.7)) < 0.05


def test_recovery_two_predictors():
    d = simulate_dvine(TRUE2, 5000, seed=5)
    noise = np.random.default_rng(6).random(5000)
    m = fit_dvine(d["y"], {"x1": d["x1"], "x2": d["x2"], "z": noise}, max_p=2)
    assert set(m.order) == {"x1", "x2"}


def test_tie_break_is_lexicographic():
    rng = np.random.default_rng(7)
    x = rng.random(300)
    y = np.clip(x + 0.2 * rng.random(300), 0, 1) / 1.2
    m = fit_dvine(y, {"b": x, "a": x.copy(), "c": rng.random(300)}, max_p=1)
    assert m.order == ("a",)


def test_max_p_zero():
    rng = np.random.default_rng(8)
    m = fit_dvine(rng.random(100), {"a": rng.random(100)}, max_p=0)
    assert m.order == () and m.pair_copulas == []
    assert cond_cdf(m, 0.42, []) == pytest.approx(0.42)


@pytest.mark.parametrize("kwargs,match", [
    (dict(n=30), "at least 50"),
    (dict(max_p=3), "exceeds"),
    (dict(constant=True), "constant"),
])
def test_fit_errors(kwargs, match):
    rng = np.random.default_rng(9)
    n = kwargs.get("n", 100)
    preds = {"a": rng.random(n), "b": rng.random(n)}
    if kwargs.get("constant"):
        preds["b"] = np.full(n, 0.5)
    with pytest.raises(VineFitError, match=match):
        fit_dvine(rng.random(n), preds, max_p=kwargs.get("max_p", 1))


def test_cond_loglik_matches_trace():
    d = simulate_dvine(TRUE2, 1000, seed=10)
    m = fit_dvine(d["y"], {"x1": d["x1"], "x2": d["x2"]}, max_p=2)
    ll = cond_loglik(m, d["y"], {"x1": d["x1"], "x2": d["x2"]})
    assert ll == pytest.approx(m.cll_trace[-1], rel=1e-6)


def test_cond_loglik_finite_difference():
    rng = np.random.default_rng(11)
    v, U = rng.uniform(0.05, 0.95, 40), rng.uniform(0.05, 0.95, (40, 2))
    h = 1e-6
    fd = (cond_cdf(TRUE2, v + h, U) - cond_cdf(TRUE2, v - h, U)) / (2 * h)
    assert cond_loglik(TRUE2, v, U) == pytest.approx(np.sum(np.log(fd)), abs=1e-4)


def test_simulation_tau_and_determinism():
    d = simulate_dvine(TRUE2, 20_000, seed=12)
    assert kendall_tau(d["y"], d["x1"]) == pytest.approx(gauss(0.6).tau, abs=0.015)
    assert kendall_tau(d["x1"], d["x2"]) == pytest.approx(TRUE2.pred_edges[(1, 2)].tau, abs=0.015)
    d2 = simulate_dvine(TRUE2, 20_000, seed=12)
    assert all(np.array_equal(d[k], d2[k]) for k in d)


def test_json_roundtrip():
    d = simulate_dvine(TRUE2, 500, seed=13)
    m = fit_dvine(d["y"], {"x1": d["x1"], "x2": d["x2"]}, max_p=2)
    js = json.loads(json.dumps(m.to_dict()))
    assert set(js) >= {"order", "trees", "cll_trace"}
    m2 = DVineModel.from_dict(js)
    assert m2.order == m.order and m2.pair_copulas == m.pair_copulas
    assert cond_cdf(m2, 0.3, [0.4, 0.6]) == cond_cdf(m, 0.3, [0.4, 0.6])
