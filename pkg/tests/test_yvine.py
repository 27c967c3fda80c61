import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from vinerisk.copula import GAUSSIAN, FamilyId, PairCopula, cop_cdf, cop_pdf
from vinerisk.dependence import kendall_tau
from vinerisk.dvine import cond_cdf
from vinerisk.yvine import (BivariateEval, YVineModel, bivariate_cond_cdf, cond_cdf_v1,
                            cond_cdf_v1_given_v2, cond_cdf_v2, cond_density_v1_given_v2,
                            cond_density_v2, conditional_tau, fit_yvine, independence_yvine,
                            simulate_yvine)

from conftest import gl_unit

IND = PairCopula.independence()


def cop(token, theta=None):
    return PairCopula.from_param(FamilyId.from_token(token), theta)


# a q=2 model with a different family on every edge
MIXED = YVineModel(
    ("x1", "x2"),
    (cop("gumbel", 1.8), cop("frank", 3.0)),
    (cop("clayton", 1.2), cop("gaussian", -0.3)),
    cop("joe", 1.6),
    {(1, 2): cop("clayton90", 0.8)},
    (), ("frost", "drought"))


def test_pair_copula_count():
    for q in range(6):
        m = independence_yvine(tuple(f"x{i}" for i in range(q)))
        assert len(m.pair_copulas) == (q + 2) * (q + 1) // 2
    assert len(m.pair_copulas) == 21


def test_full_independence():
    m = independence_yvine(("a", "b", "c"))
    u = [0.2, 0.6, 0.9]
    assert bivariate_cond_cdf(m, 0.3, 0.7, u) == pytest.approx(0.21, abs=1e-12)
    assert cond_density_v2(m, 0.4, u) == pytest.approx(1.0)
    assert cond_density_v1_given_v2(m, 0.4, 0.1, u) == pytest.approx(1.0)
    assert cond_cdf_v1_given_v2(m, 0.35, 0.8, u) == pytest.approx(0.35, abs=1e-12)
    assert conditional_tau(m)[2] == 0.0


def test_q0_reduces_to_top_copula():
    top = cop("clayton", 2.0)
    m = YVineModel((), (), (), top)
    assert bivariate_cond_cdf(m, 0.3, 0.6) == pytest.approx(cop_cdf(top.family, 2.0, 0.3, 0.6), abs=1e-10)
    assert cond_density_v1_given_v2(m, 0.3, 0.6, []) == pytest.approx(top.pdf(0.3, 0.6))
    fam, theta, tau = conditional_tau(m)
    assert (fam, theta) == (top.family, 2.0) and tau == pytest.approx(0.5)
    assert tau == top.tau


def test_q1_gaussian_density_v2(gaussian_yvine_q1):
    assert cond_density_v2(gaussian_yvine_q1, 0.3, [0.8]) == pytest.approx(cop_pdf(GAUSSIAN, 0.5, 0.3, 0.8))


@pytest.mark.parametrize("seed", range(4))
def test_conditional_densities_integrate_to_one(seed):
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.05, 0.95, 2)
    v2 = rng.uniform(0.05, 0.95)
    x, w = gl_unit(64)
    assert np.sum(w * cond_density_v2(MIXED, x, u)) == pytest.approx(1.0, abs=1e-3)
    assert np.sum(w * cond_density_v1_given_v2(MIXED, x, v2, u)) == pytest.approx(1.0, abs=1e-3)


def _h_shortcut(m, v1, v2, u):
    return m.top_copula.hfunc1(cond_cdf_v1(m, v1, u), cond_cdf_v2(m, v2, u))


def test_cond_cdf_v1_given_v2_matches_h_shortcut(gaussian_yvine_q1):
    rng = np.random.default_rng(5)
    P = rng.uniform(0.02, 0.98, (200, 3))
    quad = cond_cdf_v1_given_v2(gaussian_yvine_q1, P[:, 0], P[:, 1], P[:, 2:])
    assert_allclose(quad, _h_shortcut(gaussian_yvine_q1, P[:, 0], P[:, 1], P[:, 2:]), atol=1e-4)
    # also for a mixed-family model
    P = rng.uniform(0.02, 0.98, (200, 4))
    assert_allclose(cond_cdf_v1_given_v2(MIXED, P[:, 0], P[:, 1], P[:, 2:]),
                    _h_shortcut(MIXED, P[:, 0], P[:, 1], P[:, 2:]), atol=1e-4)


def test_cond_cdf_v1_given_v2_normalised_and_monotone():
    u = [0.3, 0.6]
    assert cond_cdf_v1_given_v2(MIXED, 1 - 1e-9, 0.4, u) == pytest.approx(1.0, abs=1e-3)
    g = np.linspace(0.01, 0.99, 99)
    assert np.all(np.diff(cond_cdf_v1_given_v2(MIXED, g, 0.4, u)) >= 0)


def test_bivariate_matches_closed_form():
    # C(v1, v2 | u) = C_top(C(v1 | u), C(v2 | u)) under the simplifying assumption
    rng = np.random.default_rng(6)
    P = rng.uniform(0.02, 0.98, (300, 4))
    exact = MIXED.top_copula.cdf(cond_cdf_v1(MIXED, P[:, 0], P[:, 2:]),
                                 cond_cdf_v2(MIXED, P[:, 1], P[:, 2:]))
    assert_allclose(bivariate_cond_cdf(MIXED, P[:, 0], P[:, 1], P[:, 2:]), exact, atol=1e-5)


def test_bivariate_bounds_and_monotonicity():
    u = [0.7, 0.2]
    g = np.linspace(0.02, 0.98, 25)
    V1, V2 = np.meshgrid(g, g, indexing="ij")
    B = bivariate_cond_cdf(MIXED, V1.ravel(), V2.ravel(), u).reshape(V1.shape)
    c1 = cond_cdf_v1(MIXED, g, u)[:, None]
    c2 = cond_cdf_v2(MIXED, g, u)[None, :]
    assert np.all(B <= np.minimum(c1, c2) + 1e-6)
    assert np.all(B >= np.maximum(c1 + c2 - 1, 0) - 1e-6)
    assert np.all(np.diff(B, axis=0) >= -1e-12)
    assert np.all(np.diff(B, axis=1) >= -1e-12)


def test_margins_recovered():
    u = [0.4, 0.9]
    for v in (0.1, 0.5, 0.9):
        assert bivariate_cond_cdf(MIXED, 1 - 1e-10, v, u) == pytest.approx(cond_cdf_v2(MIXED, v, u), abs=2e-3)
        assert bivariate_cond_cdf(MIXED, v, 1 - 1e-10, u) == pytest.approx(cond_cdf_v1(MIXED, v, u), abs=2e-3)


def test_quadrature_convergence():
    rng = np.random.default_rng(7)
    P = rng.uniform(0.02, 0.98, (200, 4))
    a = bivariate_cond_cdf(MIXED, P[:, 0], P[:, 1], P[:, 2:], n_nodes=50)
    b = bivariate_cond_cdf(MIXED, P[:, 0], P[:, 1], P[:, 2:], n_nodes=100)
    assert np.max(np.abs(a - b)) < 1e-5


def test_non_factorization():
    g = np.linspace(0.05, 0.95, 10)
    V1, V2 = [a.ravel() for a in np.meshgrid(g, g)]
    u = [0.5, 0.5]
    prod = cond_cdf_v1(MIXED, V1, u) * cond_cdf_v2(MIXED, V2, u)
    assert abs(MIXED.top_copula.tau) >= 0.1
    assert np.max(np.abs(bivariate_cond_cdf(MIXED, V1, V2, u) - prod)) > 1e-3


def test_bivariate_eval_record(gaussian_yvine_q1):
    e = BivariateEval(0.3, 0.4, [0.5])
    assert bivariate_cond_cdf(gaussian_yvine_q1, e) == bivariate_cond_cdf(gaussian_yvine_q1, 0.3, 0.4, [0.5])


def test_length_mismatch():
    with pytest.raises(ValueError):
        bivariate_cond_cdf(MIXED, 0.3, 0.4, [0.5])
    with pytest.raises(ValueError):
        cond_density_v2(MIXED, [0.1, 0.2, 0.3], np.full((2, 2), 0.5))


def test_submodels_are_dvines():
    u = np.random.default_rng(8).uniform(0.05, 0.95, (20, 2))
    v = np.linspace(0.05, 0.95, 20)
    assert_allclose(cond_cdf(MIXED.submodel(1), v, u), cond_cdf_v1(MIXED, v, u))
    assert_allclose(cond_cdf(MIXED.submodel(2), v, u), cond_cdf_v2(MIXED, v, u))
    assert len(MIXED.submodel(1).pair_copulas) == 3


# --------------------------------------------------------------------------- simulation / fitting

def test_simulate_independence():
    d = simulate_yvine(independence_yvine(("a", "b")), 100_000, seed=1)
    names = list(d)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            assert abs(kendall_tau(d[names[i]], d[names[j]])) < 0.01


def test_simulate_q0_gaussian():
    m = YVineModel((), (), (), cop("gaussian", 0.6))
    d = simulate_yvine(m, 100_000, seed=2)
    assert kendall_tau(d["v1"], d["v2"]) == pytest.approx(m.top_copula.tau, abs=0.01)


def test_simulate_deterministic():
    a = simulate_yvine(MIXED, 500, seed=3)
    b = simulate_yvine(MIXED, 500, seed=3)
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert set(a) == {"x1", "x2", "frost", "drought"}


def test_refit_recovers_parameters():
    d = simulate_yvine(MIXED, 10_000, seed=4)
    m = fit_yvine(d["frost"], d["drought"], {"x1": d["x1"], "x2": d["x2"]}, max_p=2,
                  response_names=("frost", "drought"))
    assert m.order == ("x1", "x2")
    for fitted, true in zip(m.pair_copulas, MIXED.pair_copulas):
        assert fitted.family == true.family
        assert fitted.theta == pytest.approx(true.theta, abs=0.1)


@pytest.mark.parametrize("seed", range(5))
def test_q1_gaussian_recovery(gaussian_yvine_q1, seed):
    d = simulate_yvine(gaussian_yvine_q1, 3000, seed=seed)
    m = fit_yvine(d["frost"], d["drought"], {"x1": d["x1"]}, max_p=1, candidates=["gaussian"])
    for fitted, true in zip(m.pair_copulas, gaussian_yvine_q1.pair_copulas):
        assert fitted.theta == pytest.approx(true.theta, abs=0.06)


def test_fit_q0():
    d = simulate_yvine(YVineModel((), (), (), cop("frank", 4.0)), 2000, seed=5)
    m = fit_yvine(d["v1"], d["v2"], {"z": np.random.default_rng(0).random(2000)}, max_p=0)
    assert m.order == () and len(m.pair_copulas) == 1
    assert bivariate_cond_cdf(m, 0.3, 0.6) == pytest.approx(m.top_copula.cdf(0.3, 0.6), abs=1e-9)


def test_duplicate_predictors_tie_break():
    d = simulate_yvine(MIXED, 1000, seed=6)
    m = fit_yvine(d["frost"], d["drought"], {"zz": d["x1"], "aa": d["x1"].copy()}, max_p=1)
    assert m.order == ("aa",)


def test_symmetric_in_responses():
    d = simulate_yvine(MIXED, 3000, seed=7)
    preds = {"x1": d["x1"], "x2": d["x2"], "n": np.random.default_rng(1).random(3000)}
    a = fit_yvine(d["frost"], d["drought"], preds, max_p=2)
    b = fit_yvine(d["drought"], d["frost"], preds, max_p=2)
    assert a.order == b.order
    assert a.cll_trace == pytest.approx(b.cll_trace, rel=1e-9)
    assert a.top_copula.tau == pytest.approx(b.top_copula.tau, abs=1e-6)


def test_json_roundtrip():
    js = json.loads(json.dumps(MIXED.to_dict()))
    assert {"top_copula", "edges_v1", "edges_v2", "order", "predictor_edges"} <= set(js)
    m = YVineModel.from_dict(js)
    assert [(c.family, c.theta) for c in m.pair_copulas] == [(c.family, c.theta) for c in MIXED.pair_copulas]
    assert bivariate_cond_cdf(m, 0.3, 0.4, [0.5, 0.6]) == bivariate_cond_cdf(MIXED, 0.3, 0.4, [0.5, 0.6])
