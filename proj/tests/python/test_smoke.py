import numpy as np
import pytest

import alo


def ridge_loo(X, y, lam):
    # closed-form leave-one-out for (1/2)||y - Xb||^2 + (lam/2)||b||^2
    H = X @ np.linalg.solve(X.T @ X + lam * np.eye(X.shape[1]), X.T)
    fitted = H @ y
    return (fitted - np.diag(H) * y) / (1.0 - np.diag(H))


def test_log_grid_endpoints():
    g = alo.log_grid(10.0, 0.1, 5)
    assert len(g) == 5
    assert g[0] == pytest.approx(10.0)
    assert g[-1] == pytest.approx(0.1)
    assert all(a > b for a, b in zip(g, g[1:]))


def test_ridge_alo_matches_closed_form():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((30, 8))
    y = rng.standard_normal(30)
    lams = [5.0, 0.5]
    out = alo.alo_risk(X, y, lams, model="ridge")
    for k, lam in enumerate(lams):
        expect = ridge_loo(X, y, lam)
        assert np.max(np.abs(np.asarray(out["y_loo"][k]) - expect)) < 1e-8
        assert out["risk"][k] == pytest.approx(np.mean((expect - y) ** 2), rel=1e-10)


def test_lasso_alo_near_loocv_and_routes_agree():
    X, y, beta = alo.generate("lasso-misspec", n=60, p=40, k=4, seed=3)
    lmax = np.max(np.abs(X.T @ y))
    lams = alo.log_grid(0.5 * lmax, 0.05 * lmax, 4)
    primal = alo.alo_risk(X, y, lams, route="primal")
    dual = alo.alo_risk(X, y, lams, route="dual")
    np.testing.assert_allclose(primal["risk"], dual["risk"], rtol=1e-6)
    loo = alo.loocv_risk(X, y, lams)
    assert all(n == 0 for n in loo["n_failed"])
    assert len(beta) == 40


def test_fit_path_shapes():
    X, y, _ = alo.generate("fused", n=40, p=12, k=2, seed=1)
    out = alo.fit_path(X, y, [1.0, 0.1], model="fused")
    assert np.asarray(out["beta"]).shape == (2, 12)
    assert all(out["converged"])


def test_errors_are_translated():
    X = np.ones((4, 2))
    with pytest.raises(alo.AloError):
        alo.alo_risk(X, np.array([1.0, 2.0, 0.5, 3.0]), [1.0], model="svm")
    with pytest.raises(alo.AloError):
        alo.generate("no-such-scenario")
