import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from spinmple.coupling import build_coupling, matvec
from spinmple.estimator import (
    LocalFieldTransformer,
    PseudoLikelihoodEstimator,
    existence_check,
    mple_grid_oracle,
    mple_newton,
)
from spinmple.exceptions import NonExistence
from spinmple.graph import gen_complete, gen_erdos_renyi
from spinmple.model import neg_hessian, pseudo_loglik
from spinmple.sampler import sample_gibbs


@pytest.fixture(scope="module")
def sk_sample():
    j = build_coupling(gen_complete(64), "gaussian", 31)
    tau = sample_gibbs(j, 0.5, 0.3, seed=8)
    return j, tau, matvec(j, tau)


def test_existence_examples():
    w = existence_check([1, -1, 1, -1], [1, 1, -1, -1])
    assert w.exists and w.indices == (0, 1, 2, 3) and w.a == 0.0
    assert not existence_check(np.ones(8), np.arange(8.0)).exists
    assert not existence_check([1, -1, 1, -1, 1], np.full(5, 0.3)).exists
    w3 = existence_check([1, -1, 1], [0, 1, 2])
    assert not w3.exists and "4 sites" in w3.reason


def _brute_exists(sigma, m):
    cands = sorted(set(m))
    for lo, hi in zip(cands, cands[1:]):
        a = 0.5 * (lo + hi)
        above, below = m > a, m < a
        if all(np.any(side & (sigma == s)) for side in (above, below) for s in (1, -1)):
            return True
    return False


def test_existence_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(300):
        n = int(rng.integers(4, 12))
        sigma = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        m = rng.integers(-3, 4, n).astype(float)
        w = existence_check(sigma, m)
        assert w.exists == _brute_exists(sigma, m)
        if w.exists:
            i, j, k, l = w.indices
            assert len({i, j, k, l}) == 4
            assert sigma[i] == 1 and m[i] > w.a and sigma[j] == -1 and m[j] > w.a
            assert sigma[k] == 1 and m[k] < w.a and sigma[l] == -1 and m[l] < w.a


def test_newton_contract(sk_sample):
    j, tau, m = sk_sample
    rep = mple_newton(tau, m)
    assert rep.converged and rep.status == "converged"
    s_max = 1e-10 * j.n
    assert rep.final_score_norm <= s_max
    ls = [t["L"] for t in rep.trace]
    assert all(b >= a for a, b in zip(ls, ls[1:]))
    for t in rep.trace:
        hs = neg_hessian(t["beta"], t["h"], tau, m)
        lam1 = hs.eigvalsh()[0]
        assert hs.det / hs.trace <= lam1 * (1 + 1e-12) + 1e-12


def test_newton_matches_grid_oracle(sk_sample):
    _, tau, m = sk_sample
    rep = mple_newton(tau, m)
    box = (rep.beta_hat - 0.5, rep.beta_hat + 0.5, rep.h_hat - 0.5, rep.h_hat + 0.5)
    g = mple_grid_oracle(tau, m, box, 1e-3)
    assert abs(g.beta - rep.beta_hat) <= 1e-3 + 1e-12
    assert abs(g.h - rep.h_hat) <= 1e-3 + 1e-12
    assert not g.on_boundary
    assert g.value == pytest.approx(pseudo_loglik(g.beta, g.h, tau, m), rel=1e-12)


def test_grid_oracle_boundary_and_refinement(sk_sample):
    _, tau, m = sk_sample
    rep = mple_newton(tau, m)
    far = (rep.beta_hat + 1.0, rep.beta_hat + 2.0, rep.h_hat - 0.5, rep.h_hat + 0.5)
    g = mple_grid_oracle(tau, m, far, 0.01)
    assert g.on_boundary and g.beta == pytest.approx(rep.beta_hat + 1.0)
    box = (rep.beta_hat - 0.4, rep.beta_hat + 0.4, rep.h_hat - 0.4, rep.h_hat + 0.4)
    coarse = mple_grid_oracle(tau, m, box, 0.02)
    fine = mple_grid_oracle(tau, m, box, 0.01)
    assert abs(coarse.beta - fine.beta) <= 0.02 + 1e-12
    assert abs(coarse.h - fine.h) <= 0.02 + 1e-12


def test_grid_oracle_ties_smallest():
    # L depends only on h when all fields vanish: ties across beta
    sigma = np.array([1.0, -1.0, 1.0, 1.0])
    g = mple_grid_oracle(sigma, np.zeros(4), (-1, 1, -1, 1), 0.5)
    assert g.beta == -1.0


def test_newton_init_independence(sk_sample):
    _, tau, m = sk_sample
    ref = mple_newton(tau, m)
    rng = np.random.default_rng(3)
    for b0, h0 in rng.uniform(-1, 1, size=(5, 2)):
        rep = mple_newton(tau, m, init=(b0, h0))
        assert abs(rep.beta_hat - ref.beta_hat) <= 1e-8
        assert abs(rep.h_hat - ref.h_hat) <= 1e-8


def test_equivariance_under_global_flip(sk_sample):
    j, tau, m = sk_sample
    a = mple_newton(tau, m)
    b = mple_newton(-tau, matvec(j, -tau))
    assert b.beta_hat == a.beta_hat
    assert b.h_hat == -a.h_hat


def test_nonexistence_raises_and_force():
    sigma = np.array([1.0, -1.0, 1.0, -1.0, 1.0, 1.0])
    m = np.full(6, 0.5)
    with pytest.raises(NonExistence) as info:
        mple_newton(sigma, m)
    assert not info.value.witness.exists
    rep = mple_newton(sigma, m, force=True)
    assert not rep.existence_verified
    assert rep.degenerate_steps > 0
    assert rep.converged


def test_max_iters_reported(sk_sample):
    _, tau, m = sk_sample
    rep = mple_newton(tau, m, max_iters=1)
    assert not rep.converged and rep.status == "max_iters" and rep.iterations == 1


def test_sklearn_estimator_api(sk_sample):
    j, tau, m = sk_sample
    est = PseudoLikelihoodEstimator(coupling=j)
    assert est.get_params()["tol"] == 1e-10
    est2 = clone(est).set_params(max_iter=50)
    est2.fit(tau)
    ref = mple_newton(tau, m)
    assert est2.beta_ == ref.beta_hat and est2.h_ == ref.h_hat
    assert est2.n_features_in_ == 64 and est2.witness_.exists
    assert est2.score(tau) == pytest.approx(pseudo_loglik(est2.beta_, est2.h_, tau, m) / 64)
    proba = est2.predict_proba(tau)
    assert proba.shape == (1, 64) and np.all((proba > 0) & (proba < 1))
    with pytest.raises(ValueError):
        est2.fit(np.zeros(64))


def test_estimator_pools_samples():
    j = build_coupling(gen_erdos_renyi(80, 0.3, seed=1), "gaussian", 2)
    xs = np.stack([sample_gibbs(j, 0.4, -0.2, burnin=200, seed=s) for s in range(4)])
    est = PseudoLikelihoodEstimator(coupling=j).fit(xs)
    ref = mple_newton(xs.ravel(), matvec(j, xs).ravel())
    assert est.beta_ == ref.beta_hat


def test_dense_coupling_and_transformer(sk_sample):
    j, tau, m = sk_sample
    est = PseudoLikelihoodEstimator(coupling=j.to_dense()).fit(tau[None, :])
    assert est.beta_ == pytest.approx(mple_newton(tau, m).beta_hat, rel=1e-12)
    pipe = make_pipeline(FunctionTransformer(np.sign), LocalFieldTransformer(coupling=j))
    out = pipe.fit_transform(tau[None, :])
    np.testing.assert_allclose(out[0], m)
