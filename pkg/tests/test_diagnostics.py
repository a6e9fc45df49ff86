import itertools
import json
import math

import numpy as np
import pytest

from spinmple.coupling import CouplingMatrix, build_coupling, matvec
from spinmple.diagnostics import (
    ConditionReport,
    adversarial_patterns,
    bounded_fields_fraction,
    check_operator_norm,
    field_split,
    min_eig_lower_bound,
    restricted_variability,
    score_moment_check,
    t_tilde_min_bruteforce,
    t_tilde_min_sampled,
    trimmed_smallball,
    verify_conditions,
)
from spinmple.exceptions import TooLarge
from spinmple.graph import VertexSubset, gen_complete
from spinmple.model import neg_hessian, t_tilde


def all_of(n):
    return VertexSubset(np.arange(n), n)


def test_check_operator_norm():
    big = CouplingMatrix(2, [0], [1], [10.0], 1.0)
    assert check_operator_norm(big) == (10.0, False)
    j = build_coupling(gen_complete(300), "gaussian", 0)
    v, ok = check_operator_norm(j)
    assert ok and 1.7 < v < 2.3
    v2, _ = check_operator_norm(j.scaled(3.0))
    assert v2 == pytest.approx(3 * v, rel=1e-12)


def test_bruteforce_two_spin_zero():
    val, arg = t_tilde_min_bruteforce(CouplingMatrix(2, [0], [1], [0.8], 1.0), 0.5, 0.3)
    assert val == 0.0
    assert arg[0] == arg[1]


def _naive_min(j, beta, h):
    a = j.to_dense()
    return min(t_tilde(beta, h, a @ np.array(s)) for s in itertools.product((-1.0, 1.0), repeat=j.n))


def test_bruteforce_matches_naive_loop():
    j = build_coupling(gen_complete(8), "uniform", 4)
    val, arg = t_tilde_min_bruteforce(j, 0.5, 0.3)
    assert val == pytest.approx(_naive_min(j, 0.5, 0.3), rel=1e-12)
    assert t_tilde(0.5, 0.3, matvec(j, arg)) == pytest.approx(val, rel=1e-12)


def test_bruteforce_h_zero_pairing():
    j = build_coupling(gen_complete(9), "gaussian", 5)
    val, _ = t_tilde_min_bruteforce(j, 0.7, 0.0)
    assert val == pytest.approx(_naive_min(j, 0.7, 0.0), rel=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = np.where(rng.random(9) < 0.5, -1.0, 1.0)
        assert t_tilde(0.7, 0.0, matvec(j, s)) == pytest.approx(t_tilde(0.7, 0.0, matvec(j, -s)), rel=1e-13)


def test_bruteforce_cap():
    with pytest.raises(TooLarge):
        t_tilde_min_bruteforce(build_coupling(gen_complete(15), "gaussian", 0), 0.5, 0.3)


def test_sampled_includes_patterns_and_bounds_exact():
    j = build_coupling(gen_complete(12), "gaussian", 6)
    pats = adversarial_patterns(12)
    assert np.all(pats[0] == 1)
    exact, _ = t_tilde_min_bruteforce(j, 0.5, 0.3)
    one = t_tilde_min_sampled(j, 0.5, 0.3, 1, seed=2)
    assert one <= t_tilde(0.5, 0.3, matvec(j, np.ones(12)))
    vals = [t_tilde_min_sampled(j, 0.5, 0.3, k, seed=2) for k in (1, 10, 500, 3000)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert all(v >= exact for v in vals)


def test_score_moments_beta_zero():
    j = build_coupling(gen_complete(200), "gaussian", 1)
    s2, q2 = score_moment_check(j, 0.0, 0.0, 400, seed=3, thin=2, burnin=2)
    # Q = sum of iid signs: <Q^2>/n = 1 with standard error sqrt(2/400)
    assert abs(q2 - 1.0) <= 3 * math.sqrt(2 / 400)
    assert score_moment_check(j, 0.0, 0.0, 5, seed=3, burnin=2) == score_moment_check(j, 0.0, 0.0, 5, seed=3, burnin=2)
    with pytest.raises(ValueError):
        score_moment_check(j, 0.0, 0.0, 1)


def test_bounded_fields_fraction():
    m = np.array([0.5, -7.0, 2.0, 9.0])
    t = all_of(4)
    assert bounded_fields_fraction(m, t, 1e308) == 1.0
    assert bounded_fields_fraction(m, t, 0.0) == 0.0
    assert bounded_fields_fraction(m, t, 6.0) == 0.5
    assert bounded_fields_fraction(m, VertexSubset([1, 3], 4), 6.0) == 0.0


def test_trimmed_smallball_hand_values():
    assert trimmed_smallball(np.full(6, 1.5), all_of(6), gammas=[0.0, 1.5]) == 0.0
    m = np.array([0.0, 10.0, 20.0, 30.0])
    assert trimmed_smallball(m, all_of(4), gammas=[0.0]) == pytest.approx(5.0, rel=1e-15)


def _smallball_bruteforce(m, t, gammas):
    mt = m[t.members]
    k = len(mt)
    best = np.inf
    for g in gammas:
        for size in range(-(-k // 2), k + 1):
            for a in itertools.combinations(range(k), size):
                best = min(best, np.sum((mt[list(a)] - g) ** 2))
    return math.sqrt(best) / math.sqrt(m.size)


def test_trimmed_smallball_matches_subset_enumeration():
    rng = np.random.default_rng(1)
    m = rng.standard_normal(12)
    t = VertexSubset([0, 2, 3, 5, 7, 8, 11], 12)
    gammas = np.linspace(-1, 1, 9)
    assert trimmed_smallball(m, t, gammas=gammas) == pytest.approx(_smallball_bruteforce(m, t, gammas), rel=1e-12)


def test_trimmed_smallball_refinement_monotone():
    m = np.random.default_rng(2).standard_normal(50)
    coarse = trimmed_smallball(m, all_of(50), -2, 2, 0.1)
    fine = trimmed_smallball(m, all_of(50), -2, 2, 0.05)
    assert fine <= coarse


def test_restricted_variability_cases():
    rng = np.random.default_rng(3)
    m = rng.uniform(-1, 1, 40)
    c = t_tilde(0.4, 0.2, m)
    res = restricted_variability(m, c)
    assert res.cap == 1.0 and res.restricted_sum >= c / 2
    huge = np.array([3000.0, -5000.0, 2**12, -(2**13)])
    res = restricted_variability(huge, 0.1)
    assert math.isinf(res.cap)


def test_restricted_variability_double_sum():
    m = np.random.default_rng(4).standard_normal(60) * 3
    cap, val = restricted_variability(m, 1.0)
    sub = m[np.abs(m) <= cap]
    direct = np.sum((sub[:, None] - sub[None, :]) ** 2) / m.size**2
    assert val == pytest.approx(direct, rel=1e-12)


def test_field_split_cases():
    res = field_split(np.array([-1.0, -1.0, 1.0, 1.0]), 2.0, 0.5, 0.4)
    assert res.r == 0 and res.left_count == 2 and res.right_count == 2
    assert field_split(np.full(10, 0.3), 2.0, 0.5, 0.1) is None
    with pytest.raises(ValueError):
        field_split(np.ones(3), 0.0, 0.5, 0.1)


def test_field_split_counts_and_intervals():
    rng = np.random.default_rng(5)
    for _ in range(50):
        m = rng.normal(0, 2, 30)
        res = field_split(m, 3.0, 0.25, 0.2)
        if res is None:
            continue
        (a, b), (c, d) = res.left, res.right
        assert b < c and a >= -3.0 and d <= 3.0
        assert res.left_count == np.count_nonzero((m >= a) & (m <= b))
        assert res.right_count == np.count_nonzero((m >= c) & (m <= d))


def test_min_eig_lower_bound():
    rng = np.random.default_rng(6)
    for _ in range(100):
        n = int(rng.integers(4, 40))
        sigma = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        m = rng.standard_normal(n)
        b, h = rng.uniform(-2, 2, 2)
        hs = neg_hessian(b, h, sigma, m)
        a, bb, c = hs.s_theta_m2, hs.s_theta_m, hs.s_theta
        lam1 = 0.5 * (a + c) - math.sqrt(0.25 * (a - c) ** 2 + bb * bb)
        assert min_eig_lower_bound(b, h, sigma, m) <= lam1 * (1 + 1e-12) + 1e-12
    m = np.array([0.0, 1.0, 0.0, 1.0])
    bound = min_eig_lower_bound(0.0, 0.0, np.ones(4), m)
    assert bound == pytest.approx(neg_hessian(0.0, 0.0, np.ones(4), m).det / 6.0)
    assert min_eig_lower_bound(0.3, 0.1, np.ones(5), np.full(5, 2.0)) == 0.0


def test_condition_report_flags_and_json():
    j = build_coupling(gen_complete(12), "gaussian", 3)
    rep = verify_conditions(j, 0.5, 0.3, seed=1, replicates=6, score_samples=20, burnin=100)
    assert rep.t_tilde_min_method == "exact"
    assert rep.t_tilde_min <= rep.t_tilde_sample
    assert rep.passed["operator_norm"] == (rep.j_norm <= 4.0)
    assert rep.passed["t_tilde_positive"] == (rep.t_tilde_min >= 1e-3)
    d = json.loads(rep.to_json())
    assert set(d) >= {"j_norm", "t_tilde_min", "existence_fraction", "passed", "score_moment_s"}
    again = verify_conditions(j, 0.5, 0.3, seed=1, replicates=6, score_samples=20, burnin=100)
    assert again.to_json() == rep.to_json()


def test_degenerate_two_spin_fails_t_tilde():
    j = CouplingMatrix(2, [0], [1], [1.0], 1.0)
    rep = verify_conditions(j, 0.5, 0.3, replicates=3, score_samples=5, burnin=10)
    assert not rep.passed["t_tilde_positive"] and not rep.all_passed
    assert isinstance(rep, ConditionReport)
