"""Numerical checks of the hypotheses behind MPLE consistency.

Thresholds are desk-scale defaults, not constants with theoretical meaning;
every one of them can be overridden through :class:`Thresholds`.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from ._seeding import derive_seed, make_rng
from .coupling import matvec, operator_norm
from .estimator import existence_check
from .exceptions import TooLarge
from .model import neg_hessian, score, theta
from .sampler import gibbs_samples, sample_gibbs_batch, spins_from_masks

__all__ = [
    "Thresholds",
    "ConditionReport",
    "check_operator_norm",
    "t_tilde_batch",
    "t_tilde_min_bruteforce",
    "t_tilde_min_sampled",
    "score_moment_check",
    "bounded_fields_fraction",
    "trimmed_smallball",
    "restricted_variability",
    "field_split",
    "min_eig_lower_bound",
    "existence_fraction",
    "verify_conditions",
]

BRUTE_FORCE_MAX_N = 14
_BATCH = 1024


@dataclass(frozen=True)
class Thresholds:
    j_norm: float = 4.0
    t_tilde: float = 1e-3
    existence_fraction: float = 0.95
    score_moment: float = 25.0
    bounded_fields_cap: float = 6.0
    gamma_lo: float = -8.0
    gamma_hi: float = 8.0
    gamma_step: float = 0.05


def check_operator_norm(j, threshold=4.0, seed=0):
    """Operator norm of ``J`` and whether it sits below ``threshold``."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    value = operator_norm(j, seed=seed).value
    return value, value <= threshold


def t_tilde_batch(beta, h, m):
    """Row-wise weighted variability for a batch of field vectors (k, n)."""
    m = np.atleast_2d(m)
    th = theta(beta, h, m)
    s0 = th.sum(axis=1)
    safe = np.where(s0 > 0, s0, 1.0)
    centre = (th * m).sum(axis=1) / safe
    dm = m - centre[:, None]
    return 2.0 * s0 * (th * dm * dm).sum(axis=1) / m.shape[1] ** 2


def t_tilde_min_bruteforce(j, beta, h):
    """Exact minimum of the weighted variability over all ``2^n`` spin states.

    When ``h == 0`` the value is even in sigma, so only states with
    ``sigma_{n-1} = -1`` are scanned.  Returns ``(min_value, argmin_sigma)``;
    the argmin is the smallest mask attaining the minimum.
    """
    n = j.n
    if n > BRUTE_FORCE_MAX_N:
        raise TooLarge(f"brute force capped at n={BRUTE_FORCE_MAX_N}, got {n}")
    a = j.to_dense()
    size = 1 << (n - 1 if h == 0 else n)
    best, best_mask = np.inf, 0
    for start in range(0, size, _BATCH):
        masks = np.arange(start, min(start + _BATCH, size))
        s = spins_from_masks(masks, n)
        vals = t_tilde_batch(beta, h, s @ a)
        k = int(np.argmin(vals))
        if vals[k] < best:
            best, best_mask = float(vals[k]), int(masks[k])
    return best, spins_from_masks(np.array([best_mask]), n)[0]


def adversarial_patterns(n):
    """All-plus, all-minus and the two alternating sign patterns."""
    alt = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    return np.stack([np.ones(n), -np.ones(n), alt, -alt])


def t_tilde_min_sampled(j, beta, h, num_configs, seed=0):
    """Minimum over ``num_configs`` uniform spin states plus fixed patterns.

    Only an upper bound on the true minimum.  Configurations are drawn in
    blocks of 1024 from a single stream, so the candidate sets for growing
    ``num_configs`` are nested.
    """
    if num_configs < 1:
        raise ValueError("num_configs must be at least 1")
    a = j.csr
    best = float(t_tilde_batch(beta, h, matvec(j, adversarial_patterns(j.n))).min())
    rng = make_rng(seed)
    done = 0
    while done < num_configs:
        k = min(_BATCH, num_configs - done)
        block = rng.random((_BATCH, j.n))[:k]
        s = np.where(block < 0.5, -1.0, 1.0)
        best = min(best, float(t_tilde_batch(beta, h, np.asarray((a @ s.T).T)).min()))
        done += k
    return best


def score_moment_check(j, beta, h, num_samples, seed=0, thin=10, burnin=None):
    """Monte Carlo ``(<S^2>/n, <Q^2>/n)`` at the sampling parameters.

    Samples come from one Glauber chain, thinned every ``thin`` sweeps.
    """
    if num_samples < 2:
        raise ValueError("num_samples must be at least 2")
    xs = gibbs_samples(j, beta, h, num_samples, thin=thin, burnin=burnin, seed=seed)
    ms = matvec(j, xs)
    s2 = q2 = 0.0
    for x, m in zip(xs, ms):
        s, q = score(beta, h, x, m)
        s2 += s * s
        q2 += q * q
    return s2 / num_samples / j.n, q2 / num_samples / j.n


def bounded_fields_fraction(m, t, cap_m):
    """Fraction of members of ``t`` whose field satisfies ``|m_i| <= cap_m``."""
    if len(t) == 0:
        raise ValueError("subset must be nonempty")
    mt = np.asarray(m)[t.members]
    return float(np.count_nonzero(np.abs(mt) <= cap_m)) / len(t)


def _gamma_grid(lo, hi, step):
    k = int(math.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(k + 1)


def trimmed_smallball(m, t, gamma_lo=-8.0, gamma_hi=8.0, gamma_step=0.05, gammas=None):
    """``min_gamma min_{A in T, |A| >= |T|/2} ||m_A - gamma||_2 / sqrt(n)``.

    For fixed gamma the inner minimum keeps the ``ceil(|T|/2)`` smallest
    squared deviations.  ``gammas`` overrides the regular grid.
    """
    m = np.asarray(m, dtype=np.float64)
    if len(t) == 0:
        raise ValueError("subset must be nonempty")
    grid = _gamma_grid(gamma_lo, gamma_hi, gamma_step) if gammas is None else np.asarray(gammas)
    if grid.size == 0:
        raise ValueError("gamma grid is empty")
    mt = m[t.members]
    keep = -(-len(mt) // 2)
    best = np.inf
    for start in range(0, grid.size, 256):
        g = grid[start:start + 256]
        sq = (mt[None, :] - g[:, None]) ** 2
        part = np.partition(sq, keep - 1, axis=1)[:, :keep].sum(axis=1)
        best = min(best, float(part.min()))
    return math.sqrt(best) / math.sqrt(m.size)


def _pair_sum(m_sub, n):
    """``(1/n^2) sum_{i,j} (m_i - m_j)^2`` over a subset, via the variance form."""
    k = m_sub.size
    if k == 0:
        return 0.0
    return 2.0 * k * float(np.sum((m_sub - m_sub.mean()) ** 2)) / n**2


class Variability(NamedTuple):
    cap: float
    restricted_sum: float


def restricted_variability(m, c, max_power=10):
    """Smallest ``M`` in ``1, 2, 4, ..., 2^max_power`` with restricted pair sum >= c/2.

    The restricted pair sum is ``(1/n^2) sum_{i,j in I_M} (m_i - m_j)^2``
    over ``I_M = {i : |m_i| <= M}``.  Returns ``(inf, T_n)`` when no cap
    qualifies.
    """
    m = np.asarray(m, dtype=np.float64)
    n = m.size
    for p in range(max_power + 1):
        cap = float(2**p)
        val = _pair_sum(m[np.abs(m) <= cap], n)
        if val >= c / 2.0:
            return Variability(cap, val)
    return Variability(math.inf, _pair_sum(m, n))


class FieldSplit(NamedTuple):
    r: int
    left_count: int
    right_count: int
    left: tuple
    right: tuple


def field_split(m, cap_k, delta, eps):
    """Integer ``r`` nearest zero splitting the fields into two eps-heavy bins.

    Bins are ``[-K, (r-1) delta]`` and ``[r delta, K]``; both must hold at
    least ``eps * n`` fields.  Candidates are tried in the order
    ``0, -1, 1, -2, 2, ...``.  Returns ``None`` when no ``|r| <= K/delta``
    works.
    """
    if cap_k <= 0 or delta <= 0 or eps <= 0:
        raise ValueError("cap_k, delta and eps must be positive")
    m = np.sort(np.asarray(m, dtype=np.float64))
    need = eps * m.size
    r_max = int(math.floor(cap_k / delta))

    def count(lo, hi):
        if lo > hi:
            return 0
        return int(np.searchsorted(m, hi, side="right") - np.searchsorted(m, lo, side="left"))

    for r in sorted(range(-r_max, r_max + 1), key=lambda r: (abs(r), r)):
        left = (-cap_k, (r - 1) * delta)
        right = (r * delta, cap_k)
        cl, cr = count(*left), count(*right)
        if cl >= need and cr >= need:
            return FieldSplit(r, cl, cr, left, right)
    return None


def min_eig_lower_bound(beta, h, sigma, m):
    """``det(H) / trace(H)``, a lower bound on the smallest eigenvalue of H."""
    hs = neg_hessian(beta, h, sigma, m)
    if hs.trace == 0.0:
        return 0.0
    return max(hs.det, 0.0) / hs.trace


def existence_fraction(j, beta, h, replicates, seed=0, threads=None, burnin=None):
    """Share of independent Gibbs draws carrying an existence witness."""
    xs = sample_gibbs_batch(j, beta, h, replicates, seed, threads, burnin)
    ms = matvec(j, xs)
    hits = sum(existence_check(x, m).exists for x, m in zip(xs, ms))
    return hits / replicates


@dataclass
class ConditionReport:
    n: int
    beta: float
    h: float
    j_norm: float
    j_norm_threshold: float
    t_tilde_sample: float
    t_tilde_min: float
    t_tilde_min_method: str
    t_tilde_threshold: float
    existence_fraction: float
    existence_threshold: float
    score_moment_s: float
    score_moment_q: float
    score_moment_threshold: float
    passed: dict = field(default_factory=dict)
    replicate_t_tilde: list = field(default_factory=list)
    seed: Optional[int] = None

    def __post_init__(self):
        self.passed = {
            "operator_norm": self.j_norm <= self.j_norm_threshold,
            "t_tilde_positive": self.t_tilde_min >= self.t_tilde_threshold,
            "existence": self.existence_fraction >= self.existence_threshold,
            "score_moments": max(self.score_moment_s, self.score_moment_q)
            <= self.score_moment_threshold,
        }

    @property
    def all_passed(self):
        return all(self.passed.values())

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def verify_conditions(j, beta, h, seed=0, replicates=20, num_configs=10_000,
                      score_samples=100, thresholds=Thresholds(), threads=None, burnin=None):
    """Run the full diagnostic bundle at ``(beta, h)`` and build a report."""
    j_norm = operator_norm(j, seed=derive_seed(seed, 0)).value
    if j.n <= BRUTE_FORCE_MAX_N:
        t_min, _ = t_tilde_min_bruteforce(j, beta, h)
        method = "exact"
    else:
        t_min = t_tilde_min_sampled(j, beta, h, num_configs, seed=derive_seed(seed, 1))
        method = "sampled"
    xs = sample_gibbs_batch(j, beta, h, replicates, derive_seed(seed, 2), threads, burnin)
    ms = matvec(j, xs)
    rep_tt = [float(v) for v in t_tilde_batch(beta, h, ms)]
    exists = [existence_check(x, m).exists for x, m in zip(xs, ms)]
    s_mom, q_mom = score_moment_check(j, beta, h, score_samples, seed=derive_seed(seed, 3),
                                      burnin=burnin)
    # a realized sample can never beat the minimum over all states
    t_min = min(t_min, min(rep_tt))
    return ConditionReport(
        n=j.n,
        beta=beta,
        h=h,
        j_norm=j_norm,
        j_norm_threshold=thresholds.j_norm,
        t_tilde_sample=rep_tt[0],
        t_tilde_min=t_min,
        t_tilde_min_method=method,
        t_tilde_threshold=thresholds.t_tilde,
        existence_fraction=sum(exists) / replicates,
        existence_threshold=thresholds.existence_fraction,
        score_moment_s=s_mom,
        score_moment_q=q_mom,
        score_moment_threshold=thresholds.score_moment,
        replicate_t_tilde=rep_tt,
        seed=seed,
    )
