"""Joint maximum pseudolikelihood estimation of ``(beta, h)``."""

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import NonExistence
from .model import (
    ModelParams,
    conditional_prob_plus,
    log_cosh,
    neg_hessian,
    pseudo_loglik,
    score,
    t_stat,
)
from .validation import check_coupling, check_spins

__all__ = [
    "ExistenceWitness",
    "EstimationReport",
    "existence_check",
    "mple_newton",
    "mple_grid_oracle",
    "GridResult",
    "PseudoLikelihoodEstimator",
    "LocalFieldTransformer",
]

ARMIJO = 1e-4
MAX_HALVINGS = 30


@dataclass(frozen=True)
class ExistenceWitness:
    """Four distinct sites and a threshold ``a`` certifying a bounded maximizer.

    When ``exists``: ``sigma_i = +1, m_i > a``; ``sigma_j = -1, m_j > a``;
    ``sigma_k = +1, m_k < a``; ``sigma_l = -1, m_l < a``.
    """

    exists: bool
    a: Optional[float] = None
    indices: Optional[tuple] = None
    reason: str = ""


def existence_check(sigma, m):
    """Search thresholds between consecutive distinct fields for a witness.

    Sites are ordered by field (stable sort); the first threshold, scanning
    upwards, with both spin signs strictly on each side wins.  Within each
    side the lowest-field site of each sign is reported.  O(n log n).
    """
    sigma = np.asarray(sigma, dtype=np.float64).ravel()
    m = np.asarray(m, dtype=np.float64).ravel()
    if sigma.shape != m.shape:
        raise ValueError("sigma and m must have the same length")
    n = m.size
    if n < 4:
        return ExistenceWitness(False, reason=f"need at least 4 sites, got {n}")
    order = np.argsort(m, kind="stable")
    ms = m[order]
    plus = sigma[order] > 0
    # counts among the first k sorted sites
    plus_below = np.concatenate([[0], np.cumsum(plus)])
    minus_below = np.concatenate([[0], np.cumsum(~plus)])
    n_plus, n_minus = plus_below[-1], minus_below[-1]
    # candidate cuts sit between positions k-1 and k where the value changes
    cuts = np.flatnonzero(ms[1:] > ms[:-1]) + 1
    ok = (
        (plus_below[cuts] > 0)
        & (minus_below[cuts] > 0)
        & (n_plus - plus_below[cuts] > 0)
        & (n_minus - minus_below[cuts] > 0)
    )
    if not np.any(ok):
        return ExistenceWitness(False, reason="no threshold separates both spin signs on both sides")
    k = int(cuts[np.argmax(ok)])
    a = 0.5 * (ms[k - 1] + ms[k])
    below, above = order[:k], order[k:]
    i = int(above[np.argmax(plus[k:])])
    jj = int(above[np.argmax(~plus[k:])])
    kk = int(below[np.argmax(plus[:k])])
    ll = int(below[np.argmax(~plus[:k])])
    return ExistenceWitness(True, float(a), (i, jj, kk, ll))


@dataclass
class EstimationReport:
    beta_hat: float
    h_hat: float
    converged: bool
    iterations: int
    final_score_norm: float
    final_t_tilde: float
    status: str = "converged"
    existence_verified: bool = True
    degenerate_steps: int = 0
    trace: list = field(default_factory=list)

    @property
    def params(self):
        return ModelParams(self.beta_hat, self.h_hat)

    def to_dict(self):
        return asdict(self)


def _line_search(beta, h, direction, grad, l0, sigma, m):
    """Backtracking on t in {1, 1/2, ..., 2^-30} with an Armijo condition.

    Returns ``(beta, h, L, t)`` or ``None`` when no step size helps.
    """
    slope = grad[0] * direction[0] + grad[1] * direction[1]
    # below this predicted gain L cannot resolve an increase
    noise = 1e-13 * (1.0 + abs(l0))
    g0 = max(abs(grad[0]), abs(grad[1]))
    t = 1.0
    for _ in range(MAX_HALVINGS + 1):
        b1, h1 = beta + t * direction[0], h + t * direction[1]
        l1 = pseudo_loglik(b1, h1, sigma, m)
        if l1 > l0 and l1 >= l0 + ARMIJO * t * slope:
            return b1, h1, l1, t
        if t * slope < noise and l1 >= l0 - noise:
            s1 = score(b1, h1, sigma, m)
            if max(abs(s1[0]), abs(s1[1])) < g0:
                return b1, h1, max(l1, l0), t
        t *= 0.5
    return None


def mple_newton(sigma, m, init=(0.0, 0.0), tol=1e-10, max_iters=200, force=False):
    """Maximize the log-pseudolikelihood by safeguarded Newton ascent.

    Stops when ``max(|S|, |Q|) <= tol * n``.  When the negative Hessian is
    numerically singular a gradient step (scaled by the inverse trace) is
    used instead.  The existence witness is checked first; pass
    ``force=True`` to solve regardless (the report is then flagged
    ``existence_verified=False`` if no witness was found).

    Raises
    ------
    NonExistence
        No witness and ``force`` is false.
    """
    sigma = np.asarray(sigma, dtype=np.float64).ravel()
    m = np.asarray(m, dtype=np.float64).ravel()
    witness = existence_check(sigma, m)
    if not witness.exists and not force:
        raise NonExistence(f"no existence witness: {witness.reason}", witness)
    n = m.size
    stop = tol * n
    t_n = t_stat(m)
    beta, h = float(init[0]), float(init[1])
    l_cur = pseudo_loglik(beta, h, sigma, m)
    trace = []
    degenerate = 0
    status = "max_iters"
    it = 0
    while True:
        s, q = score(beta, h, sigma, m)
        hs = neg_hessian(beta, h, sigma, m)
        gnorm = max(abs(s), abs(q))
        trace.append({"beta": beta, "h": h, "L": l_cur, "score_norm": math.hypot(s, q)})
        if gnorm <= stop:
            status = "converged"
            break
        if it >= max_iters:
            break
        it += 1
        if hs.t_tilde < 1e-12 * (1.0 + t_n):
            degenerate += 1
            scale = 1.0 / max(hs.trace, 1e-300)
            direction = (s * scale, q * scale)
        else:
            det = hs.det
            direction = (
                (hs.s_theta * s - hs.s_theta_m * q) / det,
                (hs.s_theta_m2 * q - hs.s_theta_m * s) / det,
            )
        step = _line_search(beta, h, direction, (s, q), l_cur, sigma, m)
        if step is None:
            status = "line_search_failed"
            break
        beta, h, l_cur, _ = step
    hs = neg_hessian(beta, h, sigma, m)
    s, q = score(beta, h, sigma, m)
    return EstimationReport(
        beta_hat=beta,
        h_hat=h,
        converged=status == "converged",
        iterations=it,
        final_score_norm=max(abs(s), abs(q)),
        final_t_tilde=hs.t_tilde,
        status=status,
        existence_verified=witness.exists,
        degenerate_steps=degenerate,
        trace=trace,
    )


class GridResult(NamedTuple):
    beta: float
    h: float
    value: float
    on_boundary: bool


def mple_grid_oracle(sigma, m, box, resolution, chunk=256):
    """Brute-force argmax of the log-pseudolikelihood over a rectangular grid.

    ``box = (beta_lo, beta_hi, h_lo, h_hi)``; grid points are
    ``lo + k * resolution``.  Ties go to the smallest beta, then smallest h.
    """
    sigma = np.asarray(sigma, dtype=np.float64).ravel()
    m = np.asarray(m, dtype=np.float64).ravel()
    b_lo, b_hi, h_lo, h_hi = map(float, box)
    nb = int(math.floor((b_hi - b_lo) / resolution + 1e-9)) + 1
    nh = int(math.floor((h_hi - h_lo) / resolution + 1e-9)) + 1
    betas = b_lo + resolution * np.arange(nb)
    hs = h_lo + resolution * np.arange(nh)
    sm = float(sigma @ m)
    ssum = float(sigma.sum())
    best = (-np.inf, 0, 0)
    for start in range(0, nb, chunk):
        bb = betas[start:start + chunk]
        for jh, hv in enumerate(hs):
            x = bb[:, None] * m[None, :] + hv
            vals = bb * sm + hv * ssum - log_cosh(x).sum(axis=1)
            k = int(np.argmax(vals))
            # strict '>' keeps the earliest (smallest beta, then h) on ties
            if vals[k] > best[0] or (vals[k] == best[0] and (start + k, jh) < best[1:]):
                best = (float(vals[k]), start + k, jh)
    value, ib, ih = best
    boundary = ib in (0, nb - 1) or ih in (0, nh - 1)
    value -= m.size * math.log(2.0)
    return GridResult(float(betas[ib]), float(hs[ih]), value, boundary)


class LocalFieldTransformer(TransformerMixin, BaseEstimator):
    """Map spin configurations to their local fields ``m = J sigma``.

    Parameters
    ----------
    coupling : CouplingMatrix, scipy sparse matrix or ndarray
    """

    def __init__(self, coupling=None):
        self.coupling = coupling

    def fit(self, X, y=None):
        self.coupling_ = check_coupling(self.coupling)
        X = check_spins(X, n_sites=self.coupling_.n)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "coupling_")
        X = check_spins(X, n_sites=self.coupling_.n)
        return np.asarray((self.coupling_.csr @ X.T).T)


class PseudoLikelihoodEstimator(BaseEstimator):
    """Joint MPLE of inverse temperature and external field.

    ``fit`` takes spin configurations ``X`` of shape (n_samples, n_sites)
    (a single sample may be passed as a 1-D vector).  Several samples are
    pooled: their log-pseudolikelihoods add.

    Parameters
    ----------
    coupling : CouplingMatrix, scipy sparse matrix or ndarray
        Symmetric zero-diagonal interaction matrix ``J``.
    tol : float
        Stop once ``max(|S|, |Q|) <= tol * (number of sites)``.
    max_iter : int
    beta_init, h_init : float
        Newton starting point.
    force : bool
        Solve even when no existence witness is found.

    Attributes
    ----------
    beta_, h_ : float
        Estimates.
    report_ : EstimationReport
    witness_ : ExistenceWitness
    n_features_in_ : int
    """

    def __init__(self, coupling=None, tol=1e-10, max_iter=200, beta_init=0.0, h_init=0.0,
                 force=False):
        self.coupling = coupling
        self.tol = tol
        self.max_iter = max_iter
        self.beta_init = beta_init
        self.h_init = h_init
        self.force = force

    def _fields(self, X):
        X = check_spins(X, n_sites=self.coupling_.n)
        return X, np.asarray((self.coupling_.csr @ X.T).T)

    def fit(self, X, y=None):
        self.coupling_ = check_coupling(self.coupling)
        X, m = self._fields(X)
        self.n_features_in_ = X.shape[1]
        self.witness_ = existence_check(X.ravel(), m.ravel())
        self.report_ = mple_newton(X.ravel(), m.ravel(), init=(self.beta_init, self.h_init),
                                   tol=self.tol, max_iters=self.max_iter, force=self.force)
        self.beta_ = self.report_.beta_hat
        self.h_ = self.report_.h_hat
        return self

    @property
    def params_(self):
        check_is_fitted(self, "report_")
        return ModelParams(self.beta_, self.h_)

    def score(self, X, y=None):
        """Mean log-pseudolikelihood per site at the fitted parameters."""
        check_is_fitted(self, "report_")
        X, m = self._fields(X)
        return pseudo_loglik(self.beta_, self.h_, X.ravel(), m.ravel()) / X.size

    def predict_proba(self, X):
        """Conditional probabilities ``P(sigma_i = +1 | rest)`` per site."""
        check_is_fitted(self, "report_")
        _, m = self._fields(X)
        return conditional_prob_plus(self.beta_, self.h_, m)
