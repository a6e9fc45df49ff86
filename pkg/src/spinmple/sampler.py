"""Sampling from the Gibbs measure ``P(sigma) ~ exp(beta <J s, s>/2 + h <s, 1>)``.

Two routes: exact enumeration of all ``2^n`` states (``n <= 20``), used as the
reference law, and systematic-scan Glauber (heat-bath) dynamics with local
fields maintained incrementally.

Random numbers are always drawn by numpy ``Generator`` objects and handed to
the compiled sweep kernel, so a chain is a pure function of its seed.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ._kernels import glauber_sweeps
from ._seeding import derive_seed, make_rng, resolve_threads
from .coupling import matvec
from .exceptions import TooLarge

__all__ = [
    "ExactDistribution",
    "ChainState",
    "exact_enumerate",
    "exact_sample",
    "free_energy_exact",
    "default_burnin",
    "glauber_sweep",
    "run_glauber",
    "sample_gibbs",
    "sample_gibbs_batch",
    "gibbs_samples",
    "spins_from_masks",
]

EXACT_MAX_N = 20
# local fields are re-validated against J sigma this often
REVALIDATE_SWEEPS = 4096
FIELD_DRIFT_TOL = 1e-9
MAX_BURNIN_DOUBLINGS = 3
_CHUNK_SWEEPS = 256
_ENUM_CHUNK = 1 << 15


def spins_from_masks(masks, n):
    """Bit ``k`` of each mask set means ``sigma_k = +1``, clear means ``-1``."""
    masks = np.asarray(masks, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(n)) & 1
    return (2 * bits - 1).astype(np.float64)


@dataclass(frozen=True)
class ExactDistribution:
    n: int
    probs: np.ndarray
    log_partition: float

    def marginals(self):
        """Single-site magnetizations ``<sigma_i>``."""
        out = np.zeros(self.n)
        masks = np.arange(self.probs.size)
        for k in range(self.n):
            out[k] = 2.0 * self.probs[((masks >> k) & 1) == 1].sum() - 1.0
        return out


def exact_enumerate(j, beta, h):
    """Tabulate the Gibbs law over all ``2^n`` spin states."""
    if j.n > EXACT_MAX_N:
        raise TooLarge(f"exact enumeration is capped at n={EXACT_MAX_N}, got {j.n}")
    n = j.n
    size = 1 << n
    a = j.to_dense()
    logw = np.empty(size)
    for start in range(0, size, _ENUM_CHUNK):
        s = spins_from_masks(np.arange(start, min(start + _ENUM_CHUNK, size)), n)
        quad = np.einsum("ki,ki->k", s @ a, s)
        logw[start:start + len(s)] = 0.5 * beta * quad + h * s.sum(axis=1)
    log_z = float(logsumexp(logw))
    probs = np.exp(logw - log_z)
    return ExactDistribution(n, probs, log_z)


def exact_sample(dist, seed, size=None):
    """Inverse-CDF draws of spin vectors from an exact table."""
    rng = make_rng(seed)
    cdf = np.cumsum(dist.probs)
    cdf /= cdf[-1]
    u = rng.random(1 if size is None else size)
    masks = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    spins = spins_from_masks(masks, dist.n)
    return spins[0] if size is None else spins


def free_energy_exact(j, beta, h):
    """``(1/n) log Z_n(beta, h)``."""
    return exact_enumerate(j, beta, h).log_partition / j.n


@dataclass
class ChainState:
    """Mutable Glauber chain state; ``m`` always equals ``J sigma``."""

    sigma: np.ndarray
    m: np.ndarray
    sweeps: int = 0

    @classmethod
    def from_spins(cls, j, sigma):
        sigma = np.array(sigma, dtype=np.float64)
        return cls(sigma, matvec(j, sigma), 0)

    @classmethod
    def random(cls, j, rng):
        return cls.from_spins(j, np.where(rng.random(j.n) < 0.5, -1.0, 1.0))

    def field_drift(self, j):
        return float(np.max(np.abs(self.m - matvec(j, self.sigma)), initial=0.0))


def _revalidate(state, j):
    drift = state.field_drift(j)
    if drift > FIELD_DRIFT_TOL:
        raise RuntimeError(f"local fields drifted by {drift:.3g} from J sigma")
    # exact resync keeps rounding from accumulating across long chains
    state.m = matvec(j, state.sigma)


def run_glauber(state, j, beta, h, n_sweeps, rng):
    """Advance ``state`` by ``n_sweeps`` sweeps; returns per-sweep magnetizations."""
    csr = j.csr
    mags = np.empty(n_sweeps)
    done = 0
    while done < n_sweeps:
        until_check = REVALIDATE_SWEEPS - state.sweeps % REVALIDATE_SWEEPS
        k = min(_CHUNK_SWEEPS, n_sweeps - done, until_check)
        u = rng.random((k, j.n))
        glauber_sweeps(csr.indptr, csr.indices, csr.data, state.sigma, state.m,
                       float(beta), float(h), u, mags[done:done + k])
        done += k
        state.sweeps += k
        if state.sweeps % REVALIDATE_SWEEPS == 0:
            _revalidate(state, j)
    return mags


def glauber_sweep(state, j, beta, h, rng):
    """One systematic sweep over sites ``0..n-1``."""
    run_glauber(state, j, beta, h, 1, rng)
    return state


def default_burnin(n):
    return max(2000, int(math.ceil(50 * math.log2(max(n, 2)))))


def _halves_disagree(mags):
    """Batch-means test: do the two halves of a trace have different means?"""
    half = len(mags) // 2
    a, b = mags[:half], mags[half:2 * half]
    n_batch = 20
    if half < 2 * n_batch:
        return False
    ses = []
    for x in (a, b):
        batches = x[: len(x) // n_batch * n_batch].reshape(n_batch, -1).mean(axis=1)
        ses.append(batches.var(ddof=1) / n_batch)
    pooled = math.sqrt(ses[0] + ses[1])
    return abs(a.mean() - b.mean()) > 3.0 * pooled + 1e-12


def sample_gibbs(j, beta, h, burnin=None, seed=0, return_state=False):
    """Approximate draw from the Gibbs measure.

    Starts from uniform random spins and runs ``burnin`` sweeps.  With
    ``burnin=None`` the default ``max(2000, 50 log2 n)`` is used, and the
    burn-in is extended (doubling, at most 3 times) while the magnetization
    means of the two halves of the latest stretch differ by more than 3
    pooled batch-means standard errors.
    """
    rng = make_rng(seed)
    state = ChainState.random(j, rng)
    auto = burnin is None
    length = default_burnin(j.n) if auto else int(burnin)
    if length < 1:
        raise ValueError("burnin must be at least one sweep")
    mags = run_glauber(state, j, beta, h, length, rng)
    if auto:
        for _ in range(MAX_BURNIN_DOUBLINGS):
            if not _halves_disagree(mags):
                break
            mags = run_glauber(state, j, beta, h, length, rng)
            length *= 2
    if return_state:
        return state
    return state.sigma.copy()


def sample_gibbs_batch(j, beta, h, count, seed=0, threads=None, burnin=None):
    """``count`` independent chains, chain ``r`` seeded by ``derive_seed(seed, r)``.

    Rows come back in chain order, so the result does not depend on
    ``threads``.
    """
    seeds = [derive_seed(seed, r) for r in range(count)]
    with ThreadPoolExecutor(resolve_threads(threads)) as ex:
        return np.stack(list(ex.map(lambda s: sample_gibbs(j, beta, h, burnin=burnin, seed=s), seeds)))


def gibbs_samples(j, beta, h, n_samples, thin=10, burnin=None, seed=0):
    """``n_samples`` thinned configurations from a single chain, shape (k, n)."""
    rng = make_rng(seed)
    state = ChainState.random(j, rng)
    run_glauber(state, j, beta, h, default_burnin(j.n) if burnin is None else burnin, rng)
    out = np.empty((n_samples, j.n))
    for k in range(n_samples):
        run_glauber(state, j, beta, h, thin, rng)
        out[k] = state.sigma
    return out
