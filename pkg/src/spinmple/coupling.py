"""Random coupling matrices ``J = (A * G) / sqrt(d)`` and their linear algebra."""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from ._seeding import make_rng

__all__ = [
    "DisorderSpec",
    "DISORDER_FAMILIES",
    "CouplingMatrix",
    "NormEstimate",
    "build_coupling",
    "matvec",
    "operator_norm",
]

# dense symmetric eigensolver is used at or below this size
DENSE_NORM_MAX_N = 512


@dataclass(frozen=True)
class DisorderSpec:
    """Centered, unit-variance weight distribution.

    ``third_abs_moment`` is the exact ``E|g|^3`` of the family and serves as
    the bound ``B``; ``subgaussian`` records whether the family is
    subgaussian (all three shipped families are).
    """

    family: str
    third_abs_moment: float
    subgaussian: bool = True

    def sample(self, rng, size):
        if self.family == "gaussian":
            return rng.standard_normal(size)
        if self.family == "rademacher":
            return np.where(rng.random(size) < 0.5, -1.0, 1.0)
        if self.family == "uniform":
            return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size)
        raise ValueError(f"unknown disorder family {self.family!r}")


DISORDER_FAMILIES = {
    # E|g|^3 = 2 sqrt(2/pi)
    "gaussian": DisorderSpec("gaussian", 2.0 * math.sqrt(2.0 / math.pi)),
    "rademacher": DisorderSpec("rademacher", 1.0),
    # uniform on [-sqrt3, sqrt3]: E|g|^3 = 3 sqrt(3) / 4
    "uniform": DisorderSpec("uniform", 3.0 * math.sqrt(3.0) / 4.0),
}


def get_disorder(spec):
    if isinstance(spec, DisorderSpec):
        return spec
    aliases = {"standard-gaussian": "gaussian", "centered-uniform": "uniform"}
    name = aliases.get(spec, spec)
    try:
        return DISORDER_FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown disorder family {spec!r}") from None


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Symmetric zero-diagonal coupling matrix stored as upper-triangle triples.

    Attributes
    ----------
    n : int
    rows, cols : int arrays with ``rows < cols``, sorted lexicographically.
    weights : float array, ``J[rows[k], cols[k]]``.
    d_avg : float
        Average degree used for the ``1/sqrt(d)`` scaling.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    d_avg: float

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64).ravel()
        cols = np.asarray(self.cols, dtype=np.int64).ravel()
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if not (len(rows) == len(cols) == len(w)):
            raise ValueError("rows, cols and weights must have equal length")
        if np.any(rows >= cols):
            raise ValueError("entries must be stored with i < j")
        if len(rows) and cols.max() >= self.n:
            raise ValueError("entry index out of range")
        for name, a in (("rows", rows), ("cols", cols), ("weights", w)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "d_avg", float(self.d_avg))

    @property
    def nnz(self):
        return 2 * len(self.weights)

    @cached_property
    def csr(self):
        r = np.concatenate([self.rows, self.cols])
        c = np.concatenate([self.cols, self.rows])
        w = np.concatenate([self.weights, self.weights])
        m = sp.csr_matrix((w, (r, c)), shape=(self.n, self.n))
        m.sort_indices()
        return m

    def to_dense(self):
        out = np.zeros((self.n, self.n))
        out[self.rows, self.cols] = self.weights
        out[self.cols, self.rows] = self.weights
        return out

    @cached_property
    def _operator(self):
        # dense BLAS beats CSR once a quarter of the entries are present
        if self.n <= 4096 and self.nnz >= 0.25 * self.n * self.n:
            return self.to_dense()
        return self.csr

    @classmethod
    def from_dense(cls, a, d_avg=None):
        """Build from a dense symmetric zero-diagonal array.

        ``d_avg`` defaults to the average degree of the nonzero pattern.
        """
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("coupling must be a square matrix")
        if not np.array_equal(a, a.T):
            raise ValueError("coupling must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("coupling must have zero diagonal")
        r, c = np.nonzero(np.triu(a, 1))
        n = a.shape[0]
        if d_avg is None:
            d_avg = 2.0 * len(r) / n
        return cls(n, r, c, a[r, c], d_avg)

    def scaled(self, factor):
        return CouplingMatrix(self.n, self.rows, self.cols, self.weights * factor, self.d_avg)

    def permuted(self, perm):
        """Coupling of the relabelled system ``J'[p_i, p_j] = J[i, j]``."""
        perm = np.asarray(perm)
        a, b = perm[self.rows], perm[self.cols]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        order = np.lexsort((hi, lo))
        return CouplingMatrix(self.n, lo[order], hi[order], self.weights[order], self.d_avg)


def build_coupling(g, spec="gaussian", seed=0):
    """Draw one weight per edge (edges in sorted order) and scale by ``1/sqrt(d_avg)``."""
    if g.d_avg <= 0:
        raise ValueError("coupling needs a graph with at least one edge")
    spec = get_disorder(spec)
    rng = make_rng(seed)
    g_ij = spec.sample(rng, g.n_edges)
    return CouplingMatrix(g.n, g.edges[:, 0], g.edges[:, 1], g_ij / math.sqrt(g.d_avg), g.d_avg)


def matvec(j, sigma):
    """Local fields ``m = J sigma``; a 2-D ``sigma`` is treated row-wise."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.shape[-1] != j.n:
        raise ValueError(f"spin vector has length {sigma.shape[-1]}, coupling has n={j.n}")
    if sigma.ndim == 1:
        return j.csr @ sigma
    return np.asarray((j.csr @ sigma.T).T)


class NormEstimate(NamedTuple):
    value: float
    converged: bool
    iterations: int
    method: str

    def __float__(self):
        return float(self.value)


def operator_norm(j, tol=1e-8, max_iters=10_000, seed=0):
    """Spectral norm of ``J``.

    Up to ``n = 512`` this is exact (dense symmetric eigensolver).  Above, it
    runs power iteration on ``J^2`` from a seeded random unit vector and
    stops when successive Rayleigh quotients agree to relative ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if len(j.weights) == 0:
        return NormEstimate(0.0, True, 0, "trivial")
    if j.n <= DENSE_NORM_MAX_N:
        ev = scipy.linalg.eigvalsh(j.to_dense())
        return NormEstimate(float(max(abs(ev[0]), abs(ev[-1]))), True, 0, "dense")
    op = j._operator
    rng = make_rng(seed)
    v = rng.standard_normal(j.n)
    v /= np.linalg.norm(v)
    rq_prev = None
    for it in range(1, max_iters + 1):
        w = op @ (op @ v)
        rq = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return NormEstimate(0.0, True, it, "power")
        v = w / nw
        if rq_prev is not None and abs(rq - rq_prev) < tol * rq:
            return NormEstimate(math.sqrt(rq), True, it, "power")
        rq_prev = rq
    return NormEstimate(math.sqrt(rq), False, max_iters, "power")
