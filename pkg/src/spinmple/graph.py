"""Interaction graphs and the combinatorial constructions built on them.

Vertices are 0-based.  Edges are stored once, as ``(i, j)`` rows with
``i < j``, sorted lexicographically.
"""

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ._seeding import derive_seed, make_rng
from .exceptions import ConstructionFailed, DegenerateGraph, InvalidSize

__all__ = [
    "InteractionGraph",
    "VertexSubset",
    "gen_complete",
    "gen_erdos_renyi",
    "balanced_cut",
    "good_set",
    "out_degree",
    "cut_size",
]

_ER_MAX_ATTEMPTS = 100
_ER_STRICT_MEAN_DEGREE = 8.0
_CUT_SAMPLES = 64


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class InteractionGraph:
    """Undirected simple graph on ``n`` vertices.

    Parameters
    ----------
    n : int
        Number of vertices.
    edges : array of shape (n_edges, 2)
        Unordered pairs; normalized to ``i < j`` and sorted.  Self-loops and
        duplicates raise ``ValueError``.
    warnings : tuple of str
        Non-fatal notes attached by generators (e.g. isolated vertices).
    """

    n: int
    edges: np.ndarray
    warnings: tuple = field(default=())

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise InvalidSize(f"graph needs at least one vertex, got n={n}")
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        e = np.sort(e, axis=1)
        order = np.lexsort((e[:, 1], e[:, 0]))
        e = e[order]
        if len(e) > 1 and np.any(np.all(e[1:] == e[:-1], axis=1)):
            raise ValueError("duplicate edges are not allowed")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", _readonly(e))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def n_edges(self):
        return len(self.edges)

    @cached_property
    def degrees(self):
        deg = np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)
        return _readonly(deg)

    @property
    def d_avg(self):
        return 2.0 * self.n_edges / self.n

    @property
    def d_max(self):
        return int(self.degrees.max())

    @property
    def ratio_c(self):
        """Empirical ``d_max / d_avg`` (``inf`` for an edgeless graph)."""
        if self.n_edges == 0:
            return float("inf")
        return self.d_max / self.d_avg

    @cached_property
    def adjacency(self):
        """Symmetric 0/1 adjacency matrix in CSR format."""
        i, j = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * len(i), dtype=np.int64)
        a = sp.csr_matrix(
            (data, (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(self.n, self.n),
        )
        a.sort_indices()
        return a

    def neighbors(self, i):
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def summary(self):
        return {
            "n": self.n,
            "n_edges": self.n_edges,
            "d_avg": self.d_avg,
            "d_max": self.d_max,
            "ratio_c": self.ratio_c,
        }


@dataclass(frozen=True, eq=False)
class VertexSubset:
    """Strictly increasing list of vertex indices of a host graph."""

    members: np.ndarray
    parent_n: int

    def __post_init__(self):
        m = np.asarray(self.members, dtype=np.int64).ravel()
        if m.size and (m[0] < 0 or m[-1] >= self.parent_n or np.any(np.diff(m) <= 0)):
            raise ValueError("members must be strictly increasing within [0, parent_n)")
        object.__setattr__(self, "members", _readonly(m))

    @classmethod
    def from_indices(cls, indices, parent_n):
        return cls(np.unique(np.asarray(indices, dtype=np.int64)), parent_n)

    def __len__(self):
        return len(self.members)

    def mask(self):
        out = np.zeros(self.parent_n, dtype=bool)
        out[self.members] = True
        return out

    def issubset(self, other):
        return bool(np.all(np.isin(self.members, other.members)))


def gen_complete(n):
    """Complete graph on ``n >= 2`` vertices."""
    n = int(n)
    if n < 2:
        raise InvalidSize(f"complete graph needs n >= 2, got {n}")
    i, j = np.triu_indices(n, k=1)
    return InteractionGraph(n, np.column_stack([i, j]))


def _draw_er_edges(n, p, rng):
    rows = []
    for i in range(n - 1):
        hits = np.flatnonzero(rng.random(n - i - 1) < p)
        if hits.size:
            rows.append(np.column_stack([np.full(hits.size, i), hits + i + 1]))
    if not rows:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(rows)


def gen_erdos_renyi(n, p, seed):
    """Erdős–Rényi graph G(n, p) driven by a seeded stream.

    When the expected degree ``p (n - 1)`` is at least 8, draws containing an
    isolated vertex are rejected and redrawn from a derived sub-seed.  Below
    that, isolated vertices are tolerated and recorded in ``warnings``.
    Edgeless draws are always rejected.
    """
    n = int(n)
    if n < 2:
        raise InvalidSize(f"G(n, p) needs n >= 2, got {n}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    strict = p * (n - 1) >= _ER_STRICT_MEAN_DEGREE
    for attempt in range(_ER_MAX_ATTEMPTS):
        rng = make_rng(seed) if attempt == 0 else make_rng(derive_seed(seed, attempt))
        edges = _draw_er_edges(n, p, rng)
        if len(edges) == 0:
            continue
        isolated = n - np.count_nonzero(np.bincount(edges.ravel(), minlength=n))
        if isolated and strict:
            continue
        notes = ()
        if isolated:
            notes = (f"{isolated} isolated vertices",)
            warnings.warn(f"G({n}, {p}) draw has {isolated} isolated vertices")
        return InteractionGraph(n, edges, warnings=notes)
    raise DegenerateGraph(f"G({n}, {p}): no acceptable draw in {_ER_MAX_ATTEMPTS} attempts")


def out_degree(g, i, q):
    """Number of neighbors of ``i`` lying outside the subset ``q``."""
    if not 0 <= i < g.n:
        raise IndexError(f"vertex {i} out of range for n={g.n}")
    nb = g.neighbors(i)
    return int(np.count_nonzero(~q.mask()[nb]))


def _out_degrees(g, mask):
    """Vector of out-degrees relative to ``mask`` for every vertex."""
    return np.asarray(g.adjacency @ (~mask).astype(np.int64)).ravel()


def cut_size(g, s):
    """Number of edges with exactly one endpoint in ``s``."""
    mask = s.mask()
    e = g.edges
    return int(np.count_nonzero(mask[e[:, 0]] != mask[e[:, 1]]))


def _greedy_swap(g, mask, target):
    a = g.adjacency
    cut = int(np.count_nonzero(mask[g.edges[:, 0]] != mask[g.edges[:, 1]]))
    for _ in range(g.n * g.n):
        if 2 * cut >= target:
            return mask
        in_s = np.flatnonzero(mask)
        out_s = np.flatnonzero(~mask)
        to_s = np.asarray(a @ mask.astype(np.int64)).ravel()
        deg = g.degrees
        # moving v across changes the cut by (same-side nbrs) - (other-side nbrs)
        same = np.where(mask, to_s, deg - to_s)
        gain1 = 2 * same - deg
        gain = gain1[in_s][:, None] + gain1[out_s][None, :]
        gain = gain + 2 * a[in_s][:, out_s].toarray()
        flat = int(np.argmax(gain))
        best = gain.flat[flat]
        if best <= 0:
            break
        r, c = divmod(flat, len(out_s))
        mask = mask.copy()
        mask[in_s[r]] = False
        mask[out_s[c]] = True
        cut += int(best)
    if 2 * cut >= target:
        return mask
    raise ConstructionFailed("greedy swap search stalled below |E|/2")


def balanced_cut(g, seed):
    """Subset ``S`` with ``|S| = n // 2`` cutting at least half the edges.

    Uniform random subsets are tried first; if none of 64 succeeds, a
    best-improvement pairwise swap search starts from the best sample.  The
    bound is re-checked on the result.
    """
    if g.n < 2 or g.n_edges < 1:
        raise InvalidSize("balanced cut needs n >= 2 and at least one edge")
    size = g.n // 2
    rng = make_rng(seed)
    e = g.edges
    best_mask, best_cut = None, -1
    for _ in range(_CUT_SAMPLES):
        mask = np.zeros(g.n, dtype=bool)
        mask[rng.choice(g.n, size=size, replace=False)] = True
        cut = int(np.count_nonzero(mask[e[:, 0]] != mask[e[:, 1]]))
        if 2 * cut >= g.n_edges:
            best_mask, best_cut = mask, cut
            break
        if cut > best_cut:
            best_mask, best_cut = mask, cut
    if 2 * best_cut < g.n_edges:
        best_mask = _greedy_swap(g, best_mask, g.n_edges)
    s = VertexSubset(np.flatnonzero(best_mask), g.n)
    if len(s) != size or 2 * cut_size(g, s) < g.n_edges:
        raise ConstructionFailed("balanced cut failed verification")
    return s


def good_set(g, seed):
    """Vertex set ``T`` that is ``(1/(16 C), d/4)``-good.

    ``T`` collects the members of a balanced cut ``S`` with at least ``d/4``
    neighbors outside ``S``.  Both the size bound ``|T| >= n / (16 C)`` and
    the out-degree bound ``d_out(T) >= d/4`` are verified before returning,
    with ``C = ratio_c`` and ``d = d_avg``.
    """
    s = balanced_cut(g, seed)
    s_mask = s.mask()
    quarter = g.d_avg / 4.0
    out_s = _out_degrees(g, s_mask)
    t_mask = s_mask & (out_s >= quarter)
    t = VertexSubset(np.flatnonzero(t_mask), g.n)
    out_t = _out_degrees(g, t_mask)
    if len(t) == 0 or len(t) < g.n / (16.0 * g.ratio_c):
        raise ConstructionFailed(f"|T|={len(t)} below n/(16C)={g.n / (16 * g.ratio_c):.3f}")
    if np.any(out_t[t.members] < out_s[t.members]) or out_t[t.members].min() < quarter:
        raise ConstructionFailed("good set out-degree bound violated")
    return t
