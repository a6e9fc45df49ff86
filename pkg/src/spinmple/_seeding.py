"""Seed derivation and thread-count resolution.

Every random stream in the package is derived from a single master seed via
:func:`derive_seed`, which feeds ``(master, *keys)`` through numpy's
``SeedSequence`` (a hash-based mixer) and returns one 64-bit word.  Distinct
key tuples give statistically independent streams, so results never depend on
the order in which work items are scheduled.
"""

import os

import numpy as np

THREADS_ENV = "SPINGLASS_THREADS"


def derive_seed(master, *keys):
    """Mix a master seed with integer keys into a new 64-bit seed."""
    keys = tuple(int(k) & 0xFFFFFFFF for k in keys)
    ss = np.random.SeedSequence(entropy=int(master) & (2**64 - 1), spawn_key=keys)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed, *keys):
    """Return a ``numpy.random.Generator`` for ``derive_seed(seed, *keys)``."""
    if keys:
        seed = derive_seed(seed, *keys)
    return np.random.default_rng(int(seed) & (2**64 - 1))


def resolve_threads(threads=None):
    """Thread count: explicit value, then $SPINGLASS_THREADS, then cores."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            threads = int(env)
    if threads is None:
        threads = os.cpu_count() or 1
    return max(1, int(threads))
