"""Compiled inner loops for the Glauber sampler."""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def glauber_sweeps(indptr, indices, data, sigma, m, beta, h, uniforms, mags):
    """Systematic-scan heat-bath sweeps, updating ``sigma`` and ``m`` in place.

    ``uniforms`` has shape (n_sweeps, n); ``mags`` (length n_sweeps) receives
    the mean magnetization after each sweep.
    """
    n_sweeps, n = uniforms.shape
    total = 0.0
    for i in range(n):
        total += sigma[i]
    for s in range(n_sweeps):
        for i in range(n):
            z = 2.0 * (beta * m[i] + h)
            if z > 700.0:
                z = 700.0
            elif z < -700.0:
                z = -700.0
            p_plus = 1.0 / (1.0 + np.exp(-z))
            new = 1.0 if uniforms[s, i] < p_plus else -1.0
            if new != sigma[i]:
                delta = new - sigma[i]
                sigma[i] = new
                total += delta
                for k in range(indptr[i], indptr[i + 1]):
                    m[indices[k]] += data[k] * delta
        mags[s] = total / n
