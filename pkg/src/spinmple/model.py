"""Closed-form pseudolikelihood quantities.

Everything here is a function of the spins ``sigma`` and their local fields
``m = J sigma``; the coupling matrix itself never appears.  Both arrays may be
flattened concatenations of several samples, since every quantity is a sum of
per-site terms in ``(sigma_i, m_i)``.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "ModelParams",
    "HessianSummary",
    "log_cosh",
    "theta",
    "pseudo_loglik",
    "score",
    "neg_hessian",
    "t_stat",
    "t_tilde",
    "conditional_prob_plus",
]

LN2 = math.log(2.0)
# beyond this |x|, sech^2(x) underflows to 0 which is the correct limit
_SECH_CLAMP = 350.0


class ModelParams(NamedTuple):
    beta: float
    h: float


def log_cosh(x):
    """Overflow-free ``log(cosh(x))``."""
    ax = np.abs(x)
    with np.errstate(over="ignore"):
        return ax + np.log1p(np.exp(-2.0 * ax)) - LN2


def theta(beta, h, m):
    """Per-site curvature weights ``sech^2(beta m_i + h)``."""
    ax = np.abs(beta * np.asarray(m) + h)
    c = np.exp(-np.minimum(ax, _SECH_CLAMP))
    # sech(x) = 2 e^{-x} / (1 + e^{-2x})
    s = 2.0 * c / (1.0 + c * c)
    return np.where(ax > _SECH_CLAMP, 0.0, s * s)


def _check(sigma, m):
    sigma = np.asarray(sigma, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if sigma.shape != m.shape:
        raise ValueError(f"sigma shape {sigma.shape} does not match fields shape {m.shape}")
    return sigma, m


def pseudo_loglik(beta, h, sigma, m):
    """Log-pseudolikelihood ``sum_i log P(sigma_i | rest)``.

    Each conditional is normalized by ``2 cosh(beta m_i + h)`` so the total
    carries ``-n log 2``; the value is never positive.
    """
    sigma, m = _check(sigma, m)
    x = beta * m + h
    ax = np.abs(x)
    # sigma x - log(2 cosh x) == (sigma x - |x|) - log1p(e^{-2|x|}), both parts <= 0
    return float(np.sum(sigma * x - ax) - np.sum(np.log1p(np.exp(-2.0 * ax))))


def score(beta, h, sigma, m):
    """Gradient ``(dL/dbeta, dL/dh)``."""
    sigma, m = _check(sigma, m)
    r = sigma - np.tanh(beta * m + h)
    return float(np.dot(m, r)), float(np.sum(r))


@dataclass(frozen=True)
class HessianSummary:
    """Negative Hessian of the log-pseudolikelihood and its determinant.

    ``matrix`` is ``[[sum th m^2, sum th m], [sum th m, sum th]]`` and
    ``det == n**2 / 2 * t_tilde``.
    """

    s_theta: float
    s_theta_m: float
    s_theta_m2: float
    n: int

    @property
    def matrix(self):
        return np.array([[self.s_theta_m2, self.s_theta_m], [self.s_theta_m, self.s_theta]])

    @property
    def det(self):
        return self.s_theta_m2 * self.s_theta - self.s_theta_m**2

    @property
    def trace(self):
        return self.s_theta_m2 + self.s_theta

    @property
    def t_tilde(self):
        return max(2.0 * self.det / self.n**2, 0.0)

    def eigvalsh(self):
        """Closed-form eigenvalues of the symmetric 2x2 matrix, ascending."""
        a, b, c = self.s_theta_m2, self.s_theta_m, self.s_theta
        half_tr = 0.5 * (a + c)
        rad = math.hypot(0.5 * (a - c), b)
        return half_tr - rad, half_tr + rad


def neg_hessian(beta, h, sigma, m):
    sigma, m = _check(sigma, m)
    th = theta(beta, h, m)
    tm = th * m
    return HessianSummary(
        s_theta=float(np.sum(th)),
        s_theta_m=float(np.sum(tm)),
        s_theta_m2=float(np.dot(tm, m)),
        n=m.size,
    )


def t_stat(m):
    """``(2/n) sum_i (m_i - mean(m))^2``, the unweighted field variability."""
    m = np.asarray(m, dtype=np.float64)
    return float(2.0 * np.sum((m - m.mean()) ** 2) / m.size)


def t_tilde(beta, h, m, pairwise=False):
    """``(1/n^2) sum_{i,j} theta_i theta_j (m_i - m_j)^2``.

    The default path is O(n): ``2 * [S0 S2 - S1^2] / n^2`` with
    ``Sk = sum theta m^k``, evaluated about the theta-weighted mean for
    stability.  ``pairwise=True`` forms the O(n^2) double sum directly.
    """
    m = np.asarray(m, dtype=np.float64)
    th = theta(beta, h, m)
    n = m.size
    if pairwise:
        diff = m[:, None] - m[None, :]
        return float(np.sum(th[:, None] * th[None, :] * diff * diff) / n**2)
    s0 = np.sum(th)
    if s0 == 0.0 or np.ptp(m) == 0.0:
        return 0.0
    centre = np.dot(th, m) / s0
    dm = m - centre
    return float(2.0 * s0 * np.dot(th, dm * dm) / n**2)


def conditional_prob_plus(beta, h, m):
    """``P(sigma_i = +1 | rest) = 1 / (1 + exp(-2 (beta m_i + h)))``."""
    z = np.clip(2.0 * (beta * np.asarray(m) + h), -700.0, 700.0)
    return 1.0 / (1.0 + np.exp(-z))
