"""Normalized Hermite functions and their ladder algebra.

The basis is ``h_k(x) = (2^k k! sqrt(pi))^(-1/2) H_k(x) exp(-x^2/2)``,
orthonormal in L2(R).  Multiplication by ``x`` and differentiation act as
banded operators on coefficient vectors:

    x h_k  = sqrt(k/2) h_{k-1} + sqrt((k+1)/2) h_{k+1}
    h_k'   = sqrt(k/2) h_{k-1} - sqrt((k+1)/2) h_{k+1}

so moments and gradient norms of a finite expansion are exact.
"""

import math

import numpy as np

PI_QUARTER = math.pi ** -0.25


def hermite_functions(x, kmax):
    """Evaluate ``h_0 .. h_kmax`` at the points ``x``.

    Uses the normalized three-term recurrence, which stays bounded where
    the raw polynomials would overflow.

    Returns
    -------
    ndarray of shape ``(kmax + 1,) + x.shape``
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = PI_QUARTER * np.exp(-0.5 * x * x)
    if kmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, kmax):
        out[k + 1] = (math.sqrt(2.0 / (k + 1)) * x * out[k]
                      - math.sqrt(k / (k + 1)) * out[k - 1])
    return out


def _ladder(c, sign):
    c = np.asarray(c, dtype=float)
    K = c.size
    out = np.zeros(K + 1)
    k = np.arange(K)
    # sqrt(k/2) c_k lands on index k-1, sqrt((k+1)/2) c_k on index k+1
    out[:K - 1] += np.sqrt(k[1:] / 2.0) * c[1:]
    out[1:] += sign * np.sqrt((k + 1) / 2.0) * c
    return out


def position_ladder(c):
    """Coefficients of ``x f`` for ``f = sum c_k h_k`` (length grows by one)."""
    return _ladder(c, +1.0)


def derivative_ladder(c):
    """Coefficients of ``f'`` for ``f = sum c_k h_k`` (length grows by one)."""
    return _ladder(c, -1.0)


def ladder_matrix(K, sign=+1.0):
    """Dense ``(K+2, K+1)`` matrix of the ladder map on ``K+1`` coefficients."""
    M = np.zeros((K + 2, K + 1))
    for k in range(K + 1):
        if k > 0:
            M[k - 1, k] = math.sqrt(k / 2.0)
        M[k + 1, k] = sign * math.sqrt((k + 1) / 2.0)
    return M


def _even_ratio_products(m_max):
    # t_m = prod_{i<m} sqrt((2i+1)/(2i+2)), computed in log space
    i = np.arange(m_max)
    logs = 0.5 * (np.log(2 * i + 1.0) - np.log(2 * i + 2.0))
    return np.exp(np.concatenate(([0.0], np.cumsum(logs))))


def gaussian_coefficients(alpha, kmax):
    """Hermite coefficients ``<exp(-alpha x^2), h_k>`` for ``k <= kmax``.

    Only even indices are nonzero:
    ``gamma_{2m} = pi^(1/4) beta^(-1/2) q^m t_m`` with ``beta = alpha + 1/2``,
    ``q = 1/beta - 1`` and ``t_m = prod_{i<m} sqrt((2i+1)/(2i+2))``.
    ``alpha`` may be an array; the result then has shape
    ``alpha.shape + (kmax + 1,)``.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = alpha + 0.5
    q = 1.0 / beta - 1.0
    m = np.arange(kmax // 2 + 1)
    t = _even_ratio_products(m[-1])
    pref = (math.pi ** 0.25) / np.sqrt(beta)
    even = pref[..., None] * q[..., None] ** m * t
    out = np.zeros(alpha.shape + (kmax + 1,))
    out[..., 0::2] = even
    return out


def gaussian_coefficients_dalpha(alpha, kmax):
    """Derivative in ``alpha`` of :func:`gaussian_coefficients`."""
    alpha = np.asarray(alpha, dtype=float)
    beta = alpha + 0.5
    q = 1.0 / beta - 1.0
    m = np.arange(kmax // 2 + 1)
    t = _even_ratio_products(m[-1])
    c0 = math.pi ** 0.25
    b = beta[..., None]
    qm = q[..., None] ** m
    # m q^(m-1) written without dividing by q (q vanishes at alpha = 1/2)
    mqm1 = np.where(m > 0, m * q[..., None] ** np.maximum(m - 1, 0), 0.0)
    d = c0 * t * (-0.5 * b ** -1.5 * qm - b ** -2.5 * mqm1)
    out = np.zeros(alpha.shape + (kmax + 1,))
    out[..., 0::2] = d
    return out


def gaussian_modes_needed(alpha, rtol=1e-16, kmax_cap=4000):
    """Smallest even ``K`` whose truncated expansion of ``exp(-alpha x^2)``
    misses at most ``rtol`` of its squared norm."""
    q2 = ((0.5 - alpha) / (alpha + 0.5)) ** 2
    if q2 == 0.0:
        return 0
    # squared coefficients decay no slower than q^(2m); geometric tail bound
    if q2 >= 1.0:
        return kmax_cap
    m = math.log(rtol * (1.0 - q2)) / math.log(q2)
    return int(min(kmax_cap, 2 * max(0, math.ceil(m))))
