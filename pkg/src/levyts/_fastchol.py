"""Exact O(L^2) Cholesky machinery for white + filtered-power-law covariances.

The covariance ``C = a2*I + b2*(U U')`` with U unit-diagonal lower-triangular
Toeplitz has displacement rank 2 with positive generators
``C - Z C Z' = a2*e0 e0' + b2*h h'`` (Z the down-shift), so its Cholesky
factor streams out column by column via the generalized Schur recursion.
Forward substitution is interleaved with the stream, so the factor is never
stored. Values agree with dense Cholesky to machine precision; the dense
route stays available through the covariance builders and is exercised
against this one in the tests.
"""

import numpy as np
from numba import njit

__all__ = ["schur_whiten", "schur_logdet_quad"]


@njit(cache=True, fastmath=True)
def schur_whiten(h, a2, b2, rhs):
    """Whiten ``rhs`` by C = a2*I + b2*(U U') with U = lower Toeplitz(h).

    Returns ``(logdet, Y)`` where ``Y = L^-1 rhs`` for the Cholesky factor
    ``L`` of C, streamed without storing L.
    """
    L = h.shape[0]
    n_rhs = rhs.shape[1]
    g0 = np.zeros(L)
    g1 = np.empty(L)
    a = np.sqrt(a2)
    b = np.sqrt(b2)
    g0[0] = a
    for i in range(L):
        g1[i] = b * h[i]
    y = np.empty((L, n_rhs))
    acc = np.zeros((L, n_rhs))
    col = np.empty(L)
    logdet = 0.0
    for k in range(L):
        x = g0[k]
        z = g1[k]
        rnorm = np.hypot(x, z)
        if rnorm <= 0.0:
            raise ValueError("covariance is not positive definite")
        c = x / rnorm
        s = z / rnorm
        for i in range(k, L):
            gi = g0[i]
            hi = g1[i]
            g0[i] = c * gi + s * hi
            g1[i] = -s * gi + c * hi
        dk = g0[k]
        logdet += 2.0 * np.log(dk)
        for i in range(k, L):
            col[i] = g0[i]
        for j in range(n_rhs):
            yk = (rhs[k, j] - acc[k, j]) / dk
            y[k, j] = yk
            for i in range(k + 1, L):
                acc[i, j] += col[i] * yk
        for i in range(L - 1, k, -1):
            g0[i] = col[i - 1]
        g0[k] = 0.0
    return logdet, y


@njit(cache=True, fastmath=True)
def schur_logdet_quad(h, a2, b2, r):
    """logdet C and r' C^-1 r for a single residual vector (no Y storage)."""
    L = h.shape[0]
    g0 = np.zeros(L)
    g1 = np.empty(L)
    a = np.sqrt(a2)
    b = np.sqrt(b2)
    g0[0] = a
    for i in range(L):
        g1[i] = b * h[i]
    acc = np.zeros(L)
    col = np.empty(L)
    logdet = 0.0
    quad = 0.0
    for k in range(L):
        x = g0[k]
        z = g1[k]
        rnorm = np.hypot(x, z)
        if rnorm <= 0.0:
            raise ValueError("covariance is not positive definite")
        c = x / rnorm
        s = z / rnorm
        for i in range(k, L):
            gi = g0[i]
            hi = g1[i]
            g0[i] = c * gi + s * hi
            g1[i] = -s * gi + c * hi
        dk = g0[k]
        logdet += 2.0 * np.log(dk)
        for i in range(k, L):
            col[i] = g0[i]
        yk = (r[k] - acc[k]) / dk
        quad += yk * yk
        for i in range(k + 1, L):
            acc[i] += col[i] * yk
        for i in range(L - 1, k, -1):
            g0[i] = col[i - 1]
        g0[k] = 0.0
    return logdet, quad
