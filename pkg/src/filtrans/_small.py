"""Loop-based products for tiny dense arrays.

numba routes ``@`` to BLAS, whose call overhead dominates for q x q blocks
with q ~ 2; these keep the compiled march allocation-light.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def dot(u, v):
    acc = 0.0
    for i in range(u.shape[0]):
        acc += u[i] * v[i]
    return acc


@njit(cache=True, inline="always")
def mv(A, v):
    n, m = A.shape
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(m):
            acc += A[i, j] * v[j]
        out[i] = acc
    return out


@njit(cache=True, inline="always")
def mtv(A, v):
    """``A.T @ v``."""
    n, m = A.shape
    out = np.zeros(m)
    for j in range(m):
        acc = 0.0
        for i in range(n):
            acc += A[i, j] * v[i]
        out[j] = acc
    return out


@njit(cache=True, inline="always")
def mm(A, B):
    n, p = A.shape
    m = B.shape[1]
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for r in range(p):
                acc += A[i, r] * B[r, j]
            out[i, j] = acc
    return out
