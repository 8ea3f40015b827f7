"""Estimator built on the dynamic-matrix filtered transformation ``1 x = pi + M^T theta``.

State: ``zeta`` (length ``2q``) and the square filter matrix ``M``. With
``psi = -M B``, ``S = Gamma M B`` and ``beta = sgn(f) [I; S] 1 k(y)`` the error
``z = (pi, theta) - zeta - beta`` obeys

    z' = -|f| k'(y) [[I, -B M^T], [Gamma M B, Gamma M B M^T]] z

and the parameter block converges whenever ``det M`` is not square integrable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._small import mm, mtv, mv
from .gains import EstimatorGains
from .model import SystemModel, _finite


@dataclass(frozen=True)
class MatEstimatorState:
    zeta: np.ndarray
    M: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        zeta = np.asarray(self.zeta, dtype=float)
        M = np.atleast_2d(np.asarray(self.M, dtype=float))
        q = M.shape[0]
        if M.shape != (q, q) or zeta.shape != (2 * q,):
            raise ValueError(f"inconsistent shapes: zeta {zeta.shape}, M {M.shape}")
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "M", M)

    @classmethod
    def zeros(cls, q: int) -> "MatEstimatorState":
        return cls(np.zeros(2 * q), np.zeros((q, q)))


@dataclass(frozen=True)
class ErrorStateMat:
    z: np.ndarray

    @property
    def z1(self) -> np.ndarray:
        return self.z[: self.z.shape[0] // 2]

    @property
    def z2(self) -> np.ndarray:
        return self.z[self.z.shape[0] // 2:]

    def state_error(self, M) -> np.ndarray:
        """``1 x - chi_hat = z1 + M^T z2``."""
        return self.z1 + np.asarray(M).T @ self.z2


# -- kernels ---------------------------------------------------------------

@njit(cache=True)
def beta_mat_kernel(kval, M, Gamma, B, sgn):
    q = M.shape[0]
    out = np.empty(2 * q)
    out[:q] = sgn * kval
    # S kappa = Gamma M B 1 k
    out[q:] = sgn * kval * mv(Gamma, mv(M, mv(B, np.ones(q))))
    return out


@njit(cache=True)
def M_dot_kernel(M, absf, dk, B, phi):
    # transpose of  M^T' = -|f| k' (I + B) M^T + 1 phi^T
    q = M.shape[0]
    out = -absf * dk * (M + mm(M, B))
    for i in range(q):
        for j in range(q):
            out[i, j] += phi[i]
    return out


@njit(cache=True)
def zeta_dot_mat_kernel(zeta, M, M_dot, kval, dk, absf, sgn, Gamma, B, g0, g1):
    q = M.shape[0]
    ones = np.ones(q)
    S = mm(Gamma, mm(M, B))
    w = zeta + beta_mat_kernel(kval, M, Gamma, B, sgn)
    w1 = w[:q]
    w2 = w[q:]
    c = absf * dk
    out = np.empty(2 * q)
    # psi^T w2 = -B M^T w2
    out[:q] = -c * (w1 - mv(B, mtv(M, w2))) + (g1 - sgn * dk * g0) * ones
    # S_dot 1 = Gamma M_dot B 1
    out[q:] = (-c * mv(S, w1 + mtv(M, w2))
               - sgn * (dk * g0 * mv(S, ones) + kval * mv(Gamma, mv(M_dot, mv(B, ones)))))
    return out


@njit(cache=True)
def error_dot_mat_kernel(z, M, absf, dk, Gamma, B):
    q = M.shape[0]
    z1 = z[:q]
    z2 = z[q:]
    c = absf * dk
    MTz2 = mtv(M, z2)
    out = np.empty(2 * q)
    out[:q] = -c * (z1 - mv(B, MTz2))
    out[q:] = -c * mv(Gamma, mv(M, mv(B, z1 + MTz2)))
    return out


# -- model-level operations ------------------------------------------------

def _check_dims(M, gains):
    if M.shape != (gains.q, gains.q):
        raise ValueError(f"M has shape {M.shape}, gains expect ({gains.q}, {gains.q})")


def beta_mat(y, M, gains: EstimatorGains, sign_f: float) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    _check_dims(M, gains)
    return beta_mat_kernel(float(gains.k.k(y)), M, gains.Gamma, gains.B, float(sign_f))


def M_rhs(M, y, t, model: SystemModel, gains: EstimatorGains) -> np.ndarray:
    """Time derivative of ``M`` (not ``M^T``)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    _check_dims(M, gains)
    absf = abs(model.check_f(y, t))
    phi = np.asarray(_finite("phi", model.phi(y, t), y, t), dtype=float)
    return M_dot_kernel(M, absf, float(gains.k.dk(y)), gains.B, phi)


def zeta_rhs_mat(state: MatEstimatorState, y, model: SystemModel, gains: EstimatorGains) -> np.ndarray:
    _check_dims(state.M, gains)
    t = state.t
    absf = abs(model.check_f(y, t))
    phi = np.asarray(_finite("phi", model.phi(y, t), y, t), dtype=float)
    g0 = _finite("g0", model.g0(y, t), y, t)
    g1 = _finite("g1", model.g1(y, t), y, t)
    dk = float(gains.k.dk(y))
    M_dot = M_dot_kernel(state.M, absf, dk, gains.B, phi)
    out = zeta_dot_mat_kernel(state.zeta, state.M, M_dot, float(gains.k.k(y)), dk, absf,
                              model.sign_f, gains.Gamma, gains.B, float(g0), float(g1))
    return _finite("zeta_dot", out, y, t)


def error_rhs_mat(z, y, M, model: SystemModel, gains: EstimatorGains, t: float = 0.0) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    M = np.atleast_2d(np.asarray(M, dtype=float))
    _check_dims(M, gains)
    if z.shape != (2 * gains.q,):
        raise ValueError(f"z has shape {z.shape}, expected ({2 * gains.q},)")
    absf = abs(model.check_f(y, t))
    return error_dot_mat_kernel(z, M, absf, float(gains.k.dk(y)), gains.Gamma, gains.B)


def estimates_mat(state: MatEstimatorState, y, gains: EstimatorGains, sign_f: float):
    """Return ``(x_hat, theta_hat)``; ``x_hat`` averages ``chi_hat = [I M^T](zeta + beta)``."""
    q = gains.q
    w = state.zeta + beta_mat(y, state.M, gains, sign_f)
    chi_hat = w[:q] + state.M.T @ w[q:]
    return float(chi_hat.mean()), w[q:].copy()


def error_mat(state: MatEstimatorState, y, x, theta, gains: EstimatorGains, sign_f: float) -> ErrorStateMat:
    pi = x * np.ones(gains.q) - state.M.T @ theta
    vartheta = np.concatenate([pi, theta])
    return ErrorStateMat(vartheta - state.zeta - beta_mat(y, state.M, gains, sign_f))


def lyapunov_mat(z, gains: EstimatorGains) -> float:
    z = np.asarray(z, dtype=float)
    q = gains.q
    z1, z2 = z[:q], z[q:]
    return 0.5 * float(z1 @ z1 + z2 @ np.linalg.solve(gains.Gamma, z2))
