"""Estimator built on the dynamic-vector filtered transformation ``x = p + mu^T theta``.

State: ``zeta`` (length ``1 + q``) and the filter vector ``mu`` (length ``q``).
With ``beta = sgn(f) [1; Gamma B mu] k(y)`` the estimation error
``z = (p, theta) - zeta - beta`` obeys

    z' = -|f| k'(y) [[1, -mu^T B], [Gamma B mu, Gamma B mu mu^T]] z

independently of the unknown parameters. ``V = (z1^2 + z2^T Gamma^-1 z2) / 2``
then has ``V' = -|f| k' (z1^2 + (z2^T B mu)(mu^T z2))``, which is
non-positive for ``B = b I`` but can be positive for a general
positive-definite ``B``. Use a scalar ``B`` here; the matrix filter has no
such restriction.

The ``_kernel`` functions take
already-evaluated model quantities and are shared by the compiled simulator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._small import dot, mv
from .gains import EstimatorGains
from .model import SystemModel, _finite


@dataclass(frozen=True)
class VecEstimatorState:
    zeta: np.ndarray
    mu: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        zeta = np.asarray(self.zeta, dtype=float)
        mu = np.asarray(self.mu, dtype=float)
        if zeta.shape != (mu.shape[0] + 1,):
            raise ValueError(f"zeta has shape {zeta.shape}, expected ({mu.shape[0] + 1},)")
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "mu", mu)

    @classmethod
    def zeros(cls, q: int) -> "VecEstimatorState":
        return cls(np.zeros(q + 1), np.zeros(q))


@dataclass(frozen=True)
class ErrorStateVec:
    z: np.ndarray

    @property
    def z1(self) -> float:
        return float(self.z[0])

    @property
    def z2(self) -> np.ndarray:
        return self.z[1:]

    def state_error(self, mu) -> float:
        """``x - x_hat = z1 + mu^T z2``."""
        return float(self.z[0] + np.dot(mu, self.z[1:]))


# -- kernels ---------------------------------------------------------------

@njit(cache=True)
def beta_vec_kernel(kval, mu, Gamma, B, sgn):
    q = mu.shape[0]
    out = np.empty(q + 1)
    out[0] = sgn * kval
    out[1:] = sgn * kval * mv(Gamma, mv(B, mu))
    return out


@njit(cache=True)
def mu_dot_kernel(mu, absf, dk, B, phi):
    return -absf * dk * (mu + mv(B, mu)) + phi


@njit(cache=True)
def zeta_dot_vec_kernel(zeta, mu, mu_dot, kval, dk, absf, sgn, Gamma, B, g0, g1):
    q = mu.shape[0]
    GBmu = mv(Gamma, mv(B, mu))
    w = zeta + beta_vec_kernel(kval, mu, Gamma, B, sgn)
    w2 = w[1:]
    # phi - mu' with mu' taken from the filter law
    drift = absf * dk * (mu + mv(B, mu))
    # (dbeta/dy) f = |f| k' [1; Gamma B mu]
    proj = w[0] + dot(mu, w2)
    out = np.empty(q + 1)
    out[0] = -absf * dk * proj + dot(drift, w2) + g1 - sgn * dk * g0
    out[1:] = ((-absf * dk * proj - sgn * dk * g0) * GBmu
               - sgn * kval * mv(Gamma, mv(B, mu_dot)))
    return out


@njit(cache=True)
def error_dot_vec_kernel(z, mu, absf, dk, Gamma, B):
    q = mu.shape[0]
    z2 = z[1:]
    out = np.empty(q + 1)
    out[0] = -absf * dk * (z[0] - dot(mu, mv(B, z2)))
    out[1:] = -absf * dk * (z[0] + dot(mu, z2)) * mv(Gamma, mv(B, mu))
    return out


# -- model-level operations ------------------------------------------------

def _check_dims(mu, gains):
    if mu.shape != (gains.q,):
        raise ValueError(f"mu has shape {mu.shape}, gains expect ({gains.q},)")


def beta_vec(y, mu, gains: EstimatorGains, sign_f: float) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    _check_dims(mu, gains)
    return beta_vec_kernel(float(gains.k.k(y)), mu, gains.Gamma, gains.B, float(sign_f))


def mu_rhs(mu, y, t, model: SystemModel, gains: EstimatorGains) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    _check_dims(mu, gains)
    absf = abs(model.check_f(y, t))
    phi = np.asarray(_finite("phi", model.phi(y, t), y, t), dtype=float)
    return mu_dot_kernel(mu, absf, float(gains.k.dk(y)), gains.B, phi)


def zeta_rhs_vec(state: VecEstimatorState, y, model: SystemModel, gains: EstimatorGains) -> np.ndarray:
    _check_dims(state.mu, gains)
    t = state.t
    absf = abs(model.check_f(y, t))
    phi = np.asarray(_finite("phi", model.phi(y, t), y, t), dtype=float)
    g0 = _finite("g0", model.g0(y, t), y, t)
    g1 = _finite("g1", model.g1(y, t), y, t)
    dk = float(gains.k.dk(y))
    mu_dot = mu_dot_kernel(state.mu, absf, dk, gains.B, phi)
    out = zeta_dot_vec_kernel(state.zeta, state.mu, mu_dot, float(gains.k.k(y)), dk, absf,
                              model.sign_f, gains.Gamma, gains.B, float(g0), float(g1))
    return _finite("zeta_dot", out, y, t)


def error_rhs_vec(z, y, mu, model: SystemModel, gains: EstimatorGains, t: float = 0.0) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    mu = np.asarray(mu, dtype=float)
    _check_dims(mu, gains)
    if z.shape != (gains.q + 1,):
        raise ValueError(f"z has shape {z.shape}, expected ({gains.q + 1},)")
    absf = abs(model.check_f(y, t))
    return error_dot_vec_kernel(z, mu, absf, float(gains.k.dk(y)), gains.Gamma, gains.B)


def estimates_vec(state: VecEstimatorState, y, gains: EstimatorGains, sign_f: float):
    """Return ``(x_hat, theta_hat)`` with ``x_hat = [1 mu^T](zeta + beta)``."""
    w = state.zeta + beta_vec(y, state.mu, gains, sign_f)
    return float(w[0] + state.mu @ w[1:]), w[1:].copy()


def error_vec(state: VecEstimatorState, y, x, theta, gains: EstimatorGains, sign_f: float) -> ErrorStateVec:
    """Reconstruct ``z = (p, theta) - zeta - beta`` from the true plant state."""
    p = x - state.mu @ theta
    eta = np.concatenate([[p], theta])
    return ErrorStateVec(eta - state.zeta - beta_vec(y, state.mu, gains, sign_f))


def lyapunov_vec(z, gains: EstimatorGains) -> float:
    z = np.asarray(z, dtype=float)
    z2 = z[1:]
    return 0.5 * float(z[0] ** 2 + z2 @ np.linalg.solve(gains.Gamma, z2))
