"""Second-order single-output plant class and its filtered coordinates.

    y' = f(y, t) x + g0(y, t)
    x' = g1(y, t) + phi(y, t)^T theta

``y`` is measured, ``x`` is not, ``theta`` (length ``q``) is unknown to the
estimators. The true parameter vector is stored on the model so the plant can
be simulated and errors scored, but estimator code never reads it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numba import njit

from .signals import DEFAULT_D, BenchmarkSignalParams, DSignal


class ModelEvaluationError(ArithmeticError):
    """A model map returned a non-finite value (or violated its sign contract)."""

    def __init__(self, name, y, t, value):
        super().__init__(f"model map {name!r} returned {value!r} at y={y!r}, t={t!r}")
        self.name = name
        self.y = y
        self.t = t


ScalarMap = Callable[[float, float], float]


@dataclass(frozen=True, eq=False)
class SystemModel:
    q: int
    f: ScalarMap
    g0: ScalarMap
    g1: ScalarMap
    phi: Callable[[float, float], np.ndarray]
    theta_true: np.ndarray
    f_is_positive: bool = True
    d_signal: DSignal | None = None
    name: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 1:
            raise ValueError(f"q must be a positive integer, got {self.q!r}")
        theta = np.asarray(self.theta_true, dtype=float)
        if theta.shape != (self.q,):
            raise ValueError(f"theta_true must have shape ({self.q},), got {theta.shape}")
        object.__setattr__(self, "theta_true", theta)

    @property
    def sign_f(self) -> float:
        return 1.0 if self.f_is_positive else -1.0

    def check_f(self, y, t) -> float:
        """Evaluate ``f`` and enforce the fixed-sign, nonzero contract."""
        value = self.f(y, t)
        if not math.isfinite(value) or value == 0.0 or (value > 0) != self.f_is_positive:
            raise ModelEvaluationError("f", y, t, value)
        return value


@dataclass(frozen=True)
class PlantState:
    y: float
    x: float
    t: float = 0.0


@dataclass(frozen=True)
class TrueExtendedState:
    """Ground-truth filtered coordinates for one of the two transformations."""

    theta: np.ndarray
    p: float | None = None
    pi: np.ndarray | None = None

    @property
    def eta(self) -> np.ndarray:
        return np.concatenate([[self.p], self.theta])

    @property
    def vartheta(self) -> np.ndarray:
        return np.concatenate([self.pi, self.theta])


def _finite(name, value, y, t):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ModelEvaluationError(name, y, t, value)
    return value


def plant_rhs(state: PlantState, model: SystemModel) -> tuple[float, float]:
    y, x, t = state.y, state.x, state.t
    f = _finite("f", model.f(y, t), y, t)
    g0 = _finite("g0", model.g0(y, t), y, t)
    g1 = _finite("g1", model.g1(y, t), y, t)
    phi = _finite("phi", model.phi(y, t), y, t)
    return f * x + g0, g1 + float(np.dot(phi, model.theta_true))


def true_extended_state(x: float, theta, mu_or_M) -> TrueExtendedState:
    """Filtered coordinates of ``x`` for a filter vector ``mu`` or matrix ``M``.

    A 1-D argument gives ``p = x - mu^T theta``; a square 2-D argument gives
    ``pi = 1 x - M^T theta``.
    """
    theta = np.asarray(theta, dtype=float)
    arr = np.asarray(mu_or_M, dtype=float)
    q = theta.shape[0]
    if theta.ndim != 1:
        raise ValueError("theta must be a vector")
    if arr.ndim == 1:
        if arr.shape != (q,):
            raise ValueError(f"mu has shape {arr.shape}, expected ({q},)")
        return TrueExtendedState(theta=theta, p=float(x - arr @ theta))
    if arr.shape != (q, q):
        raise ValueError(f"M has shape {arr.shape}, expected ({q}, {q})")
    return TrueExtendedState(theta=theta, pi=x * np.ones(q) - arr.T @ theta)


@njit(cache=True)
def _unit_gain(y, t):
    return 1.0


@njit(cache=True)
def _minus_y(y, t):
    return -y


@lru_cache(maxsize=None)
def _example_phi(a, b1, b2, d, d_dot, d_ddot):
    scale = 1.0 / (a * (b1 - b2))
    c1 = a * (1.0 + b1)
    c2 = a * (1.0 + b2)

    @njit
    def phi(y, t):
        d1 = (d_dot(t) + c2 * d(t)) * scale
        d1_dot = (d_ddot(t) + c2 * d_dot(t)) * scale
        out = np.empty(2)
        out[0] = 1.0
        out[1] = d1_dot + c1 * d1
        return out

    return phi


@lru_cache(maxsize=None)
def _example_system(a, b1, b2, dsig):
    params = BenchmarkSignalParams(a, b1, b2)
    return SystemModel(
        q=2,
        f=_unit_gain,
        g0=_minus_y,
        g1=_minus_y,
        phi=_example_phi(a, b1, b2, dsig.d, dsig.d_dot, dsig.d_ddot),
        theta_true=np.array([-1.0, 1.0]),
        f_is_positive=True,
        d_signal=dsig,
        name="example",
        meta={"signal_params": params},
    )


def make_example_system(params: BenchmarkSignalParams | None = None,
                        dsig: DSignal | None = None) -> SystemModel:
    """The benchmark plant: f = 1, g0 = g1 = -y, theta = (-1, 1), phi = (1, phi2(t)).

    Instances are cached per (params, signal) so the compiled simulation
    kernels are reused across runs.
    """
    params = params or BenchmarkSignalParams()
    return _example_system(params.a, params.b1, params.b2, dsig or DEFAULT_D)
