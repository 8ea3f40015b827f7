"""Benchmark regressor family built from a vanishing signal d(t).

The regressor second entry is obtained algebraically from ``d`` and its first
two derivatives, so no auxiliary ODE has to be integrated:

    a (b1 - b2) d1 = d' + a (1 + b2) d
    phi2 = d1' + a (1 + b1) d1

``phi2`` tends to zero (so ``(1, phi2)`` is not persistently exciting) while
the steady-state filter matrix built from it has a determinant proportional to
``d'``, which is not square integrable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit


class SignalConfigError(ValueError):
    """Raised for benchmark parameters outside their admissible range."""


@dataclass(frozen=True)
class BenchmarkSignalParams:
    a: float = 0.5
    b1: float = 0.5
    b2: float = 2.0

    def __post_init__(self):
        for name in ("a", "b1", "b2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise SignalConfigError(f"{name} must be a positive real, got {value!r}")
        if self.b1 == self.b2:
            raise SignalConfigError("b1 and b2 must differ (d1 is undefined when b1 == b2)")


@dataclass(frozen=True)
class DSignal:
    """A member of the vanishing-signal class as an analytically consistent triple."""

    d: Callable[[float], float]
    d_dot: Callable[[float], float]
    d_ddot: Callable[[float], float]

    def __call__(self, t):
        return self.d(t), self.d_dot(t), self.d_ddot(t)


@njit(cache=True)
def _d_sin(t):
    return math.sin(t) / math.sqrt(1.0 + t)


@njit(cache=True)
def _d_sin_dot(t):
    s = 1.0 + t
    return math.cos(t) * s ** -0.5 - 0.5 * math.sin(t) * s ** -1.5


@njit(cache=True)
def _d_sin_ddot(t):
    s = 1.0 + t
    return (-math.sin(t) * s ** -0.5 - math.cos(t) * s ** -1.5
            + 0.75 * math.sin(t) * s ** -2.5)


DEFAULT_D = DSignal(_d_sin, _d_sin_dot, _d_sin_ddot)


@njit(cache=True)
def _zero(t):
    return 0.0


ZERO_D = DSignal(_zero, _zero, _zero)


def d_default(t: float) -> tuple[float, float, float]:
    """Return ``(d, d', d'')`` for ``d(t) = sin t / sqrt(1 + t)``."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    return DEFAULT_D(t)


def _resolve(dsig):
    return DEFAULT_D if dsig is None else dsig


def d1(t, params: BenchmarkSignalParams, dsig: DSignal | None = None) -> float:
    dsig = _resolve(dsig)
    a, b1, b2 = params.a, params.b1, params.b2
    return (dsig.d_dot(t) + a * (1 + b2) * dsig.d(t)) / (a * (b1 - b2))


def d1_dot(t, params: BenchmarkSignalParams, dsig: DSignal | None = None) -> float:
    dsig = _resolve(dsig)
    a, b1, b2 = params.a, params.b1, params.b2
    return (dsig.d_ddot(t) + a * (1 + b2) * dsig.d_dot(t)) / (a * (b1 - b2))


def phi2(t, params: BenchmarkSignalParams, dsig: DSignal | None = None) -> float:
    return d1_dot(t, params, dsig) + params.a * (1 + params.b1) * d1(t, params, dsig)


def mu_ss(t, params: BenchmarkSignalParams, dsig: DSignal | None = None, branch: int = 1) -> np.ndarray:
    """Steady-state filter vector for ``B = b_branch * I`` with ``k' = a``.

    Only meaningful for the benchmark plant (``f = 1``, ``phi = (1, phi2)``).
    """
    dsig = _resolve(dsig)
    a = params.a
    if branch == 1:
        return np.array([1.0 / (a * (1 + params.b1)), d1(t, params, dsig)])
    if branch == 2:
        return np.array([1.0 / (a * (1 + params.b2)), d1(t, params, dsig) + dsig.d(t)])
    raise ValueError(f"branch must be 1 or 2, got {branch}")


def mu_ss_dot(t, params: BenchmarkSignalParams, dsig: DSignal | None = None, branch: int = 1) -> np.ndarray:
    dsig = _resolve(dsig)
    second = d1_dot(t, params, dsig)
    if branch == 2:
        second += dsig.d_dot(t)
    elif branch != 1:
        raise ValueError(f"branch must be 1 or 2, got {branch}")
    return np.array([0.0, second])


def M_ss(t, params: BenchmarkSignalParams, dsig: DSignal | None = None) -> np.ndarray:
    """Steady-state filter matrix: columns are the two steady-state vectors."""
    return np.column_stack([mu_ss(t, params, dsig, 1), mu_ss(t, params, dsig, 2)])


def M_ss_dot(t, params: BenchmarkSignalParams, dsig: DSignal | None = None) -> np.ndarray:
    return np.column_stack([mu_ss_dot(t, params, dsig, 1), mu_ss_dot(t, params, dsig, 2)])


def det_M_ss(t, params: BenchmarkSignalParams, dsig: DSignal | None = None) -> float:
    """Closed-form determinant of :func:`M_ss`.

    Reduces to ``-d'(t) / (a^2 (1 + b1)(1 + b2))``; the ``a^2`` factor is
    easy to drop and only vanishes from the expression when ``a = 1``.
    """
    dsig = _resolve(dsig)
    a, b1, b2 = params.a, params.b1, params.b2
    return -dsig.d_dot(t) / (a * a * (1 + b1) * (1 + b2))
