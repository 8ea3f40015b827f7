from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numba import njit


@dataclass(frozen=True)
class OutputMap:
    """Strictly increasing output map ``k(y)`` together with its derivative.

    ``dk_bound`` is the declared supremum of ``k'``; it is checked by
    :func:`filtrans.diagnostics.validate_gains` on sampled points only.
    """

    k: Callable[[float], float]
    dk: Callable[[float], float]
    dk_bound: float
    label: str = "custom"


@lru_cache(maxsize=None)
def linear_output_map(a: float) -> OutputMap:
    """``k(y) = a y``; the choice used for every estimator in the benchmark."""
    if not a > 0:
        raise ValueError(f"slope must be positive, got {a}")

    @njit
    def k(y):
        return a * y

    @njit
    def dk(y):
        return a

    return OutputMap(k, dk, float(a), label=f"linear(a={a:g})")


@dataclass(frozen=True, eq=False)
class EstimatorGains:
    Gamma: np.ndarray
    B: np.ndarray
    k: OutputMap
    require_distinct_B_eigs: bool = False

    def __post_init__(self):
        Gamma = np.atleast_2d(np.asarray(self.Gamma, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if Gamma.shape != B.shape or Gamma.shape[0] != Gamma.shape[1]:
            raise ValueError(f"Gamma {Gamma.shape} and B {B.shape} must be equal square shapes")
        object.__setattr__(self, "Gamma", Gamma)
        object.__setattr__(self, "B", B)

    @property
    def q(self) -> int:
        return self.B.shape[0]


def benchmark_gains(q: int = 2, a: float = 0.5, b=(0.5, 2.0), gamma: float = 1.0,
                matrix: bool = False) -> EstimatorGains:
    """Gains of the form ``Gamma = gamma I``, ``B = diag(b)`` (scalar ``b`` means ``b I``), ``k = a y``."""
    b = np.broadcast_to(np.asarray(b, dtype=float), (q,))
    return EstimatorGains(gamma * np.eye(q), np.diag(b), linear_output_map(float(a)),
                          require_distinct_B_eigs=matrix)
