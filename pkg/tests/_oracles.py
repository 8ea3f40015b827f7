"""Independent references shared by the estimator tests."""

import math

import numpy as np

from filtrans.gains import EstimatorGains, OutputMap
from filtrans.model import SystemModel


def flow_derivative(z_of, state, velocity, h=1e-6):
    """Central difference of ``z_of`` along ``state + h * velocity``."""
    return (z_of(state + h * velocity) - z_of(state - h * velocity)) / (2 * h)


def random_spd(rng, q, scale=1.0):
    A = rng.normal(size=(q, q))
    return scale * (A @ A.T + q * np.eye(q))


def curved_output_map():
    return OutputMap(lambda y: 0.8 * y + 0.1 * math.sin(y), lambda y: 0.8 + 0.1 * math.cos(y), 0.9, "curved")


def negative_gain_model(q=2):
    """A plant with ``f < 0`` and a state-dependent regressor."""
    theta = np.linspace(-1.0, 1.0, q)
    return SystemModel(
        q=q,
        f=lambda y, t: -1.5 - 0.5 * math.cos(t),
        g0=lambda y, t: 0.3 * y,
        g1=lambda y, t: -y + math.sin(t),
        phi=lambda y, t: np.array([math.cos(y + (j + 1) * t) for j in range(q)]),
        theta_true=theta,
        f_is_positive=False,
    )


def random_gains(rng, q, matrix):
    B = np.diag(np.sort(rng.uniform(0.2, 3.0, q)) + np.arange(q)) if matrix else random_spd(rng, q, 0.3)
    return EstimatorGains(random_spd(rng, q, 0.5), B, curved_output_map(), matrix)
