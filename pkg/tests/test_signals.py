import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from filtrans.signals import (
    DEFAULT_D,
    BenchmarkSignalParams,
    M_ss,
    M_ss_dot,
    SignalConfigError,
    d1,
    d_default,
    det_M_ss,
    mu_ss,
    mu_ss_dot,
    phi2,
)

P = BenchmarkSignalParams()

_t = sp.Symbol("t", nonnegative=True)
_d_expr = sp.sin(_t) / sp.sqrt(1 + _t)
_d_dot = sp.lambdify(_t, sp.diff(_d_expr, _t))
_d_ddot = sp.lambdify(_t, sp.diff(_d_expr, _t, 2))


@pytest.mark.parametrize("t", [0.0, 0.3, 1.7, 12.0, 250.0])
def test_derivatives_match_symbolic(t):
    d, dd, ddd = d_default(t)
    assert d == pytest.approx(math.sin(t) / math.sqrt(1 + t), abs=1e-15)
    assert dd == pytest.approx(_d_dot(t), abs=1e-13)
    assert ddd == pytest.approx(_d_ddot(t), abs=1e-13)


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        d_default(-1.0)


def test_initial_values_with_default_gains():
    assert d1(0.0, P) == pytest.approx(-4.0 / 3.0, abs=1e-12)
    assert phi2(0.0, P) == pytest.approx(-5.0 / 3.0, abs=1e-12)


def test_steady_state_matrix_at_zero():
    np.testing.assert_allclose(M_ss(0.0, P), [[4 / 3, 2 / 3], [-4 / 3, -4 / 3]], atol=1e-12)
    assert det_M_ss(0.0, P) == pytest.approx(-8.0 / 9.0, abs=1e-12)


@pytest.mark.parametrize("params", [P, BenchmarkSignalParams(1.3, 0.2, 4.0), BenchmarkSignalParams(0.1, 3.0, 1.0)])
@pytest.mark.parametrize("t", [0.0, 2.5, 40.0])
def test_closed_form_determinant(params, t):
    expected = -DEFAULT_D.d_dot(t) / (params.a ** 2 * (1 + params.b1) * (1 + params.b2))
    assert det_M_ss(t, params) == pytest.approx(np.linalg.det(M_ss(t, params)), abs=1e-12)
    assert det_M_ss(t, params) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    a=st.floats(0.05, 5.0),
    b1=st.floats(0.05, 5.0),
    b2=st.floats(0.05, 5.0),
    t=st.floats(0.0, 200.0),
)
def test_steady_state_solves_filter(a, b1, b2, t):
    if abs(b1 - b2) < 1e-2:
        return
    params = BenchmarkSignalParams(a, b1, b2)
    phi = np.array([1.0, phi2(t, params)])
    B = np.diag([b1, b2])
    M = M_ss(t, params)
    # column j of M obeys mu' = -a (1 + b_j) mu + phi with f = 1, k' = a
    residual = M_ss_dot(t, params) - (-a * M @ (np.eye(2) + B) + np.outer(phi, np.ones(2)))
    assert np.abs(residual).max() <= 1e-9 * max(1.0, np.abs(phi).max())


def test_branch_validation():
    with pytest.raises(ValueError):
        mu_ss(0.0, P, branch=3)
    with pytest.raises(ValueError):
        mu_ss_dot(0.0, P, branch=0)


@pytest.mark.parametrize("kwargs", [dict(b1=1.0, b2=1.0), dict(a=0.0), dict(b1=-1.0), dict(a=float("nan"))])
def test_bad_params_rejected(kwargs):
    with pytest.raises(SignalConfigError):
        BenchmarkSignalParams(**kwargs)
