import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from filtrans.diagnostics import (
    det_l2_report,
    lambda_m_sq,
    log_growth_fit,
    lyapunov_monitor,
    overshoot,
    pe_margin,
    running_integral,
    validate_gains,
    windowed_gram_min_eig,
)
from filtrans.gains import EstimatorGains, OutputMap, linear_output_map, benchmark_gains


def test_pe_margin_of_quadrature_pair():
    dt = 1e-3
    t = np.arange(0, 20, dt)
    margin = pe_margin(np.column_stack([np.sin(t), np.cos(t)]), dt, 2 * math.pi)
    assert margin == pytest.approx(0.5, abs=1e-3)


def test_pe_margin_detects_rank_deficiency():
    t = np.arange(0, 20, 0.01)
    assert pe_margin(np.column_stack([np.sin(t), 2 * np.sin(t)]), 0.01, 2 * math.pi) == pytest.approx(0.0, abs=1e-12)


def test_pe_margin_of_decaying_signal_shrinks():
    dt = 0.01
    t = np.arange(0, 400, dt)
    margins = windowed_gram_min_eig(np.column_stack([np.ones_like(t), np.sin(t) / np.sqrt(1 + t)]), dt, 2 * math.pi)
    assert margins[-1] < margins[0] / 10


def test_pe_window_checks():
    with pytest.raises(ValueError):
        pe_margin(np.ones((100, 1)), 0.1, 0.5)
    with pytest.raises(ValueError):
        pe_margin(np.ones((20, 1)), 0.1, 5.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_lambda_m_sq_is_smallest_singular_value_squared(entries):
    M = np.array(entries).reshape(2, 2)
    sigma = np.linalg.svd(M, compute_uv=False)
    assert lambda_m_sq(M[None])[0] == pytest.approx(sigma[-1] ** 2, abs=1e-9)


def test_lambda_m_sq_differs_from_squared_eigenvalue():
    # M M^T >= lambda I uses singular values; |eig(M)|^2 would claim 1 here
    M = np.array([[1.0, 10.0], [0.0, 1.0]])
    assert lambda_m_sq(M[None])[0] < 0.02


def test_running_integral_of_identity_determinant():
    t = np.linspace(0, 10, 1001)
    report = det_l2_report(np.broadcast_to(np.eye(2), (t.size, 2, 2)), t)
    np.testing.assert_allclose(report.det_l2_integral, t, atol=1e-12)
    assert report.growth == "super-logarithmic"


def test_running_integral_trapezoid():
    t = np.linspace(0, 1, 11)
    np.testing.assert_allclose(running_integral(t, t)[-1], 0.5, atol=1e-15)
    assert running_integral([0.0], [3.0])[0] == 0.0


def test_log_fit_recovers_coefficients():
    t = np.linspace(0, 500, 5001)
    c, c0, rel, growth = log_growth_fit(t, 0.3 * np.log1p(t) + 2.0, (50, 500))
    assert c == pytest.approx(0.3, rel=1e-9) and c0 == pytest.approx(2.0, rel=1e-9)
    assert rel < 1e-9 and growth == "logarithmic"


def test_log_fit_flags_converged_and_linear():
    t = np.linspace(0, 100, 1001)
    assert log_growth_fit(t, np.full_like(t, 4.0))[3] == "converged"
    assert log_growth_fit(t, 0.1 * t)[3] == "super-logarithmic"
    with pytest.raises(ValueError):
        log_growth_fit(t, t, (200, 300))


def test_report_with_regressor_window():
    t = np.arange(0, 30, 0.01)
    M = np.broadcast_to(np.eye(2), (t.size, 2, 2))
    report = det_l2_report(M, t, regressor=np.column_stack([np.sin(t), np.cos(t)]), pe_window=2 * math.pi)
    assert report.pe_margin == pytest.approx(0.5, abs=1e-2)
    summary = report.summary()
    assert summary["det_l2_integral_final"] == pytest.approx(t[-1])
    assert summary["sigma_min"] == pytest.approx(1.0)


def test_gain_validation():
    assert validate_gains(benchmark_gains(matrix=True))
    bad_gamma = EstimatorGains(np.array([[1.0, 2.0], [2.0, 1.0]]), np.eye(2), linear_output_map(0.5))
    result = validate_gains(bad_gamma)
    assert not result and "Gamma" in result.problems[0]
    assert not validate_gains(benchmark_gains(b=1.0), for_matrix_estimator=True)
    assert validate_gains(benchmark_gains(b=1.0), for_matrix_estimator=False)
    skew = EstimatorGains(np.eye(2), np.array([[1.0, 0.5], [0.0, 1.0]]), linear_output_map(0.5))
    assert not validate_gains(skew)
    loose = OutputMap(lambda y: y ** 3 + y, lambda y: 3 * y * y + 1, 2.0, "cubic")
    assert any("bound" in p for p in validate_gains(EstimatorGains(np.eye(2), np.eye(2), loose)).problems)
    flat = OutputMap(lambda y: math.tanh(y), lambda y: 1 - math.tanh(y) ** 2, 1.0, "tanh")
    assert any("increasing" in p for p in validate_gains(EstimatorGains(np.eye(2), np.eye(2), flat)).problems)


def test_overshoot_metric():
    t = np.arange(6.0)
    m = overshoot(np.array([0.9, 1.2, 0.4, 0.06, 0.04, 0.01]), 0.05, t)
    assert m.peak == 1.2 and m.settle_time == 4.0
    assert overshoot(np.array([1.0, 0.5, 0.2]), 0.05).settle_time is None
    assert overshoot(np.array([0.01, 0.02]), 0.05).settle_time == 0.0
    two_d = overshoot(np.array([[3.0, 4.0], [0.0, 0.0]]), 0.1)
    assert two_d.peak == 5.0


def test_lyapunov_monitor():
    assert lyapunov_monitor([1.0, 0.9, 0.9 + 1e-10, 1.0, 0.5], 1e-8) == [3]
    assert lyapunov_monitor(np.linspace(1, 0, 50), 0.0) == []
