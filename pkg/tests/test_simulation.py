import math

import numpy as np
import pytest

from filtrans.gains import benchmark_gains
from filtrans.harness import record_columns
from filtrans.mat_estimator import MatEstimatorState, error_mat, estimates_mat, lyapunov_mat
from filtrans.model import SystemModel, make_example_system
from filtrans.ode import IntegrationError, StepConfig
from filtrans.simulation import EstimatorSpec, build_layout, simulate
from filtrans.vec_estimator import VecEstimatorState, error_vec, estimates_vec, lyapunov_vec

ESTIMATORS = (
    EstimatorSpec("vec_b1", "vec", benchmark_gains(b=0.5)),
    EstimatorSpec("vec_b2", "vec", benchmark_gains(b=2.0)),
    EstimatorSpec("mat_B", "mat", benchmark_gains(matrix=True)),
)


def test_layout_blocks():
    layout = build_layout(2, ("vec", "mat"))
    assert layout.get(np.arange(layout.size, dtype=float), "e1.M").shape == (2, 2)
    assert "int_ddot2" in layout.blocks and "e0.mu" in layout.blocks


def test_compiled_matches_python_path():
    cfg = StepConfig(1e-3, 1.5, record_every=50)
    model = make_example_system()
    fast = simulate(model, ESTIMATORS, cfg)
    slow = simulate(model, ESTIMATORS, cfg, force_python=True)
    assert fast.compiled and not slow.compiled
    np.testing.assert_allclose(fast.states, slow.states, rtol=1e-11, atol=1e-12)


def test_record_columns_match_per_record_reconstruction():
    model = make_example_system()
    res = simulate(model, ESTIMATORS, StepConfig(1e-3, 5.0, record_every=500))
    cols = record_columns(res)
    theta = model.theta_true
    for k in range(len(res.t)):
        y, x = cols["y"][k], cols["x"][k]
        for i, est in enumerate(ESTIMATORS):
            zeta = res.block(f"e{i}.zeta")[k]
            if est.kind == "vec":
                state = VecEstimatorState(zeta, res.block(f"e{i}.mu")[k])
                x_hat, theta_hat = estimates_vec(state, y, est.gains, 1.0)
                V = lyapunov_vec(error_vec(state, y, x, theta, est.gains, 1.0).z, est.gains)
            else:
                state = MatEstimatorState(zeta, res.block(f"e{i}.M")[k])
                x_hat, theta_hat = estimates_mat(state, y, est.gains, 1.0)
                V = lyapunov_mat(error_mat(state, y, x, theta, est.gains, 1.0).z, est.gains)
            assert cols[f"{est.name}.x_hat"][k] == pytest.approx(x_hat, abs=1e-12)
            assert cols[f"{est.name}.theta_hat_2"][k] == pytest.approx(theta_hat[1], abs=1e-12)
            assert cols[f"{est.name}.V"][k] == pytest.approx(V, rel=1e-10, abs=1e-14)


def test_regressor_column_matches_model():
    cols = record_columns(simulate(make_example_system(), ESTIMATORS[:1], StepConfig(1e-3, 1.0, 100)))
    np.testing.assert_allclose(cols["phi_1"], 1.0)
    assert cols["phi_2"][0] == pytest.approx(-5.0 / 3.0, abs=1e-12)


def test_shared_output_map_required():
    mixed = (ESTIMATORS[0], EstimatorSpec("other", "vec", benchmark_gains(a=1.0)))
    with pytest.raises(ValueError):
        simulate(make_example_system(), mixed, StepConfig(1e-3, 0.01))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blow_up_raises_integration_error():
    model = SystemModel(q=1, f=lambda y, t: 1.0, g0=lambda y, t: y * y, g1=lambda y, t: 0.0,
                        phi=lambda y, t: np.array([1.0]), theta_true=[1.0])
    est = (EstimatorSpec("v", "vec", benchmark_gains(q=1, b=1.0)),)
    with pytest.raises(IntegrationError):
        simulate(model, est, StepConfig(1e-2, 10.0), y0=2.0)


def test_sign_violation_detected():
    from filtrans.model import ModelEvaluationError

    model = SystemModel(q=1, f=lambda y, t: math.cos(t), g0=lambda y, t: 0.0, g1=lambda y, t: -y,
                        phi=lambda y, t: np.array([1.0]), theta_true=[1.0])
    est = (EstimatorSpec("v", "vec", benchmark_gains(q=1, b=1.0)),)
    with pytest.raises(ModelEvaluationError):
        simulate(model, est, StepConfig(1e-2, 3.0))


def test_plant_stays_bounded(long_run):
    cols = long_run.columns
    assert np.abs(cols["y"]).max() <= 10 and np.abs(cols["x"]).max() <= 10


def test_filters_stay_near_input_bound(long_run):
    # |mu| <= |mu(0)| + sup|phi| / (a (1 + b)) for the scalar-B filters
    phi_sup = np.hypot(long_run.columns["phi_1"], long_run.columns["phi_2"]).max()
    for name, b in (("vec_b1", 0.5), ("vec_b2", 2.0)):
        mu = np.hypot(long_run.columns[f"{name}.mu_1"], long_run.columns[f"{name}.mu_2"])
        assert mu.max() <= phi_sup / (0.5 * (1 + b)) + 1e-9


def test_disturbance_energy_keeps_growing(long_run):
    t, I = long_run.columns["t"], long_run.columns["int_ddot2"]
    assert np.interp(400.0, t, I) - np.interp(100.0, t, I) >= 0.1


def test_determinant_accumulator_matches_trapezoid(long_run):
    cols = long_run.columns
    trapz = np.trapezoid(cols["mat_B.det_M"] ** 2, cols["t"])
    assert cols["mat_B.int_det2"][-1] == pytest.approx(trapz, rel=1e-4)
