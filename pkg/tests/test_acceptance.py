"""Acceptance gate: one test per criterion, reported as PASS/FAIL lines at the end of the run.

Run alone with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""

import math

import numpy as np
import pytest

from filtrans.diagnostics import log_growth_fit, lyapunov_monitor, pe_margin
from filtrans.gains import benchmark_gains
from filtrans.harness import figure2_scenario, run_scenario
from filtrans.harness.cli import main
from filtrans.model import make_example_system
from filtrans.ode import StepConfig, integrate
from filtrans.signals import DEFAULT_D, BenchmarkSignalParams, M_ss, d1, det_M_ss, phi2
from filtrans.simulation import EstimatorSpec, simulate

criterion = pytest.mark.criterion
VEC = ("vec_b1", "vec_b2")
ALL = VEC + ("mat_B",)


def _final(run, column):
    return run.columns[column][-1]


@criterion(1, "oracle equivalence, vector estimators: |z_rec - z_direct| <= 1e-6 on [0, 50]")
def test_c01_vector_oracle(default_run):
    early = default_run.columns["t"] <= 50.0
    for name in VEC:
        assert default_run.columns[f"{name}.z_gap"][early].max() <= 1e-6


@criterion(2, "oracle equivalence, matrix estimator: |z_rec - z_direct| <= 1e-6 on [0, 50]")
def test_c02_matrix_oracle(default_run):
    early = default_run.columns["t"] <= 50.0
    assert default_run.columns["mat_B.z_gap"][early].max() <= 1e-6


@criterion(3, "Lyapunov function never rises by more than 1e-8 per step over the default run")
def test_c03_lyapunov_monotone(default_run):
    assert default_run.result.cfg.record_every == 1
    for name in ALL:
        assert lyapunov_monitor(default_run.columns[f"{name}.V"], 1e-8) == [], name


@criterion(4, "state estimation: |x_err(300)| <= 1e-3 for every estimator")
def test_c04_state_error(default_run):
    errors = {name: abs(_final(default_run, f"{name}.x_err")) for name in ALL}
    assert all(e <= 1e-3 for e in errors.values()), errors


@criterion(5, "matrix estimator: |theta_err(300)| <= 0.2 |theta_err(0+)| and below both vector estimators")
def test_c05_parameter_error(default_run):
    final = {name: _final(default_run, f"{name}.theta_err_norm") for name in ALL}
    initial = default_run.columns["mat_B.theta_err_norm"][1]
    assert final["mat_B"] <= 0.2 * initial
    assert final["mat_B"] < final["vec_b1"], final
    assert final["mat_B"] < final["vec_b2"], final


@criterion(6, "steady-state oracles: |M - M_ss| and |det M - det M_ss| <= 1e-3 for t >= 60")
def test_c06_steady_state(default_run):
    cols = default_run.columns
    params = BenchmarkSignalParams()
    idx = np.flatnonzero(cols["t"] >= 60.0)[::10]
    worst_M = worst_det = 0.0
    for k in idx:
        t = cols["t"][k]
        M = np.array([[cols["mat_B.M_1_1"][k], cols["mat_B.M_1_2"][k]],
                      [cols["mat_B.M_2_1"][k], cols["mat_B.M_2_2"][k]]])
        worst_M = max(worst_M, np.abs(M - M_ss(t, params)).max())
        worst_det = max(worst_det, abs(cols["mat_B.det_M"][k] - det_M_ss(t, params)))
    assert worst_M <= 1e-3 and worst_det <= 1e-3


@criterion(7, "det M is not square integrable: log fit on [50, 500] with c > 0, residual <= 10%; b1 = b2 ablation stays constant")
def test_c07_non_square_integrable(long_run):
    cols = long_run.columns
    integral = cols["mat_B.int_det2"]
    c, _, rel, _ = log_growth_fit(cols["t"], integral, (50.0, 500.0))
    assert c > 0 and rel <= 0.10

    ablation = EstimatorSpec("ablation", "mat", benchmark_gains(b=0.5))
    res = simulate(make_example_system(), (ablation,), StepConfig(1e-3, 300.0, record_every=100))
    tail = res.block("e0.int_det2")[res.t >= 100.0, 0]
    assert np.abs(tail - tail[-1]).max() <= 1e-6


@criterion(8, "gamma sweep: overshoot strictly decreases and settle time does not increase with gamma")
def test_c08_gamma_sweep():
    runs = figure2_scenario(write=False)
    peaks = [runs[g].overshoot["mat_B"].peak for g in (1.0, 100.0, 10000.0)]
    settles = [runs[g].overshoot["mat_B"].settle_time for g in (1.0, 100.0, 10000.0)]
    assert peaks[0] > peaks[1] > peaks[2], peaks
    assert None not in settles and settles[0] >= settles[1] >= settles[2], settles


@criterion(9, "diagonal-B matrix filter columns equal the scalar-B vector filters to 1e-9")
def test_c09_row_filters(default_run):
    cols = default_run.columns
    for j, name in enumerate(VEC, start=1):
        for i in (1, 2):
            gap = np.abs(cols[f"mat_B.M_{i}_{j}"] - cols[f"{name}.mu_{i}"]).max()
            assert gap <= 1e-9, (name, i, gap)


@criterion(10, "RK4 convergence order on the exponential test problem lies in [3.7, 4.3]")
def test_c10_integrator_order():
    dts = np.array([0.1, 0.05, 0.025, 0.0125])
    errs = [abs(integrate(lambda s, t: s, [1.0], StepConfig(dt, 1.0)).states[-1, 0] - math.e) for dt in dts]
    order = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert 3.7 <= order <= 4.3, order


@criterion(11, "signal oracles: derivatives match finite differences to 1e-6; d1(0) = -4/3, phi2(0) = -5/3")
def test_c11_signals():
    h = 1e-4
    for t in np.linspace(0.5, 50.0, 40):
        d_m, d_0, d_p = DEFAULT_D.d(t - h), DEFAULT_D.d(t), DEFAULT_D.d(t + h)
        assert abs(DEFAULT_D.d_dot(t) - (d_p - d_m) / (2 * h)) <= 1e-6
        h2 = 1e-3
        fd2 = (DEFAULT_D.d(t + h2) - 2 * d_0 + DEFAULT_D.d(t - h2)) / h2 ** 2
        assert abs(DEFAULT_D.d_ddot(t) - fd2) <= 1e-6
    params = BenchmarkSignalParams()
    assert abs(d1(0.0, params) + 4.0 / 3.0) <= 1e-12
    assert abs(phi2(0.0, params) + 5.0 / 3.0) <= 1e-12


@criterion(12, "PE margins: (sin, cos) gives 0.5 +/- 0.05; benchmark regressor below 1e-3 for windows from t >= 500")
def test_c12_pe():
    dt = 0.01
    t = np.arange(0.0, 30.0, dt)
    assert pe_margin(np.column_stack([np.sin(t), np.cos(t)]), dt, 2 * math.pi) == pytest.approx(0.5, abs=0.05)
    params = BenchmarkSignalParams()
    t = np.arange(500.0, 10000.0, dt)
    regressor = np.column_stack([np.ones_like(t), [phi2(ti, params) for ti in t]])
    assert pe_margin(regressor, dt, 2 * math.pi) < 1e-3


@criterion(13, "determinism: two fig1 invocations write byte-identical CSV")
def test_c13_determinism(tmp_path):
    paths = []
    for run in ("first", "second"):
        out = tmp_path / run
        assert main(["fig1", "--output-dir", str(out)]) == 0
        paths.append(out / "fig1.csv")
    assert paths[0].read_bytes() == paths[1].read_bytes()


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
