"""Scenario orchestration: build, validate, simulate, derive, persist."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..diagnostics import (
    ExcitationReport,
    OvershootMetric,
    det_l2_report,
    lambda_m_sq,
    overshoot,
    pe_margin,
    validate_gains,
)
from ..gains import EstimatorGains, linear_output_map
from ..model import SystemModel, make_example_system
from ..ode import IntegrationError, StepConfig
from ..signals import BenchmarkSignalParams
from ..simulation import EstimatorSpec, SimulationResult, simulate
from .config import ConfigError, ScenarioConfig
from .figures import ESTIMATOR_STYLES, GAMMA_STYLES, Panel, emit_panels
from .io import emit_csv, read_csv

FIG2_GAMMAS = (1.0, 100.0, 10000.0)
FIG2_T_FINAL = 40.0
FIG2_RECORD_DT = 0.01


@dataclass
class RunArtifacts:
    config: ScenarioConfig
    columns: dict
    excitation: ExcitationReport | None
    overshoot: dict
    metadata: dict
    result: SimulationResult
    files: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]

    def theta_err(self, est: str) -> np.ndarray:
        q = self.result.model.q
        return np.column_stack([self.columns[f"{est}.theta_err_{j + 1}"] for j in range(q)])


# -- construction ------------------------------------------------------------

def build_system(cfg: ScenarioConfig) -> SystemModel:
    if cfg.system == "example":
        return make_example_system(BenchmarkSignalParams(cfg.a, cfg.b1, cfg.b2))
    from .system_file import load_system_file

    return load_system_file(cfg.system)


def build_estimators(cfg: ScenarioConfig, q: int) -> list[EstimatorSpec]:
    kmap = linear_output_map(float(cfg.a))
    Gamma = cfg.gamma * np.eye(q)
    ic = cfg.initial_conditions
    specs = []
    for name in cfg.estimators:
        if name == "mat_B":
            diag = cfg.mat_B_diag if cfg.mat_B_diag is not None else [cfg.b1, cfg.b2]
            if len(diag) != q:
                raise ConfigError("mat_B_diag", f"needs {q} entries for this system")
            gains = EstimatorGains(Gamma, np.diag(np.asarray(diag, dtype=float)), kmap, True)
            init = {}
            if ic.get("M0") is not None:
                init["M"] = np.eye(q) if ic["M0"] == "identity" else np.asarray(ic["M0"], dtype=float)
                if init["M"].shape != (q, q):
                    raise ConfigError("initial_conditions", f"M0 must be {q}x{q}")
            spec = EstimatorSpec(name, "mat", gains, init)
        else:
            b = cfg.b1 if name == "vec_b1" else cfg.b2
            gains = EstimatorGains(Gamma, b * np.eye(q), kmap, False)
            init = {}
            if ic.get("mu0") is not None:
                init["mu"] = np.asarray(ic["mu0"], dtype=float)
                if init["mu"].shape != (q,):
                    raise ConfigError("initial_conditions", f"mu0 must have {q} entries")
            spec = EstimatorSpec(name, "vec", gains, init)
        check = validate_gains(spec.gains, spec.kind == "mat")
        if not check:
            field_name = "mat_B_diag" if (spec.kind == "mat" and cfg.mat_B_diag is not None) else "b1/b2/gamma"
            raise ConfigError(field_name, f"{name}: " + "; ".join(check.problems))
        specs.append(spec)
    return specs


def stiffness_estimate(model: SystemModel, estimators, cfg: ScenarioConfig) -> float:
    """A-priori bound on ``dt * (largest error-dynamics rate)`` for explicit RK4.

    Filter states obey an input-to-state stable law, so
    ``|M| <= |M(0)| + sqrt(q) sup|phi| / (|f| k' (1 + lambda_min B))``; the
    fastest error mode is then ``|f| k' lambda_max(Gamma) lambda_max(B) |M|^2``.
    ``phi`` and ``f`` are sampled at ``y = 0`` along the horizon.
    """
    ts = np.linspace(0.0, cfg.t_final, 2001)
    phi_sup = max(float(np.linalg.norm(model.phi(0.0, float(t)))) for t in ts)
    f_abs = np.array([abs(model.f(0.0, float(t))) for t in ts])
    worst = 0.0
    for est in estimators:
        g = est.gains
        eig_B = np.linalg.eigvalsh(g.B)
        gamma_max = float(np.linalg.eigvalsh(g.Gamma)[-1])
        rate_filter = float(f_abs.min()) * float(g.k.dk(0.0)) * (1 + eig_B[0])
        if est.kind == "mat":
            m0 = float(np.linalg.norm(est.init.get("M", 0.0)))
            bound = m0 + math.sqrt(model.q) * phi_sup / rate_filter
        else:
            m0 = float(np.linalg.norm(est.init.get("mu", 0.0)))
            bound = m0 + phi_sup / rate_filter
        rate = float(f_abs.max()) * g.k.dk_bound * max(1 + eig_B[-1], gamma_max * eig_B[-1] * bound ** 2)
        worst = max(worst, cfg.dt * rate)
    return worst


# -- derived records -----------------------------------------------------------

def record_columns(res: SimulationResult) -> dict:
    """All per-record signals, in the documented CSV column order."""
    model = res.model
    q = model.q
    theta = model.theta_true
    sgn = model.sign_f
    t = res.t
    y = res.block("y")[:, 0]
    x = res.block("x")[:, 0]
    cols = {"t": t, "y": y, "x": x}
    phi = np.array([model.phi(float(yi), float(ti)) for yi, ti in zip(y, t)]).reshape(len(t), q)
    for j in range(q):
        cols[f"phi_{j + 1}"] = phi[:, j]
    if model.d_signal is not None:
        cols["int_ddot2"] = res.block("int_ddot2")[:, 0]
    kmap = res.estimators[0].gains.k
    kv = np.array([kmap.k(float(yi)) for yi in y])
    dkv = np.array([kmap.dk(float(yi)) for yi in y])
    f_abs = np.array([abs(model.f(float(yi), float(ti))) for yi, ti in zip(y, t)])
    ones = np.ones(q)

    for i, est in enumerate(res.estimators):
        g = est.gains
        G, B = g.Gamma, g.B
        n = est.name
        zeta = res.block(f"e{i}.zeta")
        z_direct = res.block(f"e{i}.z_direct")
        if est.kind == "vec":
            mu = res.block(f"e{i}.mu")
            beta = sgn * kv[:, None] * np.column_stack([np.ones(len(t)), mu @ (G @ B).T])
            w = zeta + beta
            theta_hat = w[:, 1:]
            x_hat = w[:, 0] + np.einsum("ij,ij->i", mu, theta_hat)
            truth = np.column_stack([x - mu @ theta, np.broadcast_to(theta, (len(t), q))])
            z = truth - w
            z1, z2 = z[:, :1], z[:, 1:]
            stiff = np.linalg.norm(np.einsum("ij,ik->ijk", mu @ B.T, mu), ord=2, axis=(1, 2))
        else:
            M = res.block(f"e{i}.M")
            beta2 = sgn * kv[:, None] * ((G @ M @ B) @ ones)
            w = zeta + np.column_stack([sgn * kv[:, None] * ones, beta2])
            theta_hat = w[:, q:]
            chi_hat = w[:, :q] + np.einsum("nji,nj->ni", M, theta_hat)
            x_hat = chi_hat.mean(axis=1)
            pi = x[:, None] - np.einsum("nji,j->ni", M, theta)
            truth = np.column_stack([pi, np.broadcast_to(theta, (len(t), q))])
            z = truth - w
            z1, z2 = z[:, :q], z[:, q:]
            stiff = np.linalg.norm(M @ B @ np.swapaxes(M, 1, 2), ord=2, axis=(1, 2))
        Ginv = np.linalg.inv(G)
        V = 0.5 * (np.einsum("ij,ij->i", z1, z1) + np.einsum("ij,jk,ik->i", z2, Ginv, z2))
        theta_err = theta - theta_hat
        cols[f"{n}.x_hat"] = x_hat
        cols[f"{n}.x_err"] = x - x_hat
        for j in range(q):
            cols[f"{n}.theta_hat_{j + 1}"] = theta_hat[:, j]
        for j in range(q):
            cols[f"{n}.theta_err_{j + 1}"] = theta_err[:, j]
        cols[f"{n}.theta_err_norm"] = np.linalg.norm(theta_err, axis=1)
        cols[f"{n}.V"] = V
        cols[f"{n}.z_gap"] = np.abs(z - z_direct).max(axis=1)
        cols[f"{n}.stiffness"] = res.cfg.dt * f_abs * dkv * np.linalg.eigvalsh(G)[-1] * stiff
        if est.kind == "vec":
            for j in range(q):
                cols[f"{n}.mu_{j + 1}"] = mu[:, j]
        else:
            for r in range(q):
                for c in range(q):
                    cols[f"{n}.M_{r + 1}_{c + 1}"] = M[:, r, c]
            det = np.linalg.det(M)
            cols[f"{n}.det_M"] = det
            cols[f"{n}.abs_det_M"] = np.abs(det)
            cols[f"{n}.lambda_m_sq"] = lambda_m_sq(M)
            cols[f"{n}.int_det2"] = res.block(f"e{i}.int_det2")[:, 0]
    return cols


def _m_block(columns: dict, prefix: str | None = None):
    pattern = re.compile(r"^(?:(?P<prefix>[\w]+)\.)?M_(?P<r>\d+)_(?P<c>\d+)$")
    found = {}
    for name in columns:
        m = pattern.match(name)
        if m:
            found.setdefault(m.group("prefix"), []).append((int(m.group("r")), int(m.group("c")), name))
    if not found:
        return None, None
    if prefix is None:
        prefix = next(iter(found))
    if prefix not in found:
        raise KeyError(f"no M block with prefix {prefix!r}")
    entries = found[prefix]
    q = max(r for r, _, _ in entries)
    if len(entries) != q * q or max(c for _, c, _ in entries) != q:
        raise ValueError(f"M block {prefix!r} is not a complete square")
    n = len(next(iter(columns.values())))
    M = np.empty((n, q, q))
    for r, c, name in entries:
        M[:, r - 1, c - 1] = columns[name]
    return prefix, M


def _regressor_block(columns: dict):
    names = sorted((n for n in columns if re.fullmatch(r"phi_\d+", n)), key=lambda s: int(s[4:]))
    if not names:
        return None
    return np.column_stack([columns[n] for n in names])


def excitation_from_columns(columns: dict, fit_window=None, pe_window: float | None = None,
                            prefix: str | None = None) -> ExcitationReport:
    t = np.asarray(columns["t"], dtype=float)
    _, M = _m_block(columns, prefix)
    phi = _regressor_block(columns)
    if M is None and phi is None:
        raise ValueError("trace has neither an M block (M_i_j) nor a regressor block (phi_i)")
    if M is not None:
        report = det_l2_report(M, t, fit_window)
    else:
        empty = np.empty(0)
        report = ExcitationReport(t, empty, empty, float("nan"), float("nan"), float("nan"), "n/a",
                                  empty, empty, (float("nan"), float("nan")))
    if phi is not None and pe_window is not None:
        steps = np.diff(t)
        if steps.size and np.ptp(steps) > 1e-9 * max(1.0, float(t[-1])):
            raise ValueError("regressor trace must be sampled on a uniform time grid")
        report.pe_margin = pe_margin(phi, float(steps[0]), pe_window)
        report.pe_window = pe_window
    return report


def diagnose_trace(csv_path, fit_window=None, pe_window: float | None = None,
                   prefix: str | None = None) -> ExcitationReport:
    """Excitation diagnostics for an externally supplied CSV trace.

    Expected columns: ``t`` plus an ``M`` block named ``M_<i>_<j>`` (optionally
    prefixed ``<name>.``) and/or a regressor block ``phi_<i>``.
    """
    columns = read_csv(csv_path)
    if "t" not in columns:
        raise ValueError("trace lacks a 't' column")
    return excitation_from_columns(columns, fit_window, pe_window, prefix)


# -- running -------------------------------------------------------------------

def _initial_plant(cfg):
    ic = cfg.initial_conditions
    return float(ic.get("y", 0.0)), float(ic.get("x", 0.0))


def _fit_window(cfg, t_final):
    if cfg.fit_window is not None:
        return tuple(cfg.fit_window)
    return (0.5 * t_final, t_final)


def run_scenario(cfg: ScenarioConfig, write: bool = True, figures: bool | None = None) -> RunArtifacts:
    cfg.check()
    model = build_system(cfg)
    estimators = build_estimators(cfg, model.q)
    stiff = stiffness_estimate(model, estimators, cfg)
    if stiff > cfg.stability_limit:
        raise ConfigError("dt", f"dt*rate estimate {stiff:.3g} exceeds the RK4 stability limit "
                                f"{cfg.stability_limit:g}; reduce dt")
    step = StepConfig(cfg.dt, cfg.t_final, cfg.record_every)
    y0, x0 = _initial_plant(cfg)
    res = simulate(model, estimators, step, y0, x0)
    cols = record_columns(res)
    for name, values in cols.items():
        if not np.all(np.isfinite(values)):
            raise IntegrationError(f"column {name} is not finite", t=float("nan"), stage=-1, field_name=name)

    excitation = None
    if any(e.kind == "mat" for e in estimators) and len(res.t) >= 3:
        mat_name = next(e.name for e in estimators if e.kind == "mat")
        excitation = excitation_from_columns(
            cols, _fit_window(cfg, res.t[-1]),
            cfg.pe_window if res.t[-1] >= cfg.pe_window else None, prefix=mat_name)

    shoot = {}
    for e in estimators:
        trace = cols[f"{e.name}.theta_err_norm"]
        shoot[e.name] = overshoot(trace[1:] if trace.size > 1 else trace, cfg.settle_threshold,
                                  res.t[1:] if trace.size > 1 else res.t)

    metadata = {
        "config": cfg.to_dict(),
        "system": model.name,
        "wall_time_s": res.wall_time,
        "step_count": step.n_steps,
        "record_count": len(res.t),
        "compiled": res.compiled,
        "stiffness_estimate": stiff,
        "effective_stiffness": {e.name: float(cols[f"{e.name}.stiffness"].max()) for e in estimators},
        "final": {
            e.name: {
                "x_err": float(cols[f"{e.name}.x_err"][-1]),
                "theta_err_norm": float(cols[f"{e.name}.theta_err_norm"][-1]),
                "theta_err_norm_0plus": float(cols[f"{e.name}.theta_err_norm"][min(1, len(res.t) - 1)]),
                "max_z_gap": float(cols[f"{e.name}.z_gap"].max()),
            }
            for e in estimators
        },
    }
    artifacts = RunArtifacts(cfg, cols, excitation, shoot, metadata, res)
    if write:
        persist(artifacts, figures=cfg.emit_svg if figures is None else figures)
    return artifacts


def _report_dict(art: RunArtifacts) -> dict:
    return {
        "metadata": art.metadata,
        "excitation": art.excitation.summary() if art.excitation is not None else None,
        "overshoot": {k: {"peak": v.peak, "settle_time": v.settle_time, "threshold": v.threshold}
                      for k, v in art.overshoot.items()},
    }


def persist(art: RunArtifacts, figures: bool = True) -> dict:
    out = Path(art.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = art.config.name
    art.files["csv"] = emit_csv(art.columns, out / f"{name}.csv")
    report = out / f"{name}_report.json"
    report.write_text(json.dumps(_report_dict(art), indent=2, default=float) + "\n", encoding="utf-8")
    art.files["report"] = report
    if figures:
        art.files.update(render_run_figures(art))
    return art.files


def render_run_figures(art: RunArtifacts) -> dict:
    """Error panels (theta components, x) and, with a matrix estimator, |det M|."""
    cols = art.columns
    t = cols["t"]
    q = art.result.model.q
    names = [e.name for e in art.result.estimators]
    styles = {n: ESTIMATOR_STYLES.get(n, "-") for n in names}
    panels = [Panel({n: (t, cols[f"{n}.theta_err_{j + 1}"]) for n in names},
                    f"theta_err_{j + 1} [-]", styles) for j in range(q)]
    panels.append(Panel({n: (t, cols[f"{n}.x_err"]) for n in names}, "x_err [-]", styles))
    out = Path(art.config.output_dir)
    files = {"errors_svg": emit_panels(panels, out / f"{art.config.name}_errors.svg")}
    mats = [e.name for e in art.result.estimators if e.kind == "mat"]
    if mats:
        det_panel = Panel({n: (t, cols[f"{n}.abs_det_M"]) for n in mats}, "|det M| [-]",
                          styles, log_y=art.config.log_det_axis)
        files["det_svg"] = emit_panels([det_panel], out / f"{art.config.name}_detM.svg")
    return files


def figure1_scenario(cfg: ScenarioConfig | None = None, **overrides) -> RunArtifacts:
    """Three-estimator comparison with the benchmark gains."""
    cfg = cfg or ScenarioConfig(name="fig1")
    cfg = replace(cfg, estimators=["vec_b1", "vec_b2", "mat_B"], **overrides)
    return run_scenario(cfg)


def dt_for_gamma(gamma: float) -> float:
    if gamma <= 1:
        return 1e-3
    if gamma <= 100:
        return 1e-4
    return 1e-5


def figure2_scenario(cfg: ScenarioConfig | None = None, gammas=FIG2_GAMMAS, write: bool = True,
                     **overrides) -> dict:
    """Matrix estimator under ``Gamma = gamma I`` for each gamma, on a common record grid."""
    base = cfg or ScenarioConfig(name="fig2", t_final=FIG2_T_FINAL)
    base = replace(base, estimators=["mat_B"], **overrides)
    runs = {}
    for gamma in gammas:
        dt = dt_for_gamma(gamma)
        member = replace(base, name=f"{base.name}_gamma{gamma:g}", gamma=float(gamma), dt=dt,
                         record_every=max(1, int(round(FIG2_RECORD_DT / dt))))
        runs[gamma] = run_scenario(member, write=write, figures=False)
    if write:
        out = Path(base.output_dir)
        table = {
            "gamma": np.array(list(gammas), dtype=float),
            "dt": np.array([dt_for_gamma(g) for g in gammas]),
            "peak": np.array([runs[g].overshoot["mat_B"].peak for g in gammas]),
            "settle_time": np.array([np.nan if runs[g].overshoot["mat_B"].settle_time is None
                                     else runs[g].overshoot["mat_B"].settle_time for g in gammas]),
            "x_err_peak": np.array([np.abs(runs[g].columns["mat_B.x_err"]).max() for g in gammas]),
        }
        emit_csv(table, out / f"{base.name}_overshoot.csv")
        if base.emit_svg:
            q = next(iter(runs.values())).result.model.q
            styles = {f"gamma={g:g}": GAMMA_STYLES[i % len(GAMMA_STYLES)] for i, g in enumerate(gammas)}

            def panel(col, label):
                return Panel({f"gamma={g:g}": (runs[g].columns["t"], runs[g].columns[col]) for g in gammas},
                             label, styles)

            panels = [panel(f"mat_B.theta_err_{j + 1}", f"theta_err_{j + 1} [-]") for j in range(q)]
            panels.append(panel("mat_B.x_err", "x_err [-]"))
            emit_panels(panels, out / f"{base.name}.svg")
    return runs
