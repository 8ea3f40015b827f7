"""Excitation, convergence and gain diagnostics over sampled traces.

Persistency of excitation and non-square-integrability are asymptotic
properties, so everything here reports margins and growth fits on finite
traces instead of booleans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gains import EstimatorGains


@dataclass
class ExcitationReport:
    t: np.ndarray
    det_trace: np.ndarray
    det_l2_integral: np.ndarray
    divergence_slope: float
    fit_intercept: float
    fit_residual: float
    growth: str
    lambda_m_sq_trace: np.ndarray
    sigma_trace: np.ndarray
    fit_window: tuple[float, float]
    pe_margin: float | None = None
    pe_window: float | None = None

    def summary(self) -> dict:
        """Scalar view for JSON serialization (NaN becomes ``None``)."""
        def num(v):
            return None if v is None or math.isnan(v) else float(v)

        return {
            "pe_margin": num(self.pe_margin),
            "pe_window": num(self.pe_window),
            "det_l2_integral_final": float(self.det_l2_integral[-1]) if self.det_l2_integral.size else None,
            "divergence_slope": num(self.divergence_slope),
            "fit_intercept": num(self.fit_intercept),
            "fit_residual": num(self.fit_residual),
            "growth": self.growth,
            "fit_window": [num(v) for v in self.fit_window],
            "lambda_m_sq_final": float(self.lambda_m_sq_trace[-1]) if self.lambda_m_sq_trace.size else None,
            "sigma_min": float(self.sigma_trace.min()) if self.sigma_trace.size else None,
        }


@dataclass(frozen=True)
class OvershootMetric:
    peak: float
    settle_time: float | None
    threshold: float


@dataclass
class GainValidation:
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self):
        return self.ok


# -- persistency of excitation ---------------------------------------------

def windowed_gram_min_eig(trace, dt: float, window: float) -> np.ndarray:
    """``lambda_min(sum phi phi^T dt) / window`` for every window start on the grid."""
    trace = np.asarray(trace, dtype=float)
    if trace.ndim == 1:
        trace = trace[:, None]
    n, q = trace.shape
    w = int(round(window / dt))
    if w < 10:
        raise ValueError(f"window covers {w} samples; at least 10 are required")
    if n < w:
        raise ValueError(f"trace has {n} samples, shorter than the {w}-sample window")
    outer = (trace[:, :, None] * trace[:, None, :]).reshape(n, q * q)
    csum = np.vstack([np.zeros(q * q), np.cumsum(outer, axis=0)])
    gram = ((csum[w:] - csum[:-w]) * dt).reshape(-1, q, q)
    return np.linalg.eigvalsh(gram)[:, 0] / (w * dt)


def pe_margin(trace, dt: float, window: float) -> float:
    """Smallest normalized windowed-Gram eigenvalue over all window starts.

    A margin bounded away from zero as the trace grows indicates PE at this
    resolution; a regressor that dies out drives it to zero.
    """
    return float(windowed_gram_min_eig(trace, dt, window).min())


# -- non-square-integrability of det M -------------------------------------

def lambda_m_sq(M_trace) -> np.ndarray:
    """Minimum eigenvalue of ``M M^T`` per sample (the bound in ``M M^T >= lambda I``)."""
    M = np.asarray(M_trace, dtype=float)
    MMt = M @ np.swapaxes(M, -1, -2)
    return np.clip(np.linalg.eigvalsh(MMt)[..., 0], 0.0, None)


def running_integral(t, values) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    if values.size > 1:
        out[1:] = np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(t))
    return out


def log_growth_fit(t, integral, window: tuple[float, float] | None = None):
    """Least-squares fit ``I(T) ~ c ln(1 + T) + c0`` on ``window``.

    Returns ``(c, c0, relative_residual, growth)``. The relative residual is
    the RMS residual over the RMS deviation of ``I`` from its mean on the
    window. ``growth`` is ``"converged"``, ``"logarithmic"`` or
    ``"super-logarithmic"`` (a straight line in ``T`` fits clearly better).
    """
    t = np.asarray(t, dtype=float)
    integral = np.asarray(integral, dtype=float)
    if window is None:
        window = (t[0] + 0.5 * (t[-1] - t[0]), t[-1])
    sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    if sel.sum() < 3:
        raise ValueError(f"fit window {window} holds fewer than 3 samples")
    T, I = t[sel], integral[sel]
    spread = float(np.sqrt(np.mean((I - I.mean()) ** 2)))
    scale = max(abs(I[-1]), abs(I[0]), 1e-300)
    if spread <= 1e-9 * scale or spread == 0.0:
        return 0.0, float(I.mean()), 0.0, "converged"

    def fit(basis):
        A = np.column_stack([basis, np.ones_like(T)])
        coef, *_ = np.linalg.lstsq(A, I, rcond=None)
        resid = I - A @ coef
        return coef, float(np.sqrt(np.mean(resid ** 2))) / spread

    (c, c0), rel = fit(np.log1p(T))
    _, rel_lin = fit(T)
    rise = I[-1] - I[0]
    if rise <= 1e-6 * scale:
        growth = "converged"
    elif rel_lin < 0.5 * rel:
        growth = "super-logarithmic"
    else:
        growth = "logarithmic"
    return float(c), float(c0), rel, growth


def det_l2_report(M_trace, t, fit_window: tuple[float, float] | None = None,
                  regressor=None, pe_window: float | None = None) -> ExcitationReport:
    M = np.asarray(M_trace, dtype=float)
    if M.ndim != 3 or M.shape[1] != M.shape[2]:
        raise ValueError(f"expected a stack of square matrices, got shape {M.shape}")
    t = np.asarray(t, dtype=float)
    det = np.linalg.det(M)
    integral = running_integral(t, det ** 2)
    c, c0, rel, growth = log_growth_fit(t, integral, fit_window)
    lam = lambda_m_sq(M)
    report = ExcitationReport(
        t=t, det_trace=det, det_l2_integral=integral,
        divergence_slope=c, fit_intercept=c0, fit_residual=rel, growth=growth,
        lambda_m_sq_trace=lam, sigma_trace=np.minimum(1.0, lam),
        fit_window=fit_window or (float(t[0] + 0.5 * (t[-1] - t[0])), float(t[-1])),
    )
    if regressor is not None and pe_window is not None:
        report.pe_margin = pe_margin(regressor, float(t[1] - t[0]), pe_window)
        report.pe_window = pe_window
    return report


# -- gains, overshoot, Lyapunov --------------------------------------------

def _spd_problems(name, A):
    problems = []
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        problems.append(f"{name} is not symmetric")
        return problems, None
    eig = np.linalg.eigvalsh(A)
    if eig[0] <= 0:
        problems.append(f"{name} is not positive definite (min eigenvalue {eig[0]:g})")
    return problems, eig


def validate_gains(gains: EstimatorGains, for_matrix_estimator: bool | None = None,
                   y_samples=None) -> GainValidation:
    """Check Gamma, B symmetric positive definite, B eigenvalues distinct, k' in (0, bound]."""
    if for_matrix_estimator is None:
        for_matrix_estimator = gains.require_distinct_B_eigs
    result = GainValidation()
    p, _ = _spd_problems("Gamma", gains.Gamma)
    result.problems += p
    p, eig = _spd_problems("B", gains.B)
    result.problems += p
    if for_matrix_estimator and eig is not None and eig.size > 1:
        gaps = np.diff(np.sort(eig))
        rel = gaps / np.maximum(np.abs(eig[1:]), 1e-300)
        if np.any(rel <= 1e-9):
            result.problems.append(f"B has repeated eigenvalues {np.round(eig, 12).tolist()}")
    ys = np.linspace(-100.0, 100.0, 201) if y_samples is None else np.asarray(y_samples, dtype=float)
    dks = np.array([gains.k.dk(float(y)) for y in ys])
    if not np.all(dks > 0):
        result.problems.append("k is not strictly increasing (k' <= 0 at a sampled y)")
    if np.any(dks > gains.k.dk_bound * (1 + 1e-12)):
        result.problems.append(f"k' exceeds its declared bound {gains.k.dk_bound:g}")
    return result


def overshoot(theta_err_trace, settle_threshold: float, t=None) -> OvershootMetric:
    """Peak and settle time of a parameter-error trace.

    Pass the trace from the first sample after the initial condition: the
    initial error is set by the initial guess alone and is the same for every
    gain. ``settle_time`` is the first recorded time after which the norm
    stays below ``settle_threshold`` (``None`` if it never settles).
    """
    e = np.asarray(theta_err_trace, dtype=float)
    if e.ndim == 2:
        e = np.linalg.norm(e, axis=1)
    if e.size == 0:
        raise ValueError("empty trace")
    t = np.arange(e.size, dtype=float) if t is None else np.asarray(t, dtype=float)
    above = np.flatnonzero(e >= settle_threshold)
    if above.size == 0:
        settle = float(t[0])
    elif above[-1] + 1 < e.size:
        settle = float(t[above[-1] + 1])
    else:
        settle = None
    return OvershootMetric(float(e.max()), settle, settle_threshold)


def lyapunov_monitor(V_trace, per_step_tol: float) -> list[int]:
    """Indices ``k`` where ``V[k] - V[k-1] > per_step_tol``."""
    V = np.asarray(V_trace, dtype=float)
    return (np.flatnonzero(np.diff(V) > per_step_tol) + 1).tolist()
