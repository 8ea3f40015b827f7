"""Coupled plant + estimator simulation on a shared clock.

The flat state holds the plant ``(y, x)``, every requested estimator, a
directly integrated copy of each estimator's error dynamics (the oracle that
reconstructed errors are checked against) and running integrals of
``det(M)^2`` and ``d'(t)^2``. When all model maps are numba-compiled the whole
march runs compiled; otherwise the same right-hand side runs as plain Python.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit
from numba.core.registry import CPUDispatcher

from ._small import dot
from .gains import EstimatorGains
from .mat_estimator import (
    M_dot_kernel,
    beta_mat_kernel,
    error_dot_mat_kernel,
    zeta_dot_mat_kernel,
)
from .model import SystemModel
from .ode import FlatLayout, IntegrationError, StepConfig, compiled_march, integrate
from .vec_estimator import (
    beta_vec_kernel,
    error_dot_vec_kernel,
    mu_dot_kernel,
    zeta_dot_vec_kernel,
)


@dataclass(frozen=True)
class EstimatorSpec:
    """One estimator to run: ``kind`` is ``"vec"`` or ``"mat"``.

    ``init`` optionally overrides the zero initial condition with
    ``{"zeta": ..., "mu": ...}`` or ``{"zeta": ..., "M": ...}``.
    """

    name: str
    kind: str
    gains: EstimatorGains
    init: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("vec", "mat"):
            raise ValueError(f"estimator kind must be 'vec' or 'mat', got {self.kind!r}")


@njit(cache=True)
def det_small(M):
    """Determinant by cofactor expansion for q <= 3, LU otherwise."""
    q = M.shape[0]
    if q == 1:
        return M[0, 0]
    if q == 2:
        return M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if q == 3:
        return (M[0, 0] * (M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
                - M[0, 1] * (M[1, 0] * M[2, 2] - M[1, 2] * M[2, 0])
                + M[0, 2] * (M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0]))
    return np.linalg.det(M)


def build_layout(q: int, kinds: tuple[str, ...]) -> FlatLayout:
    layout = FlatLayout()
    layout.add("y", 1)
    layout.add("x", 1)
    for i, kind in enumerate(kinds):
        if kind == "vec":
            layout.add(f"e{i}.zeta", q + 1)
            layout.add(f"e{i}.mu", q)
            layout.add(f"e{i}.z_direct", q + 1)
        else:
            layout.add(f"e{i}.zeta", 2 * q)
            layout.add(f"e{i}.M", (q, q))
            layout.add(f"e{i}.z_direct", 2 * q)
            layout.add(f"e{i}.int_det2", 1)
    layout.add("int_ddot2", 1)
    return layout


def _make_rhs(f, g0, g1, phi, k, dk, d_dot, q, kinds, jit):
    # offsets are frozen as closure constants so the compiled loop has no lookups
    n = len(kinds)
    is_mat = np.array([kind == "mat" for kind in kinds])
    offsets = np.zeros(n, dtype=np.int64)
    pos = 2
    for i, kind in enumerate(kinds):
        offsets[i] = pos
        pos += (3 * q + 2) if kind == "vec" else (4 * q + q * q + 1)
    size = pos + 1
    qq = q * q

    def rhs(s, t, params):
        Gammas, Bs, theta, sgn = params
        y = s[0]
        x = s[1]
        fv = f(y, t)
        absf = abs(fv)
        g0v = g0(y, t)
        g1v = g1(y, t)
        ph = phi(y, t)
        kv = k(y)
        dkv = dk(y)
        out = np.empty(size)
        out[0] = fv * x + g0v
        out[1] = g1v + dot(ph, theta)
        for i in range(n):
            o = offsets[i]
            G = Gammas[i]
            B = Bs[i]
            if is_mat[i]:
                zeta = s[o:o + 2 * q]
                M = s[o + 2 * q:o + 2 * q + qq].reshape((q, q))
                z = s[o + 2 * q + qq:o + 4 * q + qq]
                Mdot = M_dot_kernel(M, absf, dkv, B, ph)
                out[o:o + 2 * q] = zeta_dot_mat_kernel(zeta, M, Mdot, kv, dkv, absf, sgn, G, B, g0v, g1v)
                out[o + 2 * q:o + 2 * q + qq] = Mdot.reshape(qq)
                out[o + 2 * q + qq:o + 4 * q + qq] = error_dot_mat_kernel(z, M, absf, dkv, G, B)
                dm = det_small(M)
                out[o + 4 * q + qq] = dm * dm
            else:
                zeta = s[o:o + q + 1]
                mu = s[o + q + 1:o + 2 * q + 1]
                z = s[o + 2 * q + 1:o + 3 * q + 2]
                mudot = mu_dot_kernel(mu, absf, dkv, B, ph)
                out[o:o + q + 1] = zeta_dot_vec_kernel(zeta, mu, mudot, kv, dkv, absf, sgn, G, B, g0v, g1v)
                out[o + q + 1:o + 2 * q + 1] = mudot
                out[o + 2 * q + 1:o + 3 * q + 2] = error_dot_vec_kernel(z, mu, absf, dkv, G, B)
        dd = d_dot(t)
        out[size - 1] = dd * dd
        return out

    return njit(rhs) if jit else rhs


@njit(cache=True)
def _no_signal(t):
    return 0.0


def _all_jitted(*fns):
    return all(isinstance(fn, CPUDispatcher) for fn in fns)


@lru_cache(maxsize=64)
def _compiled(f, g0, g1, phi, k, dk, d_dot, q, kinds):
    rhs = _make_rhs(f, g0, g1, phi, k, dk, d_dot, q, kinds, jit=True)
    return rhs, compiled_march(rhs)


@dataclass
class SimulationResult:
    model: SystemModel
    estimators: tuple[EstimatorSpec, ...]
    cfg: StepConfig
    layout: FlatLayout
    t: np.ndarray
    states: np.ndarray
    wall_time: float
    compiled: bool

    def block(self, name: str) -> np.ndarray:
        return self.layout.get(self.states, name)

    def estimator_block(self, est_name: str, block: str) -> np.ndarray:
        i = [e.name for e in self.estimators].index(est_name)
        return self.block(f"e{i}.{block}")


def _initial_state(model, estimators, layout, y0, x0):
    q = model.q
    theta = model.theta_true
    sgn = model.sign_f
    values = {"y": y0, "x": x0, "int_ddot2": 0.0}
    for i, est in enumerate(estimators):
        g = est.gains
        kv = float(g.k.k(y0))
        if est.kind == "vec":
            zeta = np.asarray(est.init.get("zeta", np.zeros(q + 1)), dtype=float)
            mu = np.asarray(est.init.get("mu", np.zeros(q)), dtype=float)
            eta = np.concatenate([[x0 - mu @ theta], theta])
            values[f"e{i}.zeta"] = zeta
            values[f"e{i}.mu"] = mu
            values[f"e{i}.z_direct"] = eta - zeta - beta_vec_kernel(kv, mu, g.Gamma, g.B, sgn)
        else:
            zeta = np.asarray(est.init.get("zeta", np.zeros(2 * q)), dtype=float)
            M = np.asarray(est.init.get("M", np.zeros((q, q))), dtype=float)
            vartheta = np.concatenate([x0 * np.ones(q) - M.T @ theta, theta])
            values[f"e{i}.zeta"] = zeta
            values[f"e{i}.M"] = M
            values[f"e{i}.z_direct"] = vartheta - zeta - beta_mat_kernel(kv, M, g.Gamma, g.B, sgn)
            values[f"e{i}.int_det2"] = 0.0
    return layout.pack(values)


def simulate(model: SystemModel, estimators, cfg: StepConfig, y0: float = 0.0, x0: float = 0.0,
             force_python: bool = False) -> SimulationResult:
    estimators = tuple(estimators)
    if not estimators:
        raise ValueError("at least one estimator is required")
    k_maps = {id(e.gains.k.k) for e in estimators}
    if len(k_maps) != 1:
        raise ValueError("all estimators in one run must share the output map k(y)")
    for e in estimators:
        if e.gains.q != model.q:
            raise ValueError(f"estimator {e.name!r} has q={e.gains.q}, model has q={model.q}")
    q = model.q
    kinds = tuple(e.kind for e in estimators)
    layout = build_layout(q, kinds)
    s0 = _initial_state(model, estimators, layout, float(y0), float(x0))
    kmap = estimators[0].gains.k
    d_dot = model.d_signal.d_dot if model.d_signal is not None else _no_signal
    Gammas = np.stack([e.gains.Gamma for e in estimators])
    Bs = np.stack([e.gains.B for e in estimators])
    params = (Gammas, Bs, model.theta_true.copy(), float(model.sign_f))
    maps = (model.f, model.g0, model.g1, model.phi, kmap.k, kmap.dk, d_dot)

    start = time.perf_counter()
    use_jit = not force_python and _all_jitted(*maps)
    if use_jit:
        _, march = _compiled(*maps, q, kinds)
        ts, states, bad_step, bad_stage, bad_index = march(s0, cfg.dt, cfg.n_steps, cfg.record_every, params)
        if bad_step >= 0:
            name = layout.field_at(int(bad_index))
            t_bad = bad_step * cfg.dt
            raise IntegrationError(f"non-finite derivative in stage {bad_stage} at t={t_bad:g} (field {name})",
                                   t=t_bad, stage=int(bad_stage), field_name=name)
    else:
        rhs = _make_rhs(*maps, q, kinds, jit=False)
        traj = integrate(lambda s, t: rhs(s, t, params), s0, cfg, layout=layout)
        ts, states = traj.t, traj.states
    wall = time.perf_counter() - start
    _check_sign(model, states[:, 0], ts)
    return SimulationResult(model, estimators, cfg, layout, ts, states, wall, use_jit)


def _check_sign(model, y, t):
    # f is known to be jitted or a plain callable; sample the recorded points
    for yi, ti in zip(y[:: max(1, len(y) // 1000)], t[:: max(1, len(t) // 1000)]):
        model.check_f(float(yi), float(ti))
