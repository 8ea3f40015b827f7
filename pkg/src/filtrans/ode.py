"""Fixed-step classical Runge-Kutta integration over flat state vectors.

Two routes share the same update formula: :func:`integrate` marches any
Python callable and evaluates per-step probes, :func:`compiled_march` builds a
numba loop around a jitted right-hand side for long runs. Time is always
``t_k = k * dt`` computed from the integer step index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from numba import njit


class IntegrationError(ArithmeticError):
    def __init__(self, message, t=None, stage=None, field_name=None):
        super().__init__(message)
        self.t = t
        self.stage = stage
        self.field_name = field_name


@dataclass(frozen=True)
class StepConfig:
    dt: float = 1e-3
    t_final: float = 300.0
    record_every: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_final >= self.dt:
            raise ValueError(f"t_final ({self.t_final}) must be at least dt ({self.dt})")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(f"record_every must be a positive integer, got {self.record_every}")

    @property
    def n_steps(self) -> int:
        # tolerate t_final/dt landing a hair below an integer
        return int(math.floor(self.t_final / self.dt + 1e-9))

    @property
    def n_records(self) -> int:
        return self.n_steps // self.record_every + 1


@dataclass
class FlatLayout:
    """Named, non-overlapping blocks of a flat state vector."""

    blocks: dict[str, tuple[int, tuple[int, ...]]] = field(default_factory=dict)
    size: int = 0

    def add(self, name: str, shape) -> slice:
        if name in self.blocks:
            raise ValueError(f"duplicate block {name!r}")
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        self.blocks[name] = (self.size, shape)
        self.size += int(np.prod(shape))
        return self.slice(name)

    def slice(self, name: str) -> slice:
        start, shape = self.blocks[name]
        return slice(start, start + int(np.prod(shape)))

    def offset(self, name: str) -> int:
        return self.blocks[name][0]

    def get(self, s: np.ndarray, name: str) -> np.ndarray:
        """View of block ``name``; works on a single state or a stack of states."""
        _, shape = self.blocks[name]
        block = s[..., self.slice(name)]
        return block.reshape(s.shape[:-1] + shape)

    def pack(self, values: dict) -> np.ndarray:
        missing = set(self.blocks) - set(values)
        if missing:
            raise ValueError(f"missing blocks: {sorted(missing)}")
        s = np.empty(self.size)
        for name, v in values.items():
            _, shape = self.blocks[name]
            s[self.slice(name)] = np.broadcast_to(np.asarray(v, dtype=float), shape).ravel()
        return s

    def unpack(self, s: np.ndarray) -> dict:
        return {name: self.get(s, name) for name in self.blocks}

    def field_at(self, index: int) -> str:
        for name, (start, shape) in self.blocks.items():
            if start <= index < start + int(np.prod(shape)):
                return name
        return f"[{index}]"


def _check_stage(k, stage, t, layout):
    bad = np.flatnonzero(~np.isfinite(k))
    if bad.size:
        name = layout.field_at(int(bad[0])) if layout is not None else f"[{bad[0]}]"
        raise IntegrationError(f"non-finite derivative in stage {stage} at t={t:g} (field {name})",
                               t=t, stage=stage, field_name=name)


def rk4_step(rhs: Callable, s: np.ndarray, t: float, dt: float, layout: FlatLayout | None = None) -> np.ndarray:
    k1 = rhs(s, t)
    _check_stage(k1, 1, t, layout)
    k2 = rhs(s + 0.5 * dt * k1, t + 0.5 * dt)
    _check_stage(k2, 2, t, layout)
    k3 = rhs(s + 0.5 * dt * k2, t + 0.5 * dt)
    _check_stage(k3, 3, t, layout)
    k4 = rhs(s + dt * k3, t + dt)
    _check_stage(k4, 4, t, layout)
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray
    probes: dict[str, list] = field(default_factory=dict)


def integrate(rhs: Callable, s0, cfg: StepConfig, observers: Iterable = (),
              layout: FlatLayout | None = None) -> Trajectory:
    """March ``s' = rhs(s, t)`` from ``t = 0`` to ``cfg.t_final``.

    ``observers`` are callables ``(t, s) -> value`` evaluated at every recorded
    step; their outputs are collected under their ``__name__``.
    """
    s = np.array(s0, dtype=float)
    observers = list(observers)
    n_rec = cfg.n_records
    ts = np.empty(n_rec)
    states = np.empty((n_rec, s.size))
    probes = {getattr(ob, "__name__", f"probe{i}"): [] for i, ob in enumerate(observers)}

    def record(j, k):
        t = k * cfg.dt
        ts[j] = t
        states[j] = s
        for ob, name in zip(observers, probes):
            probes[name].append(ob(t, s))

    record(0, 0)
    j = 1
    for k in range(cfg.n_steps):
        t = k * cfg.dt
        try:
            s = rk4_step(rhs, s, t, cfg.dt, layout)
        except IntegrationError:
            raise
        except ArithmeticError as exc:
            raise IntegrationError(f"step at t={t:g} failed: {exc}", t=t) from exc
        if (k + 1) % cfg.record_every == 0:
            record(j, k + 1)
            j += 1
    return Trajectory(ts, states, probes)


def compiled_march(rhs):
    """Build a jitted fixed-step march around a jitted ``rhs(s, t, params)``.

    The returned function ``march(s0, dt, n_steps, record_every, params)``
    returns ``(t, states, bad_step, bad_stage, bad_index)``; ``bad_step`` is
    ``-1`` when every stage stayed finite.
    """

    @njit
    def first_bad(k):
        for i in range(k.shape[0]):
            if not np.isfinite(k[i]):
                return i
        return -1

    @njit
    def march(s0, dt, n_steps, record_every, params):
        n_rec = n_steps // record_every + 1
        ts = np.empty(n_rec)
        states = np.empty((n_rec, s0.shape[0]))
        s = s0.copy()
        ts[0] = 0.0
        states[0] = s
        j = 1
        half = 0.5 * dt
        for k in range(n_steps):
            t = k * dt
            k1 = rhs(s, t, params)
            i = first_bad(k1)
            if i >= 0:
                return ts[:j], states[:j], k, 1, i
            k2 = rhs(s + half * k1, t + half, params)
            i = first_bad(k2)
            if i >= 0:
                return ts[:j], states[:j], k, 2, i
            k3 = rhs(s + half * k2, t + half, params)
            i = first_bad(k3)
            if i >= 0:
                return ts[:j], states[:j], k, 3, i
            k4 = rhs(s + dt * k3, t + dt, params)
            i = first_bad(k4)
            if i >= 0:
                return ts[:j], states[:j], k, 4, i
            s = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if (k + 1) % record_every == 0:
                ts[j] = (k + 1) * dt
                states[j] = s
                j += 1
        return ts, states, -1, 0, -1

    return march
