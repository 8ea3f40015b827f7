"""Plants described in a JSON file with symbolic right-hand sides.

Example::

    {
      "q": 2,
      "f": "1", "f_is_positive": true,
      "g0": "-y", "g1": "-y",
      "phi": ["1", "exp(-t) * sin(t)"],
      "theta_true": [-1, 1],
      "constants": {"w": 2.0}
    }

Expressions may use ``y``, ``t`` and any name in ``constants``. They are
translated to Python source once and compiled with numba when possible, so
custom plants run on the same compiled path as the built-in benchmark.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import sympy
from numba import njit
from sympy.printing.pycode import pycode

from ..model import SystemModel
from .config import ConfigError

_FIELDS = {"q", "f", "f_is_positive", "g0", "g1", "phi", "theta_true", "constants", "name"}


def _expr(text, symbols, field):
    try:
        expr = sympy.sympify(text, locals=symbols)
    except (sympy.SympifyError, TypeError, SyntaxError) as exc:
        raise ConfigError(field, f"cannot parse expression {text!r}") from exc
    extra = expr.free_symbols - {symbols["y"], symbols["t"]}
    if extra:
        raise ConfigError(field, f"unknown symbols {sorted(map(str, extra))}")
    return pycode(expr, fully_qualified_modules=True)


def _compile(source, name, jit):
    namespace = {"math": math, "np": np}
    exec(source, namespace)
    fn = namespace[name]
    return njit(fn) if jit else fn


def load_system_file(path) -> SystemModel:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    unknown = set(data) - _FIELDS
    if unknown:
        raise ConfigError("system", f"unknown fields in system file: {sorted(unknown)}")
    for key in ("q", "f", "g0", "g1", "phi", "theta_true"):
        if key not in data:
            raise ConfigError("system", f"system file lacks {key!r}")
    q = data["q"]
    if len(data["phi"]) != q or len(data["theta_true"]) != q:
        raise ConfigError("system", "phi and theta_true must have q entries")
    constants = data.get("constants", {})
    symbols = {"y": sympy.Symbol("y"), "t": sympy.Symbol("t")}
    for cname, value in constants.items():
        symbols[cname] = sympy.Float(value)

    scalar = {key: _expr(str(data[key]), symbols, key) for key in ("f", "g0", "g1")}
    phi_parts = [_expr(str(e), symbols, f"phi[{i}]") for i, e in enumerate(data["phi"])]
    sources = {key: f"def {key}(y, t):\n    return float({src})\n" for key, src in scalar.items()}
    body = "".join(f"    out[{i}] = {src}\n" for i, src in enumerate(phi_parts))
    sources["phi"] = f"def phi(y, t):\n    out = np.empty({q})\n{body}    return out\n"

    maps = {}
    for key, src in sources.items():
        try:
            fn = _compile(src, key, jit=True)
            fn(0.0, 0.0)
        except Exception:
            # the compiled route is an optimisation only
            fn = _compile(src, key, jit=False)
        maps[key] = fn
    return SystemModel(
        q=q,
        theta_true=np.asarray(data["theta_true"], dtype=float),
        f_is_positive=bool(data.get("f_is_positive", True)),
        name=data.get("name", Path(path).stem),
        **maps,
    )
