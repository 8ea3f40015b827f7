"""Command line: ``filtrans {run,fig1,fig2,diagnose,validate}``.

Exit codes: 0 success, 2 configuration error, 3 integration failure,
4 input/output error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from ..model import ModelEvaluationError
from ..ode import IntegrationError
from .config import ConfigError, ScenarioConfig, load_config
from .io import TraceFormatError
from .scenarios import (
    FIG2_T_FINAL,
    build_estimators,
    build_system,
    diagnose_trace,
    figure1_scenario,
    figure2_scenario,
    run_scenario,
    stiffness_estimate,
)

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("filtrans")

# flag -> config field; None values mean "not given"
_OVERRIDES = ("name", "dt", "t_final", "gamma", "record_every", "output_dir", "settle_threshold")


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--name")
    p.add_argument("--dt", type=float)
    p.add_argument("--t-final", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--record-every", type=int)
    p.add_argument("--output-dir", "-o")
    p.add_argument("--settle-threshold", type=float)
    p.add_argument("--no-svg", action="store_true", help="skip figure emission")
    p.add_argument("--log-det-axis", action="store_true", help="log scale for the |det M| panel")


def _apply(cfg: ScenarioConfig, args) -> ScenarioConfig:
    changes = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k, None) is not None}
    if getattr(args, "no_svg", False):
        changes["emit_svg"] = False
    if getattr(args, "log_det_axis", False):
        changes["log_det_axis"] = True
    cfg = replace(cfg, **changes)
    cfg.check()
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="filtrans", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario from a JSON config")
    p.add_argument("config")
    _add_overrides(p)

    p = sub.add_parser("fig1", help="three-estimator comparison")
    p.add_argument("--config")
    _add_overrides(p)

    p = sub.add_parser("fig2", help="matrix-estimator gamma sweep")
    p.add_argument("--config")
    _add_overrides(p)

    p = sub.add_parser("diagnose", help="excitation diagnostics for a CSV trace")
    p.add_argument("csv")
    p.add_argument("--fit-window", type=float, nargs=2, metavar=("START", "END"))
    p.add_argument("--pe-window", type=float)
    p.add_argument("--prefix", help="estimator prefix of the M block")
    p.add_argument("--json", dest="json_out", help="also write the summary to this file")

    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("config")
    return parser


def _fmt(v) -> str:
    return "never" if v is None else f"{v:.6g}"


def _print_run(art) -> None:
    for name, final in art.metadata["final"].items():
        print(f"{name}: |x_err(T)|={abs(final['x_err']):.4g} |theta_err(T)|={final['theta_err_norm']:.4g} "
              f"peak={art.overshoot[name].peak:.4g} settle={_fmt(art.overshoot[name].settle_time)}")
    if art.excitation is not None:
        s = art.excitation.summary()
        print(f"excitation: growth={s['growth']} slope={s['divergence_slope']:.4g} "
              f"pe_margin={s['pe_margin']}")
    for kind, path in art.files.items():
        print(f"wrote {kind}: {path}")


def _cmd_run(args) -> int:
    cfg = _apply(load_config(args.config), args)
    _print_run(run_scenario(cfg))
    return EXIT_OK


def _cmd_fig1(args) -> int:
    base = load_config(args.config) if args.config else ScenarioConfig(name="fig1")
    _print_run(figure1_scenario(_apply(base, args)))
    return EXIT_OK


def _cmd_fig2(args) -> int:
    base = load_config(args.config) if args.config else ScenarioConfig(name="fig2", t_final=FIG2_T_FINAL)
    base = _apply(base, args)
    runs = figure2_scenario(base)
    print("gamma,dt,peak,settle_time")
    for gamma, art in runs.items():
        m = art.overshoot["mat_B"]
        print(f"{gamma:g},{art.config.dt:g},{m.peak:.6g},{_fmt(m.settle_time)}")
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    report = diagnose_trace(args.csv, tuple(args.fit_window) if args.fit_window else None,
                            args.pe_window, args.prefix)
    summary = report.summary()
    text = json.dumps(summary, indent=2)
    print(text)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    model = build_system(cfg)
    estimators = build_estimators(cfg, model.q)
    stiff = stiffness_estimate(model, estimators, cfg)
    if stiff > cfg.stability_limit:
        raise ConfigError("dt", f"dt*rate estimate {stiff:.3g} exceeds {cfg.stability_limit:g}")
    print(f"ok: {len(estimators)} estimator(s), system {model.name}, stiffness estimate {stiff:.3g}")
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "fig1": _cmd_fig1, "fig2": _cmd_fig2,
             "diagnose": _cmd_diagnose, "validate": _cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, ModelEvaluationError) as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except (OSError, TraceFormatError, KeyError, ValueError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
