"""Command-line interface: analyze, optimize, ser, simulate, preset.

Configuration can come from a JSON document (--config), from flags, or
both; flags win.  Unknown config keys are rejected, and --explain prints
the fully resolved configuration (defaults included) without running,
in a form that can be fed back via --config to reproduce the run.

Exit codes: 0 success, 1 configuration error, 2 numerical/solver
failure, 3 unreachable target.  Errors are emitted as one JSON object
on stderr.
"""

import argparse
import json
import math
import os
import sys
from dataclasses import asdict

from .errors import ConfigError, DivergedTrialError, QlstError, SolverError, UnreachableTargetError
from .quantizer import INFINITE
from .rates import bussgang_rate, optimize_training, rate_known, required_alpha_for_rate
from .replica import (
    SystemConfig,
    equivalent_system,
    make_quantizer,
    mutual_info_per_rx,
    solve_fixed_points,
)
from .scalar_awgn import input_prior
from .ser import (
    critical_snr,
    required_alpha_for_ser,
    required_tau_prime_for_ser,
    ser_large_alpha,
    ser_pipeline,
)

THREADS_ENV = "QLST_THREADS"

# key -> (default, parser); None defaults mean "unset"
_SCHEMA = {
    "rho": (None, float),
    "rho_db": (None, float),
    "alpha": (None, float),
    "beta": (40.0, float),
    "sigma2": (1.0, float),
    "tau": (None, float),
    "tau_prime": (None, float),
    "adc_bits": (1, "bits"),
    "dac_bits": (1, "bits"),
    "step": (None, float),
    "nodes": (200, int),
    "fp_damping": (0.5, float),
    "mse_g_override": (None, float),
    "n_tx": (50, int),
    "n_trials": (10_000, int),
    "seed": (0, int),
    "threads": (None, int),
    "gamp_max_iters": (50, int),
    "gamp_damping": (0.7, float),
    "gamp_var_floor": (1e-12, float),
    "gamp_tol": (1e-8, float),
}


def _parse_bits(value):
    if value in ("inf", "infinite", "Infinity", math.inf):
        return INFINITE
    number = float(value)
    if math.isinf(number):
        return INFINITE
    if number != int(number) or number < 1:
        raise ConfigError(f"bit counts must be positive integers or 'inf', got {value!r}")
    return int(number)


def _coerce(key, value):
    if value is None:
        return None
    _, kind = _SCHEMA[key]
    try:
        if kind == "bits":
            return _parse_bits(value)
        if kind is float:
            out = float(value)
            if math.isnan(out):
                raise ValueError("nan")
            return out
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key {key!r}: cannot parse {value!r} ({exc})") from exc


def load_config(path: str | None, flag_values: dict) -> dict:
    """Merge defaults, a JSON config document, and CLI flags (flags win)."""
    merged = {k: default for k, (default, _) in _SCHEMA.items()}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        unknown = sorted(set(doc) - set(_SCHEMA))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        for key, value in doc.items():
            merged[key] = _coerce(key, value)
    for key, value in flag_values.items():
        if value is not None:
            merged[key] = _coerce(key, value)
    if merged["rho"] is not None and merged["rho_db"] is not None:
        raise ConfigError("give rho either linearly or in dB, not both")
    if merged["rho_db"] is not None:
        merged["rho"] = math.inf if math.isinf(merged["rho_db"]) else 10.0 ** (merged["rho_db"] / 10.0)
        merged["rho_db"] = None
    if merged["threads"] is None:
        merged["threads"] = int(os.environ.get(THREADS_ENV, "1"))
    return merged


def _system_config(cfg: dict, need_training: bool = True) -> SystemConfig:
    if cfg["rho"] is None:
        raise ConfigError("rho (or rho_db) is required")
    if cfg["alpha"] is None:
        raise ConfigError("alpha is required")
    quantizer = make_quantizer(cfg["adc_bits"], cfg["rho"], cfg["step"])
    try:
        sys_cfg = SystemConfig(
            rho=cfg["rho"], alpha=cfg["alpha"], quantizer=quantizer, beta=cfg["beta"],
            sigma2=cfg["sigma2"], tau=cfg["tau"], tau_prime=cfg["tau_prime"],
            input_prior=input_prior(cfg["dac_bits"]),
        )
    except ConfigError:
        raise
    if need_training and cfg["tau"] is None and cfg["tau_prime"] is None \
            and cfg["mse_g_override"] is None:
        raise ConfigError("one of tau / tau_prime is required")
    return sys_cfg


def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if hasattr(obj, "item"):
        return _sanitize(obj.item())
    return obj


def _emit(payload) -> None:
    json.dump(_sanitize(payload), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _explain(cfg: dict) -> None:
    shown = {k: ("inf" if isinstance(v, float) and math.isinf(v) else v)
             for k, v in cfg.items() if v is not None}
    _emit(shown)


# ---------------------------------------------------------------------------
# subcommands


def cmd_analyze(cfg: dict) -> None:
    sys_cfg = _system_config(cfg)
    nodes = cfg["nodes"]
    if cfg["mse_g_override"] is not None:
        mse_g = cfg["mse_g_override"]
        rho_bar, sigma2_bar = equivalent_system(sys_cfg.rho, sys_cfg.sigma2, mse_g)
        from .replica import mutual_info_known_channel

        info = mutual_info_known_channel(rho_bar, sigma2_bar, sys_cfg.alpha,
                                         sys_cfg.quantizer, sys_cfg.input_prior, nodes)
        sol = info.solution
        tau_eff = sys_cfg.tau if sys_cfg.tau is not None else None
    else:
        info = mutual_info_per_rx(sys_cfg, nodes, damping=cfg["fp_damping"])
        sol = info.solution
        tau_eff = sys_cfg.tau if sys_cfg.tau is not None else sys_cfg.tau_prime / sys_cfg.beta
    report = {
        "mse_G": sol.mse_G,
        "q_G": sol.q_G,
        "qtilde_G": sol.qtilde_G,
        "rho_bar": sol.rho_bar,
        "sigma2_bar": sol.sigma2_bar,
        "q_x": sol.q_x,
        "qtilde_x": sol.qtilde_x,
        "mse_x": sol.mse_x,
        "mutual_info_per_rx": info.mutual_info,
        "h_output_given_input": info.h_plus,
        "h_output": info.h_uncond,
        "rate_per_tx": sys_cfg.alpha * info.mutual_info,
        "solver_iterations": sol.iterations,
        "solver_residual": sol.residual,
        "multistable": sol.multistable,
    }
    if tau_eff is not None:
        report["net_rate_per_tx"] = (1.0 - tau_eff) * sys_cfg.alpha * info.mutual_info
    if cfg["dac_bits"] == 1 and not math.isinf(sol.qtilde_x):
        from .ser import ser_qpsk_theory

        report["ser"] = ser_qpsk_theory(sol.qtilde_x)
    elif cfg["dac_bits"] == 1:
        report["ser"] = 0.0
    _emit(report)


def cmd_optimize(cfg: dict, target_rate: float | None, known: bool) -> None:
    if cfg["rho"] is None or cfg["alpha"] is None and target_rate is None:
        raise ConfigError("rho and alpha (or a target rate) are required")
    prior = input_prior(cfg["dac_bits"])
    if target_rate is not None:
        alpha = required_alpha_for_rate(
            target_rate, cfg["rho"], cfg["sigma2"], cfg["beta"], prior, cfg["adc_bits"],
            known=known, nodes=cfg["nodes"],
        )
        _emit({"target_rate": target_rate, "alpha_required": alpha, "known_channel": known})
        return
    sys_cfg = _system_config(cfg, need_training=False)
    opt = optimize_training(sys_cfg, cfg["nodes"])
    report = {
        "tau_opt": opt.tau_opt,
        "rate_opt": opt.rate_opt,
        "rate_known": rate_known(cfg["rho"], cfg["sigma2"], cfg["alpha"],
                                 sys_cfg.quantizer, prior, cfg["nodes"]),
    }
    if cfg["adc_bits"] in (1, 2) and cfg["sigma2"] == 1.0:
        r_l, tau_l = bussgang_rate(cfg["rho"], cfg["alpha"], cfg["beta"], cfg["adc_bits"],
                                   prior, nodes=cfg["nodes"])
        report["rate_linearized"] = r_l
        report["tau_opt_linearized"] = tau_l
    _emit(report)


def cmd_ser(cfg: dict, target_ser: float | None, solve_for: str) -> None:
    if cfg["dac_bits"] != 1:
        raise ConfigError("the closed-form SER is specific to 1-bit DACs (QPSK)")
    if target_ser is not None:
        if solve_for == "tau-prime":
            if cfg["rho"] is None or cfg["alpha"] is None:
                raise ConfigError("rho and alpha are required")
            value = required_tau_prime_for_ser(target_ser, cfg["rho"], cfg["alpha"],
                                               cfg["adc_bits"], cfg["nodes"])
            _emit({"target_ser": target_ser, "tau_prime_required": value})
        elif solve_for == "alpha":
            if cfg["rho"] is None or cfg["tau_prime"] is None:
                raise ConfigError("rho and tau_prime are required")
            value = required_alpha_for_ser(target_ser, cfg["rho"], cfg["tau_prime"],
                                           cfg["adc_bits"], cfg["nodes"])
            _emit({"target_ser": target_ser, "alpha_required": value})
        elif solve_for == "critical-snr":
            if cfg["alpha"] is None:
                raise ConfigError("alpha is required")
            rho = critical_snr(cfg["alpha"], cfg["adc_bits"], target_ser,
                               cfg["tau_prime"] if cfg["tau_prime"] else 2.0, cfg["nodes"])
            _emit({"target_ser": target_ser, "critical_rho": rho,
                   "critical_snr_db": 10.0 * math.log10(rho)})
        else:
            raise ConfigError(f"unknown solve-for {solve_for!r}")
        return
    if cfg["rho"] is None or cfg["alpha"] is None or cfg["tau_prime"] is None:
        raise ConfigError("rho, alpha, and tau_prime are required")
    report = ser_pipeline(cfg["rho"], cfg["alpha"], cfg["tau_prime"], cfg["adc_bits"],
                          cfg["nodes"])
    approx = ser_large_alpha(cfg["rho"], cfg["tau_prime"], cfg["adc_bits"], cfg["alpha"],
                             cfg["nodes"])
    sol = report.fixed_point
    _emit({
        "ser": report.ser,
        "ser_large_alpha": approx.ser,
        "qtilde_x": report.qtilde_x,
        "mse_G": sol.mse_G,
        "rho_bar": sol.rho_bar,
        "sigma2_bar": sol.sigma2_bar,
        "multistable": sol.multistable,
    })


def cmd_simulate(cfg: dict) -> None:
    from .gamp import GampOptions, monte_carlo_ser, trial_config

    if cfg["rho"] is None or cfg["alpha"] is None or cfg["tau_prime"] is None:
        raise ConfigError("rho, alpha, and tau_prime are required")
    options = GampOptions(max_iters=cfg["gamp_max_iters"], damping=cfg["gamp_damping"],
                          var_floor=cfg["gamp_var_floor"], tol=cfg["gamp_tol"])
    trial = trial_config(
        n_tx=cfg["n_tx"], alpha=cfg["alpha"], tau_prime=cfg["tau_prime"], rho=cfg["rho"],
        bits=cfg["adc_bits"], dac_bits=cfg["dac_bits"], seed=cfg["seed"], options=options,
    )
    result = monte_carlo_ser(trial, cfg["n_trials"], base_seed=cfg["seed"],
                             threads=cfg["threads"])
    theory = ser_pipeline(cfg["rho"], cfg["alpha"], cfg["tau_prime"], cfg["adc_bits"],
                          cfg["nodes"]).ser
    payload = asdict(result)
    payload["ser_theory"] = theory
    payload["gap"] = result.mean_ser - theory
    _emit(payload)


def cmd_preset(cfg: dict, preset_id: str, out_dir: str | None) -> None:
    from .presets import PRESETS, run_preset

    if preset_id not in PRESETS:
        raise ConfigError(f"unknown preset {preset_id!r}; known: {', '.join(sorted(PRESETS))}")
    overrides = {}
    if cfg["n_trials"] is not None:
        overrides["n_trials"] = cfg["n_trials"]
    overrides["seed"] = cfg["seed"]
    result = run_preset(preset_id, overrides, output_dir=out_dir, threads=cfg["threads"])
    payload = {
        "preset": preset_id,
        "rows": len(result.rows),
        "failed_points": result.n_failed_points,
        "passed": result.passed,
        "assertions": [
            {"name": a.name, "passed": a.passed, "detail": a.detail,
             "caption_derived": a.caption_derived}
            for a in result.assertions
        ],
    }
    if out_dir:
        payload["csv"] = os.path.join(out_dir, f"{preset_id}.csv")
    _emit(payload)
    if not result.passed:
        raise SolverError("preset assertions failed")


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(parser):
    parser.add_argument("--config", help="JSON configuration document")
    parser.add_argument("--explain", action="store_true",
                        help="print the resolved configuration and exit")
    parser.add_argument("--rho", type=float, dest="rho")
    parser.add_argument("--rho-db", type=float, dest="rho_db")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--sigma2", type=float)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--tau-prime", type=float, dest="tau_prime")
    parser.add_argument("--bits", dest="adc_bits", help="receiver ADC bits or 'inf'")
    parser.add_argument("--dac-bits", dest="dac_bits", help="transmitter DAC bits or 'inf'")
    parser.add_argument("--step", type=float, help="quantizer step override")
    parser.add_argument("--nodes", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--n-trials", type=int, dest="n_trials")
    parser.add_argument("--n-tx", type=int, dest="n_tx")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlst",
        description="Rates, training optimization, and symbol error rates for "
                    "large-scale quantized systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="fixed points, entropies, and mutual information")
    _add_common(p)
    p.add_argument("--mse-g", type=float, dest="mse_g_override",
                   help="skip training and force the channel-estimate MSE")

    p = sub.add_parser("optimize", help="training-fraction optimization and rate baselines")
    _add_common(p)
    p.add_argument("--target-rate", type=float)
    p.add_argument("--known", action="store_true",
                   help="with --target-rate: invert the known-channel rate")

    p = sub.add_parser("ser", help="symbol error rate theory and inverse solves")
    _add_common(p)
    p.add_argument("--target-ser", type=float)
    p.add_argument("--solve-for", choices=("tau-prime", "alpha", "critical-snr"),
                   default="tau-prime")

    p = sub.add_parser("simulate", help="GAMP-based Monte Carlo SER")
    _add_common(p)

    p = sub.add_parser("preset", help="run a figure preset")
    _add_common(p)
    p.add_argument("preset_id")
    p.add_argument("--out", dest="out_dir", help="directory for <preset>.csv")

    return parser


_FLAG_KEYS = tuple(k for k in _SCHEMA) + ("mse_g_override",)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        flags = {k: getattr(args, k) for k in _SCHEMA if hasattr(args, k)}
        if getattr(args, "mse_g_override", None) is not None:
            flags["mse_g_override"] = args.mse_g_override
        cfg = load_config(args.config, flags)
        if args.explain:
            _explain(cfg)
            return 0
        if args.command == "analyze":
            cmd_analyze(cfg)
        elif args.command == "optimize":
            cmd_optimize(cfg, args.target_rate, args.known)
        elif args.command == "ser":
            cmd_ser(cfg, args.target_ser, args.solve_for)
        elif args.command == "simulate":
            cmd_simulate(cfg)
        elif args.command == "preset":
            cmd_preset(cfg, args.preset_id, args.out_dir)
        return 0
    except ConfigError as exc:
        _error(exc)
        return 1
    except UnreachableTargetError as exc:
        _error(exc)
        return 3
    except (SolverError, DivergedTrialError, QlstError) as exc:
        _error(exc)
        return 2


def _error(exc) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, UnreachableTargetError) and exc.asymptote is not None:
        payload["asymptote"] = _sanitize(exc.asymptote)
    json.dump(payload, sys.stderr)
    sys.stderr.write("\n")


if __name__ == "__main__":
    sys.exit(main())
