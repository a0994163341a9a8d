"""Command-line front end: ``cpsa {analyze|simulate|optimize|reproduce}``.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
All randomness derives from ``--seed`` (default :data:`DEFAULT_SEED`).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from .attack_opt import optimize_attack
from .montecarlo import (SCHEMES, TrialPlan, closed_form_placement_average, draw_placement,
                         run_placement_average, run_scheme)
from .scenario import PathLossModel, SystemParams, build_profile

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

DEFAULT_SEED = 20190101
CSV_HEADER = ["sweep_var", "sweep_value", "scheme", "n_attackers", "sum_rate_cf",
              "sum_rate_emp", "ci_halfwidth", "placements", "fading_trials", "master_seed"]
SWEEP_VARS = ("M", "N", "P_A_dbm", "D_A_max_m")

DEFAULT_CONFIG = {
    "m": 32, "k": 8, "n_attackers": 2, "tau_p": None,
    "p_u_dbm": 10.0, "p_a_dbm": 10.0, "p_b_dbm": 40.0, "noise_dbm": -90.0,
    "l0_db": -45.0, "alpha": 3.7, "r_min_m": 50.0, "r_max_users_m": 400.0,
    "r_max_attackers_m": 300.0, "ref_distance_m": 1.0, "rate_log_base": 2,
    "user_distances_m": None, "attacker_distances_m": None,
}

# Figure presets. Distances enter the path-loss law in km
# (ref_distance_m = 1000); see README.
FIG2 = dict(DEFAULT_CONFIG, m=64, k=24, tau_p=24, r_max_attackers_m=300.0, ref_distance_m=1000.0)
FIG3 = dict(FIG2, m=64, n_attackers=2)
FIG2_N = (1, 2, 4)
FIG2_M = "32:128:16"
FIG3_D = "100:500:50"
FIG3_PA = (5.0, 10.0)


class UsageError(Exception):
    pass


@dataclass
class Scenario:
    params: SystemParams
    model: PathLossModel
    fixed_profile: object = None


def load_config(path=None, overrides=()) -> dict:
    cfg = dict(DEFAULT_CONFIG)
    if path:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        unknown = set(data) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(data)
    for item in overrides:
        key, sep, val = item.partition("=")
        if not sep or key not in cfg:
            raise UsageError(f"bad override {item!r}")
        try:
            cfg[key] = json.loads(val)
        except json.JSONDecodeError:
            cfg[key] = val
    return cfg


def build_scenario(cfg: dict) -> Scenario:
    try:
        base = cfg["rate_log_base"]
        base = math.e if base in ("e", math.e) else float(base)
        params = SystemParams.from_dbm(
            M=int(cfg["m"]), K=int(cfg["k"]), N=int(cfg["n_attackers"]),
            tau_p=None if cfg["tau_p"] is None else int(cfg["tau_p"]),
            p_u_dbm=float(cfg["p_u_dbm"]), p_a_dbm=float(cfg["p_a_dbm"]),
            p_b_dbm=float(cfg["p_b_dbm"]), noise_dbm=float(cfg["noise_dbm"]),
            rate_log_base=base)
        model = PathLossModel(L0_db=float(cfg["l0_db"]), alpha=float(cfg["alpha"]),
                              r_min=float(cfg["r_min_m"]),
                              r_max_users=float(cfg["r_max_users_m"]),
                              r_max_attackers=float(cfg["r_max_attackers_m"]),
                              ref_distance_m=float(cfg["ref_distance_m"]))
        fixed = None
        if cfg.get("user_distances_m") is not None:
            fixed = build_profile(params, model, cfg["user_distances_m"],
                                  cfg.get("attacker_distances_m") or [])
    except (TypeError, ValueError, KeyError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from exc
    return Scenario(params, model, fixed)


def parse_values(text: str) -> list:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"range must be START:STOP:STEP, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise UsageError("sweep step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        vals = [start + i * step for i in range(n)]
    else:
        vals = [float(v) for v in text.split(",") if v.strip()]
    if not vals or any(b <= a for a, b in zip(vals, vals[1:])):
        raise UsageError("sweep values must be non-empty and strictly increasing")
    return [int(v) if float(v).is_integer() else v for v in vals]


def parse_sweep(text):
    if text is None:
        return None, [None]
    var, sep, vals = text.partition("=")
    if not sep or var not in SWEEP_VARS:
        raise UsageError(f"--sweep must be VAR=VALUES with VAR in {SWEEP_VARS}")
    return var, parse_values(vals)


def parse_schemes(text):
    schemes = [s.strip() for s in (text or "").split(",") if s.strip()]
    if not schemes:
        raise UsageError("scheme list is empty")
    bad = [s for s in schemes if s not in SCHEMES]
    if bad:
        raise UsageError(f"unknown schemes {bad}; choose from {SCHEMES}")
    return schemes


def apply_sweep(cfg: dict, var, value) -> dict:
    cfg = dict(cfg)
    if var == "M":
        cfg["m"] = int(value)
    elif var == "N":
        cfg["n_attackers"] = int(value)
    elif var == "P_A_dbm":
        cfg["p_a_dbm"] = float(value)
    elif var == "D_A_max_m":
        cfg["r_max_attackers_m"] = float(value)
    return cfg


def _fmt(x):
    return "" if x is None else repr(float(x))


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` so that ``path`` is either complete or untouched."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".cpsa-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _point(var, value):
    return "" if var is None else f" {var}={value}"


def _progress(msg, quiet):
    if not quiet:
        print(msg, file=sys.stderr, flush=True)


def _row(var, value, scheme, N, cf, emp, ci, placements, trials, seed):
    return [var or "", "" if value is None else value, scheme, N, _fmt(cf), _fmt(emp),
            _fmt(ci), placements, trials, seed]


def _analyze_point(scn: Scenario, scheme, placements, seed):
    if scheme == "optimal" and scn.params.N < 1:
        raise UsageError("scheme 'optimal' needs n_attackers >= 1")
    if scn.fixed_profile is not None:
        from .montecarlo import scheme_allocation
        from .rate import sum_rate
        rep = sum_rate(scn.params, scn.fixed_profile,
                       scheme_allocation(scn.params, scn.fixed_profile, scheme))
        return rep.sum_rate, 0.0, 1
    plan = TrialPlan(1, placements, seed, scheme)
    rep = closed_form_placement_average(scn.params, scn.model, plan)
    return rep.sum_rate, rep.sum_ci, placements


def _simulate_point(scn: Scenario, scheme, placements, trials, seed, threads):
    if scheme == "optimal" and scn.params.N < 1:
        raise UsageError("scheme 'optimal' needs n_attackers >= 1")
    if scn.fixed_profile is not None or placements == 1:
        profile = scn.fixed_profile
        if profile is None:
            from .montecarlo import _placement_seed
            profile = draw_placement(scn.params, scn.model, _placement_seed(seed, 0))
        emp, cf = run_scheme(scn.params, profile, TrialPlan(trials, 1, seed, scheme), threads)
        return cf.sum_rate, emp.sum_rate, emp.sum_ci, 1
    emp, cf = run_placement_average(scn.params, scn.model,
                                    TrialPlan(trials, placements, seed, scheme), threads)
    return cf.sum_rate, emp.sum_rate, emp.sum_ci, placements


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(rows)
    return buf.getvalue()


def cmd_analyze(cfg, sweep, schemes, placements, seed, quiet=False) -> str:
    var, values = parse_sweep(sweep)
    rows = []
    for value in values:
        scn = build_scenario(apply_sweep(cfg, var, value))
        for scheme in schemes:
            cf, ci, n = _analyze_point(scn, scheme, placements, seed)
            rows.append(_row(var, value, scheme, scn.params.N, cf, None, ci, n, 0, seed))
            _progress(f"analyze{_point(var, value)} {scheme}: {cf:.4f}", quiet)
    return _csv_text(rows)


def cmd_simulate(cfg, sweep, schemes, trials, placements, seed, threads, quiet=False) -> str:
    if trials < 2:
        raise UsageError("--trials must be at least 2")
    var, values = parse_sweep(sweep)
    rows = []
    for value in values:
        scn = build_scenario(apply_sweep(cfg, var, value))
        for scheme in schemes:
            cf, emp, ci, n = _simulate_point(scn, scheme, placements, trials, seed, threads)
            rows.append(_row(var, value, scheme, scn.params.N, cf, emp, ci, n, trials, seed))
            _progress(f"simulate{_point(var, value)} {scheme}: cf={cf:.4f} emp={emp:.4f}", quiet)
    return _csv_text(rows)


def cmd_optimize(cfg, seed) -> str:
    scn = build_scenario(cfg)
    if scn.params.N < 1:
        raise UsageError("optimize needs n_attackers >= 1")
    profile = scn.fixed_profile
    if profile is None:
        from .montecarlo import _placement_seed
        profile = draw_placement(scn.params, scn.model, _placement_seed(seed, 0))
    res = optimize_attack(scn.params, profile)
    return json.dumps(res.to_dict(), indent=2) + "\n"


def cmd_reproduce(figure, seed, placements, trials, threads, sweep=None, schemes=None,
                  quiet=False) -> str:
    rows = []
    if figure == "fig2":
        var, values = parse_sweep(sweep or f"M={FIG2_M}")
        schemes = schemes or list(SCHEMES)
        for N in FIG2_N:
            for value in values:
                scn = build_scenario(apply_sweep(dict(FIG2, n_attackers=N), var, value))
                for scheme in schemes:
                    cf, emp, ci, n = _simulate_point(scn, scheme, placements, trials, seed,
                                                     threads)
                    rows.append(_row(var, value, scheme, N, cf, emp, ci, n, trials, seed))
                    _progress(f"fig2 N={N} {var}={value} {scheme}: cf={cf:.3f} emp={emp:.3f}",
                              quiet)
    elif figure == "fig3":
        var, values = parse_sweep(sweep or f"D_A_max_m={FIG3_D}")
        schemes = schemes or ["optimal", "none"]
        for p_a in FIG3_PA:
            for value in values:
                scn = build_scenario(apply_sweep(dict(FIG3, p_a_dbm=p_a), var, value))
                for scheme in schemes:
                    if scheme == "none" and p_a != FIG3_PA[0]:
                        continue  # baseline does not depend on P_A
                    label = scheme if scheme == "none" else f"{scheme}@P_A={p_a:g}dBm"
                    cf, emp, ci, n = _simulate_point(scn, scheme, placements, trials, seed,
                                                     threads)
                    rows.append(_row(var, value, label, scn.params.N, cf, emp, ci, n, trials,
                                     seed))
                    _progress(f"fig3 {var}={value} {label}: cf={cf:.3f} emp={emp:.3f}", quiet)
    else:
        raise UsageError("figure must be fig2 or fig3")
    return _csv_text(rows)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cpsa", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sweep=True, trials=True):
        p.add_argument("--config", help="TOML scenario file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key")
        if sweep:
            p.add_argument("--sweep", help="VAR=START:STOP:STEP or VAR=V1,V2,...")
            p.add_argument("--schemes", default=None, help="comma-separated schemes")
            p.add_argument("--placements", type=int, default=None)
        if trials:
            p.add_argument("--trials", type=int, default=None)
            p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--quiet", action="store_true")

    common(sub.add_parser("analyze", help="closed-form sum-rates"), trials=False)
    common(sub.add_parser("simulate", help="Monte Carlo plus closed form"))
    common(sub.add_parser("optimize", help="optimal attack allocation as JSON"),
           sweep=False, trials=False)
    rp = sub.add_parser("reproduce", help="figure presets")
    rp.add_argument("figure", choices=["fig2", "fig3"])
    common(rp)
    return ap


def _emit(text, out):
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "reproduce":
            schemes = parse_schemes(args.schemes) if args.schemes is not None else None
            text = cmd_reproduce(args.figure, args.seed, args.placements or 100,
                                 args.trials or 100, args.threads, args.sweep, schemes,
                                 args.quiet)
        else:
            cfg = load_config(args.config, args.set)
            if args.command == "analyze":
                text = cmd_analyze(cfg, args.sweep, parse_schemes(
                    "none,optimal" if args.schemes is None else args.schemes),
                                   args.placements or 100, args.seed, args.quiet)
            elif args.command == "simulate":
                text = cmd_simulate(cfg, args.sweep,
                                    parse_schemes(
                                    "none,uniform,optimal" if args.schemes is None
                                    else args.schemes),
                                    args.trials or 10_000, args.placements or 1, args.seed,
                                    args.threads, args.quiet)
            else:
                text = cmd_optimize(cfg, args.seed)
        _emit(text, args.out)
    except UsageError as exc:
        print(f"cpsa: error: {exc}", file=sys.stderr)
        return 2
    except (np.linalg.LinAlgError, ArithmeticError, FloatingPointError) as exc:
        print(f"cpsa: numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
