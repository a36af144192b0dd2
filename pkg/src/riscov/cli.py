"""Command-line front end: sweeps, validation, and figure-ready artifacts.

Subcommands:

    analytic    coverage and sum rate from the closed-form engine
    mc          the same metrics from the configured Monte Carlo tier
    sweep       grid sweep over lambda_r, lambda_b, or threshold -> CSV/JSON
    validate    oracle-equivalence suite (analytic vs model-faithful MC)
    gap-report  three-engine coverage comparison table

All subcommands accept --config, --seed, and --threads.  Exit codes:
0 success, 1 validation failure, 2 configuration error, 3 numerical
non-convergence.

The sweep CSV schema is pinned (column order is part of the contract):

    sweep_value, analytic_cov, mc_cov, mc_cov_ci_low, mc_cov_ci_high,
    analytic_sumrate, mc_sumrate, mc_sr_ci_low, mc_sr_ci_high, runtime_s,
    analytic_sumrate_per_hz, mc_sumrate_per_hz, status

Coverage is dimensionless, rate columns carry bit/s and bit/s/Hz.
runtime_s stays empty unless --timing is given, keeping reruns
byte-identical.  Engine failures at a grid point are recorded in the
row's status and the sweep continues.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, replace

from .analytic import (
    ConvergenceError,
    SystemParams,
    cond_coverage_direct,
    cond_coverage_reflected,
    ergodic_coverage,
    p_los,
    reflection_prob,
    sum_rate,
)
from .config import ConfigError, RunConfig, load_config
from .montecarlo import (
    EmptyEstimateError,
    McConfig,
    McEstimate,
    gap_report,
    oracle_cond_coverage_direct,
    oracle_cond_coverage_reflected,
    oracle_eta_cdf,
    oracle_p_los,
    oracle_reflection_prob,
    simulate_coverage,
    simulate_sum_rate,
)

__all__ = ["main", "run_sweep", "run_validation", "CSV_COLUMNS"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

CSV_COLUMNS = (
    "sweep_value",
    "analytic_cov",
    "mc_cov",
    "mc_cov_ci_low",
    "mc_cov_ci_high",
    "analytic_sumrate",
    "mc_sumrate",
    "mc_sr_ci_low",
    "mc_sr_ci_high",
    "runtime_s",
    "analytic_sumrate_per_hz",
    "mc_sumrate_per_hz",
    "status",
)

# validation-suite sizes: the vectorized single-draw oracles are cheap, so
# they get a floor that makes 3 sigma windows tight enough to catch a
# corrupted survival law deterministically
_MIN_ORACLE_TRIALS = 50_000
_VALIDATE_XI_GRID = (10.0, 50.0, 90.0)


def _fmt(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _sweep_point(params: SystemParams, variable: str,
                 value: float) -> SystemParams:
    return replace(params, **{variable: value})


def run_sweep(config: RunConfig, timing: bool = False):
    """Evaluate the enabled engines over the sweep grid.

    Returns (rows, failed): a list of per-point dicts keyed by CSV_COLUMNS
    and a flag telling whether any engine failed to converge.  Rows are
    produced in grid order.
    """
    engines = config.engines
    if engines.mc_model_faithful and engines.mc_physical:
        raise ConfigError(
            "the sweep CSV has one set of mc columns; enable one Monte "
            "Carlo engine per sweep (gap-report compares all three)")
    mc_mode = ("model_faithful" if engines.mc_model_faithful
               else "physical" if engines.mc_physical else None)
    rows = []
    failed = False
    for value in config.sweep.grid:
        row = {c: "" for c in CSV_COLUMNS}
        row["sweep_value"] = float(value)
        problems = []
        t0 = time.perf_counter()
        point = _sweep_point(config.params, config.sweep.variable,
                             float(value))
        if engines.analytic:
            try:
                row["analytic_cov"] = ergodic_coverage(point.threshold, point)
                rate = sum_rate(point)
                row["analytic_sumrate"] = rate
                row["analytic_sumrate_per_hz"] = (
                    rate / point.radio.bandwidth_hz)
            except (ConvergenceError, ValueError) as exc:
                problems.append(f"analytic: {exc}")
        if mc_mode is not None:
            mc = replace(config.mc, mode=mc_mode)
            try:
                cov = simulate_coverage(point, mc)
                row["mc_cov"] = cov.mean
                row["mc_cov_ci_low"] = cov.ci95_low
                row["mc_cov_ci_high"] = cov.ci95_high
                sr = simulate_sum_rate(point, mc)
                row["mc_sumrate"] = sr.mean
                row["mc_sr_ci_low"] = sr.ci95_low
                row["mc_sr_ci_high"] = sr.ci95_high
                row["mc_sumrate_per_hz"] = sr.mean / point.radio.bandwidth_hz
            except (EmptyEstimateError, ConvergenceError, ValueError) as exc:
                problems.append(f"mc: {exc}")
        if timing:
            row["runtime_s"] = round(time.perf_counter() - t0, 3)
        if problems:
            failed = True
            row["status"] = "; ".join(problems)
        else:
            row["status"] = "ok"
        rows.append(row)
    return rows, failed


def _rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _rows_to_json(rows) -> str:
    payload = {
        "columns": list(CSV_COLUMNS),
        "rows": [{c: (None if row[c] == "" else row[c]) for c in CSV_COLUMNS}
                 for row in rows],
    }
    return json.dumps(payload, indent=2) + "\n"


def _estimate_dict(est: McEstimate) -> dict:
    return asdict(est)


class _Checks:
    """Accumulates pass/fail/skip lines for the validation report."""

    def __init__(self):
        self.lines = []
        self.failed = False

    def check(self, name: str, ok: bool, detail: str):
        tag = "PASS" if ok else "FAIL"
        if not ok:
            self.failed = True
        self.lines.append(f"{tag} {name}: {detail}")

    def z_check(self, name: str, mc: McEstimate, analytic: float,
                extra_abs: float = 0.0):
        gap = abs(mc.mean - analytic)
        limit = max(3.0 * mc.std_error, extra_abs)
        detail = (f"mc={mc.mean:.6f} analytic={analytic:.6f} "
                  f"|diff|={gap:.2e} limit={limit:.2e} (n={mc.n})")
        self.check(name, gap <= limit, detail)

    def skip(self, name: str, reason: str):
        self.lines.append(f"SKIP {name}: {reason}")

    def report(self) -> str:
        verdict = "FAIL" if self.failed else "PASS"
        n_fail = sum(1 for ln in self.lines if ln.startswith("FAIL"))
        return "\n".join(self.lines + [
            f"{verdict}: {len(self.lines)} checks, {n_fail} failures"]) + "\n"


def run_validation(config: RunConfig):
    """Oracle-equivalence suite: analytic formulas vs model-faithful MC.

    Every analytic quantity is re-estimated by re-sampling its own
    probabilistic model; disagreement beyond 3 standard errors fails the
    suite.  Reflected-path checks are skipped when lambda_r is zero.
    Returns (passed, report_text).
    """
    params = config.params
    radio = params.radio
    checks = _Checks()
    oracle_mc = replace(config.mc,
                        n_scenes=max(config.mc.n_scenes, _MIN_ORACLE_TRIALS))

    for d in _VALIDATE_XI_GRID:
        est = oracle_p_los(d, params, oracle_mc)
        checks.z_check(f"p_los d={d:g}", est,
                       p_los(d, params.lambda_b, params.mean_block_len))

    degenerate = params.lambda_r == 0
    for xi in _VALIDATE_XI_GRID:
        name = f"reflection_prob xi={xi:g}"
        if degenerate:
            checks.skip(name, "skipped (degenerate: lambda_r=0)")
            continue
        est = oracle_reflection_prob(xi, params, oracle_mc)
        checks.z_check(name, est, reflection_prob(xi, params))

    if degenerate:
        checks.skip("eta_cdf ks xi=50", "skipped (degenerate: lambda_r=0)")
    else:
        chk = oracle_eta_cdf(50.0, [0.0], params, oracle_mc)
        checks.check("eta_cdf ks xi=50", chk.ks_distance < 0.02,
                     f"ks={chk.ks_distance:.5f} limit=0.02 (n={chk.n_trials})")

    # direct-link threshold placed where fading decides the outcome
    t_direct = (math.log(2.0) * radio.n_bs * radio.n_u * radio.p0
                * 10.0 ** radio.alpha
                / (radio.noise_power * 50.0 ** radio.beta))
    est = oracle_cond_coverage_direct(50.0, t_direct, params, oracle_mc)
    checks.z_check("cond_coverage_direct xi=50", est,
                   cond_coverage_direct(50.0, t_direct, params))

    if degenerate:
        checks.skip("cond_coverage_reflected xi=50",
                    "skipped (degenerate: lambda_r=0)")
    else:
        # reflected threshold placed at the CDF saturation corner
        sat = params.cell_radius * (params.cell_radius + 50.0)
        t_reflect = (radio.p0 * 10.0 ** (2.0 * radio.alpha)
                     * radio.n_bs * radio.n_r ** 2 * radio.n_u
                     / (radio.noise_power * sat ** radio.beta))
        est = oracle_cond_coverage_reflected(50.0, t_reflect, params,
                                             oracle_mc)
        checks.z_check("cond_coverage_reflected xi=50", est,
                       cond_coverage_reflected(50.0, t_reflect, params))

    mf = replace(config.mc, mode="model_faithful")
    try:
        cov = simulate_coverage(params, mf)
        checks.z_check("ergodic_coverage", cov,
                       ergodic_coverage(params.threshold, params),
                       extra_abs=0.01)
        tiny = replace(params, threshold=1e-12)
        cov0 = simulate_coverage(tiny, mf)
        checks.z_check("coverage_t_to_zero", cov0,
                       ergodic_coverage(1e-12, tiny), extra_abs=0.01)
        sr = simulate_sum_rate(params, mf)
        ana_sr = sum_rate(params)
        checks.z_check("sum_rate", sr, ana_sr, extra_abs=0.01 * ana_sr)
    except EmptyEstimateError:
        checks.check("ergodic_coverage", False,
                     "no users generated in any scene")
    return not checks.failed, checks.report()


def _write_or_print(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _load(args) -> RunConfig:
    config = load_config(args.config)
    mc = config.mc
    if args.seed is not None:
        mc = replace(mc, seed=args.seed)
    if args.threads is not None:
        mc = replace(mc, parallel_shards=args.threads)
    return replace(config, mc=mc)


def _cmd_analytic(args) -> int:
    config = _load(args)
    params = config.params
    cov = ergodic_coverage(params.threshold, params)
    rate = sum_rate(params)
    out = {
        "coverage": cov,
        "sum_rate_bps": rate,
        "sum_rate_bps_per_hz": rate / params.radio.bandwidth_hz,
    }
    if args.json:
        _write_or_print(json.dumps(out, indent=2) + "\n", args.json)
    print(f"coverage            {cov:.6f}")
    print(f"sum rate            {rate:.6e} bit/s")
    print(f"sum rate per hertz  {out['sum_rate_bps_per_hz']:.6f} bit/s/Hz")
    return EXIT_OK


def _cmd_mc(args) -> int:
    config = _load(args)
    cov = simulate_coverage(config.params, config.mc)
    sr = simulate_sum_rate(config.params, config.mc)
    out = {"mode": config.mc.mode, "coverage": _estimate_dict(cov),
           "sum_rate_bps": _estimate_dict(sr)}
    if args.json:
        _write_or_print(json.dumps(out, indent=2) + "\n", args.json)
    print(f"mode                {config.mc.mode}")
    print(f"coverage            {cov.mean:.6f} "
          f"[{cov.ci95_low:.6f}, {cov.ci95_high:.6f}]  n={cov.n}")
    print(f"sum rate            {sr.mean:.6e} "
          f"[{sr.ci95_low:.6e}, {sr.ci95_high:.6e}] bit/s  n={sr.n}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _load(args)
    rows, failed = run_sweep(config, timing=args.timing)
    csv_text = _rows_to_csv(rows)
    csv_path = args.out if args.out is not None else config.outputs.csv
    _write_or_print(csv_text, csv_path)
    json_path = args.json if args.json is not None else config.outputs.json
    if json_path is not None:
        _write_or_print(_rows_to_json(rows), json_path)
    if csv_path is not None:
        print(f"wrote {len(rows)} rows to {csv_path}")
    return EXIT_NUMERIC if failed else EXIT_OK


def _cmd_validate(args) -> int:
    config = _load(args)
    passed, report = run_validation(config)
    sys.stdout.write(report)
    return EXIT_OK if passed else EXIT_VALIDATION


def _cmd_gap_report(args) -> int:
    config = _load(args)
    text = gap_report(config.params, config.mc)
    _write_or_print(text, args.out)
    if args.out is not None:
        print(f"wrote gap report to {args.out}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riscov",
        description=("Coverage and rate evaluation for a reflector-assisted "
                     "cell: closed-form engine, two Monte Carlo tiers, and "
                     "sweep/validation tooling."))
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None,
                       help="TOML config file (defaults used when omitted)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the Monte Carlo seed")
        p.add_argument("--threads", type=int, default=None,
                       help="override the Monte Carlo shard count")

    p = sub.add_parser("analytic", help="closed-form coverage and sum rate")
    common(p)
    p.add_argument("--json", default=None, metavar="PATH",
                   help="also write results as JSON")
    p.set_defaults(func=_cmd_analytic)

    p = sub.add_parser("mc", help="Monte Carlo coverage and sum rate")
    common(p)
    p.add_argument("--json", default=None, metavar="PATH")
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("sweep", help="grid sweep to CSV (and optional JSON)")
    common(p)
    p.add_argument("--out", default=None, metavar="PATH",
                   help="CSV destination (stdout when omitted)")
    p.add_argument("--json", default=None, metavar="PATH",
                   help="JSON mirror destination")
    p.add_argument("--timing", action="store_true",
                   help="fill runtime_s (off by default for byte-stable output)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate",
                       help="oracle-equivalence suite (exit 1 on failure)")
    common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("gap-report",
                       help="analytic vs model-faithful vs physical table")
    common(p)
    p.add_argument("--out", default=None, metavar="PATH")
    p.set_defaults(func=_cmd_gap_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except EmptyEstimateError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        # parameter constraints that only bind at evaluation time
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
